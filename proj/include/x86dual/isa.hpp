// Copyright 2026 The x86dual Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef X86DUAL_ISA_HPP_
#define X86DUAL_ISA_HPP_

#include <cstdint>
#include <span>

#include "x86dual/addressing.hpp"
#include "x86dual/arith.hpp"
#include "x86dual/decoder.hpp"
#include "x86dual/fault.hpp"
#include "x86dual/instruction.hpp"
#include "x86dual/machine_state.hpp"
#include "x86dual/memory.hpp"
#include "x86dual/operand_access.hpp"
#include "x86dual/pointer_flow.hpp"

// Instruction semantics and the step/run loop. Every semantic function
// performs all fallible work (reads, translations, pointer arithmetic) before
// its first state update, so a fault leaves the machine exactly as it was
// before the step.

namespace x86dual {

enum class StepKind : std::uint8_t { kContinue, kHalt, kFaulted };

struct StepOutcome {
  StepKind kind = StepKind::kContinue;
  ProcMode mode = ProcMode::kMode64;
  Fault fault{};
  std::uint64_t rip_at_fault = 0;
};

enum class StopReason : std::uint8_t { kHalted, kStepBudget, kFaulted };

struct RunResult {
  StopReason reason = StopReason::kStepBudget;
  Fault fault{};
  // Completed steps; a faulting step is not counted, HLT is.
  std::uint64_t steps = 0;
};

namespace detail {

class Executor {
 public:
  Executor(MachineState& state, ProcMode mode, const DecodedInstruction& insn,
           std::uint64_t next_ip)
      : s_(state), mode_(mode), insn_(insn), next_ip_(next_ip) {}

  Status execute() {
    switch (insn_.family) {
      case Family::kAlu: return alu_op();
      case Family::kMov: return mov();
      case Family::kTest: return test();
      case Family::kIncDec: return inc_dec_op();
      case Family::kPush: return push_op();
      case Family::kPop: return pop_op();
      case Family::kCall: return call();
      case Family::kRet: return ret();
      case Family::kJmp: return jmp();
      case Family::kJcc: return jcc();
      case Family::kLea: return lea();
      case Family::kXchg: return xchg();
      case Family::kMovExtend: return mov_extend();
      case Family::kShift: return shift_op();
      case Family::kNop:
        if (insn_.prefixes.rex_b()) return xchg();  // 90 with REX.B
        return finish();
      case Family::kHlt: return finish();
      case Family::kInvalid: break;
    }
    return make_fault(FaultKind::kUD, FaultCause::kUnimplemented, s_.rip);
  }

 private:
  unsigned opsize() const { return insn_.operand_size; }
  std::uint8_t op_low() const { return insn_.opcode & 0xFF; }
  const ModRM& modrm() const { return *insn_.modrm; }

  // 64-bit mode stack traffic is always 8 bytes wide.
  unsigned stack_size() const {
    return mode_ == ProcMode::kMode64 ? 8 : opsize();
  }

  OperandLocation reg_operand(unsigned nbytes) const {
    return register_operand(modrm().reg | (insn_.prefixes.rex_r() ? 8 : 0),
                            nbytes, insn_.prefixes);
  }

  OperandLocation opcode_reg_operand(unsigned nbytes) const {
    return register_operand((op_low() & 7) | (insn_.prefixes.rex_b() ? 8 : 0),
                            nbytes, insn_.prefixes);
  }

  Result<OperandLocation> rm_location(unsigned nbytes) const {
    ByteCursor src(std::span(insn_.bytes).subspan(insn_.after_modrm));
    X86DUAL_ASSIGN_OR_RETURN(
        const ModrmOperand op,
        locate_modrm_operand(s_, mode_, insn_.prefixes, modrm(), src, nbytes,
                             next_ip_));
    return op.location;
  }

  Result<std::uint64_t> read(const OperandLocation& loc,
                             unsigned nbytes) const {
    return read_location(s_, mode_, loc, nbytes);
  }

  std::uint64_t imm_for(unsigned nbytes) const {
    return static_cast<std::uint64_t>(insn_.immediate_signed()) &
           size_mask(nbytes);
  }

  Status finish() {
    write_ip(s_, mode_, next_ip_);
    return {};
  }

  // Near branch target validated against CS (or canonicality); 16-bit
  // operand size wraps the target to IP.
  Result<std::uint64_t> branch_target(std::uint64_t base,
                                      std::int64_t delta) const {
    X86DUAL_ASSIGN_OR_RETURN(std::uint64_t target,
                             add_to_ip(s_, mode_, base, delta));
    if (mode_ == ProcMode::kMode32 && opsize() == 2) {
      X86DUAL_ASSIGN_OR_RETURN(target, add_to_ip(s_, mode_, target & 0xFFFF, 0));
    }
    return target;
  }

  struct StackSlot {
    std::uint64_t new_sp = 0;
    LinearAddress la = 0;
  };

  Result<StackSlot> prepare_push(unsigned nbytes) const {
    const std::uint64_t sp = read_sp(s_, mode_);
    X86DUAL_ASSIGN_OR_RETURN(
        const std::uint64_t new_sp,
        add_to_sp(s_, mode_, sp, -static_cast<std::int64_t>(nbytes)));
    X86DUAL_ASSIGN_OR_RETURN(
        const LinearAddress la,
        translate_data(s_, mode_, {Seg::kSS, new_sp}, nbytes));
    return StackSlot{new_sp, la};
  }

  void commit_push(const StackSlot& slot, unsigned nbytes,
                   std::uint64_t value) {
    write_linear_in_mode(s_, mode_, slot.la, nbytes, value & size_mask(nbytes));
    write_sp(s_, mode_, slot.new_sp);
  }

  struct Popped {
    std::uint64_t value = 0;
    std::uint64_t new_sp = 0;
  };

  Result<Popped> prepare_pop(unsigned nbytes, std::uint64_t extra = 0) const {
    const std::uint64_t sp = read_sp(s_, mode_);
    X86DUAL_ASSIGN_OR_RETURN(
        const std::uint64_t value,
        read_effective(s_, mode_, {Seg::kSS, sp}, nbytes,
                       AccessIntent::kRead));
    X86DUAL_ASSIGN_OR_RETURN(
        const std::uint64_t new_sp,
        add_to_sp(s_, mode_, sp, static_cast<std::int64_t>(nbytes + extra)));
    return Popped{value, new_sp};
  }

  Status alu_op() {
    const unsigned n = opsize();
    const std::uint8_t op = op_low();
    if (op < 0x40 && (op & 7) >= 4) {
      // AL/eAX, imm
      const AluOp kind = static_cast<AluOp>(op >> 3);
      const OperandLocation acc = OperandLocation::Register(kRax);
      std::uint64_t rflags = s_.rflags;
      const std::uint64_t r =
          alu(kind, read_gpr(s_, kRax, n), imm_for(n), n, rflags);
      if (kind != AluOp::kCmp) write_gpr(s_, acc.reg, n, false, r);
      s_.rflags = rflags;
      return finish();
    }
    if (op < 0x40 && (op & 2)) {
      // reg <- reg op r/m
      const AluOp kind = static_cast<AluOp>(op >> 3);
      X86DUAL_ASSIGN_OR_RETURN(const OperandLocation src, rm_location(n));
      X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t b, read(src, n));
      const OperandLocation dst = reg_operand(n);
      std::uint64_t rflags = s_.rflags;
      const std::uint64_t r = alu(kind, *read(dst, n), b, n, rflags);
      if (kind != AluOp::kCmp) write_gpr(s_, dst.reg, n, dst.high8, r);
      s_.rflags = rflags;
      return finish();
    }
    // r/m <- r/m op (reg | imm)
    AluOp kind;
    std::uint64_t b;
    if (op < 0x40) {
      kind = static_cast<AluOp>(op >> 3);
      b = *read(reg_operand(n), n);
    } else {
      kind = static_cast<AluOp>(modrm().reg);
      b = imm_for(n);
    }
    X86DUAL_ASSIGN_OR_RETURN(const OperandLocation dst, rm_location(n));
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t a, read(dst, n));
    std::uint64_t rflags = s_.rflags;
    const std::uint64_t r = alu(kind, a, b, n, rflags);
    if (kind != AluOp::kCmp) {
      X86DUAL_RETURN_IF_FAULT(operand_to_location(s_, mode_, dst, n, r));
    }
    s_.rflags = rflags;
    return finish();
  }

  Status mov() {
    const unsigned n = opsize();
    const std::uint8_t op = op_low();
    if (op >= 0xB0 && op <= 0xBF) {
      const OperandLocation dst = opcode_reg_operand(n);
      write_gpr(s_, dst.reg, n, dst.high8, insn_.immediate & size_mask(n));
      return finish();
    }
    X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(n));
    switch (op) {
      case 0x88:
      case 0x89:
        X86DUAL_RETURN_IF_FAULT(
            operand_to_location(s_, mode_, rm, n, *read(reg_operand(n), n)));
        break;
      case 0x8A:
      case 0x8B: {
        X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t v, read(rm, n));
        const OperandLocation dst = reg_operand(n);
        write_gpr(s_, dst.reg, n, dst.high8, v);
        break;
      }
      default:  // C6 /0, C7 /0
        X86DUAL_RETURN_IF_FAULT(
            operand_to_location(s_, mode_, rm, n, imm_for(n)));
        break;
    }
    return finish();
  }

  Status test() {
    const unsigned n = opsize();
    std::uint64_t a, b;
    if (op_low() >= 0xA8) {
      a = read_gpr(s_, kRax, n);
      b = imm_for(n);
    } else {
      X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(n));
      X86DUAL_ASSIGN_OR_RETURN(a, read(rm, n));
      b = *read(reg_operand(n), n);
    }
    logic_flags(a & b, n, s_.rflags);
    return finish();
  }

  Status inc_dec_op() {
    const unsigned n = opsize();
    const std::uint8_t op = op_low();
    if (op < 0x50) {
      // 40-4F, 32-bit mode only
      const unsigned reg = op & 7;
      const std::uint64_t r =
          inc_dec(op >= 0x48, read_gpr(s_, reg, n), n, s_.rflags);
      write_gpr(s_, reg, n, false, r);
      return finish();
    }
    X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(n));
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t a, read(rm, n));
    std::uint64_t rflags = s_.rflags;
    const std::uint64_t r = inc_dec(modrm().reg == 1, a, n, rflags);
    X86DUAL_RETURN_IF_FAULT(operand_to_location(s_, mode_, rm, n, r));
    s_.rflags = rflags;
    return finish();
  }

  Status push_op() {
    const unsigned n = stack_size();
    std::uint64_t value;
    const std::uint8_t op = op_low();
    if (op >= 0x50 && op <= 0x57) {
      value = *read(opcode_reg_operand(n), n);
    } else if (op == 0x68 || op == 0x6A) {
      value = imm_for(n);
    } else {  // FF /6
      X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(n));
      X86DUAL_ASSIGN_OR_RETURN(value, read(rm, n));
    }
    X86DUAL_ASSIGN_OR_RETURN(const StackSlot slot, prepare_push(n));
    commit_push(slot, n, value);
    return finish();
  }

  Status pop_op() {
    const unsigned n = stack_size();
    X86DUAL_ASSIGN_OR_RETURN(const Popped popped, prepare_pop(n));
    if (op_low() != 0x8F) {
      const OperandLocation dst = opcode_reg_operand(n);
      write_sp(s_, mode_, popped.new_sp);
      write_gpr(s_, dst.reg, n, false, popped.value);
      return finish();
    }
    // 8F /0: an rSP-based destination address uses the incremented pointer.
    const std::uint64_t saved_rsp = s_.gpr[kRsp];
    write_sp(s_, mode_, popped.new_sp);
    auto rm = rm_location(n);
    if (!rm.ok()) {
      s_.gpr[kRsp] = saved_rsp;
      return rm.fault();
    }
    if (auto st = operand_to_location(s_, mode_, *rm, n, popped.value);
        !st.ok()) {
      s_.gpr[kRsp] = saved_rsp;
      return st.fault();
    }
    return finish();
  }

  Status call() {
    const unsigned n = stack_size();
    std::uint64_t target;
    if (op_low() == 0xE8) {
      X86DUAL_ASSIGN_OR_RETURN(target,
                               branch_target(next_ip_, insn_.immediate_signed()));
    } else {  // FF /2
      X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(n));
      X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t v, read(rm, n));
      X86DUAL_ASSIGN_OR_RETURN(target, branch_target(v & size_mask(n), 0));
    }
    X86DUAL_ASSIGN_OR_RETURN(const StackSlot slot, prepare_push(n));
    commit_push(slot, n, next_ip_);
    write_ip(s_, mode_, target);
    return {};
  }

  Status ret() {
    const unsigned n = stack_size();
    const std::uint64_t extra = op_low() == 0xC2 ? insn_.immediate : 0;
    X86DUAL_ASSIGN_OR_RETURN(const Popped popped, prepare_pop(n, extra));
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t target,
                             branch_target(popped.value & size_mask(n), 0));
    write_sp(s_, mode_, popped.new_sp);
    write_ip(s_, mode_, target);
    return {};
  }

  Status jmp() {
    std::uint64_t target;
    if (op_low() == 0xFF) {
      const unsigned n = stack_size();
      X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(n));
      X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t v, read(rm, n));
      X86DUAL_ASSIGN_OR_RETURN(target, branch_target(v & size_mask(n), 0));
    } else {
      X86DUAL_ASSIGN_OR_RETURN(target,
                               branch_target(next_ip_, insn_.immediate_signed()));
    }
    write_ip(s_, mode_, target);
    return {};
  }

  Status jcc() {
    if (!condition_holds(insn_.opcode & 0xF, s_.rflags)) return finish();
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t target,
                             branch_target(next_ip_, insn_.immediate_signed()));
    write_ip(s_, mode_, target);
    return {};
  }

  Status lea() {
    const unsigned n = opsize();
    X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(n));
    const OperandLocation dst = reg_operand(n);
    write_gpr(s_, dst.reg, n, false, rm.effective & size_mask(n));
    return finish();
  }

  Status xchg() {
    const unsigned n = opsize();
    if (!insn_.modrm) {
      // 90-97: eAX <-> register
      const OperandLocation other = opcode_reg_operand(n);
      const std::uint64_t a = read_gpr(s_, kRax, n);
      const std::uint64_t b = read_gpr(s_, other.reg, n);
      write_gpr(s_, kRax, n, false, b);
      write_gpr(s_, other.reg, n, false, a);
      return finish();
    }
    X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(n));
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t a, read(rm, n));
    const OperandLocation reg = reg_operand(n);
    const std::uint64_t b = *read(reg, n);
    X86DUAL_RETURN_IF_FAULT(operand_to_location(s_, mode_, rm, n, b));
    write_gpr(s_, reg.reg, n, reg.high8, a);
    return finish();
  }

  Status mov_extend() {
    const unsigned n = opsize();
    const std::uint8_t op = op_low();
    const unsigned src_size = (op & 1) ? 2 : 1;
    X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(src_size));
    X86DUAL_ASSIGN_OR_RETURN(std::uint64_t v, read(rm, src_size));
    if (op >= 0xBE && (v & (1ull << (8 * src_size - 1)))) {
      v |= ~size_mask(src_size);
    }
    const OperandLocation dst = reg_operand(n);
    write_gpr(s_, dst.reg, n, false, v & size_mask(n));
    return finish();
  }

  Status shift_op() {
    const unsigned n = opsize();
    const std::uint8_t op = op_low();
    unsigned count = 1;
    if (op == 0xC0 || op == 0xC1) count = insn_.immediate & 0xFF;
    if (op == 0xD3) count = s_.gpr[kRcx] & 0xFF;
    X86DUAL_ASSIGN_OR_RETURN(const OperandLocation rm, rm_location(n));
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t a, read(rm, n));
    std::uint64_t rflags = s_.rflags;
    const std::uint64_t r =
        shift(static_cast<ShiftOp>(modrm().reg), a, count, n, rflags);
    X86DUAL_RETURN_IF_FAULT(operand_to_location(s_, mode_, rm, n, r));
    s_.rflags = rflags;
    return finish();
  }

  MachineState& s_;
  ProcMode mode_;
  const DecodedInstruction& insn_;
  std::uint64_t next_ip_;
};

}  // namespace detail

// Executes one instruction. The processor mode is read once, here, and
// threaded through every layer below. If `decoded` is non-null it receives
// the decoded instruction (left default on a fetch/decode fault).
inline StepOutcome step(MachineState& state,
                        DecodedInstruction* decoded = nullptr) {
  const ProcMode mode = proc_mode(state);
  StepOutcome out;
  out.mode = mode;
  const auto faulted = [&](const Fault& f) {
    out.kind = StepKind::kFaulted;
    out.fault = f;
    out.rip_at_fault = state.rip;
    return out;
  };

  auto insn = fetch_decode(state, mode);
  if (!insn.ok()) return faulted(insn.fault());
  if (decoded) *decoded = *insn;

  auto next_ip = add_to_ip(state, mode, read_ip(state, mode), insn->length);
  if (!next_ip.ok()) return faulted(next_ip.fault());

  detail::Executor exec(state, mode, *insn, *next_ip);
  if (auto st = exec.execute(); !st.ok()) return faulted(st.fault());
  out.kind =
      insn->family == Family::kHlt ? StepKind::kHalt : StepKind::kContinue;
  return out;
}

inline RunResult run(MachineState& state, std::uint64_t max_steps) {
  RunResult result;
  while (result.steps < max_steps) {
    const StepOutcome out = step(state);
    if (out.kind == StepKind::kFaulted) {
      result.reason = StopReason::kFaulted;
      result.fault = out.fault;
      return result;
    }
    ++result.steps;
    if (out.kind == StepKind::kHalt) {
      result.reason = StopReason::kHalted;
      return result;
    }
  }
  result.reason = StopReason::kStepBudget;
  return result;
}

}  // namespace x86dual

#endif  // X86DUAL_ISA_HPP_
