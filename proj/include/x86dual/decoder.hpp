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

#ifndef X86DUAL_DECODER_HPP_
#define X86DUAL_DECODER_HPP_

#include <array>
#include <cstdint>
#include <string_view>

#include "x86dual/addressing.hpp"
#include "x86dual/fault.hpp"
#include "x86dual/instruction.hpp"
#include "x86dual/machine_state.hpp"
#include "x86dual/pointer_flow.hpp"
#include "x86dual/selection.hpp"

namespace x86dual {

struct OpcodeInfo {
  Family family = Family::kInvalid;
  bool has_modrm = false;
  ImmKind imm = ImmKind::kNone;
  bool byte_op = false;
  // 64-bit default operand size in 64-bit mode (near stack/branch ops).
  bool default64 = false;
  // Near branch: operand size is forced to 64 bits in 64-bit mode.
  bool branch = false;
  // Allowed ModR/M.reg values for group opcodes.
  std::uint8_t reg_mask = 0xFF;
  // Only valid with a memory operand.
  bool memory_only = false;
};

namespace detail {

struct OpcodeTables {
  std::array<OpcodeInfo, 256> one_byte{};
  std::array<OpcodeInfo, 256> two_byte{};
};

constexpr OpcodeTables build_opcode_tables() {
  OpcodeTables t;
  auto& o = t.one_byte;
  using F = Family;
  using I = ImmKind;
  for (unsigned base = 0x00; base <= 0x38; base += 8) {
    o[base + 0] = {F::kAlu, true, I::kNone, true};
    o[base + 1] = {F::kAlu, true, I::kNone, false};
    o[base + 2] = {F::kAlu, true, I::kNone, true};
    o[base + 3] = {F::kAlu, true, I::kNone, false};
    o[base + 4] = {F::kAlu, false, I::kByte, true};
    o[base + 5] = {F::kAlu, false, I::kZ, false};
  }
  for (unsigned op = 0x40; op <= 0x4F; ++op) o[op] = {F::kIncDec};
  for (unsigned op = 0x50; op <= 0x57; ++op) {
    o[op] = {F::kPush, false, I::kNone, false, true};
  }
  for (unsigned op = 0x58; op <= 0x5F; ++op) {
    o[op] = {F::kPop, false, I::kNone, false, true};
  }
  o[0x68] = {F::kPush, false, I::kZ, false, true};
  o[0x6A] = {F::kPush, false, I::kByte, false, true};
  for (unsigned op = 0x70; op <= 0x7F; ++op) {
    o[op] = {F::kJcc, false, I::kRel8, false, true, true};
  }
  o[0x80] = {F::kAlu, true, I::kByte, true};
  o[0x81] = {F::kAlu, true, I::kZ, false};
  o[0x83] = {F::kAlu, true, I::kByte, false};
  o[0x84] = {F::kTest, true, I::kNone, true};
  o[0x85] = {F::kTest, true, I::kNone, false};
  o[0x86] = {F::kXchg, true, I::kNone, true};
  o[0x87] = {F::kXchg, true, I::kNone, false};
  o[0x88] = {F::kMov, true, I::kNone, true};
  o[0x89] = {F::kMov, true, I::kNone, false};
  o[0x8A] = {F::kMov, true, I::kNone, true};
  o[0x8B] = {F::kMov, true, I::kNone, false};
  o[0x8D] = {F::kLea, true, I::kNone, false, false, false, 0xFF, true};
  o[0x8F] = {F::kPop, true, I::kNone, false, true, false, 0x01};
  o[0x90] = {F::kNop};
  for (unsigned op = 0x91; op <= 0x97; ++op) o[op] = {F::kXchg};
  o[0xA8] = {F::kTest, false, I::kByte, true};
  o[0xA9] = {F::kTest, false, I::kZ, false};
  for (unsigned op = 0xB0; op <= 0xB7; ++op) {
    o[op] = {F::kMov, false, I::kByte, true};
  }
  for (unsigned op = 0xB8; op <= 0xBF; ++op) {
    o[op] = {F::kMov, false, I::kV, false};
  }
  constexpr std::uint8_t kShiftRegs = (1 << 4) | (1 << 5) | (1 << 7);
  o[0xC0] = {F::kShift, true, I::kByte, true, false, false, kShiftRegs};
  o[0xC1] = {F::kShift, true, I::kByte, false, false, false, kShiftRegs};
  o[0xC2] = {F::kRet, false, I::kWord, false, true, true};
  o[0xC3] = {F::kRet, false, I::kNone, false, true, true};
  o[0xC6] = {F::kMov, true, I::kByte, true, false, false, 0x01};
  o[0xC7] = {F::kMov, true, I::kZ, false, false, false, 0x01};
  o[0xD0] = {F::kShift, true, I::kNone, true, false, false, kShiftRegs};
  o[0xD1] = {F::kShift, true, I::kNone, false, false, false, kShiftRegs};
  o[0xD3] = {F::kShift, true, I::kNone, false, false, false, kShiftRegs};
  o[0xE8] = {F::kCall, false, I::kRelZ, false, true, true};
  o[0xE9] = {F::kJmp, false, I::kRelZ, false, true, true};
  o[0xEB] = {F::kJmp, false, I::kRel8, false, true, true};
  o[0xF4] = {F::kHlt};
  o[0xFE] = {F::kIncDec, true, I::kNone, true, false, false, 0x03};
  // FF is resolved per ModR/M.reg in group5_info().
  o[0xFF] = {F::kIncDec, true, I::kNone, false, false, false,
             (1 << 0) | (1 << 1) | (1 << 2) | (1 << 4) | (1 << 6)};

  auto& w = t.two_byte;
  for (unsigned op = 0x80; op <= 0x8F; ++op) {
    w[op] = {F::kJcc, false, I::kRelZ, false, true, true};
  }
  w[0xB6] = {F::kMovExtend, true};
  w[0xB7] = {F::kMovExtend, true};
  w[0xBE] = {F::kMovExtend, true};
  w[0xBF] = {F::kMovExtend, true};
  return t;
}

inline constexpr OpcodeTables kOpcodeTables = build_opcode_tables();

constexpr OpcodeInfo group5_info(std::uint8_t reg) {
  switch (reg) {
    case 0:
    case 1: return {Family::kIncDec, true};
    case 2: return {Family::kCall, true, ImmKind::kNone, false, true, true};
    case 4: return {Family::kJmp, true, ImmKind::kNone, false, true, true};
    case 6: return {Family::kPush, true, ImmKind::kNone, false, true};
    default: return {};
  }
}

constexpr unsigned immediate_size(ImmKind kind, unsigned operand_size) {
  switch (kind) {
    case ImmKind::kNone: return 0;
    case ImmKind::kByte:
    case ImmKind::kRel8: return 1;
    case ImmKind::kWord: return 2;
    case ImmKind::kZ:
    case ImmKind::kRelZ: return operand_size == 2 ? 2 : 4;
    case ImmKind::kV: return operand_size;
  }
  return 0;
}

}  // namespace detail

// Fetches and decodes the instruction at CS:read_ip(). Every byte goes
// through the CS-relative Execute path. Opcodes outside the supported set,
// and any LOCK prefix, raise #UD; exceeding 15 bytes raises #GP.
inline Result<DecodedInstruction> fetch_decode(const MachineState& state,
                                               ProcMode mode) {
  const std::uint64_t start_ip = read_ip(state, mode);
  CodeCursor cursor(state, mode, start_ip);
  DecodedInstruction insn;
  Prefixes& p = insn.prefixes;

  std::uint8_t b = 0;
  for (;;) {
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t byte, cursor.fetch(1));
    b = static_cast<std::uint8_t>(byte);
    bool legacy = true;
    switch (b) {
      case 0xF0: p.lock = true; break;
      case 0xF2: p.rep = RepKind::kRepne; break;
      case 0xF3: p.rep = RepKind::kRep; break;
      case 0x26: p.seg_override = Seg::kES; break;
      case 0x2E: p.seg_override = Seg::kCS; break;
      case 0x36: p.seg_override = Seg::kSS; break;
      case 0x3E: p.seg_override = Seg::kDS; break;
      case 0x64: p.seg_override = Seg::kFS; break;
      case 0x65: p.seg_override = Seg::kGS; break;
      case 0x66: p.opsize_override = true; break;
      case 0x67: p.addrsize_override = true; break;
      default: legacy = false; break;
    }
    if (legacy) {
      // A REX followed by a legacy prefix is ignored.
      p.rex.reset();
      continue;
    }
    if (mode == ProcMode::kMode64 && (b & 0xF0) == 0x40) {
      p.rex = static_cast<std::uint8_t>(b & 0x0F);
      continue;
    }
    break;
  }

  OpcodeInfo info;
  if (b == 0x0F) {
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t second, cursor.fetch(1));
    insn.opcode = static_cast<std::uint16_t>(0x0F00 | second);
    info = detail::kOpcodeTables.two_byte[second];
  } else {
    insn.opcode = b;
    info = detail::kOpcodeTables.one_byte[b];
  }
  const auto undefined = [&] {
    return make_fault(FaultKind::kUD, FaultCause::kUnimplemented, start_ip);
  };
  if (info.family == Family::kInvalid) return undefined();

  if (info.has_modrm) {
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t modrm_byte, cursor.fetch(1));
    const ModRM modrm = ModRM::from_byte(static_cast<std::uint8_t>(modrm_byte));
    insn.modrm = modrm;
    insn.after_modrm = static_cast<std::uint8_t>(cursor.consumed());
    if (((info.reg_mask >> modrm.reg) & 1) == 0) return undefined();
    if (insn.opcode == 0xFF) info = detail::group5_info(modrm.reg);
    if (info.memory_only && modrm.mod == 3) return undefined();
  }
  if (p.lock) {
    return make_fault(FaultKind::kUD, FaultCause::kLockPrefix, start_ip);
  }

  insn.family = info.family;
  insn.byte_op = info.byte_op;
  insn.operand_size = static_cast<std::uint8_t>(
      mode == ProcMode::kMode64 && info.branch
          ? 8
          : select_operand_size(state, mode, p, info.default64, info.byte_op));
  insn.address_size =
      static_cast<std::uint8_t>(select_address_size(state, mode, p));

  if (insn.modrm && insn.modrm->mod != 3) {
    const ModRM m = *insn.modrm;
    if (insn.address_size == 2) {
      insn.disp_bytes = m.mod == 1 ? 1 : (m.mod == 2 || m.rm == 6) ? 2 : 0;
    } else {
      insn.disp_bytes = m.mod == 1 ? 1 : m.mod == 2 ? 4 : 0;
      if (m.rm == 4) {
        X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t sib_byte, cursor.fetch(1));
        insn.sib = SIB::from_byte(static_cast<std::uint8_t>(sib_byte));
        if (m.mod == 0 && insn.sib->base == 5) insn.disp_bytes = 4;
      } else if (m.mod == 0 && m.rm == 5) {
        insn.disp_bytes = 4;
      }
    }
    if (insn.disp_bytes != 0) {
      X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t disp,
                               cursor.fetch(insn.disp_bytes));
      const unsigned shift = 64 - 8 * insn.disp_bytes;
      insn.displacement = static_cast<std::int32_t>(
          static_cast<std::int64_t>(disp << shift) >> shift);
    }
  }

  insn.imm_bytes = static_cast<std::uint8_t>(
      detail::immediate_size(info.imm, insn.operand_size));
  if (insn.imm_bytes != 0) {
    X86DUAL_ASSIGN_OR_RETURN(insn.immediate, cursor.fetch(insn.imm_bytes));
  }

  insn.length = static_cast<std::uint8_t>(cursor.consumed());
  insn.bytes = cursor.bytes();
  return insn;
}

// Short mnemonic for traces.
inline std::string_view mnemonic(const DecodedInstruction& insn) {
  static constexpr std::string_view kAlu[] = {"ADD", "OR",  "ADC", "SBB",
                                              "AND", "SUB", "XOR", "CMP"};
  const std::uint8_t reg = insn.modrm ? insn.modrm->reg : 0;
  switch (insn.family) {
    case Family::kInvalid: return "??";
    case Family::kAlu:
      return insn.opcode >= 0x80 ? kAlu[reg] : kAlu[(insn.opcode >> 3) & 7];
    case Family::kMov: return "MOV";
    case Family::kTest: return "TEST";
    case Family::kIncDec:
      if (insn.opcode < 0x50) return insn.opcode < 0x48 ? "INC" : "DEC";
      return reg == 0 ? "INC" : "DEC";
    case Family::kPush: return "PUSH";
    case Family::kPop: return "POP";
    case Family::kCall: return "CALL";
    case Family::kRet: return "RET";
    case Family::kJmp: return "JMP";
    case Family::kJcc: return "JCC";
    case Family::kLea: return "LEA";
    case Family::kXchg: return "XCHG";
    case Family::kMovExtend:
      return (insn.opcode & 0xFF) < 0xBE ? "MOVZX" : "MOVSX";
    case Family::kShift: return reg == 4 ? "SHL" : reg == 5 ? "SHR" : "SAR";
    case Family::kNop: return "NOP";
    case Family::kHlt: return "HLT";
  }
  return "??";
}

}  // namespace x86dual

#endif  // X86DUAL_DECODER_HPP_
