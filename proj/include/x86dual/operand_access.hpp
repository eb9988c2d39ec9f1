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

#ifndef X86DUAL_OPERAND_ACCESS_HPP_
#define X86DUAL_OPERAND_ACCESS_HPP_

#include <cstdint>

#include "x86dual/addressing.hpp"
#include "x86dual/fault.hpp"
#include "x86dual/instruction.hpp"
#include "x86dual/machine_state.hpp"
#include "x86dual/memory.hpp"
#include "x86dual/selection.hpp"

namespace x86dual {

// Where an operand lives. Memory locations keep the logical form (segment
// plus effective address); translation happens on each access.
struct OperandLocation {
  enum class Kind : std::uint8_t { kRegister, kMemory };

  Kind kind = Kind::kRegister;
  std::uint8_t reg = 0;
  bool high8 = false;
  Seg seg = Seg::kDS;
  std::uint64_t effective = 0;

  static constexpr OperandLocation Register(unsigned reg, bool high8 = false) {
    return {Kind::kRegister, static_cast<std::uint8_t>(reg), high8};
  }
  static constexpr OperandLocation Memory(Seg seg, std::uint64_t effective) {
    return {Kind::kMemory, 0, false, seg, effective};
  }
  constexpr bool is_memory() const { return kind == Kind::kMemory; }

  friend bool operator==(const OperandLocation&,
                         const OperandLocation&) = default;
};

struct ModrmOperand {
  std::uint64_t value = 0;
  OperandLocation location;
  unsigned disp_bytes = 0;
};

// Register operand for an (already REX-extended) register number. Without a
// REX prefix, byte registers 4..7 are AH/CH/DH/BH.
constexpr OperandLocation register_operand(unsigned reg, unsigned nbytes,
                                           const Prefixes& prefixes) {
  if (nbytes == 1 && !prefixes.rex && reg >= 4 && reg < 8) {
    return OperandLocation::Register(reg - 4, true);
  }
  return OperandLocation::Register(reg);
}

inline Result<std::uint64_t> read_location(const MachineState& state,
                                           ProcMode mode,
                                           const OperandLocation& loc,
                                           unsigned nbytes,
                                           AccessIntent intent =
                                               AccessIntent::kRead) {
  if (!loc.is_memory()) return read_gpr(state, loc.reg, nbytes, loc.high8);
  return read_effective(state, mode, {loc.seg, loc.effective}, nbytes, intent);
}

// Register writes follow write_gpr (32-bit writes zero-extend). A faulting
// memory write leaves the state untouched.
inline Status operand_to_location(MachineState& state, ProcMode mode,
                                  const OperandLocation& loc, unsigned nbytes,
                                  std::uint64_t value) {
  if (!loc.is_memory()) {
    write_gpr(state, loc.reg, nbytes, loc.high8, value & size_mask(nbytes));
    return {};
  }
  return write_effective(state, mode, {loc.seg, loc.effective}, nbytes,
                         value & size_mask(nbytes));
}

// Locates the r/m operand without touching it. `src` is positioned just past
// the ModR/M byte.
template <ByteSource Src>
Result<ModrmOperand> locate_modrm_operand(const MachineState& state,
                                          ProcMode mode,
                                          const Prefixes& prefixes,
                                          ModRM modrm, Src& src,
                                          unsigned nbytes,
                                          std::uint64_t next_ip) {
  if (modrm.mod == 3) {
    const unsigned reg = modrm.rm | (prefixes.rex_b() ? 8 : 0);
    return ModrmOperand{0, register_operand(reg, nbytes, prefixes), 0};
  }
  const unsigned address_size = select_address_size(state, mode, prefixes);
  X86DUAL_ASSIGN_OR_RETURN(
      const EffectiveAddress ea,
      effective_addr(state, mode, address_size, modrm, prefixes, src,
                     next_ip));
  const Seg seg = select_segment_register(mode, prefixes, ea.default_seg);
  return ModrmOperand{0, OperandLocation::Memory(seg, ea.effective),
                      ea.disp_bytes};
}

// Reads the r/m operand and returns its location so read-modify-write
// instructions can store back without recomputing the address.
template <ByteSource Src>
Result<ModrmOperand> operand_from_modrm(const MachineState& state,
                                        ProcMode mode,
                                        const Prefixes& prefixes, ModRM modrm,
                                        Src& src, unsigned nbytes,
                                        AccessIntent intent,
                                        std::uint64_t next_ip) {
  X86DUAL_ASSIGN_OR_RETURN(
      ModrmOperand op,
      locate_modrm_operand(state, mode, prefixes, modrm, src, nbytes,
                           next_ip));
  X86DUAL_ASSIGN_OR_RETURN(op.value, read_location(state, mode, op.location,
                                                   nbytes, intent));
  return op;
}

}  // namespace x86dual

#endif  // X86DUAL_OPERAND_ACCESS_HPP_
