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

#ifndef X86DUAL_INSTRUCTION_HPP_
#define X86DUAL_INSTRUCTION_HPP_

#include <array>
#include <cstdint>
#include <optional>

#include "x86dual/machine_state.hpp"

namespace x86dual {

inline constexpr unsigned kMaxInstructionLength = 15;

enum class RepKind : std::uint8_t { kNone, kRep, kRepne };

// Within a group, the last prefix seen wins. A REX byte only counts if it
// is the last prefix before the opcode, and only exists in 64-bit mode.
struct Prefixes {
  bool lock = false;
  RepKind rep = RepKind::kNone;
  std::optional<Seg> seg_override;
  bool opsize_override = false;  // 0x66
  bool addrsize_override = false;  // 0x67
  std::optional<std::uint8_t> rex;  // low nibble: W R X B

  bool rex_w() const { return rex && (*rex & 0x8); }
  bool rex_r() const { return rex && (*rex & 0x4); }
  bool rex_x() const { return rex && (*rex & 0x2); }
  bool rex_b() const { return rex && (*rex & 0x1); }

  friend bool operator==(const Prefixes&, const Prefixes&) = default;
};

struct ModRM {
  std::uint8_t mod = 0;
  std::uint8_t reg = 0;
  std::uint8_t rm = 0;

  static constexpr ModRM from_byte(std::uint8_t b) {
    return {static_cast<std::uint8_t>(b >> 6),
            static_cast<std::uint8_t>((b >> 3) & 7),
            static_cast<std::uint8_t>(b & 7)};
  }
  constexpr std::uint8_t byte() const {
    return static_cast<std::uint8_t>(mod << 6 | reg << 3 | rm);
  }
  friend bool operator==(const ModRM&, const ModRM&) = default;
};

struct SIB {
  std::uint8_t scale = 0;
  std::uint8_t index = 0;
  std::uint8_t base = 0;

  static constexpr SIB from_byte(std::uint8_t b) {
    return {static_cast<std::uint8_t>(b >> 6),
            static_cast<std::uint8_t>((b >> 3) & 7),
            static_cast<std::uint8_t>(b & 7)};
  }
  constexpr std::uint8_t byte() const {
    return static_cast<std::uint8_t>(scale << 6 | index << 3 | base);
  }
  friend bool operator==(const SIB&, const SIB&) = default;
};

// Instruction families dispatched by the interpreter.
enum class Family : std::uint8_t {
  kInvalid,
  kAlu,
  kMov,
  kTest,
  kIncDec,
  kPush,
  kPop,
  kCall,
  kRet,
  kJmp,
  kJcc,
  kLea,
  kXchg,
  kMovExtend,
  kShift,
  kNop,
  kHlt,
};

enum class ImmKind : std::uint8_t {
  kNone,
  kByte,
  kWord,   // always 16 bits
  kZ,      // 16 or 32 bits by operand size
  kV,      // 16, 32 or 64 bits by operand size
  kRel8,
  kRelZ,
};

struct DecodedInstruction {
  Prefixes prefixes;
  // One-byte opcodes are 0x00XX; the 0F map is 0x0FXX.
  std::uint16_t opcode = 0;
  Family family = Family::kInvalid;
  std::optional<ModRM> modrm;
  std::optional<SIB> sib;
  std::int32_t displacement = 0;
  std::uint8_t disp_bytes = 0;
  // Raw little-endian immediate, zero-extended from imm_bytes.
  std::uint64_t immediate = 0;
  std::uint8_t imm_bytes = 0;
  std::uint8_t operand_size = 0;
  std::uint8_t address_size = 0;
  std::uint8_t length = 0;
  // Offset of the byte following ModR/M (where SIB/displacement begin).
  std::uint8_t after_modrm = 0;
  std::array<std::uint8_t, kMaxInstructionLength> bytes{};

  bool byte_op = false;

  std::int64_t immediate_signed() const {
    if (imm_bytes == 0 || imm_bytes >= 8) {
      return static_cast<std::int64_t>(immediate);
    }
    const unsigned shift = 64 - 8 * imm_bytes;
    return static_cast<std::int64_t>(immediate << shift) >> shift;
  }

  friend bool operator==(const DecodedInstruction&,
                         const DecodedInstruction&) = default;
};

}  // namespace x86dual

#endif  // X86DUAL_INSTRUCTION_HPP_
