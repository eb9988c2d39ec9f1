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

#ifndef X86DUAL_MEMORY_HPP_
#define X86DUAL_MEMORY_HPP_

#include <array>
#include <cstdint>
#include <type_traits>

#include "x86dual/fault.hpp"
#include "x86dual/machine_state.hpp"
#include "x86dual/segmentation.hpp"

// Two layers: *_linear functions work on flat linear addresses and never
// fault; *_effective functions translate a logical address, check alignment
// when enabled, and delegate to the linear layer.

namespace x86dual {

using u128 = unsigned __int128;

// Read vs Execute separates data reads from instruction fetches.
enum class AccessIntent : std::uint8_t { kRead, kExecute, kWrite };

// kMemPtr is a far pointer (selector:offset); it only needs the alignment of
// its offset part.
enum class OperandKind : std::uint8_t { kNormal, kMemPtr };

inline constexpr std::uint64_t kLinear32End = 1ull << 32;

template <typename Word>
concept MemoryWord =
    std::is_same_v<Word, std::uint64_t> || std::is_same_v<Word, u128>;

template <MemoryWord Word = std::uint64_t>
Word read_linear(const MachineState& state, LinearAddress addr,
                 unsigned nbytes, bool sign = false) {
  std::array<std::uint8_t, 16> buf;
  state.memory.read(addr, std::span(buf.data(), nbytes));
  Word value = 0;
  for (unsigned i = nbytes; i-- > 0;) value = (value << 8) | buf[i];
  if (sign && nbytes < sizeof(Word) && (buf[nbytes - 1] & 0x80)) {
    value |= ~Word{0} << (8 * nbytes);
  }
  return value;
}

template <MemoryWord Word = std::uint64_t>
void write_linear(MachineState& state, LinearAddress addr, unsigned nbytes,
                  Word value) {
  std::array<std::uint8_t, 16> buf;
  for (unsigned i = 0; i < nbytes; ++i) {
    buf[i] = static_cast<std::uint8_t>(value);
    value >>= 8;
  }
  state.memory.write(addr, std::span<const std::uint8_t>(buf.data(), nbytes));
}

// Linear access as seen from `mode`: 32-bit linear addresses wrap at 4 GiB.
template <MemoryWord Word = std::uint64_t>
Word read_linear_in_mode(const MachineState& state, ProcMode mode,
                         LinearAddress la, unsigned nbytes, bool sign = false) {
  if (mode == ProcMode::kMode64 || la + nbytes <= kLinear32End) {
    return read_linear<Word>(state, la, nbytes, sign);
  }
  Word value = 0;
  for (unsigned i = nbytes; i-- > 0;) {
    value = (value << 8) | state.memory.read_byte((la + i) & 0xFFFF'FFFFull);
  }
  if (sign && nbytes < sizeof(Word) && ((value >> (8 * nbytes - 1)) & 1)) {
    value |= ~Word{0} << (8 * nbytes);
  }
  return value;
}

template <MemoryWord Word = std::uint64_t>
void write_linear_in_mode(MachineState& state, ProcMode mode, LinearAddress la,
                          unsigned nbytes, Word value) {
  if (mode == ProcMode::kMode64 || la + nbytes <= kLinear32End) {
    write_linear<Word>(state, la, nbytes, value);
    return;
  }
  for (unsigned i = 0; i < nbytes; ++i) {
    state.memory.write_byte((la + i) & 0xFFFF'FFFFull,
                            static_cast<std::uint8_t>(value));
    value >>= 8;
  }
}

constexpr bool alignment_ok(LinearAddress addr, unsigned nbytes,
                            OperandKind kind = OperandKind::kNormal) {
  unsigned alignment = nbytes;
  if (kind == OperandKind::kMemPtr && nbytes > 2) alignment = nbytes - 2;
  if (alignment == 0 || (alignment & (alignment - 1)) != 0) return true;
  return (addr & (alignment - 1)) == 0;
}

// Translation plus alignment check for a data access; the linear address is
// returned so a caller can stage several writes and commit them together.
inline Result<LinearAddress> translate_data(const MachineState& state,
                                            ProcMode mode,
                                            LogicalAddress logical,
                                            unsigned nbytes) {
  X86DUAL_ASSIGN_OR_RETURN(const LinearAddress la,
                           ea_to_la(state, mode, logical, nbytes));
  if (state.cfg.alignment_checking && !alignment_ok(la, nbytes)) {
    return make_fault(FaultKind::kAC, FaultCause::kMisaligned, la);
  }
  return la;
}

template <MemoryWord Word = std::uint64_t>
Result<Word> read_effective(const MachineState& state, ProcMode mode,
                            LogicalAddress logical, unsigned nbytes,
                            AccessIntent intent, bool sign = false) {
  LinearAddress la;
  if (intent == AccessIntent::kExecute) {
    X86DUAL_ASSIGN_OR_RETURN(la, ea_to_la(state, mode, logical, nbytes));
  } else {
    X86DUAL_ASSIGN_OR_RETURN(la, translate_data(state, mode, logical, nbytes));
  }
  return read_linear_in_mode<Word>(state, mode, la, nbytes, sign);
}

template <MemoryWord Word = std::uint64_t>
Status write_effective(MachineState& state, ProcMode mode,
                       LogicalAddress logical, unsigned nbytes, Word value) {
  X86DUAL_ASSIGN_OR_RETURN(const LinearAddress la,
                           translate_data(state, mode, logical, nbytes));
  write_linear_in_mode<Word>(state, mode, la, nbytes, value);
  return {};
}

}  // namespace x86dual

#endif  // X86DUAL_MEMORY_HPP_
