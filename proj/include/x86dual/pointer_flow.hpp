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

#ifndef X86DUAL_POINTER_FLOW_HPP_
#define X86DUAL_POINTER_FLOW_HPP_

#include <cstdint>

#include "x86dual/fault.hpp"
#include "x86dual/machine_state.hpp"
#include "x86dual/segmentation.hpp"

// Instruction and stack pointer triads. In 32-bit mode the pointer is the low
// 32 or 16 bits of RIP/RSP, selected by CS.D and SS.B respectively.

namespace x86dual {

namespace detail {

constexpr std::uint64_t pointer_mask(bool big) {
  return big ? 0xFFFF'FFFFull : 0xFFFFull;
}

inline Result<std::uint64_t> add_to_pointer(const MachineState& state,
                                            ProcMode mode, Seg seg,
                                            std::uint64_t value,
                                            std::int64_t delta,
                                            FaultKind kind) {
  const std::uint64_t sum = value + static_cast<std::uint64_t>(delta);
  if (mode == ProcMode::kMode64) {
    if (!canonical_address_p(sum)) {
      return make_fault(kind, FaultCause::kNonCanonical, sum);
    }
    return sum;
  }
  // Wrap within the 16/32-bit pointer first, then check the segment bounds.
  const std::uint64_t wrapped =
      sum & pointer_mask(state.seg(seg).attr_default_big);
  const SegmentBounds b = segment_base_and_bounds(state, mode, seg);
  if (wrapped < b.lower || wrapped > b.upper) {
    return make_fault(kind, FaultCause::kSegmentLimit, wrapped);
  }
  return wrapped;
}

inline void write_pointer(std::uint64_t& reg, ProcMode mode, bool big,
                          std::uint64_t value) {
  if (mode == ProcMode::kMode64) {
    reg = value;
    return;
  }
  const std::uint64_t mask = pointer_mask(big);
  reg = (reg & ~mask) | (value & mask);
}

}  // namespace detail

inline std::uint64_t read_ip(const MachineState& state, ProcMode mode) {
  if (mode == ProcMode::kMode64) return state.rip;
  return state.rip & detail::pointer_mask(state.seg(Seg::kCS).attr_default_big);
}

// Pure: consults the state only for CS bounds.
inline Result<std::uint64_t> add_to_ip(const MachineState& state,
                                       ProcMode mode, std::uint64_t ip,
                                       std::int64_t delta) {
  return detail::add_to_pointer(state, mode, Seg::kCS, ip, delta,
                                FaultKind::kGP);
}

// Upper bits of RIP beyond the CS.D-selected slice are preserved.
inline void write_ip(MachineState& state, ProcMode mode, std::uint64_t ip) {
  detail::write_pointer(state.rip, mode,
                        state.seg(Seg::kCS).attr_default_big, ip);
}

inline std::uint64_t read_sp(const MachineState& state, ProcMode mode) {
  if (mode == ProcMode::kMode64) return state.gpr[kRsp];
  return state.gpr[kRsp] &
         detail::pointer_mask(state.seg(Seg::kSS).attr_default_big);
}

// Bounds honor expand-down stack segments.
inline Result<std::uint64_t> add_to_sp(const MachineState& state,
                                       ProcMode mode, std::uint64_t sp,
                                       std::int64_t delta) {
  return detail::add_to_pointer(state, mode, Seg::kSS, sp, delta,
                                FaultKind::kSS);
}

inline void write_sp(MachineState& state, ProcMode mode, std::uint64_t sp) {
  detail::write_pointer(state.gpr[kRsp], mode,
                        state.seg(Seg::kSS).attr_default_big, sp);
}

}  // namespace x86dual

#endif  // X86DUAL_POINTER_FLOW_HPP_
