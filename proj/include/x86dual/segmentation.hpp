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

#ifndef X86DUAL_SEGMENTATION_HPP_
#define X86DUAL_SEGMENTATION_HPP_

#include <cstdint>

#include "x86dual/fault.hpp"
#include "x86dual/machine_state.hpp"

namespace x86dual {

using LinearAddress = std::uint64_t;

// A segment register plus an offset into that segment.
struct LogicalAddress {
  Seg seg = Seg::kDS;
  std::uint64_t effective = 0;
};

// Valid offsets are lower..upper inclusive. In 64-bit mode both are zero and
// are not consulted.
struct SegmentBounds {
  std::uint64_t base = 0;
  std::uint32_t lower = 0;
  std::uint32_t upper = 0;

  friend bool operator==(const SegmentBounds&, const SegmentBounds&) = default;
};

inline SegmentBounds segment_base_and_bounds(const MachineState& state,
                                             ProcMode mode, Seg seg) {
  if (mode == ProcMode::kMode64) {
    if (seg == Seg::kFS) return {state.msr_fs_base, 0, 0};
    if (seg == Seg::kGS) return {state.msr_gs_base, 0, 0};
    return {0, 0, 0};
  }
  const SegmentRegister& s = state.seg(seg);
  if (!s.attr_expand_down) return {s.base, 0, s.limit};
  return {s.base, s.limit,
          s.attr_default_big ? 0xFFFF'FFFFu : 0xFFFFu};
}

// Bits 63..47 all equal.
constexpr bool canonical_address_p(std::uint64_t addr) {
  const std::uint64_t top = addr >> 47;
  return top == 0 || top == 0x1FFFF;
}

constexpr FaultKind segment_fault_kind(Seg seg) {
  return seg == Seg::kSS ? FaultKind::kSS : FaultKind::kGP;
}

// Logical to linear translation of an nbytes-wide access. In 32-bit mode the
// whole span must lie inside the segment bounds (no wrap) and the result is
// truncated to 32 bits; in 64-bit mode both ends of the span must be
// canonical.
inline Result<LinearAddress> ea_to_la(const MachineState& state, ProcMode mode,
                                      LogicalAddress logical,
                                      unsigned nbytes) {
  const SegmentBounds b = segment_base_and_bounds(state, mode, logical.seg);
  const std::uint64_t e = logical.effective;
  if (mode == ProcMode::kMode64) {
    const LinearAddress first = b.base + e;
    const LinearAddress last = first + (nbytes - 1);
    if (!canonical_address_p(first) || !canonical_address_p(last)) {
      return make_fault(segment_fault_kind(logical.seg),
                        FaultCause::kNonCanonical, e);
    }
    return first;
  }
  const std::uint64_t last = e + (nbytes - 1);
  if (e < b.lower || last < e || last > b.upper) {
    return make_fault(segment_fault_kind(logical.seg),
                      FaultCause::kSegmentLimit, e);
  }
  return (b.base + e) & 0xFFFF'FFFFull;
}

}  // namespace x86dual

#endif  // X86DUAL_SEGMENTATION_HPP_
