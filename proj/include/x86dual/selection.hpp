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

#ifndef X86DUAL_SELECTION_HPP_
#define X86DUAL_SELECTION_HPP_

#include "x86dual/instruction.hpp"
#include "x86dual/machine_state.hpp"

namespace x86dual {

// Segment for a memory operand. In 64-bit mode only FS/GS overrides have any
// effect; the other bases are zero anyway. Stack-implicit accesses do not come
// through here: they always use SS.
constexpr Seg select_segment_register(ProcMode mode, const Prefixes& prefixes,
                                      Seg default_seg) {
  if (!prefixes.seg_override) return default_seg;
  const Seg o = *prefixes.seg_override;
  if (mode == ProcMode::kMode64 && o != Seg::kFS && o != Seg::kGS) {
    return default_seg;
  }
  return o;
}

// Operand size in bytes. `default64` marks instructions whose 64-bit mode
// default is 8 bytes (near stack and branch operations).
inline unsigned select_operand_size(const MachineState& state, ProcMode mode,
                                    const Prefixes& prefixes, bool default64,
                                    bool byte_op) {
  if (byte_op) return 1;
  if (mode == ProcMode::kMode64) {
    if (prefixes.rex_w()) return 8;
    if (prefixes.opsize_override) return 2;
    return default64 ? 8 : 4;
  }
  const bool d = state.seg(Seg::kCS).attr_default_big;
  return d != prefixes.opsize_override ? 4 : 2;
}

inline unsigned select_address_size(const MachineState& state, ProcMode mode,
                                    const Prefixes& prefixes) {
  if (mode == ProcMode::kMode64) return prefixes.addrsize_override ? 4 : 8;
  const bool d = state.seg(Seg::kCS).attr_default_big;
  return d != prefixes.addrsize_override ? 4 : 2;
}

}  // namespace x86dual

#endif  // X86DUAL_SELECTION_HPP_
