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

#ifndef X86DUAL_ADDRESSING_HPP_
#define X86DUAL_ADDRESSING_HPP_

#include <array>
#include <concepts>
#include <cstdint>
#include <span>

#include "x86dual/fault.hpp"
#include "x86dual/instruction.hpp"
#include "x86dual/machine_state.hpp"
#include "x86dual/memory.hpp"
#include "x86dual/pointer_flow.hpp"

namespace x86dual {

// Anything that hands out successive little-endian instruction bytes.
template <typename C>
concept ByteSource = requires(C& c, unsigned n) {
  { c.fetch(n) } -> std::same_as<Result<std::uint64_t>>;
};

// Reads instruction bytes from CS:ip as Execute accesses, advancing the
// pointer with add_to_ip so every consumed byte is limit/canonical checked.
// Enforces the 15-byte instruction length cap.
class CodeCursor {
 public:
  CodeCursor(const MachineState& state, ProcMode mode, std::uint64_t ip)
      : state_(state), mode_(mode), ip_(ip) {}

  Result<std::uint64_t> fetch(unsigned nbytes) {
    if (consumed_ + nbytes > kMaxInstructionLength) {
      return make_fault(FaultKind::kGP, FaultCause::kTooLong, ip_);
    }
    X86DUAL_ASSIGN_OR_RETURN(
        const std::uint64_t value,
        read_effective(state_, mode_, {Seg::kCS, ip_}, nbytes,
                       AccessIntent::kExecute));
    X86DUAL_ASSIGN_OR_RETURN(ip_, add_to_ip(state_, mode_, ip_, nbytes));
    for (unsigned i = 0; i < nbytes; ++i) {
      bytes_[consumed_ + i] = static_cast<std::uint8_t>(value >> (8 * i));
    }
    consumed_ += nbytes;
    return value;
  }

  std::uint64_t ip() const { return ip_; }
  unsigned consumed() const { return consumed_; }
  const std::array<std::uint8_t, kMaxInstructionLength>& bytes() const {
    return bytes_;
  }

 private:
  const MachineState& state_;
  ProcMode mode_;
  std::uint64_t ip_;
  unsigned consumed_ = 0;
  std::array<std::uint8_t, kMaxInstructionLength> bytes_{};
};

// Replays bytes that were already fetched and checked.
class ByteCursor {
 public:
  explicit ByteCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  Result<std::uint64_t> fetch(unsigned nbytes) {
    if (pos_ + nbytes > bytes_.size()) {
      return make_fault(FaultKind::kGP, FaultCause::kTooLong, pos_);
    }
    std::uint64_t value = 0;
    for (unsigned i = nbytes; i-- > 0;) value = value << 8 | bytes_[pos_ + i];
    pos_ += nbytes;
    return value;
  }

  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct EffectiveAddress {
  std::uint64_t effective = 0;
  // Segment implied by the base register (SS for rBP/rSP-based forms).
  Seg default_seg = Seg::kDS;
  unsigned disp_bytes = 0;

  friend bool operator==(const EffectiveAddress&,
                         const EffectiveAddress&) = default;
};

namespace detail {

template <ByteSource Src>
Result<std::int64_t> fetch_signed(Src& src, unsigned nbytes) {
  X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t raw, src.fetch(nbytes));
  const unsigned shift = 64 - 8 * nbytes;
  return static_cast<std::int64_t>(raw << shift) >> shift;
}

}  // namespace detail

// 16-bit addressing forms. `src` is positioned just past the ModR/M byte.
template <ByteSource Src>
Result<EffectiveAddress> effective_addr_16(const MachineState& state,
                                           ModRM modrm, Src& src) {
  const auto reg16 = [&](unsigned r) { return state.gpr[r] & 0xFFFF; };
  std::uint64_t base = 0;
  Seg seg = Seg::kDS;
  switch (modrm.rm) {
    case 0: base = reg16(kRbx) + reg16(kRsi); break;
    case 1: base = reg16(kRbx) + reg16(kRdi); break;
    case 2: base = reg16(kRbp) + reg16(kRsi); seg = Seg::kSS; break;
    case 3: base = reg16(kRbp) + reg16(kRdi); seg = Seg::kSS; break;
    case 4: base = reg16(kRsi); break;
    case 5: base = reg16(kRdi); break;
    case 6:
      if (modrm.mod != 0) {
        base = reg16(kRbp);
        seg = Seg::kSS;
      }
      break;
    case 7: base = reg16(kRbx); break;
  }
  std::int64_t disp = 0;
  unsigned disp_bytes = 0;
  if (modrm.mod == 1) {
    disp_bytes = 1;
  } else if (modrm.mod == 2 || (modrm.mod == 0 && modrm.rm == 6)) {
    disp_bytes = 2;
  }
  if (disp_bytes != 0) {
    X86DUAL_ASSIGN_OR_RETURN(disp, detail::fetch_signed(src, disp_bytes));
  }
  return EffectiveAddress{(base + static_cast<std::uint64_t>(disp)) & 0xFFFF,
                          seg, disp_bytes};
}

// 32-bit addressing forms, extended by REX in 64-bit mode. `address_size` is
// 4 or 8; `next_ip` is the address of the following instruction, used by the
// RIP-relative form.
template <ByteSource Src>
Result<EffectiveAddress> effective_addr_32_64(const MachineState& state,
                                              ProcMode mode,
                                              unsigned address_size,
                                              ModRM modrm,
                                              const Prefixes& prefixes,
                                              Src& src, std::uint64_t next_ip) {
  std::uint64_t addr = 0;
  Seg seg = Seg::kDS;
  unsigned disp_bytes = modrm.mod == 1 ? 1 : modrm.mod == 2 ? 4 : 0;
  bool rip_relative = false;

  if (modrm.rm == 4) {
    X86DUAL_ASSIGN_OR_RETURN(const std::uint64_t sib_byte, src.fetch(1));
    const SIB sib = SIB::from_byte(static_cast<std::uint8_t>(sib_byte));
    const unsigned index = sib.index | (prefixes.rex_x() ? 8 : 0);
    const unsigned base = sib.base | (prefixes.rex_b() ? 8 : 0);
    if (index != 4) addr += state.gpr[index] << sib.scale;
    if (sib.base == 5 && modrm.mod == 0) {
      disp_bytes = 4;
    } else {
      addr += state.gpr[base];
      if (base == kRsp || base == kRbp) seg = Seg::kSS;
    }
  } else if (modrm.rm == 5 && modrm.mod == 0) {
    disp_bytes = 4;
    rip_relative = mode == ProcMode::kMode64;
  } else {
    const unsigned base = modrm.rm | (prefixes.rex_b() ? 8 : 0);
    addr = state.gpr[base];
    if (base == kRsp || base == kRbp) seg = Seg::kSS;
  }

  if (disp_bytes != 0) {
    X86DUAL_ASSIGN_OR_RETURN(const std::int64_t disp,
                             detail::fetch_signed(src, disp_bytes));
    addr += static_cast<std::uint64_t>(disp);
  }
  if (rip_relative) addr += next_ip;
  if (address_size == 4) addr &= 0xFFFF'FFFFull;
  return EffectiveAddress{addr, seg, disp_bytes};
}

template <ByteSource Src>
Result<EffectiveAddress> effective_addr(const MachineState& state,
                                        ProcMode mode, unsigned address_size,
                                        ModRM modrm, const Prefixes& prefixes,
                                        Src& src, std::uint64_t next_ip) {
  if (address_size == 2) return effective_addr_16(state, modrm, src);
  return effective_addr_32_64(state, mode, address_size, modrm, prefixes, src,
                              next_ip);
}

}  // namespace x86dual

#endif  // X86DUAL_ADDRESSING_HPP_
