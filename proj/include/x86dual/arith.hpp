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

#ifndef X86DUAL_ARITH_HPP_
#define X86DUAL_ARITH_HPP_

#include <cstdint>

#include "x86dual/machine_state.hpp"

// Result and RFLAGS computation for the integer ALU. Flags an instruction
// leaves undefined are preserved, so only the defined bits ever change.

namespace x86dual {

enum class AluOp : std::uint8_t {
  kAdd = 0, kOr, kAdc, kSbb, kAnd, kSub, kXor, kCmp,
};

enum class ShiftOp : std::uint8_t { kShl = 4, kShr = 5, kSar = 7 };

namespace detail {

constexpr std::uint64_t sign_bit(unsigned nbytes) {
  return 1ull << (8 * nbytes - 1);
}

constexpr std::uint64_t szp_flags(std::uint64_t result, unsigned nbytes) {
  std::uint64_t f = 0;
  if (result & sign_bit(nbytes)) f |= flags::kSF;
  if (result == 0) f |= flags::kZF;
  if (!__builtin_parityll(result & 0xFF)) f |= flags::kPF;
  return f;
}

constexpr std::uint64_t merge_flags(std::uint64_t rflags, std::uint64_t mask,
                                    std::uint64_t bits) {
  return (rflags & ~mask) | (bits & mask);
}

}  // namespace detail

// a + b + carry_in, with CF/OF/AF/SF/ZF/PF.
constexpr std::uint64_t add_with_flags(std::uint64_t a, std::uint64_t b,
                                       bool carry_in, unsigned nbytes,
                                       std::uint64_t& rflags) {
  const std::uint64_t m = size_mask(nbytes);
  const std::uint64_t s = detail::sign_bit(nbytes);
  a &= m;
  b &= m;
  const std::uint64_t r = (a + b + (carry_in ? 1 : 0)) & m;
  const std::uint64_t carries = (a & b) | ((a | b) & ~r);
  std::uint64_t f = detail::szp_flags(r, nbytes);
  if (carries & s) f |= flags::kCF;
  if ((a ^ b ^ r) & 0x10) f |= flags::kAF;
  if ((a ^ r) & (b ^ r) & s) f |= flags::kOF;
  rflags = detail::merge_flags(rflags, flags::kStatus, f);
  return r;
}

// a - b - borrow_in, with CF/OF/AF/SF/ZF/PF.
constexpr std::uint64_t sub_with_flags(std::uint64_t a, std::uint64_t b,
                                       bool borrow_in, unsigned nbytes,
                                       std::uint64_t& rflags) {
  const std::uint64_t m = size_mask(nbytes);
  const std::uint64_t s = detail::sign_bit(nbytes);
  a &= m;
  b &= m;
  const std::uint64_t r = (a - b - (borrow_in ? 1 : 0)) & m;
  const std::uint64_t borrows = (~a & b) | (~(a ^ b) & r);
  std::uint64_t f = detail::szp_flags(r, nbytes);
  if (borrows & s) f |= flags::kCF;
  if ((a ^ b ^ r) & 0x10) f |= flags::kAF;
  if ((a ^ b) & (a ^ r) & s) f |= flags::kOF;
  rflags = detail::merge_flags(rflags, flags::kStatus, f);
  return r;
}

// AND/OR/XOR/TEST: CF=OF=0, SF/ZF/PF from the result, AF undefined.
constexpr std::uint64_t logic_flags(std::uint64_t r, unsigned nbytes,
                                    std::uint64_t& rflags) {
  r &= size_mask(nbytes);
  rflags = detail::merge_flags(
      rflags, flags::kCF | flags::kOF | flags::kSF | flags::kZF | flags::kPF,
      detail::szp_flags(r, nbytes));
  return r;
}

constexpr std::uint64_t alu(AluOp op, std::uint64_t a, std::uint64_t b,
                            unsigned nbytes, std::uint64_t& rflags) {
  const bool cf = (rflags & flags::kCF) != 0;
  switch (op) {
    case AluOp::kAdd: return add_with_flags(a, b, false, nbytes, rflags);
    case AluOp::kAdc: return add_with_flags(a, b, cf, nbytes, rflags);
    case AluOp::kSub:
    case AluOp::kCmp: return sub_with_flags(a, b, false, nbytes, rflags);
    case AluOp::kSbb: return sub_with_flags(a, b, cf, nbytes, rflags);
    case AluOp::kOr: return logic_flags(a | b, nbytes, rflags);
    case AluOp::kAnd: return logic_flags(a & b, nbytes, rflags);
    case AluOp::kXor: return logic_flags(a ^ b, nbytes, rflags);
  }
  return 0;
}

// INC/DEC leave CF alone.
constexpr std::uint64_t inc_dec(bool decrement, std::uint64_t a,
                                unsigned nbytes, std::uint64_t& rflags) {
  const std::uint64_t saved_cf = rflags & flags::kCF;
  const std::uint64_t r = decrement ? sub_with_flags(a, 1, false, nbytes, rflags)
                                    : add_with_flags(a, 1, false, nbytes, rflags);
  rflags = (rflags & ~flags::kCF) | saved_cf;
  return r;
}

// Count is masked to 5 bits (6 for 64-bit operands). A zero count changes no
// flags; OF is only defined for a count of one; AF is never defined.
constexpr std::uint64_t shift(ShiftOp op, std::uint64_t a, unsigned count,
                              unsigned nbytes, std::uint64_t& rflags) {
  const unsigned bits = 8 * nbytes;
  const std::uint64_t m = size_mask(nbytes);
  count &= nbytes == 8 ? 0x3F : 0x1F;
  a &= m;
  if (count == 0) return a;

  std::uint64_t r = 0;
  bool cf = false;
  switch (op) {
    case ShiftOp::kShl:
      r = count >= 64 ? 0 : (a << count) & m;
      cf = count <= bits && ((a >> (bits - count)) & 1);
      break;
    case ShiftOp::kShr:
      r = a >> count;
      cf = (a >> (count - 1)) & 1;
      break;
    case ShiftOp::kSar: {
      const unsigned ext = 64 - bits;
      const std::int64_t sa = static_cast<std::int64_t>(a << ext) >> ext;
      r = static_cast<std::uint64_t>(sa >> (count > 63 ? 63 : count)) & m;
      cf = (sa >> (count - 1 > 63 ? 63 : count - 1)) & 1;
      break;
    }
  }
  std::uint64_t mask = flags::kCF | flags::kSF | flags::kZF | flags::kPF;
  std::uint64_t f = detail::szp_flags(r, nbytes) | (cf ? flags::kCF : 0);
  if (count == 1) {
    mask |= flags::kOF;
    bool of = false;
    if (op == ShiftOp::kShl) of = ((r & detail::sign_bit(nbytes)) != 0) != cf;
    if (op == ShiftOp::kShr) of = (a & detail::sign_bit(nbytes)) != 0;
    if (of) f |= flags::kOF;
  }
  rflags = detail::merge_flags(rflags, mask, f);
  return r;
}

// Jcc/SETcc condition codes 0..15.
constexpr bool condition_holds(unsigned cc, std::uint64_t rflags) {
  const bool cf = rflags & flags::kCF;
  const bool zf = rflags & flags::kZF;
  const bool sf = rflags & flags::kSF;
  const bool of = rflags & flags::kOF;
  const bool pf = rflags & flags::kPF;
  bool holds = false;
  switch (cc >> 1) {
    case 0: holds = of; break;
    case 1: holds = cf; break;
    case 2: holds = zf; break;
    case 3: holds = cf || zf; break;
    case 4: holds = sf; break;
    case 5: holds = pf; break;
    case 6: holds = sf != of; break;
    case 7: holds = zf || sf != of; break;
  }
  return (cc & 1) ? !holds : holds;
}

}  // namespace x86dual

#endif  // X86DUAL_ARITH_HPP_
