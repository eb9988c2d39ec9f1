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

#ifndef X86DUAL_TESTKIT_PROGRAMS_HPP_
#define X86DUAL_TESTKIT_PROGRAMS_HPP_

#include <cstdint>
#include <vector>

#include "x86dual/machine_state.hpp"

// Hand-assembled byte programs and machine fixtures. Encodings were
// cross-checked against GNU as.

namespace x86dual::testkit {

inline constexpr std::uint64_t kCodeBase = 0x1000;
inline constexpr std::uint64_t kStackTop = 0x8000;
inline constexpr std::uint64_t kDataBase = 0x3000;

// Flat machine: every segment base 0, limit 4 GiB - 1. In m64, LMA=1 and
// CS.L=1; in m32, CS.D=1 (32-bit defaults) unless `big` is false.
inline MachineState flat_machine(ProcMode mode, bool big = true) {
  MachineState s;
  for (auto& seg : s.segs) {
    seg.base = 0;
    seg.limit = 0xFFFF'FFFF;
    seg.attr_default_big = big;
    seg.attr_present = true;
  }
  SegmentRegister& cs = s.segs[static_cast<int>(Seg::kCS)];
  cs.attr_executable = true;
  if (mode == ProcMode::kMode64) {
    s.msr_ia32_efer = kEferLma;
    cs.attr_long = true;
    cs.attr_default_big = false;
  }
  s.rip = kCodeBase;
  s.gpr[kRsp] = kStackTop;
  return s;
}

inline MachineState load_program(ProcMode mode,
                                 const std::vector<std::uint8_t>& code,
                                 bool big = true) {
  MachineState s = flat_machine(mode, big);
  s.memory.write(kCodeBase, code);
  return s;
}

// fib(n) in RAX, loop form, with a call/push/pop frame.
//   mov ecx, n ; call fib ; hlt
// fib:
//   push rbx ; xor eax, eax ; mov edx, 1 ; test ecx, ecx ; jz done
// loop:
//   lea rbx, [rax+rdx] ; mov rax, rdx ; mov rdx, rbx ; dec rcx ; jnz loop
// done:
//   pop rbx ; ret
inline std::vector<std::uint8_t> fib_program_m64(std::uint32_t n) {
  return {0xB9, static_cast<std::uint8_t>(n), static_cast<std::uint8_t>(n >> 8),
          static_cast<std::uint8_t>(n >> 16), static_cast<std::uint8_t>(n >> 24),
          0xE8, 0x01, 0x00, 0x00, 0x00,
          0xF4,
          0x53,
          0x31, 0xC0,
          0xBA, 0x01, 0x00, 0x00, 0x00,
          0x85, 0xC9,
          0x74, 0x0F,
          0x48, 0x8D, 0x1C, 0x10,
          0x48, 0x89, 0xD0,
          0x48, 0x89, 0xDA,
          0x48, 0xFF, 0xC9,
          0x75, 0xF1,
          0x5B,
          0xC3};
}

// Same logic for 32-bit code; `dec ecx` uses the one-byte 0x49 form.
inline std::vector<std::uint8_t> fib_program_m32(std::uint32_t n) {
  return {0xB9, static_cast<std::uint8_t>(n), static_cast<std::uint8_t>(n >> 8),
          static_cast<std::uint8_t>(n >> 16), static_cast<std::uint8_t>(n >> 24),
          0xE8, 0x01, 0x00, 0x00, 0x00,
          0xF4,
          0x53,
          0x31, 0xC0,
          0xBA, 0x01, 0x00, 0x00, 0x00,
          0x85, 0xC9,
          0x74, 0x0A,
          0x8D, 0x1C, 0x10,
          0x89, 0xD0,
          0x89, 0xDA,
          0x49,
          0x75, 0xF6,
          0x5B,
          0xC3};
}

// Register-only m64 loop executing 3 * iterations + 2 steps.
//   mov rcx, iterations ; loop: add rax, rcx ; dec rcx ; jnz loop ; hlt
inline std::vector<std::uint8_t> register_loop_m64(std::uint32_t iterations) {
  const auto b = [&](int shift) {
    return static_cast<std::uint8_t>(iterations >> shift);
  };
  return {0x48, 0xC7, 0xC1, b(0), b(8), b(16), b(24),
          0x48, 0x01, 0xC8,
          0x48, 0xFF, 0xC9,
          0x75, 0xF8,
          0xF4};
}

}  // namespace x86dual::testkit

#endif  // X86DUAL_TESTKIT_PROGRAMS_HPP_
