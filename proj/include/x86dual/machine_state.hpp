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

#ifndef X86DUAL_MACHINE_STATE_HPP_
#define X86DUAL_MACHINE_STATE_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <unordered_map>

namespace x86dual {

enum Gpr : std::uint8_t {
  kRax = 0, kRcx, kRdx, kRbx, kRsp, kRbp, kRsi, kRdi,
  kR8, kR9, kR10, kR11, kR12, kR13, kR14, kR15,
};

// Segment register indices, in the order of the standard sreg encoding.
enum class Seg : std::uint8_t { kES = 0, kCS, kSS, kDS, kFS, kGS };

inline constexpr int kNumSegs = 6;

constexpr int seg_index(Seg s) { return static_cast<int>(s); }

namespace flags {
inline constexpr std::uint64_t kCF = 1ull << 0;
inline constexpr std::uint64_t kReserved1 = 1ull << 1;
inline constexpr std::uint64_t kPF = 1ull << 2;
inline constexpr std::uint64_t kAF = 1ull << 4;
inline constexpr std::uint64_t kZF = 1ull << 6;
inline constexpr std::uint64_t kSF = 1ull << 7;
inline constexpr std::uint64_t kDF = 1ull << 10;
inline constexpr std::uint64_t kOF = 1ull << 11;
inline constexpr std::uint64_t kAC = 1ull << 18;
inline constexpr std::uint64_t kStatus = kCF | kPF | kAF | kZF | kSF | kOF;
}  // namespace flags

inline constexpr std::uint64_t kEferLma = 1ull << 10;

// Visible selector plus the hidden descriptor cache. `limit` is already
// byte-granular; the G bit is resolved by whoever fills this in.
struct SegmentRegister {
  std::uint16_t selector = 0;
  std::uint64_t base = 0;
  std::uint32_t limit = 0;
  bool attr_long = false;
  bool attr_default_big = false;
  bool attr_expand_down = false;
  bool attr_present = false;
  bool attr_executable = false;

  friend bool operator==(const SegmentRegister&,
                         const SegmentRegister&) = default;
};

struct ExecConfig {
  // Stands in for CR0.AM && RFLAGS.AC && CPL == 3.
  bool alignment_checking = false;
  std::uint64_t max_steps = 1'000'000;

  friend bool operator==(const ExecConfig&, const ExecConfig&) = default;
};

// Sparse flat byte store over the 64-bit linear space. Bytes never written
// read as zero. Equality is semantic: an all-zero page equals an absent one.
class Memory {
 public:
  static constexpr unsigned kPageBits = 12;
  static constexpr std::uint64_t kPageSize = 1ull << kPageBits;
  using Page = std::array<std::uint8_t, kPageSize>;

  std::uint8_t read_byte(std::uint64_t addr) const {
    const Page* page = find(addr >> kPageBits);
    return page ? (*page)[addr & (kPageSize - 1)] : 0;
  }

  void write_byte(std::uint64_t addr, std::uint8_t value) {
    page_for_write(addr >> kPageBits)[addr & (kPageSize - 1)] = value;
  }

  void read(std::uint64_t addr, std::span<std::uint8_t> out) const {
    std::size_t done = 0;
    while (done < out.size()) {
      const std::uint64_t a = addr + done;
      const std::size_t offset = a & (kPageSize - 1);
      const std::size_t chunk =
          std::min<std::size_t>(out.size() - done, kPageSize - offset);
      if (const Page* page = find(a >> kPageBits)) {
        std::memcpy(out.data() + done, page->data() + offset, chunk);
      } else {
        std::memset(out.data() + done, 0, chunk);
      }
      done += chunk;
    }
  }

  void write(std::uint64_t addr, std::span<const std::uint8_t> in) {
    std::size_t done = 0;
    while (done < in.size()) {
      const std::uint64_t a = addr + done;
      const std::size_t offset = a & (kPageSize - 1);
      const std::size_t chunk =
          std::min<std::size_t>(in.size() - done, kPageSize - offset);
      std::memcpy(page_for_write(a >> kPageBits).data() + offset,
                  in.data() + done, chunk);
      done += chunk;
    }
  }

  std::size_t page_count() const { return pages_.size(); }

  // Visits every materialized page as (page base address, bytes).
  template <typename F>
  void for_each_page(F&& visit) const {
    for (const auto& [number, page] : pages_) visit(number << kPageBits, page);
  }

  friend bool operator==(const Memory& a, const Memory& b) {
    return a.covered_by(b) && b.covered_by(a);
  }

 private:
  const Page* find(std::uint64_t number) const {
    auto it = pages_.find(number);
    return it == pages_.end() ? nullptr : &it->second;
  }

  Page& page_for_write(std::uint64_t number) {
    auto [it, inserted] = pages_.try_emplace(number);
    if (inserted) it->second.fill(0);
    return it->second;
  }

  bool covered_by(const Memory& other) const {
    for (const auto& [number, page] : pages_) {
      const Page* theirs = other.find(number);
      if (theirs) {
        if (*theirs != page) return false;
      } else if (std::any_of(page.begin(), page.end(),
                             [](std::uint8_t b) { return b != 0; })) {
        return false;
      }
    }
    return true;
  }

  std::unordered_map<std::uint64_t, Page> pages_;
};

struct MachineState {
  std::array<std::uint64_t, 16> gpr{};
  std::uint64_t rip = 0;
  std::uint64_t rflags = flags::kReserved1;
  std::array<SegmentRegister, kNumSegs> segs{};
  std::uint64_t msr_ia32_efer = 0;
  std::uint64_t msr_fs_base = 0;
  std::uint64_t msr_gs_base = 0;
  Memory memory;
  ExecConfig cfg;

  SegmentRegister& seg(Seg s) { return segs[seg_index(s)]; }
  const SegmentRegister& seg(Seg s) const { return segs[seg_index(s)]; }

  friend bool operator==(const MachineState&, const MachineState&) = default;
};

// Mode32 covers both legacy protected mode and the compatibility sub-mode;
// the two are indistinguishable at application level.
enum class ProcMode : std::uint8_t { kMode64, kMode32 };

namespace detail {
inline thread_local std::uint64_t mode_reads = 0;
}  // namespace detail

// Number of proc_mode() evaluations on this thread. Instrumentation only.
inline std::uint64_t mode_read_count() { return detail::mode_reads; }

inline ProcMode proc_mode(const MachineState& state) {
  ++detail::mode_reads;
  const bool lma = (state.msr_ia32_efer & kEferLma) != 0;
  return lma && state.seg(Seg::kCS).attr_long ? ProcMode::kMode64
                                               : ProcMode::kMode32;
}

constexpr std::uint64_t size_mask(unsigned nbytes) {
  return nbytes >= 8 ? ~0ull : (1ull << (8 * nbytes)) - 1;
}

// high8 selects bits 15:8 (AH/CH/DH/BH) of reg 0..3.
inline std::uint64_t read_gpr(const MachineState& state, unsigned reg,
                              unsigned nbytes, bool high8 = false) {
  if (high8) return (state.gpr[reg] >> 8) & 0xFF;
  return state.gpr[reg] & size_mask(nbytes);
}

// 4-byte writes zero-extend to 64 bits; 1- and 2-byte writes merge.
inline void write_gpr(MachineState& state, unsigned reg, unsigned nbytes,
                      bool high8, std::uint64_t value) {
  std::uint64_t& r = state.gpr[reg];
  if (high8) {
    r = (r & ~0xFF00ull) | ((value & 0xFF) << 8);
    return;
  }
  switch (nbytes) {
    case 1: r = (r & ~0xFFull) | (value & 0xFF); break;
    case 2: r = (r & ~0xFFFFull) | (value & 0xFFFF); break;
    case 4: r = value & 0xFFFFFFFFull; break;
    default: r = value; break;
  }
}

}  // namespace x86dual

#endif  // X86DUAL_MACHINE_STATE_HPP_
