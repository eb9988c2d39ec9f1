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

#ifndef X86DUAL_LOADER_HPP_
#define X86DUAL_LOADER_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "x86dual/isa.hpp"
#include "x86dual/machine_state.hpp"
#include "x86dual/segmentation.hpp"

// Flat-binary runner: builds a machine from a RunSpec, executes it, and
// renders the report and per-step trace.
//
// Config file format: one `key = value` per line, `#` starts a comment.
//   mode = m64 | m32
//   compat = true            # m32 only: IA32_EFER.LMA=1 with CS.L=0
//   image = 0x1000:prog.bin  # repeatable
//   entry = 0x1000
//   stack = 0x8000
//   max_steps = 1000000
//   trace = true
//   align_check = true
//   fs_base = 0x0 / gs_base = 0x0
//   seg.ss = base=0x0,limit=0xffff,db=1,e=0,l=0

namespace x86dual {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SegmentConfig {
  std::uint64_t base = 0;
  std::uint32_t limit = 0xFFFF'FFFF;
  bool default_big = true;
  bool expand_down = false;
  bool long_mode = false;
};

struct ImageSpec {
  std::uint64_t address = 0;
  std::string path;
};

struct RunSpec {
  ProcMode mode = ProcMode::kMode64;
  bool compat = false;
  std::vector<ImageSpec> images;
  std::uint64_t entry = 0;
  std::uint64_t stack_top = 0;
  std::array<std::optional<SegmentConfig>, kNumSegs> segs{};
  std::uint64_t fs_base = 0;
  std::uint64_t gs_base = 0;
  bool alignment_checking = false;
  std::uint64_t max_steps = 1'000'000;
  bool trace = false;
};

namespace loader_detail {

inline std::string trim(std::string_view s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto begin = std::find_if(s.begin(), s.end(), not_space);
  auto end = std::find_if(s.rbegin(), s.rend(), not_space).base();
  return begin < end ? std::string(begin, end) : std::string();
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

}  // namespace loader_detail

inline std::uint64_t parse_number(std::string_view text) {
  const std::string s = loader_detail::trim(text);
  if (s.empty()) throw ConfigError("empty number");
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    value = std::stoull(s, &used, 0);
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "'");
  }
  if (used != s.size() || s[0] == '-') {
    throw ConfigError("bad number '" + s + "'");
  }
  return value;
}

inline bool parse_bool(std::string_view text) {
  const std::string s = loader_detail::lower(loader_detail::trim(text));
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("bad boolean '" + s + "'");
}

inline ProcMode parse_mode(std::string_view text) {
  const std::string s = loader_detail::lower(loader_detail::trim(text));
  if (s == "m64") return ProcMode::kMode64;
  if (s == "m32") return ProcMode::kMode32;
  throw ConfigError("mode must be m64 or m32, got '" + s + "'");
}

inline Seg parse_seg_name(std::string_view text) {
  static constexpr std::string_view kNames[] = {"es", "cs", "ss",
                                                "ds", "fs", "gs"};
  const std::string s = loader_detail::lower(loader_detail::trim(text));
  for (int i = 0; i < kNumSegs; ++i) {
    if (s == kNames[i]) return static_cast<Seg>(i);
  }
  throw ConfigError("unknown segment register '" + s + "'");
}

// "ADDR:PATH"
inline ImageSpec parse_image(std::string_view text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("image must be ADDR:PATH, got '" + std::string(text) +
                      "'");
  }
  ImageSpec image{parse_number(text.substr(0, colon)),
                  loader_detail::trim(text.substr(colon + 1))};
  if (image.path.empty()) throw ConfigError("image path is empty");
  return image;
}

// "base=..,limit=..,db=..,e=..,l=.." ; omitted keys keep flat defaults.
inline SegmentConfig parse_segment(std::string_view text) {
  SegmentConfig cfg;
  for (const std::string& field : loader_detail::split(text, ',')) {
    if (field.empty()) continue;
    const std::size_t eq = field.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("segment field must be key=value: '" + field + "'");
    }
    const std::string key = loader_detail::lower(loader_detail::trim(
        std::string_view(field).substr(0, eq)));
    const std::string_view value = std::string_view(field).substr(eq + 1);
    if (key == "base") {
      cfg.base = parse_number(value);
    } else if (key == "limit") {
      const std::uint64_t limit = parse_number(value);
      if (limit > 0xFFFF'FFFFull) throw ConfigError("segment limit > 32 bits");
      cfg.limit = static_cast<std::uint32_t>(limit);
    } else if (key == "db" || key == "d" || key == "b") {
      cfg.default_big = parse_bool(value);
    } else if (key == "e") {
      cfg.expand_down = parse_bool(value);
    } else if (key == "l") {
      cfg.long_mode = parse_bool(value);
    } else {
      throw ConfigError("unknown segment field '" + key + "'");
    }
  }
  return cfg;
}

// Applies one config key; shared by the config file and CLI flag paths.
inline void apply_setting(RunSpec& spec, std::string_view raw_key,
                          std::string_view value) {
  const std::string key = loader_detail::lower(loader_detail::trim(raw_key));
  if (key == "mode") {
    spec.mode = parse_mode(value);
  } else if (key == "compat") {
    spec.compat = parse_bool(value);
  } else if (key == "image") {
    spec.images.push_back(parse_image(value));
  } else if (key == "entry") {
    spec.entry = parse_number(value);
  } else if (key == "stack") {
    spec.stack_top = parse_number(value);
  } else if (key == "max_steps" || key == "max-steps") {
    spec.max_steps = parse_number(value);
  } else if (key == "trace") {
    spec.trace = parse_bool(value);
  } else if (key == "align_check" || key == "align-check") {
    spec.alignment_checking = parse_bool(value);
  } else if (key == "fs_base") {
    spec.fs_base = parse_number(value);
  } else if (key == "gs_base") {
    spec.gs_base = parse_number(value);
  } else if (key.rfind("seg.", 0) == 0) {
    spec.segs[seg_index(parse_seg_name(key.substr(4)))] =
        parse_segment(value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline void parse_config(RunSpec& spec, std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const std::size_t hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    const std::string body = loader_detail::trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    try {
      apply_setting(spec, body.substr(0, eq), body.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline std::vector<std::uint8_t> read_image_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open image '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct LoadedImage {
  std::uint64_t address = 0;
  std::vector<std::uint8_t> bytes;
};

// Builds the initial machine. Throws ConfigError if the RunSpec is inconsistent
// (overlapping images, entry outside CS, bad mode/L-bit combination).
inline MachineState build_machine(const RunSpec& spec,
                                  const std::vector<LoadedImage>& images) {
  MachineState state;
  const bool m64 = spec.mode == ProcMode::kMode64;
  if (m64 && spec.compat) throw ConfigError("compat applies to m32 only");

  for (int i = 0; i < kNumSegs; ++i) {
    SegmentConfig cfg = spec.segs[i].value_or(SegmentConfig{});
    if (!spec.segs[i] && m64 && i == seg_index(Seg::kCS)) {
      cfg.long_mode = true;
      cfg.default_big = false;
    }
    if (i == seg_index(Seg::kCS) && cfg.long_mode != m64) {
      throw ConfigError(m64 ? "m64 requires CS l=1" : "m32 requires CS l=0");
    }
    if (i == seg_index(Seg::kCS) && m64 && cfg.default_big) {
      throw ConfigError("CS with l=1 must have db=0");
    }
    if (cfg.base > 0xFFFF'FFFFull) {
      throw ConfigError("segment base exceeds 32 bits (use fs_base/gs_base)");
    }
    SegmentRegister& s = state.segs[i];
    s.base = cfg.base;
    s.limit = cfg.limit;
    s.attr_default_big = cfg.default_big;
    s.attr_expand_down = cfg.expand_down;
    s.attr_long = cfg.long_mode;
    s.attr_present = true;
    s.attr_executable = i == seg_index(Seg::kCS);
  }
  state.msr_ia32_efer = (m64 || spec.compat) ? kEferLma : 0;
  state.msr_fs_base = spec.fs_base;
  state.msr_gs_base = spec.gs_base;
  state.cfg.alignment_checking = spec.alignment_checking;
  state.cfg.max_steps = spec.max_steps;

  std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
  for (const LoadedImage& image : images) {
    if (image.bytes.empty()) continue;
    const std::uint64_t end = image.address + image.bytes.size();
    if (end < image.address) throw ConfigError("image wraps address space");
    for (const auto& [lo, hi] : spans) {
      if (image.address < hi && lo < end) throw ConfigError("images overlap");
    }
    spans.emplace_back(image.address, end);
    state.memory.write(image.address, image.bytes);
  }

  const ProcMode mode = proc_mode(state);
  if (!ea_to_la(state, mode, {Seg::kCS, spec.entry}, 1).ok() ||
      (!m64 && spec.entry > 0xFFFF'FFFFull)) {
    throw ConfigError("entry point is outside the code segment");
  }
  write_ip(state, mode, spec.entry);
  write_sp(state, mode, spec.stack_top);
  return state;
}

inline const char* mode_tag(ProcMode mode) {
  return mode == ProcMode::kMode64 ? "m64" : "m32";
}

inline std::string gpr_name(ProcMode mode, unsigned reg) {
  static constexpr const char* k64[] = {
      "rax", "rcx", "rdx", "rbx", "rsp", "rbp", "rsi", "rdi",
      "r8",  "r9",  "r10", "r11", "r12", "r13", "r14", "r15"};
  static constexpr const char* k32[] = {"eax", "ecx", "edx", "ebx",
                                        "esp", "ebp", "esi", "edi"};
  if (mode == ProcMode::kMode64 || reg >= 8) return k64[reg];
  return k32[reg];
}

// Registers shown for a mode: all 16 in m64, the architectural 8 in m32.
inline unsigned visible_gprs(ProcMode mode) {
  return mode == ProcMode::kMode64 ? 16 : 8;
}

inline std::string hex_word(ProcMode mode, std::uint64_t v) {
  char buf[20];
  if (mode == ProcMode::kMode64) {
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  } else {
    std::snprintf(buf, sizeof buf, "%08" PRIx64,
                  static_cast<std::uint64_t>(v & 0xFFFF'FFFFull));
  }
  return buf;
}

// The registers a trace line reports on.
struct RegisterSnapshot {
  std::array<std::uint64_t, 16> gpr{};
  std::uint64_t rip = 0;
  std::uint64_t rflags = 0;

  static RegisterSnapshot of(const MachineState& s) {
    return {s.gpr, s.rip, s.rflags};
  }
};

// One trace line:
//   <step> <m32|m64> <rip> <bytes|-> <MNEMONIC> [reg=value ...] [HALT|#XX]
// Register values (and rflags/eflags) are printed only when they changed.
inline std::string format_trace_line(std::uint64_t index,
                                     const RegisterSnapshot& before,
                                     const RegisterSnapshot& after,
                                     const StepOutcome& out,
                                     const DecodedInstruction& insn) {
  const ProcMode mode = out.mode;
  std::ostringstream line;
  line << index << ' ' << mode_tag(mode) << ' ' << hex_word(mode, before.rip)
       << ' ';
  if (insn.length == 0) {
    line << "- ??";
  } else {
    char buf[4];
    for (unsigned i = 0; i < insn.length; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", insn.bytes[i]);
      line << buf;
    }
    line << ' ' << mnemonic(insn);
  }
  for (unsigned r = 0; r < visible_gprs(mode); ++r) {
    if (before.gpr[r] != after.gpr[r]) {
      line << ' ' << gpr_name(mode, r) << '=' << hex_word(mode, after.gpr[r]);
    }
  }
  if (before.rflags != after.rflags) {
    line << ' ' << (mode == ProcMode::kMode64 ? "rflags" : "eflags") << '='
         << hex_word(mode, after.rflags);
  }
  if (out.kind == StepKind::kHalt) line << " HALT";
  if (out.kind == StepKind::kFaulted) line << ' ' << fault_name(out.fault.kind);
  return line.str();
}

inline const char* reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::kHalted: return "halted";
    case StopReason::kStepBudget: return "step-budget";
    case StopReason::kFaulted: return "faulted";
  }
  return "unknown";
}

inline void write_report(std::ostream& out, const MachineState& state,
                         ProcMode mode, const RunResult& result) {
  out << "reason: " << reason_name(result.reason) << '\n';
  out << "steps: " << result.steps << '\n';
  if (result.reason == StopReason::kFaulted) {
    out << "fault: " << fault_name(result.fault.kind) << ' '
        << cause_name(result.fault.cause) << " address=0x"
        << hex_word(ProcMode::kMode64, result.fault.address) << '\n';
  }
  out << (mode == ProcMode::kMode64 ? "rip" : "eip") << ": "
      << hex_word(mode, state.rip) << '\n';
  out << (mode == ProcMode::kMode64 ? "rflags" : "eflags") << ": "
      << hex_word(mode, state.rflags) << '\n';
  for (unsigned r = 0; r < visible_gprs(mode); ++r) {
    out << gpr_name(mode, r) << ": " << hex_word(mode, state.gpr[r]) << '\n';
  }
}

inline int exit_code(StopReason reason) {
  switch (reason) {
    case StopReason::kHalted: return 0;
    case StopReason::kFaulted: return 1;
    case StopReason::kStepBudget: return 3;
  }
  return 1;
}

// Runs `state` to completion, streaming trace lines (when enabled) and then
// the report to `out`. Returns the process exit code.
inline int execute_and_report(MachineState& state, const RunSpec& spec,
                              std::ostream& out, RunResult* result_out =
                                                     nullptr) {
  RunResult result;
  if (!spec.trace) {
    result = run(state, spec.max_steps);
  } else {
    while (result.steps < spec.max_steps) {
      const RegisterSnapshot before = RegisterSnapshot::of(state);
      DecodedInstruction insn;
      const StepOutcome o = step(state, &insn);
      out << format_trace_line(result.steps, before,
                               RegisterSnapshot::of(state), o, insn)
          << '\n';
      if (o.kind == StepKind::kFaulted) {
        result.reason = StopReason::kFaulted;
        result.fault = o.fault;
        break;
      }
      ++result.steps;
      if (o.kind == StepKind::kHalt) {
        result.reason = StopReason::kHalted;
        break;
      }
    }
  }
  write_report(out, state, proc_mode(state), result);
  if (result_out) *result_out = result;
  return exit_code(result.reason);
}

inline int load_and_run(const RunSpec& spec, std::ostream& out) {
  std::vector<LoadedImage> images;
  for (const ImageSpec& image : spec.images) {
    images.push_back({image.address, read_image_file(image.path)});
  }
  MachineState state = build_machine(spec, images);
  return execute_and_report(state, spec, out);
}

}  // namespace x86dual

#endif  // X86DUAL_LOADER_HPP_
