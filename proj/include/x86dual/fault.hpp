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

#ifndef X86DUAL_FAULT_HPP_
#define X86DUAL_FAULT_HPP_

#include <cstdint>
#include <string_view>
#include <type_traits>
#include <utility>

namespace x86dual {

// Architectural exception classes surfaced by the interpreter. Faults are
// data: every fallible operation returns one instead of throwing.
enum class FaultKind : std::uint8_t {
  kUD,  // invalid or unimplemented opcode, LOCK prefix
  kGP,  // general protection: segment limit, non-canonical, length > 15
  kSS,  // stack segment: same conditions, on SS-relative accesses
  kAC,  // alignment check
};

enum class FaultCause : std::uint8_t {
  kUnimplemented,
  kLockPrefix,
  kTooLong,
  kSegmentLimit,
  kNonCanonical,
  kMisaligned,
};

struct Fault {
  FaultKind kind = FaultKind::kGP;
  FaultCause cause = FaultCause::kSegmentLimit;
  // Offending effective (or linear, for #AC) address; 0 when not applicable.
  std::uint64_t address = 0;

  friend bool operator==(const Fault&, const Fault&) = default;
};

constexpr std::string_view fault_name(FaultKind kind) {
  switch (kind) {
    case FaultKind::kUD: return "#UD";
    case FaultKind::kGP: return "#GP";
    case FaultKind::kSS: return "#SS";
    case FaultKind::kAC: return "#AC";
  }
  return "#??";
}

constexpr std::string_view cause_name(FaultCause cause) {
  switch (cause) {
    case FaultCause::kUnimplemented: return "unimplemented-opcode";
    case FaultCause::kLockPrefix: return "lock-prefix";
    case FaultCause::kTooLong: return "length-over-15";
    case FaultCause::kSegmentLimit: return "segment-limit";
    case FaultCause::kNonCanonical: return "non-canonical";
    case FaultCause::kMisaligned: return "misaligned";
  }
  return "unknown";
}

// Value-or-fault. T must be cheap to default-construct; the hot path never
// allocates through this type.
template <typename T>
class [[nodiscard]] Result {
 public:
  static_assert(std::is_default_constructible_v<T>);

  constexpr Result(T value) : value_(std::move(value)) {}  // NOLINT
  constexpr Result(Fault fault) : fault_(fault), ok_(false) {}  // NOLINT

  constexpr bool ok() const { return ok_; }
  constexpr explicit operator bool() const { return ok_; }

  constexpr const T& value() const& { return value_; }
  constexpr T& value() & { return value_; }
  constexpr T&& value() && { return std::move(value_); }
  constexpr const T& operator*() const& { return value_; }
  constexpr const T* operator->() const { return &value_; }

  constexpr const Fault& fault() const { return fault_; }

 private:
  T value_{};
  Fault fault_{};
  bool ok_ = true;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  constexpr Result() = default;
  constexpr Result(Fault fault) : fault_(fault), ok_(false) {}  // NOLINT

  constexpr bool ok() const { return ok_; }
  constexpr explicit operator bool() const { return ok_; }
  constexpr const Fault& fault() const { return fault_; }

 private:
  Fault fault_{};
  bool ok_ = true;
};

using Status = Result<void>;

constexpr Fault make_fault(FaultKind kind, FaultCause cause,
                          std::uint64_t address = 0) {
  return Fault{kind, cause, address};
}

}  // namespace x86dual

#define X86DUAL_CONCAT_INNER_(a, b) a##b
#define X86DUAL_CONCAT_(a, b) X86DUAL_CONCAT_INNER_(a, b)

// Evaluates `expr` (a Result<T>); on fault returns the fault from the
// enclosing function, otherwise assigns the value to `lhs`.
#define X86DUAL_ASSIGN_OR_RETURN(lhs, expr)                         \
  X86DUAL_ASSIGN_OR_RETURN_IMPL_(X86DUAL_CONCAT_(res_, __LINE__), lhs, \
                                 expr)
#define X86DUAL_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, expr) \
  auto tmp = (expr);                                   \
  if (!tmp.ok()) return tmp.fault();                   \
  lhs = std::move(tmp).value()

#define X86DUAL_RETURN_IF_FAULT(expr)                          \
  do {                                                         \
    if (auto x86dual_status_ = (expr); !x86dual_status_.ok()) \
      return x86dual_status_.fault();                          \
  } while (0)

#endif  // X86DUAL_FAULT_HPP_
