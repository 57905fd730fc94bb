// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hakf {

enum class ErrorCode {
  unknown_concept,
  duplicate_id,
  schema_violation,
  dangling_endpoint,
  parse_error,
  palette_conflict,
  out_of_order_timestamp,
  unknown_feed,
  no_such_marking,
  invalid_definition,
  syntax_error,
  too_many_facts,
  version_mismatch,
  log_too_large,
  dangling_constituent,
  unknown_event,
  invalid_scenario,
  unknown_definition,
  io_error,
  corrupt_store,
  port_in_use,
  unknown_detection,
  busy,
  internal,
};

std::string_view to_string(ErrorCode code);

/// Base of every error the library raises. The code is stable and is what
/// the gateway maps onto HTTP statuses and the CLI onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed input text (JSON or fragment). Line and column are 1-based.
class SyntaxError : public Error {
 public:
  SyntaxError(ErrorCode code, std::size_t line, std::size_t column,
              std::vector<std::string> expected, const std::string& message)
      : Error(code, message), line_(line), column_(column),
        expected_(std::move(expected)) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::vector<std::string> expected_;
};

/// A rule violation found while validating a value: which field, which rule.
struct Violation {
  std::string field;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

std::string format_violations(const std::vector<Violation>& violations);

/// Raised when a value fails validation; carries every violation found.
class ValidationError : public Error {
 public:
  ValidationError(ErrorCode code, std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

}  // namespace hakf
