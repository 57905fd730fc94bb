// SPDX-License-Identifier: Apache-2.0
#include "hakf/error.hpp"

namespace hakf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_concept: return "unknown-concept";
    case ErrorCode::duplicate_id: return "duplicate-id";
    case ErrorCode::schema_violation: return "schema-violation";
    case ErrorCode::dangling_endpoint: return "dangling-endpoint";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::palette_conflict: return "palette-conflict";
    case ErrorCode::out_of_order_timestamp: return "out-of-order-timestamp";
    case ErrorCode::unknown_feed: return "unknown-feed";
    case ErrorCode::no_such_marking: return "no-such-marking";
    case ErrorCode::invalid_definition: return "invalid-definition";
    case ErrorCode::syntax_error: return "syntax-error";
    case ErrorCode::too_many_facts: return "too-many-facts";
    case ErrorCode::version_mismatch: return "version-mismatch";
    case ErrorCode::log_too_large: return "log-too-large";
    case ErrorCode::dangling_constituent: return "dangling-constituent";
    case ErrorCode::unknown_event: return "unknown-event";
    case ErrorCode::invalid_scenario: return "invalid-scenario";
    case ErrorCode::unknown_definition: return "unknown-definition";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::corrupt_store: return "corrupt-store";
    case ErrorCode::port_in_use: return "port-in-use";
    case ErrorCode::unknown_detection: return "unknown-detection";
    case ErrorCode::busy: return "busy";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

std::string format_violations(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.field;
    out += ": ";
    out += v.rule;
  }
  return out;
}

ValidationError::ValidationError(ErrorCode code, std::vector<Violation> violations)
    : Error(code, std::string(to_string(code)) + ": " + format_violations(violations)),
      violations_(std::move(violations)) {}

}  // namespace hakf
