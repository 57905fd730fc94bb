// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace hakf {

using Json = nlohmann::json;
/// Insertion-ordered JSON used for every canonical (byte-stable) output.
using OrderedJson = nlohmann::ordered_json;

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value);

/// Shortest decimal text that parses back to the same double; integral
/// values print without a fractional part ("300", not "300.0").
std::string format_number(double value);

/// Fixed-precision rendering for human-facing text (6 significant digits).
std::string format_short(double value);

/// Parse JSON, converting library errors into SyntaxError with 1-based
/// line/column computed from the failing byte offset.
Json parse_json(std::string_view text);

/// UTC instant with millisecond resolution, rendered as RFC-3339.
class Timestamp {
 public:
  Timestamp() = default;
  explicit Timestamp(std::int64_t epoch_millis) : millis_(epoch_millis) {}

  static Timestamp parse_rfc3339(std::string_view text);
  static std::optional<Timestamp> try_parse_rfc3339(std::string_view text);

  /// "YYYY-MM-DDTHH:MM:SSZ", or with ".mmm" when the millis are nonzero.
  std::string to_rfc3339() const;
  std::int64_t epoch_millis() const noexcept { return millis_; }

  auto operator<=>(const Timestamp&) const = default;

 private:
  std::int64_t millis_ = 0;
};

/// Schema-checked field access. Every failure throws
/// Error(schema_violation) naming the JSON path.
namespace json_field {

const Json& require(const Json& obj, std::string_view key, const std::string& path);
std::string string(const Json& obj, std::string_view key, const std::string& path);
std::optional<std::string> nullable_string(const Json& obj, std::string_view key,
                                           const std::string& path);
double number(const Json& obj, std::string_view key, const std::string& path);
std::int64_t integer(const Json& obj, std::string_view key, const std::string& path);
bool boolean(const Json& obj, std::string_view key, const std::string& path);
const Json& array(const Json& obj, std::string_view key, const std::string& path);
const Json& object(const Json& obj, std::string_view key, const std::string& path);
void expect_object(const Json& value, const std::string& path);

}  // namespace json_field

}  // namespace hakf
