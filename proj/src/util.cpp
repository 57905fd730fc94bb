// SPDX-License-Identifier: Apache-2.0
#include "hakf/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "hakf/error.hpp"

namespace hakf {

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string format_number(double value) {
  if (std::isfinite(value) && value == std::floor(value) && std::fabs(value) < 1e15) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(value));
    return std::string(buf, end);
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string format_short(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    if (offset > text.size()) offset = text.size();
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SyntaxError(ErrorCode::parse_error, line, column, {},
                      "parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(column) + ": " + e.what());
  }
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::optional<Timestamp> Timestamp::try_parse_rfc3339(std::string_view s) {
  int year, month, day, hour, minute, second;
  if (!read_digits(s, 0, 4, year) || s.size() < 20 || s[4] != '-' ||
      !read_digits(s, 5, 2, month) || s[7] != '-' || !read_digits(s, 8, 2, day) ||
      (s[10] != 'T' && s[10] != 't') || !read_digits(s, 11, 2, hour) || s[13] != ':' ||
      !read_digits(s, 14, 2, minute) || s[16] != ':' || !read_digits(s, 17, 2, second)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 ||
      second > 60) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  std::int64_t millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    std::int64_t scale = 100;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 3) millis += (s[pos] - '0') * scale;
      scale /= 10;
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
  }
  std::int64_t offset_minutes = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int oh, om;
    if (!read_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !read_digits(s, pos + 4, 2, om)) {
      return std::nullopt;
    }
    offset_minutes = (s[pos] == '+' ? 1 : -1) * (oh * 60 + om);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                      static_cast<unsigned>(day));
  std::int64_t secs = days * 86400 + hour * 3600 + minute * 60 + second - offset_minutes * 60;
  return Timestamp(secs * 1000 + millis);
}

Timestamp Timestamp::parse_rfc3339(std::string_view text) {
  auto ts = try_parse_rfc3339(text);
  if (!ts) {
    throw Error(ErrorCode::schema_violation,
                "not an RFC-3339 timestamp: \"" + std::string(text) + "\"");
  }
  return *ts;
}

std::string Timestamp::to_rfc3339() const {
  std::int64_t ms = millis_ % 1000;
  std::int64_t secs = millis_ / 1000;
  if (ms < 0) {
    ms += 1000;
    secs -= 1;
  }
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[40];
  if (ms == 0) {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem % 3600 / 60), static_cast<long long>(rem % 60));
  } else {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem % 3600 / 60), static_cast<long long>(rem % 60),
                  static_cast<long long>(ms));
  }
  return buf;
}

namespace json_field {

namespace {
[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::schema_violation, path + ": " + what);
}
std::string child(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}
}  // namespace

void expect_object(const Json& value, const std::string& path) {
  if (!value.is_object()) fail(path.empty() ? "$" : path, "expected object");
}

const Json& require(const Json& obj, std::string_view key, const std::string& path) {
  expect_object(obj, path);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) fail(child(path, key), "missing");
  return *it;
}

std::string string(const Json& obj, std::string_view key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) fail(child(path, key), "expected string");
  return v.get<std::string>();
}

std::optional<std::string> nullable_string(const Json& obj, std::string_view key,
                                           const std::string& path) {
  const Json& v = require(obj, key, path);
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) fail(child(path, key), "expected string or null");
  return v.get<std::string>();
}

double number(const Json& obj, std::string_view key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number()) fail(child(path, key), "expected number");
  return v.get<double>();
}

std::int64_t integer(const Json& obj, std::string_view key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number_integer()) fail(child(path, key), "expected integer");
  return v.get<std::int64_t>();
}

bool boolean(const Json& obj, std::string_view key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_boolean()) fail(child(path, key), "expected boolean");
  return v.get<bool>();
}

const Json& array(const Json& obj, std::string_view key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_array()) fail(child(path, key), "expected array");
  return v;
}

const Json& object(const Json& obj, std::string_view key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_object()) fail(child(path, key), "expected object");
  return v;
}

}  // namespace json_field

}  // namespace hakf
