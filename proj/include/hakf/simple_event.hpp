// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "hakf/util.hpp"

namespace hakf {

enum class Modality { video, audio, seismic, text };

/// Scene context. Raw events carry day or night; `any` is a wildcard legal
/// only in markings and queries.
enum class Context { day, night, any };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view text);
std::string_view to_string(Context c);
Context context_from_string(std::string_view text);

/// Flat local frame, meters.
struct Location {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Location&) const = default;
};

double distance(const Location& a, const Location& b);

/// One classifier output from one feed.
struct SimpleEvent {
  std::string id;
  std::string feed_id;
  Modality modality = Modality::video;
  std::string class_label;
  double confidence = 0.0;
  double timestamp = 0.0;  // scenario seconds
  Location location;
  std::string partner;
  Context context = Context::day;

  bool operator==(const SimpleEvent&) const = default;
};

/// Processing order: timestamp, then event id.
bool processing_before(const SimpleEvent& a, const SimpleEvent& b);

/// Throws Error(schema_violation) on a broken invariant (confidence range,
/// context "any", empty id/feed/class).
void check_event(const SimpleEvent& event);

OrderedJson event_to_json(const SimpleEvent& event);
SimpleEvent event_from_json(const Json& json, const std::string& path = "event");

}  // namespace hakf
