// SPDX-License-Identifier: Apache-2.0
#include "hakf/simple_event.hpp"

#include <cmath>

#include "hakf/error.hpp"

namespace hakf {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::video: return "video";
    case Modality::audio: return "audio";
    case Modality::seismic: return "seismic";
    case Modality::text: return "text";
  }
  return "video";
}

Modality modality_from_string(std::string_view text) {
  if (text == "video") return Modality::video;
  if (text == "audio") return Modality::audio;
  if (text == "seismic") return Modality::seismic;
  if (text == "text") return Modality::text;
  throw Error(ErrorCode::schema_violation, "unknown modality \"" + std::string(text) + "\"");
}

std::string_view to_string(Context c) {
  switch (c) {
    case Context::day: return "day";
    case Context::night: return "night";
    case Context::any: return "any";
  }
  return "any";
}

Context context_from_string(std::string_view text) {
  if (text == "day") return Context::day;
  if (text == "night") return Context::night;
  if (text == "any") return Context::any;
  throw Error(ErrorCode::schema_violation, "unknown context \"" + std::string(text) + "\"");
}

double distance(const Location& a, const Location& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool processing_before(const SimpleEvent& a, const SimpleEvent& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.id < b.id;
}

void check_event(const SimpleEvent& event) {
  if (event.id.empty()) throw Error(ErrorCode::schema_violation, "event id is empty");
  if (event.feed_id.empty()) {
    throw Error(ErrorCode::schema_violation, "event \"" + event.id + "\": feedId is empty");
  }
  if (event.class_label.empty()) {
    throw Error(ErrorCode::schema_violation, "event \"" + event.id + "\": classLabel is empty");
  }
  if (!(event.confidence >= 0.0 && event.confidence <= 1.0)) {
    throw Error(ErrorCode::schema_violation,
                "event \"" + event.id + "\": confidence outside [0,1]");
  }
  if (!std::isfinite(event.timestamp)) {
    throw Error(ErrorCode::schema_violation, "event \"" + event.id + "\": timestamp not finite");
  }
  if (event.context == Context::any) {
    throw Error(ErrorCode::schema_violation,
                "event \"" + event.id + "\": raw events cannot have context \"any\"");
  }
}

OrderedJson event_to_json(const SimpleEvent& event) {
  OrderedJson j;
  j["id"] = event.id;
  j["feedId"] = event.feed_id;
  j["modality"] = std::string(to_string(event.modality));
  j["classLabel"] = event.class_label;
  j["confidence"] = event.confidence;
  j["timestamp"] = event.timestamp;
  j["location"] = {{"x", event.location.x}, {"y", event.location.y}};
  j["partner"] = event.partner;
  j["context"] = std::string(to_string(event.context));
  return j;
}

SimpleEvent event_from_json(const Json& json, const std::string& path) {
  namespace f = json_field;
  SimpleEvent e;
  e.id = f::string(json, "id", path);
  e.feed_id = f::string(json, "feedId", path);
  e.modality = modality_from_string(f::string(json, "modality", path));
  e.class_label = f::string(json, "classLabel", path);
  e.confidence = f::number(json, "confidence", path);
  e.timestamp = f::number(json, "timestamp", path);
  const Json& loc = f::object(json, "location", path);
  e.location.x = f::number(loc, "x", path + ".location");
  e.location.y = f::number(loc, "y", path + ".location");
  e.partner = f::string(json, "partner", path);
  e.context = context_from_string(f::string(json, "context", path));
  check_event(e);
  return e;
}

}  // namespace hakf
