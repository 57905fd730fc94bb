// SPDX-License-Identifier: Apache-2.0
#include "hakf/tellability.hpp"

#include <algorithm>

namespace hakf {

OrderedJson marking_to_json(const RegularMarking& marking) {
  OrderedJson j;
  j["feedId"] = marking.feed_id;
  j["classLabel"] = marking.class_label;
  j["context"] = std::string(to_string(marking.context));
  j["markedBy"] = marking.marked_by;
  j["markedAt"] = marking.marked_at.to_rfc3339();
  return j;
}

RegularMarking marking_from_json(const Json& json, const std::string& path) {
  namespace f = json_field;
  RegularMarking m;
  m.feed_id = f::string(json, "feedId", path);
  m.class_label = f::string(json, "classLabel", path);
  m.context = context_from_string(f::string(json, "context", path));
  m.marked_by = f::string(json, "markedBy", path);
  auto at = Timestamp::try_parse_rfc3339(f::string(json, "markedAt", path));
  if (!at) throw Error(ErrorCode::schema_violation, path + ".markedAt: expected RFC-3339 timestamp");
  m.marked_at = *at;
  if (m.feed_id.empty() || m.class_label.empty()) {
    throw Error(ErrorCode::schema_violation, path + ": feedId and classLabel must be nonempty");
  }
  return m;
}

void MarkingSet::mark(RegularMarking marking) {
  Key key{marking.feed_id, marking.class_label, marking.context};
  markings_.insert_or_assign(std::move(key), std::move(marking));
  ++version_;
}

void MarkingSet::unmark(std::string_view feed_id, std::string_view class_label, Context context) {
  auto it = markings_.find(Key{std::string(feed_id), std::string(class_label), context});
  if (it == markings_.end()) {
    throw Error(ErrorCode::no_such_marking,
                "no marking for (" + std::string(feed_id) + ", " + std::string(class_label) +
                    ", " + std::string(to_string(context)) + ")");
  }
  markings_.erase(it);
  ++version_;
}

std::optional<RegularMarking> MarkingSet::matching(const SimpleEvent& event) const {
  auto exact = markings_.find(Key{event.feed_id, event.class_label, event.context});
  if (exact != markings_.end()) return exact->second;
  auto wildcard = markings_.find(Key{event.feed_id, event.class_label, Context::any});
  if (wildcard != markings_.end()) return wildcard->second;
  return std::nullopt;
}

bool MarkingSet::is_suppressed(const SimpleEvent& event) const {
  return matching(event).has_value();
}

std::vector<RegularMarking> MarkingSet::all() const {
  std::vector<RegularMarking> out;
  out.reserve(markings_.size());
  for (const auto& [key, m] : markings_) out.push_back(m);
  return out;
}

std::string MarkingSet::to_json_text() const {
  OrderedJson arr = OrderedJson::array();
  for (const auto& [key, m] : markings_) arr.push_back(marking_to_json(m));
  return arr.dump();
}

MarkingSet MarkingSet::from_json(const Json& json) {
  if (!json.is_array()) throw Error(ErrorCode::schema_violation, "markings: expected array");
  MarkingSet set;
  for (std::size_t i = 0; i < json.size(); ++i) {
    auto m = marking_from_json(json[i], "markings[" + std::to_string(i) + "]");
    Key key{m.feed_id, m.class_label, m.context};
    if (!set.markings_.emplace(std::move(key), std::move(m)).second) {
      throw Error(ErrorCode::duplicate_id,
                  "markings[" + std::to_string(i) + "]: duplicate (feed, class, context)");
    }
  }
  set.version_ = set.markings_.size();
  return set;
}

void ConceptMapping::set(std::string class_label, std::string concept_name, const Palette& palette) {
  palette.concept_named(concept_name);
  if (class_label.empty()) throw Error(ErrorCode::schema_violation, "mapping: empty class label");
  map_.insert_or_assign(std::move(class_label), std::move(concept_name));
}

void ConceptMapping::erase(std::string_view class_label) { map_.erase(std::string(class_label)); }

std::optional<std::string> ConceptMapping::map_class(std::string_view class_label) const {
  auto it = map_.find(std::string(class_label));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ConceptMapping::labels_for(std::string_view concept_name,
                                                    const Palette& palette) const {
  palette.concept_named(concept_name);
  std::vector<std::string> labels;
  for (const auto& [label, mapped] : map_) {
    if (palette.has_concept(mapped) && palette.is_subconcept(mapped, concept_name)) {
      labels.push_back(label);
    }
  }
  return labels;
}

void ConceptMapping::check_against(const Palette& palette) const {
  for (const auto& [label, mapped] : map_) {
    if (!palette.has_concept(mapped)) {
      throw Error(ErrorCode::unknown_concept,
                  "class \"" + label + "\" maps to unknown concept \"" + mapped + "\"");
    }
  }
}

OrderedJson ConceptMapping::to_json() const {
  OrderedJson j = OrderedJson::object();
  for (const auto& [label, mapped] : map_) j[label] = mapped;
  return j;
}

ConceptMapping ConceptMapping::from_json(const Json& json, const Palette& palette) {
  if (!json.is_object()) throw Error(ErrorCode::schema_violation, "mapping: expected object");
  ConceptMapping mapping;
  for (const auto& [label, value] : json.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::schema_violation, "mapping." + label + ": expected string");
    }
    mapping.set(label, value.get<std::string>(), palette);
  }
  return mapping;
}

std::optional<std::string> map_class(const ConceptMapping& mapping, std::string_view class_label) {
  return mapping.map_class(class_label);
}

OrderedJson frequency_to_json(const FrequencyTable& table, Context context) {
  std::vector<std::pair<std::string, std::int64_t>> rows;
  for (const auto& [label, entry] : table.entries) {
    std::int64_t count = entry.count;
    if (context != Context::any) {
      auto it = entry.by_context.find(context);
      count = it == entry.by_context.end() ? 0 : it->second;
    }
    if (count > 0) rows.emplace_back(label, count);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  OrderedJson arr = OrderedJson::array();
  for (const auto& [label, count] : rows) {
    OrderedJson row;
    row["class"] = label;
    row["count"] = count;
    row["rate"] = static_cast<double>(count) / table.window_seconds;
    arr.push_back(std::move(row));
  }
  return arr;
}

TellabilityState::TellabilityState(double retention_seconds)
    : retention_seconds_(retention_seconds) {}

void TellabilityState::record(const SimpleEvent& event) {
  check_event(event);
  auto it = feeds_.find(event.feed_id);
  if (it == feeds_.end()) {
    it = feeds_.emplace(event.feed_id, FeedLog{}).first;
  } else if (event.timestamp < it->second.clock) {
    throw Error(ErrorCode::out_of_order_timestamp,
                "feed \"" + event.feed_id + "\": event at t=" + format_number(event.timestamp) +
                    " precedes feed clock t=" + format_number(it->second.clock));
  }
  FeedLog& log = it->second;
  log.clock = event.timestamp;
  log.ring.push_back(event);
  while (!log.ring.empty() && log.ring.front().timestamp <= log.clock - retention_seconds_) {
    log.ring.pop_front();
  }
}

bool TellabilityState::has_feed(std::string_view feed_id) const {
  return feeds_.find(feed_id) != feeds_.end();
}

const TellabilityState::FeedLog& TellabilityState::feed(std::string_view feed_id) const {
  auto it = feeds_.find(feed_id);
  if (it == feeds_.end()) {
    throw Error(ErrorCode::unknown_feed, "unknown feed \"" + std::string(feed_id) + "\"");
  }
  return it->second;
}

double TellabilityState::feed_clock(std::string_view feed_id) const { return feed(feed_id).clock; }

std::vector<std::string> TellabilityState::feeds() const {
  std::vector<std::string> ids;
  for (const auto& [id, log] : feeds_) ids.push_back(id);
  return ids;
}

FrequencyTable TellabilityState::frequency_table(std::string_view feed_id, double window_seconds,
                                                 std::optional<double> now) const {
  if (!(window_seconds > 0.0)) {
    throw Error(ErrorCode::schema_violation, "window must be positive");
  }
  const FeedLog& log = feed(feed_id);
  FrequencyTable table;
  table.feed_id = std::string(feed_id);
  table.window_seconds = window_seconds;
  table.now = now.value_or(log.clock);
  const double lower = table.now - window_seconds;
  // The ring is sorted by timestamp, so scan backwards from the newest.
  for (auto it = log.ring.rbegin(); it != log.ring.rend(); ++it) {
    if (it->timestamp > table.now) continue;
    if (it->timestamp <= lower) break;
    FrequencyEntry& entry = table.entries[it->class_label];
    ++entry.count;
    ++entry.by_context[it->context];
  }
  for (auto& [label, entry] : table.entries) {
    entry.rate = static_cast<double>(entry.count) / window_seconds;
  }
  return table;
}

std::vector<ClassCount> TellabilityState::top_classes(std::string_view feed_id,
                                                      double window_seconds, Context context,
                                                      std::optional<double> now) const {
  const FrequencyTable table = frequency_table(feed_id, window_seconds, now);
  std::vector<ClassCount> ranked;
  for (const auto& [label, entry] : table.entries) {
    std::int64_t count = entry.count;
    if (context != Context::any) {
      auto it = entry.by_context.find(context);
      count = it == entry.by_context.end() ? 0 : it->second;
    }
    if (count > 0) ranked.push_back({label, count});
  }
  std::sort(ranked.begin(), ranked.end(), [](const ClassCount& a, const ClassCount& b) {
    return a.count != b.count ? a.count > b.count : a.class_label < b.class_label;
  });
  return ranked;
}

void TellabilityState::mark_regular(RegularMarking marking) {
  if (marking.feed_id.empty() || marking.class_label.empty()) {
    throw Error(ErrorCode::schema_violation, "marking needs a feed and a class");
  }
  markings_.mark(std::move(marking));
  ++version_;
}

void TellabilityState::unmark_regular(std::string_view feed_id, std::string_view class_label,
                                      Context context) {
  markings_.unmark(feed_id, class_label, context);
  ++version_;
}

void TellabilityState::set_markings(MarkingSet markings) {
  markings_ = std::move(markings);
  ++version_;
}

void TellabilityState::set_mapping(ConceptMapping mapping) {
  mapping_ = std::move(mapping);
  ++version_;
}

void TellabilityState::reset_feeds() { feeds_.clear(); }

}  // namespace hakf
