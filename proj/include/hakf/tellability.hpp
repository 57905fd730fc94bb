// SPDX-License-Identifier: Apache-2.0
#pragma once

// Operator-to-machine knowledge: per-feed class frequencies, "regular"
// background markings that suppress downstream matching, and the mapping
// from classifier labels onto palette concepts.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "hakf/palette_graph.hpp"
#include "hakf/simple_event.hpp"

namespace hakf {

struct RegularMarking {
  std::string feed_id;
  std::string class_label;
  Context context = Context::any;
  std::string marked_by;
  Timestamp marked_at;

  bool operator==(const RegularMarking&) const = default;
};

OrderedJson marking_to_json(const RegularMarking& marking);
RegularMarking marking_from_json(const Json& json, const std::string& path = "marking");

/// At most one marking per (feed, class, context).
class MarkingSet {
 public:
  /// Inserts or replaces; always bumps the version.
  void mark(RegularMarking marking);
  /// Errors: no-such-marking.
  void unmark(std::string_view feed_id, std::string_view class_label, Context context);

  /// True iff a marking exists with the event's feed and class and a
  /// context equal to the event's or `any`.
  bool is_suppressed(const SimpleEvent& event) const;
  /// The marking that suppresses `event`; an exact-context marking wins
  /// over an `any` marking.
  std::optional<RegularMarking> matching(const SimpleEvent& event) const;

  std::vector<RegularMarking> all() const;
  std::size_t size() const noexcept { return markings_.size(); }
  std::uint64_t version() const noexcept { return version_; }
  /// Restores a persisted version counter.
  void set_version(std::uint64_t version) noexcept { version_ = version; }

  std::string to_json_text() const;
  static MarkingSet from_json(const Json& json);

  bool operator==(const MarkingSet&) const = default;

 private:
  using Key = std::tuple<std::string, std::string, Context>;
  std::map<Key, RegularMarking> markings_;
  std::uint64_t version_ = 0;
};

/// Partial map from classifier labels onto palette concepts.
class ConceptMapping {
 public:
  /// Errors: unknown-concept when `concept_name` is not in `palette`.
  void set(std::string class_label, std::string concept_name, const Palette& palette);
  void erase(std::string_view class_label);

  std::optional<std::string> map_class(std::string_view class_label) const;
  /// Labels whose mapped concept is `concept_name` or one of its
  /// subconcepts, sorted.
  std::vector<std::string> labels_for(std::string_view concept_name, const Palette& palette) const;
  /// Throws unknown-concept naming the first mapped concept missing from
  /// `palette`.
  void check_against(const Palette& palette) const;

  const std::map<std::string, std::string>& entries() const noexcept { return map_; }

  OrderedJson to_json() const;
  /// Errors: schema-violation, unknown-concept.
  static ConceptMapping from_json(const Json& json, const Palette& palette);

  bool operator==(const ConceptMapping&) const = default;

 private:
  std::map<std::string, std::string> map_;
};

std::optional<std::string> map_class(const ConceptMapping& mapping, std::string_view class_label);

struct ClassCount {
  std::string class_label;
  std::int64_t count = 0;

  bool operator==(const ClassCount&) const = default;
};

struct FrequencyEntry {
  std::int64_t count = 0;
  double rate = 0.0;  // events per second over the window
  std::map<Context, std::int64_t> by_context;
};

struct FrequencyTable {
  std::string feed_id;
  double window_seconds = 0.0;
  double now = 0.0;
  std::map<std::string, FrequencyEntry> entries;
};

/// Serialized as [{"class","count","rate"}], descending count, ties by class.
OrderedJson frequency_to_json(const FrequencyTable& table, Context context = Context::any);

class TellabilityState {
 public:
  /// Events older than `retention_seconds` behind a feed's clock are
  /// dropped from the frequency ring; windows longer than this only see the
  /// retained events.
  explicit TellabilityState(double retention_seconds = 86400.0);

  /// Errors: out-of-order-timestamp (names feed and both timestamps).
  void record(const SimpleEvent& event);

  bool has_feed(std::string_view feed_id) const;
  /// Latest recorded timestamp on the feed. Errors: unknown-feed.
  double feed_clock(std::string_view feed_id) const;
  std::vector<std::string> feeds() const;

  /// Counts over (now - window, now]; `now` defaults to the feed clock.
  /// Errors: unknown-feed; schema-violation for window <= 0.
  FrequencyTable frequency_table(std::string_view feed_id, double window_seconds,
                                 std::optional<double> now = std::nullopt) const;
  /// Descending by count, ties lexicographic by label; `any` matches all.
  std::vector<ClassCount> top_classes(std::string_view feed_id, double window_seconds,
                                      Context context,
                                      std::optional<double> now = std::nullopt) const;

  void mark_regular(RegularMarking marking);
  void unmark_regular(std::string_view feed_id, std::string_view class_label, Context context);
  bool is_suppressed(const SimpleEvent& event) const { return markings_.is_suppressed(event); }

  const MarkingSet& markings() const noexcept { return markings_; }
  void set_markings(MarkingSet markings);
  const ConceptMapping& mapping() const noexcept { return mapping_; }
  void set_mapping(ConceptMapping mapping);

  /// Bumped by every marking or mapping change.
  std::uint64_t version() const noexcept { return version_; }

  /// Forget recorded events (a new scenario clock starts); markings stay.
  void reset_feeds();

 private:
  struct FeedLog {
    double clock = 0.0;
    std::deque<SimpleEvent> ring;
  };

  const FeedLog& feed(std::string_view feed_id) const;

  double retention_seconds_;
  std::map<std::string, FeedLog, std::less<>> feeds_;
  MarkingSet markings_;
  ConceptMapping mapping_;
  std::uint64_t version_ = 0;
};

}  // namespace hakf
