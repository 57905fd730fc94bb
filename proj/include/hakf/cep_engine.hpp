// SPDX-License-Identifier: Apache-2.0
#pragma once

// Streaming complex-event matcher.
//
// Events are processed in strictly increasing (timestamp, id) order.
// Suppressed events are logged but never matched. Each initiator-matching
// event opens an instance; later events join the instances whose
// constraints they satisfy. An instance completes at the first event after
// which some terminator candidate (earliest in processing order, the
// initiator itself included when it also matches the terminator) has every
// supporting minCount met by events timed in [initiator, terminator]. Each
// supporting slot takes the highest-confidence qualifying events (ties by
// event id). The detection probability is the product of the distinct
// chosen events' confidences.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hakf/event_definitions.hpp"
#include "hakf/simple_event.hpp"
#include "hakf/tellability.hpp"

namespace hakf {

struct ConstituentRef {
  Role role = Role::initiator;
  std::string event_id;
  int spec = -1;  // index into ResolvedDefinition::supporting, -1 otherwise

  bool operator==(const ConstituentRef&) const = default;
};

struct Detection {
  std::string id;  // "<definition>@<initiator event id>"
  std::string definition_name;
  double interval_start = 0.0;
  double interval_end = 0.0;
  Location location;  // initiator location
  double probability = 0.0;
  std::vector<ConstituentRef> constituents;  // initiator, terminator, supporting...
  double emitted_at = 0.0;

  bool operator==(const Detection&) const = default;
};

OrderedJson detection_to_json(const Detection& detection);
Detection detection_from_json(const Json& json, const std::string& path = "detection");
/// One canonical JSON object per line, each line newline-terminated.
std::string detections_to_jsonl(const std::vector<Detection>& detections);

/// One ingested event together with the suppression decision taken at
/// ingestion time.
struct EventRecord {
  std::uint64_t sequence = 0;
  SimpleEvent event;
  std::optional<RegularMarking> suppressed_by;

  bool operator==(const EventRecord&) const = default;
};

OrderedJson event_record_to_json(const EventRecord& record);
EventRecord event_record_from_json(const Json& json, const std::string& path = "record");

struct IngestResult {
  EventRecord record;
  std::vector<Detection> detections;
};

struct InstanceMember {
  std::uint64_t sequence = 0;
  SimpleEvent event;

  bool operator==(const InstanceMember&) const = default;
};

struct OpenInstance {
  std::string definition_name;
  InstanceMember initiator;
  std::vector<InstanceMember> terminators;             // candidates, processing order
  std::vector<std::vector<InstanceMember>> supporting;  // per supporting spec
  double opened_at = 0.0;
  double deadline = 0.0;

  bool operator==(const OpenInstance&) const = default;
};

/// Serialized engine state (versioned JSON).
struct EngineState {
  std::string bytes;
};

class CepEngine {
 public:
  static constexpr int kStateVersion = 1;

  CepEngine() = default;
  /// Disabled or duplicate-named definitions are rejected by the caller;
  /// the engine keeps definitions sorted by name.
  explicit CepEngine(std::vector<ResolvedDefinition> definitions, MarkingSet markings = {});

  /// Errors: out-of-order-timestamp; schema-violation for invalid events.
  IngestResult ingest(const SimpleEvent& event);

  void set_markings(MarkingSet markings) { markings_ = std::move(markings); }
  const MarkingSet& markings() const noexcept { return markings_; }
  const std::vector<ResolvedDefinition>& definitions() const noexcept { return definitions_; }

  /// Open instances across all definitions, definition order then opening order.
  std::vector<OpenInstance> open_instances() const;
  std::size_t open_instance_count() const;
  std::uint64_t processed() const noexcept { return sequence_; }

  EngineState snapshot() const;
  /// Errors: version-mismatch; SyntaxError(parse_error); schema-violation.
  static CepEngine restore(const EngineState& state);

 private:
  struct DefinitionRuntime {
    ResolvedDefinition definition;
    std::vector<OpenInstance> instances;
  };

  std::optional<Detection> try_complete(const DefinitionRuntime& runtime,
                                        const OpenInstance& instance, double now) const;

  std::vector<DefinitionRuntime> runtimes_;
  std::vector<ResolvedDefinition> definitions_;
  MarkingSet markings_;
  std::uint64_t sequence_ = 0;
  std::optional<std::pair<double, std::string>> last_key_;
};

EngineState snapshot(const CepEngine& engine);
CepEngine restore(const EngineState& state);

inline constexpr std::size_t kMaxBruteLog = 200;

/// Batch oracle: evaluates every definition over the whole log at once
/// (sorted into processing order first) using the same selection rules
/// and returns detections sorted by (intervalEnd, completing event order,
/// definition name, initiator order). Errors: log-too-large.
std::vector<Detection> match_brute(const std::vector<ResolvedDefinition>& definitions,
                                   const std::vector<SimpleEvent>& event_log,
                                   const MarkingSet& markings = {});

}  // namespace hakf
