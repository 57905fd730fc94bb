// SPDX-License-Identifier: Apache-2.0
#pragma once

// One project's live state behind the HTTP API. Mutations are serialized by
// a per-project writer lock and persisted before they are acknowledged;
// reads take a shared lock. Every response body is canonical JSON.

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "hakf/explainability.hpp"
#include "hakf/runner.hpp"
#include "hakf/store.hpp"
#include "hakf/stream.hpp"

namespace hakf {

class Project {
 public:
  /// Recovers the project directory and loads its state.
  /// Errors: corrupt-store naming the file.
  Project(const ProjectStore& store, std::string id);
  ~Project();
  Project(const Project&) = delete;
  Project& operator=(const Project&) = delete;

  const std::string& id() const noexcept { return id_; }
  StreamHub& hub() noexcept { return hub_; }

  OrderedJson graph_json() const;
  /// Errors: schema-violation, unknown-concept, dangling-endpoint.
  OrderedJson put_graph(const Json& body);

  OrderedJson palette_json() const;
  /// Body {name, parent?, propertySchema?}. Errors: duplicate-id, unknown-concept.
  OrderedJson add_concept(const Json& body);

  OrderedJson mappings_json() const;
  /// Replaces the label->concept mapping. Errors: unknown-concept.
  OrderedJson put_mappings(const Json& body);

  /// [{definition, version, fragment}]
  OrderedJson definitions_json() const;
  /// Inserts or replaces by name; the response embeds the compiled fragment.
  /// Errors: ValidationError(invalid_definition).
  OrderedJson add_definition(const Json& body);

  OrderedJson markings_json() const;
  /// Body {classLabel, context?, markedBy?}. Returns {version, marking}.
  OrderedJson mark_regular(const std::string& feed_id, const Json& body);
  /// Errors: no-such-marking.
  OrderedJson unmark_regular(const std::string& feed_id, const std::string& class_label, Context context);

  /// Errors: unknown-feed, schema-violation (window).
  OrderedJson frequencies(const std::string& feed_id, double window_seconds, Context context) const;

  /// {"lastSequence", "detections":[{sequence, run, detection}]} with sequence > since.
  OrderedJson detections_since(std::uint64_t since) const;
  /// Latest detection with this id unless `run` is given.
  /// Errors: unknown-detection, dangling-constituent.
  OrderedJson explanation(const std::string& detection_id, std::optional<int> run) const;
  /// {"eventId", "suppressed", "trace"?}. Errors: unknown-event.
  OrderedJson suppression(const std::string& event_id, std::optional<int> run) const;

  /// Body {scenarioPath | inline, seed?, pace?}. Relative paths resolve
  /// against `base_dir`. pace > 0 replays at that many scenario seconds per
  /// wall second on a background thread and returns immediately.
  /// Errors: ValidationError(invalid_scenario / invalid_definition),
  /// io-error, busy (a run is already active).
  OrderedJson run_scenario(const Json& body, const fs::path& base_dir);
  /// Blocks until no run is active.
  void wait_idle();

 private:
  struct DetectionEntry {
    std::uint64_t sequence = 0;
    int run = 0;
    Detection detection;
  };
  struct DefinitionEntry {
    ComplexEventDefinition definition;
    int version = 1;
  };
  struct ActiveRun {
    int number = 0;
    Scenario scenario;
    std::uint64_t seed = 0;
    std::vector<ResolvedDefinition> definitions;
    std::unique_ptr<CepEngine> engine;
    std::vector<SimpleEvent> events;
    std::size_t next = 0;
    RunOutput output;
    std::map<std::pair<std::string, std::string>, std::int64_t> class_counts;
  };
  struct RunArchive {
    std::vector<ResolvedDefinition> definitions;
    EventLog log;
  };

  void load();
  RunConfig config_locked() const;
  void persist_config_locked(const RunConfig& config);
  void persist_markings_locked();
  void persist_definitions_locked();
  OrderedJson definition_entry_json(const DefinitionEntry& entry) const;
  void publish_markings_locked();
  void step_locked(ActiveRun& run);
  OrderedJson finish_locked(ActiveRun& run);
  void run_paced(double pace);
  std::shared_ptr<const RunArchive> archive(int run) const;

  const ProjectStore& store_;
  std::string id_;
  mutable std::shared_mutex mutex_;
  StreamHub hub_;

  Palette palette_;
  KnowledgeGraph graph_;
  ConceptMapping mapping_;
  std::vector<DefinitionEntry> definitions_;
  TellabilityState tellability_;
  std::vector<DetectionEntry> detections_;
  std::uint64_t detection_sequence_ = 0;

  std::unique_ptr<ActiveRun> active_;
  std::thread runner_;
  std::atomic<bool> stopping_{false};
  mutable std::mutex archive_mutex_;
  mutable std::map<int, std::shared_ptr<const RunArchive>> archives_;
};

}  // namespace hakf
