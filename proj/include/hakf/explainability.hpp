// SPDX-License-Identifier: Apache-2.0
#pragma once

// Read-side explanations, rebuilt on demand from the event log so they can
// never drift from what the engine saw.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hakf/cep_engine.hpp"

namespace hakf {

/// Ingested events indexed by id.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(std::vector<EventRecord> records);

  /// Errors: duplicate-id.
  void append(EventRecord record);
  const EventRecord* find(std::string_view event_id) const;
  const std::vector<EventRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  /// Drop every record except those whose ids are listed; used to model
  /// retention purges.
  void retain_only(const std::vector<std::string>& event_ids);

 private:
  std::vector<EventRecord> records_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

enum class CheckKind { temporal, spatial, count };
std::string_view to_string(CheckKind kind);

struct ConstraintCheck {
  CheckKind kind = CheckKind::temporal;
  double actual = 0.0;
  double bound = 0.0;
  bool satisfied = false;

  bool operator==(const ConstraintCheck&) const = default;
};

struct ExplainedConstituent {
  std::string event_id;
  Role role = Role::initiator;
  std::string class_label;
  double confidence = 0.0;
  std::string feed_id;
  std::string partner;

  bool operator==(const ExplainedConstituent&) const = default;
};

struct ProbabilityTerm {
  std::string event_id;
  double confidence = 0.0;

  bool operator==(const ProbabilityTerm&) const = default;
};

struct Explanation {
  std::string detection_id;
  std::string definition_name;
  std::vector<ExplainedConstituent> constituents;
  std::vector<ConstraintCheck> constraint_checks;
  std::vector<ProbabilityTerm> probability_terms;  // one per distinct event
  double product = 0.0;
  std::string narrative;

  bool operator==(const Explanation&) const = default;
};

OrderedJson explanation_to_json(const Explanation& explanation);

/// Checks, in order: one temporal (span vs window), one spatial per
/// non-initiator constituent event distinct from the initiator, one count
/// per supporting spec. Errors: dangling-constituent, unknown-definition,
/// internal (the detection does not satisfy its definition).
Explanation explain(const Detection& detection, const EventLog& log,
                    const std::vector<ResolvedDefinition>& definitions);

/// Independently recomputes every number in `explanation`; returns one
/// message per disagreement (empty when faithful).
std::vector<std::string> verify_explanation(const Explanation& explanation,
                                            const Detection& detection, const EventLog& log,
                                            const std::vector<ResolvedDefinition>& definitions);

struct SuppressionTrace {
  std::string event_id;
  RegularMarking marking;
  double decided_at = 0.0;  // scenario time of ingestion

  bool operator==(const SuppressionTrace&) const = default;
};

OrderedJson suppression_trace_to_json(const SuppressionTrace& trace);

/// Present iff the event was suppressed when it was ingested.
/// Errors: unknown-event.
std::optional<SuppressionTrace> explain_suppression(std::string_view event_id, const EventLog& log);

}  // namespace hakf
