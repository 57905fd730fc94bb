// SPDX-License-Identifier: Apache-2.0
#include "hakf/explainability.hpp"

#include <algorithm>
#include <set>

namespace hakf {

EventLog::EventLog(std::vector<EventRecord> records) {
  for (auto& r : records) append(std::move(r));
}

void EventLog::append(EventRecord record) {
  if (index_.count(record.event.id) != 0) {
    throw Error(ErrorCode::duplicate_id, "event \"" + record.event.id + "\" already logged");
  }
  index_.emplace(record.event.id, records_.size());
  records_.push_back(std::move(record));
}

const EventRecord* EventLog::find(std::string_view event_id) const {
  auto it = index_.find(event_id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

void EventLog::retain_only(const std::vector<std::string>& event_ids) {
  std::set<std::string, std::less<>> keep(event_ids.begin(), event_ids.end());
  std::vector<EventRecord> kept;
  for (auto& r : records_) {
    if (keep.count(r.event.id) != 0) kept.push_back(std::move(r));
  }
  records_.clear();
  index_.clear();
  for (auto& r : kept) append(std::move(r));
}

std::string_view to_string(CheckKind kind) {
  switch (kind) {
    case CheckKind::temporal: return "temporal";
    case CheckKind::spatial: return "spatial";
    case CheckKind::count: return "count";
  }
  return "temporal";
}

namespace {

const ResolvedDefinition& find_definition(const std::vector<ResolvedDefinition>& definitions,
                                          std::string_view name) {
  auto it = std::find_if(definitions.begin(), definitions.end(),
                         [&](const ResolvedDefinition& d) { return d.name == name; });
  if (it == definitions.end()) {
    throw Error(ErrorCode::unknown_definition, "unknown definition \"" + std::string(name) + "\"");
  }
  return *it;
}

const SimpleEvent& lookup(const EventLog& log, const std::string& event_id) {
  const EventRecord* r = log.find(event_id);
  if (r == nullptr) {
    throw Error(ErrorCode::dangling_constituent,
                "constituent event \"" + event_id + "\" is not in the event log");
  }
  return r->event;
}

}  // namespace

Explanation explain(const Detection& detection, const EventLog& log,
                    const std::vector<ResolvedDefinition>& definitions) {
  const ResolvedDefinition& def = find_definition(definitions, detection.definition_name);

  Explanation ex;
  ex.detection_id = detection.id;
  ex.definition_name = detection.definition_name;

  const SimpleEvent* initiator = nullptr;
  const SimpleEvent* terminator = nullptr;
  std::vector<int> per_spec(def.supporting.size(), 0);
  std::set<std::string> seen;
  for (const auto& ref : detection.constituents) {
    const SimpleEvent& e = lookup(log, ref.event_id);
    ex.constituents.push_back(
        {e.id, ref.role, e.class_label, e.confidence, e.feed_id, e.partner});
    if (ref.role == Role::initiator) initiator = &e;
    if (ref.role == Role::terminator) terminator = &e;
    if (ref.role == Role::supporting) {
      if (ref.spec < 0 || static_cast<std::size_t>(ref.spec) >= per_spec.size()) {
        throw Error(ErrorCode::internal, "detection \"" + detection.id + "\" names supporting spec " +
                                             std::to_string(ref.spec) + " outside the definition");
      }
      ++per_spec[static_cast<std::size_t>(ref.spec)];
    }
    if (seen.insert(e.id).second) ex.probability_terms.push_back({e.id, e.confidence});
  }
  if (initiator == nullptr || terminator == nullptr) {
    throw Error(ErrorCode::internal,
                "detection \"" + detection.id + "\" lacks an initiator or terminator");
  }

  const double span = terminator->timestamp - initiator->timestamp;
  ex.constraint_checks.push_back(
      {CheckKind::temporal, span, def.window_seconds, span >= 0.0 && span <= def.window_seconds});
  double max_distance = 0.0;
  for (const auto& ref : detection.constituents) {
    if (ref.role == Role::initiator || ref.event_id == initiator->id) continue;
    const SimpleEvent& e = lookup(log, ref.event_id);
    const double d = distance(initiator->location, e.location);
    max_distance = std::max(max_distance, d);
    ex.constraint_checks.push_back({CheckKind::spatial, d, def.radius_meters, d <= def.radius_meters});
  }
  for (std::size_t s = 0; s < def.supporting.size(); ++s) {
    ex.constraint_checks.push_back({CheckKind::count, static_cast<double>(per_spec[s]),
                                    static_cast<double>(def.supporting[s].min_count),
                                    per_spec[s] >= def.supporting[s].min_count});
  }
  for (const auto& check : ex.constraint_checks) {
    if (!check.satisfied) {
      throw Error(ErrorCode::internal,
                  "detection \"" + detection.id + "\" violates its " + std::string(to_string(check.kind)) +
                      " constraint (" + format_number(check.actual) + " vs " + format_number(check.bound) + ")");
    }
  }

  ex.product = 1.0;
  for (const auto& term : ex.probability_terms) ex.product *= term.confidence;

  ex.narrative = detection.definition_name + " detected: initiated by " + initiator->class_label +
                 " (p=" + format_short(initiator->confidence) + ") at t=" +
                 format_short(initiator->timestamp) + ", terminated by " + terminator->class_label +
                 " (p=" + format_short(terminator->confidence) + ") at t=" +
                 format_short(terminator->timestamp) + "; \xCE\x94t=" + format_short(span) +
                 "s \xE2\x89\xA4 " + format_short(def.window_seconds) + "s; max distance " +
                 format_short(max_distance) + "m \xE2\x89\xA4 " + format_short(def.radius_meters) +
                 "m; combined probability " + format_short(ex.product) + ".";
  return ex;
}

std::vector<std::string> verify_explanation(const Explanation& explanation,
                                            const Detection& detection, const EventLog& log,
                                            const std::vector<ResolvedDefinition>& definitions) {
  std::vector<std::string> problems;
  const ResolvedDefinition* def = nullptr;
  for (const auto& d : definitions) {
    if (d.name == detection.definition_name) def = &d;
  }
  if (def == nullptr) return {"definition \"" + detection.definition_name + "\" not found"};

  // Recompute from raw events; deliberately shares no code with explain().
  std::vector<const SimpleEvent*> events;
  for (const auto& ref : detection.constituents) {
    const EventRecord* r = log.find(ref.event_id);
    if (r == nullptr) return {"event \"" + ref.event_id + "\" missing from log"};
    events.push_back(&r->event);
  }
  const SimpleEvent* init = nullptr;
  const SimpleEvent* term = nullptr;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (detection.constituents[i].role == Role::initiator) init = events[i];
    if (detection.constituents[i].role == Role::terminator) term = events[i];
  }
  if (init == nullptr || term == nullptr) return {"detection lacks initiator or terminator"};

  std::vector<ConstraintCheck> expected;
  const double span = term->timestamp - init->timestamp;
  expected.push_back({CheckKind::temporal, span, def->window_seconds,
                      !(span < 0.0) && !(span > def->window_seconds)});
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (detection.constituents[i].role == Role::initiator || events[i]->id == init->id) continue;
    const double d = distance(init->location, events[i]->location);
    expected.push_back({CheckKind::spatial, d, def->radius_meters, !(d > def->radius_meters)});
  }
  for (std::size_t s = 0; s < def->supporting.size(); ++s) {
    auto count = std::count_if(detection.constituents.begin(), detection.constituents.end(),
                               [&](const ConstituentRef& r) {
                                 return r.role == Role::supporting && r.spec == static_cast<int>(s);
                               });
    expected.push_back({CheckKind::count, static_cast<double>(count),
                        static_cast<double>(def->supporting[s].min_count),
                        count >= def->supporting[s].min_count});
  }
  if (expected.size() != explanation.constraint_checks.size()) {
    problems.push_back("constraint check count " + std::to_string(explanation.constraint_checks.size()) +
                       " != " + std::to_string(expected.size()));
  } else {
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (!(expected[i] == explanation.constraint_checks[i])) {
        problems.push_back("constraint check " + std::to_string(i) + " differs");
      }
    }
  }

  std::set<std::string> seen;
  double product = 1.0;
  std::size_t term_index = 0;
  for (const SimpleEvent* e : events) {
    if (!seen.insert(e->id).second) continue;
    product *= e->confidence;
    if (term_index >= explanation.probability_terms.size() ||
        explanation.probability_terms[term_index].event_id != e->id ||
        explanation.probability_terms[term_index].confidence != e->confidence) {
      problems.push_back("probability term " + std::to_string(term_index) + " differs");
    }
    ++term_index;
  }
  if (term_index != explanation.probability_terms.size()) problems.push_back("extra probability terms");
  if (product != explanation.product) problems.push_back("product differs");
  if (product != detection.probability) problems.push_back("product does not equal detection probability");
  for (std::size_t i = 0; i < events.size() && i < explanation.constituents.size(); ++i) {
    const auto& c = explanation.constituents[i];
    if (c.event_id != events[i]->id || c.class_label != events[i]->class_label ||
        c.confidence != events[i]->confidence || c.feed_id != events[i]->feed_id ||
        c.partner != events[i]->partner || c.role != detection.constituents[i].role) {
      problems.push_back("constituent " + std::to_string(i) + " differs");
    }
  }
  if (events.size() != explanation.constituents.size()) problems.push_back("constituent count differs");
  return problems;
}

OrderedJson explanation_to_json(const Explanation& ex) {
  OrderedJson j;
  j["detectionId"] = ex.detection_id;
  j["definition"] = ex.definition_name;
  OrderedJson cs = OrderedJson::array();
  for (const auto& c : ex.constituents) {
    OrderedJson cj;
    cj["eventId"] = c.event_id;
    cj["role"] = std::string(to_string(c.role));
    cj["classLabel"] = c.class_label;
    cj["confidence"] = c.confidence;
    cj["feedId"] = c.feed_id;
    cj["partner"] = c.partner;
    cs.push_back(std::move(cj));
  }
  j["constituents"] = std::move(cs);
  OrderedJson checks = OrderedJson::array();
  for (const auto& c : ex.constraint_checks) {
    OrderedJson cj;
    cj["kind"] = std::string(to_string(c.kind));
    cj["actual"] = c.actual;
    cj["bound"] = c.bound;
    cj["satisfied"] = c.satisfied;
    checks.push_back(std::move(cj));
  }
  j["constraintChecks"] = std::move(checks);
  OrderedJson terms = OrderedJson::array();
  for (const auto& t : ex.probability_terms) {
    OrderedJson tj;
    tj["eventId"] = t.event_id;
    tj["confidence"] = t.confidence;
    terms.push_back(std::move(tj));
  }
  j["probabilityTerms"] = std::move(terms);
  j["product"] = ex.product;
  j["narrative"] = ex.narrative;
  return j;
}

OrderedJson suppression_trace_to_json(const SuppressionTrace& trace) {
  OrderedJson j;
  j["eventId"] = trace.event_id;
  j["marking"] = marking_to_json(trace.marking);
  j["decidedAt"] = trace.decided_at;
  return j;
}

std::optional<SuppressionTrace> explain_suppression(std::string_view event_id, const EventLog& log) {
  const EventRecord* r = log.find(event_id);
  if (r == nullptr) {
    throw Error(ErrorCode::unknown_event, "unknown event \"" + std::string(event_id) + "\"");
  }
  if (!r->suppressed_by) return std::nullopt;
  return SuppressionTrace{r->event.id, *r->suppressed_by, r->event.timestamp};
}

}  // namespace hakf
