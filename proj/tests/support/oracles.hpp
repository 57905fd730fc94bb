// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "hakf/cep_engine.hpp"

namespace hakf::testing {

/// The detection's chosen events as probabilistic facts (one per distinct
/// event, confidence as probability).
inline FactSet detection_facts(const Detection& detection, const std::vector<SimpleEvent>& events) {
  std::map<std::string, const SimpleEvent*> by_id;
  for (const auto& e : events) by_id[e.id] = &e;
  FactSet facts;
  std::vector<std::string> seen;
  for (const auto& c : detection.constituents) {
    if (std::find(seen.begin(), seen.end(), c.event_id) != seen.end()) continue;
    seen.push_back(c.event_id);
    const SimpleEvent& e = *by_id.at(c.event_id);
    facts.push_back({e.confidence, {e.class_label, e.timestamp, e.location}});
  }
  return facts;
}

/// Runs every event through a fresh engine and collects the detections.
inline std::vector<Detection> stream_all(const std::vector<ResolvedDefinition>& defs,
                                         const std::vector<SimpleEvent>& events,
                                         const MarkingSet& markings = {}) {
  CepEngine engine(defs, markings);
  std::vector<Detection> out;
  for (const auto& e : events) {
    auto result = engine.ingest(e);
    for (auto& d : result.detections) out.push_back(std::move(d));
  }
  return out;
}

}  // namespace hakf::testing
