// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario execution shared by the headless CLI and the gateway, so both
// produce the same detection log for the same inputs.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hakf/cep_engine.hpp"
#include "hakf/feed_sim.hpp"

namespace hakf {

struct RunConfig {
  Palette palette;
  ConceptMapping mapping;
  std::vector<ComplexEventDefinition> definitions;
  MarkingSet markings;
};

/// Overlays the scenario's optional definitions / markings /
/// conceptMappings / palette onto `base`. Embedded definitions replace
/// same-named ones; embedded markings are added.
/// Errors: ValidationError(invalid_scenario) naming the offending key.
RunConfig apply_scenario_config(const Scenario& scenario, RunConfig base);

/// Resolves the enabled definitions. Errors: ValidationError(invalid_definition).
std::vector<ResolvedDefinition> resolve_enabled(const RunConfig& config);

struct RunOutput {
  std::vector<EventRecord> records;
  std::vector<Detection> detections;
};

using IngestObserver = std::function<void(const IngestResult&)>;

/// Feeds `events` through `engine` in order.
RunOutput run_events(CepEngine& engine, const std::vector<SimpleEvent>& events,
                     const IngestObserver& observer = {});

/// {"scenario","seed","events","suppressed","detections":{name:count},"total"};
/// every enabled definition appears, with zero when it never fired.
OrderedJson run_summary(const Scenario& scenario, std::uint64_t seed,
                        const std::vector<ResolvedDefinition>& definitions, const RunOutput& output);

}  // namespace hakf
