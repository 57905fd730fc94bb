// SPDX-License-Identifier: Apache-2.0
#include "hakf/runner.hpp"

#include <algorithm>

namespace hakf {

namespace {

[[noreturn]] void config_error(const std::string& key, const std::exception& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    std::vector<Violation> prefixed;
    for (const auto& violation : v->violations()) {
      prefixed.push_back({key + "." + violation.field, violation.rule});
    }
    throw ValidationError(ErrorCode::invalid_scenario, std::move(prefixed));
  }
  throw ValidationError(ErrorCode::invalid_scenario, {{key, e.what()}});
}

}  // namespace

RunConfig apply_scenario_config(const Scenario& scenario, RunConfig base) {
  if (scenario.palette) {
    try {
      base.palette = palette_from_json(*scenario.palette);
      base.mapping.check_against(base.palette);
    } catch (const Error& e) {
      config_error("palette", e);
    }
  }
  if (scenario.concept_mappings) {
    try {
      ConceptMapping extra = ConceptMapping::from_json(*scenario.concept_mappings, base.palette);
      for (const auto& [label, mapped] : extra.entries()) base.mapping.set(label, mapped, base.palette);
    } catch (const Error& e) {
      config_error("conceptMappings", e);
    }
  }
  if (scenario.definitions) {
    try {
      if (!scenario.definitions->is_array()) {
        throw Error(ErrorCode::schema_violation, "expected an array of definitions");
      }
      for (std::size_t i = 0; i < scenario.definitions->size(); ++i) {
        ComplexEventDefinition def =
            definition_from_json((*scenario.definitions)[i], "[" + std::to_string(i) + "]");
        auto same = std::find_if(base.definitions.begin(), base.definitions.end(),
                                 [&](const ComplexEventDefinition& d) { return d.name == def.name; });
        if (same != base.definitions.end()) {
          *same = std::move(def);
        } else {
          base.definitions.push_back(std::move(def));
        }
      }
    } catch (const Error& e) {
      config_error("definitions", e);
    }
  }
  if (scenario.markings) {
    try {
      MarkingSet extra = MarkingSet::from_json(*scenario.markings);
      for (auto& m : extra.all()) base.markings.mark(std::move(m));
    } catch (const Error& e) {
      config_error("markings", e);
    }
  }
  return base;
}

std::vector<ResolvedDefinition> resolve_enabled(const RunConfig& config) {
  auto violations = validate(config.definitions);
  if (!violations.empty()) throw ValidationError(ErrorCode::invalid_definition, std::move(violations));
  ConceptContext ctx{config.palette, config.mapping};
  std::vector<ResolvedDefinition> out;
  for (const auto& def : config.definitions) {
    if (def.enabled) out.push_back(resolve(def, &ctx));
  }
  return out;
}

RunOutput run_events(CepEngine& engine, const std::vector<SimpleEvent>& events,
                     const IngestObserver& observer) {
  RunOutput out;
  out.records.reserve(events.size());
  for (const auto& e : events) {
    IngestResult r = engine.ingest(e);
    if (observer) observer(r);
    out.records.push_back(r.record);
    for (auto& d : r.detections) out.detections.push_back(std::move(d));
  }
  return out;
}

OrderedJson run_summary(const Scenario& scenario, std::uint64_t seed,
                        const std::vector<ResolvedDefinition>& definitions, const RunOutput& output) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& d : definitions) counts[d.name] = 0;
  for (const auto& d : output.detections) ++counts[d.definition_name];
  const auto suppressed = std::count_if(output.records.begin(), output.records.end(),
                                        [](const EventRecord& r) { return r.suppressed_by.has_value(); });
  OrderedJson j;
  j["scenario"] = scenario.name;
  j["seed"] = seed;
  j["events"] = output.records.size();
  j["suppressed"] = suppressed;
  OrderedJson per = OrderedJson::object();
  for (const auto& [name, n] : counts) per[name] = n;
  j["detections"] = std::move(per);
  j["total"] = output.detections.size();
  return j;
}

}  // namespace hakf
