// SPDX-License-Identifier: Apache-2.0
#include "hakf/cep_engine.hpp"

#include <algorithm>
#include <set>

namespace hakf {

OrderedJson detection_to_json(const Detection& d) {
  OrderedJson j;
  j["id"] = d.id;
  j["definition"] = d.definition_name;
  j["intervalStart"] = d.interval_start;
  j["intervalEnd"] = d.interval_end;
  j["location"] = {{"x", d.location.x}, {"y", d.location.y}};
  j["probability"] = d.probability;
  OrderedJson constituents = OrderedJson::array();
  for (const auto& c : d.constituents) {
    OrderedJson cj;
    cj["role"] = std::string(to_string(c.role));
    cj["eventId"] = c.event_id;
    if (c.role == Role::supporting) cj["spec"] = c.spec;
    constituents.push_back(std::move(cj));
  }
  j["constituents"] = std::move(constituents);
  j["emittedAt"] = d.emitted_at;
  return j;
}

Detection detection_from_json(const Json& json, const std::string& path) {
  namespace f = json_field;
  Detection d;
  d.id = f::string(json, "id", path);
  d.definition_name = f::string(json, "definition", path);
  d.interval_start = f::number(json, "intervalStart", path);
  d.interval_end = f::number(json, "intervalEnd", path);
  const Json& loc = f::object(json, "location", path);
  d.location = {f::number(loc, "x", path + ".location"), f::number(loc, "y", path + ".location")};
  d.probability = f::number(json, "probability", path);
  const Json& cs = f::array(json, "constituents", path);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const std::string cpath = path + ".constituents[" + std::to_string(i) + "]";
    ConstituentRef c;
    c.role = role_from_string(f::string(cs[i], "role", cpath));
    c.event_id = f::string(cs[i], "eventId", cpath);
    if (c.role == Role::supporting) c.spec = static_cast<int>(f::integer(cs[i], "spec", cpath));
    d.constituents.push_back(std::move(c));
  }
  d.emitted_at = f::number(json, "emittedAt", path);
  return d;
}

std::string detections_to_jsonl(const std::vector<Detection>& detections) {
  std::string out;
  for (const auto& d : detections) {
    out += detection_to_json(d).dump();
    out += '\n';
  }
  return out;
}

OrderedJson event_record_to_json(const EventRecord& record) {
  OrderedJson j;
  j["sequence"] = record.sequence;
  j["event"] = event_to_json(record.event);
  j["suppressedBy"] = record.suppressed_by ? marking_to_json(*record.suppressed_by)
                                           : OrderedJson(nullptr);
  return j;
}

EventRecord event_record_from_json(const Json& json, const std::string& path) {
  namespace f = json_field;
  EventRecord r;
  r.sequence = static_cast<std::uint64_t>(f::integer(json, "sequence", path));
  r.event = event_from_json(f::object(json, "event", path), path + ".event");
  const Json& sup = f::require(json, "suppressedBy", path);
  if (!sup.is_null()) r.suppressed_by = marking_from_json(sup, path + ".suppressedBy");
  return r;
}

CepEngine::CepEngine(std::vector<ResolvedDefinition> definitions, MarkingSet markings)
    : definitions_(std::move(definitions)), markings_(std::move(markings)) {
  std::sort(definitions_.begin(), definitions_.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < definitions_.size(); ++i) {
    if (definitions_[i].name == definitions_[i - 1].name) {
      throw Error(ErrorCode::invalid_definition,
                  "duplicate definition name \"" + definitions_[i].name + "\"");
    }
  }
  for (const auto& def : definitions_) runtimes_.push_back(DefinitionRuntime{def, {}});
}

std::optional<Detection> CepEngine::try_complete(const DefinitionRuntime& runtime,
                                                 const OpenInstance& instance, double now) const {
  const ResolvedDefinition& def = runtime.definition;
  auto better = [](const InstanceMember* a, const InstanceMember* b) {
    if (a->event.confidence != b->event.confidence) return a->event.confidence > b->event.confidence;
    return a->event.id < b->event.id;
  };
  for (const InstanceMember& terminator : instance.terminators) {
    std::vector<std::vector<const InstanceMember*>> chosen(def.supporting.size());
    bool complete = true;
    for (std::size_t s = 0; s < def.supporting.size() && complete; ++s) {
      std::vector<const InstanceMember*> qualifying;
      for (const auto& m : instance.supporting[s]) {
        if (m.event.timestamp <= terminator.event.timestamp) qualifying.push_back(&m);
      }
      const auto need = static_cast<std::size_t>(def.supporting[s].min_count);
      if (qualifying.size() < need) {
        complete = false;
        break;
      }
      std::sort(qualifying.begin(), qualifying.end(), better);
      qualifying.resize(need);
      chosen[s] = std::move(qualifying);
    }
    if (!complete) continue;

    Detection d;
    d.id = def.name + "@" + instance.initiator.event.id;
    d.definition_name = def.name;
    d.interval_start = instance.initiator.event.timestamp;
    d.interval_end = terminator.event.timestamp;
    d.location = instance.initiator.event.location;
    d.emitted_at = now;
    d.constituents.push_back({Role::initiator, instance.initiator.event.id, -1});
    d.constituents.push_back({Role::terminator, terminator.event.id, -1});
    double p = instance.initiator.event.confidence;
    if (terminator.event.id != instance.initiator.event.id) p *= terminator.event.confidence;
    for (std::size_t s = 0; s < chosen.size(); ++s) {
      for (const InstanceMember* m : chosen[s]) {
        d.constituents.push_back({Role::supporting, m->event.id, static_cast<int>(s)});
        p *= m->event.confidence;
      }
    }
    d.probability = p;
    return d;
  }
  return std::nullopt;
}

IngestResult CepEngine::ingest(const SimpleEvent& event) {
  check_event(event);
  if (last_key_ && !(last_key_->first < event.timestamp ||
                     (last_key_->first == event.timestamp && last_key_->second < event.id))) {
    throw Error(ErrorCode::out_of_order_timestamp,
                "event \"" + event.id + "\" on feed \"" + event.feed_id +
                    "\" at t=" + format_number(event.timestamp) +
                    " does not follow last processed event \"" + last_key_->second +
                    "\" at t=" + format_number(last_key_->first));
  }
  last_key_ = std::make_pair(event.timestamp, event.id);

  IngestResult result;
  result.record.sequence = ++sequence_;
  result.record.event = event;
  result.record.suppressed_by = markings_.matching(event);
  if (result.record.suppressed_by) return result;

  const InstanceMember member{result.record.sequence, event};
  for (DefinitionRuntime& runtime : runtimes_) {
    const ResolvedDefinition& def = runtime.definition;
    auto& instances = runtime.instances;

    instances.erase(std::remove_if(instances.begin(), instances.end(),
                                   [&](const OpenInstance& inst) {
                                     return event.timestamp - inst.opened_at > def.window_seconds;
                                   }),
                    instances.end());

    for (auto it = instances.begin(); it != instances.end();) {
      const Location& anchor = it->initiator.event.location;
      bool in_range = event.timestamp - it->opened_at <= def.window_seconds &&
                      distance(anchor, event.location) <= def.radius_meters;
      bool joined = false;
      if (in_range && def.terminator.matches(event.class_label)) {
        it->terminators.push_back(member);
        joined = true;
      }
      for (std::size_t s = 0; in_range && s < def.supporting.size(); ++s) {
        if (def.supporting[s].matches(event.class_label)) {
          it->supporting[s].push_back(member);
          joined = true;
        }
      }
      if (joined) {
        if (auto detection = try_complete(runtime, *it, event.timestamp)) {
          result.detections.push_back(std::move(*detection));
          it = instances.erase(it);
          continue;
        }
      }
      ++it;
    }

    if (def.initiator.matches(event.class_label)) {
      OpenInstance inst;
      inst.definition_name = def.name;
      inst.initiator = member;
      inst.supporting.resize(def.supporting.size());
      inst.opened_at = event.timestamp;
      inst.deadline = event.timestamp + def.window_seconds;
      if (def.terminator.matches(event.class_label)) {
        inst.terminators.push_back(member);
        if (auto detection = try_complete(runtime, inst, event.timestamp)) {
          result.detections.push_back(std::move(*detection));
          continue;
        }
      }
      instances.push_back(std::move(inst));
    }
  }
  return result;
}

std::vector<OpenInstance> CepEngine::open_instances() const {
  std::vector<OpenInstance> out;
  for (const auto& runtime : runtimes_) {
    out.insert(out.end(), runtime.instances.begin(), runtime.instances.end());
  }
  return out;
}

std::size_t CepEngine::open_instance_count() const {
  std::size_t n = 0;
  for (const auto& runtime : runtimes_) n += runtime.instances.size();
  return n;
}

namespace {

OrderedJson member_to_json(const InstanceMember& m) {
  OrderedJson j;
  j["sequence"] = m.sequence;
  j["event"] = event_to_json(m.event);
  return j;
}

InstanceMember member_from_json(const Json& json, const std::string& path) {
  InstanceMember m;
  m.sequence = static_cast<std::uint64_t>(json_field::integer(json, "sequence", path));
  m.event = event_from_json(json_field::object(json, "event", path), path + ".event");
  return m;
}

constexpr std::string_view kStateFormat = "hakf-engine-state";

}  // namespace

EngineState CepEngine::snapshot() const {
  OrderedJson j;
  j["format"] = std::string(kStateFormat);
  j["version"] = kStateVersion;
  OrderedJson defs = OrderedJson::array();
  for (const auto& def : definitions_) defs.push_back(resolved_to_json(def));
  j["definitions"] = std::move(defs);
  j["markings"] = OrderedJson::parse(markings_.to_json_text());
  j["sequence"] = sequence_;
  if (last_key_) {
    j["last"] = {{"timestamp", last_key_->first}, {"eventId", last_key_->second}};
  } else {
    j["last"] = nullptr;
  }
  OrderedJson instances = OrderedJson::array();
  for (const auto& runtime : runtimes_) {
    for (const auto& inst : runtime.instances) {
      OrderedJson ij;
      ij["definition"] = inst.definition_name;
      ij["initiator"] = member_to_json(inst.initiator);
      OrderedJson terms = OrderedJson::array();
      for (const auto& m : inst.terminators) terms.push_back(member_to_json(m));
      ij["terminators"] = std::move(terms);
      OrderedJson sup = OrderedJson::array();
      for (const auto& slot : inst.supporting) {
        OrderedJson members = OrderedJson::array();
        for (const auto& m : slot) members.push_back(member_to_json(m));
        sup.push_back(std::move(members));
      }
      ij["supporting"] = std::move(sup);
      ij["openedAt"] = inst.opened_at;
      ij["deadline"] = inst.deadline;
      instances.push_back(std::move(ij));
    }
  }
  j["instances"] = std::move(instances);
  return EngineState{j.dump()};
}

CepEngine CepEngine::restore(const EngineState& state) {
  namespace f = json_field;
  const Json j = parse_json(state.bytes);
  f::expect_object(j, "");
  if (!j.contains("format") || j["format"] != kStateFormat || !j.contains("version") ||
      j["version"] != kStateVersion) {
    throw Error(ErrorCode::version_mismatch,
                "engine state is not format \"" + std::string(kStateFormat) + "\" version " +
                    std::to_string(kStateVersion));
  }
  std::vector<ResolvedDefinition> defs;
  const Json& dj = f::array(j, "definitions", "");
  for (std::size_t i = 0; i < dj.size(); ++i) {
    defs.push_back(resolved_from_json(dj[i], "definitions[" + std::to_string(i) + "]"));
  }
  MarkingSet markings = MarkingSet::from_json(f::array(j, "markings", ""));
  CepEngine engine(std::move(defs), std::move(markings));
  engine.sequence_ = static_cast<std::uint64_t>(f::integer(j, "sequence", ""));
  const Json& last = f::require(j, "last", "");
  if (!last.is_null()) {
    engine.last_key_ = std::make_pair(f::number(last, "timestamp", "last"),
                                      f::string(last, "eventId", "last"));
  }
  const Json& ij = f::array(j, "instances", "");
  for (std::size_t i = 0; i < ij.size(); ++i) {
    const std::string path = "instances[" + std::to_string(i) + "]";
    OpenInstance inst;
    inst.definition_name = f::string(ij[i], "definition", path);
    auto runtime = std::find_if(engine.runtimes_.begin(), engine.runtimes_.end(),
                                [&](const auto& r) { return r.definition.name == inst.definition_name; });
    if (runtime == engine.runtimes_.end()) {
      throw Error(ErrorCode::schema_violation,
                  path + ".definition: unknown definition \"" + inst.definition_name + "\"");
    }
    inst.initiator = member_from_json(f::object(ij[i], "initiator", path), path + ".initiator");
    const Json& terms = f::array(ij[i], "terminators", path);
    for (std::size_t k = 0; k < terms.size(); ++k) {
      inst.terminators.push_back(member_from_json(terms[k], path + ".terminators"));
    }
    const Json& sup = f::array(ij[i], "supporting", path);
    if (sup.size() != runtime->definition.supporting.size()) {
      throw Error(ErrorCode::schema_violation, path + ".supporting: wrong number of slots");
    }
    for (const auto& slot : sup) {
      std::vector<InstanceMember> members;
      if (!slot.is_array()) throw Error(ErrorCode::schema_violation, path + ".supporting: expected arrays");
      for (const auto& m : slot) members.push_back(member_from_json(m, path + ".supporting"));
      inst.supporting.push_back(std::move(members));
    }
    inst.opened_at = f::number(ij[i], "openedAt", path);
    inst.deadline = f::number(ij[i], "deadline", path);
    runtime->instances.push_back(std::move(inst));
  }
  return engine;
}

EngineState snapshot(const CepEngine& engine) { return engine.snapshot(); }

CepEngine restore(const EngineState& state) { return CepEngine::restore(state); }

}  // namespace hakf
