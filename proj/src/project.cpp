// SPDX-License-Identifier: Apache-2.0
#include "hakf/project.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <mutex>

namespace hakf {

namespace {

constexpr const char* kPaletteDoc = "palette.json";
constexpr const char* kGraphDoc = "graph.json";
constexpr const char* kMappingsDoc = "mappings.json";
constexpr const char* kDefinitionsDoc = "definitions.json";
constexpr const char* kMarkingsDoc = "markings.json";
constexpr const char* kDetectionLog = "detections.jsonl";

Timestamp wall_now() {
  using namespace std::chrono;
  return Timestamp(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

OrderedJson fragment_json(const LogicFragment& f) {
  OrderedJson j;
  j["text"] = f.text;
  j["checksum"] = f.checksum;
  j["sourceDefinition"] = f.source_definition;
  return j;
}

OrderedJson detection_entry_json(std::uint64_t sequence, int run, const Detection& d) {
  OrderedJson j;
  j["sequence"] = sequence;
  j["run"] = run;
  j["detection"] = detection_to_json(d);
  return j;
}

template <typename F>
auto load_doc(const std::string& file, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(ErrorCode::corrupt_store, "corrupt " + file + ": " + e.what());
  }
}

}  // namespace

Project::Project(const ProjectStore& store, std::string id) : store_(store), id_(std::move(id)) {
  store_.project_dir(id_);  // rejects unsafe ids
  load();
}

Project::~Project() {
  stopping_ = true;
  if (runner_.joinable()) runner_.join();
  hub_.close_all();
}

void Project::load() {
  store_.recover(id_);
  const fs::path dir = store_.project_dir(id_);

  palette_ = Palette("default");
  if (auto text = store_.read_document(id_, kPaletteDoc)) {
    palette_ = load_doc(kPaletteDoc, [&] { return deserialize_palette(*text); });
  }
  graph_ = KnowledgeGraph{id_, {palette_.name(), palette_.version()}, {}, {}};
  if (auto text = store_.read_document(id_, kGraphDoc)) {
    graph_ = load_doc(kGraphDoc, [&] { return deserialize(*text); });
  }
  if (auto text = store_.read_document(id_, kMappingsDoc)) {
    mapping_ = load_doc(kMappingsDoc, [&] { return ConceptMapping::from_json(parse_json(*text), palette_); });
  }
  if (auto text = store_.read_document(id_, kDefinitionsDoc)) {
    definitions_ = load_doc(kDefinitionsDoc, [&] {
      std::vector<DefinitionEntry> out;
      const Json j = parse_json(*text);
      if (!j.is_array()) throw Error(ErrorCode::schema_violation, "expected an array");
      for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string path = "[" + std::to_string(i) + "]";
        out.push_back({definition_from_json(json_field::object(j[i], "definition", path), path + ".definition"),
                       static_cast<int>(json_field::integer(j[i], "version", path))});
      }
      return out;
    });
  }
  if (auto text = store_.read_document(id_, kMarkingsDoc)) {
    MarkingSet markings = load_doc(kMarkingsDoc, [&] {
      const Json j = parse_json(*text);
      MarkingSet m = MarkingSet::from_json(json_field::array(j, "markings", ""));
      m.set_version(static_cast<std::uint64_t>(json_field::integer(j, "version", "")));
      return m;
    });
    tellability_.set_markings(std::move(markings));
  }
  for (const Json& line : load_doc(kDetectionLog, [&] { return store_.read_log(id_, kDetectionLog); })) {
    DetectionEntry entry = load_doc(kDetectionLog, [&] {
      return DetectionEntry{static_cast<std::uint64_t>(json_field::integer(line, "sequence", "")),
                            static_cast<int>(json_field::integer(line, "run", "")),
                            detection_from_json(json_field::object(line, "detection", ""))};
    });
    detection_sequence_ = std::max(detection_sequence_, entry.sequence);
    detections_.push_back(std::move(entry));
  }
  // A crash while appending the latest run's block leaves a prefix of it;
  // the run's own detection file is complete, so top the log up from it.
  const int latest = store_.next_run_number(id_) - 1;
  if (latest > 0) {
    const std::string run_detections = "runs/" + std::to_string(latest) + ".detections.jsonl";
    const bool complete = store_.read_document(id_, "runs/" + std::to_string(latest) + ".events.jsonl").has_value();
    if (complete && store_.read_document(id_, run_detections)) {
      const auto lines = load_doc(run_detections, [&] { return store_.read_log(id_, run_detections); });
      const auto logged = static_cast<std::size_t>(std::count_if(
          detections_.begin(), detections_.end(), [&](const DetectionEntry& e) { return e.run == latest; }));
      for (std::size_t i = logged; i < lines.size(); ++i) {
        DetectionEntry entry{++detection_sequence_, latest,
                             load_doc(run_detections, [&] { return detection_from_json(lines[i]); })};
        store_.append_log(id_, kDetectionLog, detection_entry_json(entry.sequence, entry.run, entry.detection).dump());
        detections_.push_back(std::move(entry));
      }
    }
  }
  // Frequencies resume from the latest completed run.
  if (latest > 0) {
    for (const Json& line : store_.read_log(id_, "runs/" + std::to_string(latest) + ".events.jsonl")) {
      try {
        tellability_.record(event_record_from_json(line).event);
      } catch (const Error&) {
        break;
      }
    }
  }
}

RunConfig Project::config_locked() const {
  RunConfig config;
  config.palette = palette_;
  config.mapping = mapping_;
  for (const auto& entry : definitions_) config.definitions.push_back(entry.definition);
  config.markings = tellability_.markings();
  return config;
}

void Project::persist_markings_locked() {
  OrderedJson j;
  j["version"] = tellability_.markings().version();
  OrderedJson list = OrderedJson::array();
  for (const auto& m : tellability_.markings().all()) list.push_back(marking_to_json(m));
  j["markings"] = std::move(list);
  store_.write_document(id_, kMarkingsDoc, j.dump(2) + "\n");
}

void Project::persist_definitions_locked() {
  OrderedJson list = OrderedJson::array();
  for (const auto& entry : definitions_) {
    OrderedJson j;
    j["version"] = entry.version;
    j["definition"] = definition_to_json(entry.definition);
    list.push_back(std::move(j));
  }
  store_.write_document(id_, kDefinitionsDoc, list.dump(2) + "\n");
}

void Project::publish_markings_locked() {
  OrderedJson payload;
  payload["version"] = tellability_.markings().version();
  OrderedJson list = OrderedJson::array();
  for (const auto& m : tellability_.markings().all()) list.push_back(marking_to_json(m));
  payload["markings"] = std::move(list);
  hub_.publish(StreamKind::marking_changed, std::move(payload));
}

void Project::persist_config_locked(const RunConfig& config) {
  if (!(config.palette == palette_)) {
    store_.write_document(id_, kPaletteDoc, serialize_palette(config.palette));
    palette_ = config.palette;
  }
  if (!(config.mapping == mapping_)) {
    store_.write_document(id_, kMappingsDoc, config.mapping.to_json().dump(2) + "\n");
    mapping_ = config.mapping;
  }
  std::vector<std::size_t> changed;
  for (const auto& def : config.definitions) {
    auto it = std::find_if(definitions_.begin(), definitions_.end(),
                           [&](const DefinitionEntry& e) { return e.definition.name == def.name; });
    if (it == definitions_.end()) {
      definitions_.push_back({def, 1});
      changed.push_back(definitions_.size() - 1);
    } else if (!(it->definition == def)) {
      it->definition = def;
      ++it->version;
      changed.push_back(static_cast<std::size_t>(it - definitions_.begin()));
    }
  }
  if (!changed.empty()) {
    persist_definitions_locked();
    for (std::size_t i : changed) hub_.publish(StreamKind::definition_changed, definition_entry_json(definitions_[i]));
  }
  if (!(config.markings == tellability_.markings())) {
    tellability_.set_markings(config.markings);
    persist_markings_locked();
    publish_markings_locked();
  }
}

OrderedJson Project::graph_json() const {
  std::shared_lock lock(mutex_);
  return graph_to_json(graph_);
}

OrderedJson Project::put_graph(const Json& body) {
  std::unique_lock lock(mutex_);
  KnowledgeGraph graph = graph_from_json(body);
  graph.project_id = id_;
  validate_graph(graph, palette_);
  store_.write_document(id_, kGraphDoc, serialize(graph));
  graph_ = std::move(graph);
  return graph_to_json(graph_);
}

OrderedJson Project::palette_json() const {
  std::shared_lock lock(mutex_);
  return palette_to_json(palette_);
}

OrderedJson Project::add_concept(const Json& body) {
  std::unique_lock lock(mutex_);
  json_field::expect_object(body, "concept");
  Concept c;
  c.name = json_field::string(body, "name", "concept");
  if (body.contains("parent") && !body["parent"].is_null()) c.parent = json_field::string(body, "parent", "concept");
  if (body.contains("propertySchema")) {
    const Json& schema = json_field::array(body, "propertySchema", "concept");
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const std::string path = "concept.propertySchema[" + std::to_string(i) + "]";
      c.property_schema.push_back({json_field::string(schema[i], "key", path),
                                   value_kind_from_string(json_field::string(schema[i], "valueKind", path))});
    }
  }
  Palette next = palette_.with_concept(std::move(c));
  store_.write_document(id_, kPaletteDoc, serialize_palette(next));
  palette_ = std::move(next);
  return palette_to_json(palette_);
}

OrderedJson Project::mappings_json() const {
  std::shared_lock lock(mutex_);
  return mapping_.to_json();
}

OrderedJson Project::put_mappings(const Json& body) {
  std::unique_lock lock(mutex_);
  ConceptMapping next = ConceptMapping::from_json(body, palette_);
  store_.write_document(id_, kMappingsDoc, next.to_json().dump(2) + "\n");
  mapping_ = std::move(next);
  return mapping_.to_json();
}

OrderedJson Project::definition_entry_json(const DefinitionEntry& entry) const {
  OrderedJson j;
  j["definition"] = definition_to_json(entry.definition);
  j["version"] = entry.version;
  try {
    ConceptContext ctx{palette_, mapping_};
    j["fragment"] = fragment_json(compile(entry.definition, &ctx));
  } catch (const Error& e) {
    j["fragment"] = nullptr;
    j["error"] = e.what();
  }
  return j;
}

OrderedJson Project::definitions_json() const {
  std::shared_lock lock(mutex_);
  OrderedJson list = OrderedJson::array();
  for (const auto& entry : definitions_) list.push_back(definition_entry_json(entry));
  return list;
}

OrderedJson Project::add_definition(const Json& body) {
  std::unique_lock lock(mutex_);
  ComplexEventDefinition def = definition_from_json(body);
  ConceptContext ctx{palette_, mapping_};
  compile(def, &ctx);  // full validation, including concept expansion

  std::vector<DefinitionEntry> next = definitions_;
  auto it = std::find_if(next.begin(), next.end(),
                         [&](const DefinitionEntry& e) { return e.definition.name == def.name; });
  std::size_t index;
  if (it == next.end()) {
    next.push_back({def, 1});
    index = next.size() - 1;
  } else {
    if (!(it->definition == def)) ++it->version;
    it->definition = def;
    index = static_cast<std::size_t>(it - next.begin());
  }
  std::vector<ComplexEventDefinition> all;
  for (const auto& e : next) all.push_back(e.definition);
  auto violations = validate(all);
  if (!violations.empty()) throw ValidationError(ErrorCode::invalid_definition, std::move(violations));

  definitions_ = std::move(next);
  persist_definitions_locked();
  OrderedJson out = definition_entry_json(definitions_[index]);
  hub_.publish(StreamKind::definition_changed, out);
  return out;
}

OrderedJson Project::markings_json() const {
  std::shared_lock lock(mutex_);
  OrderedJson j;
  j["version"] = tellability_.markings().version();
  OrderedJson list = OrderedJson::array();
  for (const auto& m : tellability_.markings().all()) list.push_back(marking_to_json(m));
  j["markings"] = std::move(list);
  return j;
}

OrderedJson Project::mark_regular(const std::string& feed_id, const Json& body) {
  std::unique_lock lock(mutex_);
  json_field::expect_object(body, "marking");
  RegularMarking m;
  m.feed_id = feed_id;
  m.class_label = json_field::string(body, "classLabel", "marking");
  m.context = body.contains("context") ? context_from_string(json_field::string(body, "context", "marking"))
                                       : Context::any;
  m.marked_by = body.contains("markedBy") ? json_field::string(body, "markedBy", "marking") : "operator";
  m.marked_at = wall_now();
  if (!is_safe_id(feed_id) || m.class_label.empty()) {
    throw Error(ErrorCode::schema_violation, "marking: feed and classLabel must be non-empty identifiers");
  }

  MarkingSet next = tellability_.markings();
  next.mark(m);
  const MarkingSet previous = tellability_.markings();
  tellability_.set_markings(next);
  try {
    persist_markings_locked();
  } catch (...) {
    tellability_.set_markings(previous);
    throw;
  }
  if (active_) active_->engine->set_markings(next);
  publish_markings_locked();
  OrderedJson out;
  out["version"] = next.version();
  out["marking"] = marking_to_json(m);
  return out;
}

OrderedJson Project::unmark_regular(const std::string& feed_id, const std::string& class_label,
                                    Context context) {
  std::unique_lock lock(mutex_);
  MarkingSet next = tellability_.markings();
  next.unmark(feed_id, class_label, context);
  const MarkingSet previous = tellability_.markings();
  tellability_.set_markings(next);
  try {
    persist_markings_locked();
  } catch (...) {
    tellability_.set_markings(previous);
    throw;
  }
  if (active_) active_->engine->set_markings(next);
  publish_markings_locked();
  OrderedJson out;
  out["version"] = next.version();
  return out;
}

OrderedJson Project::frequencies(const std::string& feed_id, double window_seconds, Context context) const {
  std::shared_lock lock(mutex_);
  FrequencyTable table = tellability_.frequency_table(feed_id, window_seconds);
  OrderedJson j;
  j["feedId"] = feed_id;
  j["windowSeconds"] = window_seconds;
  j["now"] = table.now;
  j["context"] = std::string(to_string(context));
  j["classes"] = frequency_to_json(table, context);
  OrderedJson regular = OrderedJson::array();
  for (const auto& m : tellability_.markings().all()) {
    if (m.feed_id == feed_id) regular.push_back(marking_to_json(m));
  }
  j["regular"] = std::move(regular);
  return j;
}

OrderedJson Project::detections_since(std::uint64_t since) const {
  std::shared_lock lock(mutex_);
  OrderedJson j;
  j["lastSequence"] = detection_sequence_;
  OrderedJson list = OrderedJson::array();
  for (const auto& e : detections_) {
    if (e.sequence > since) list.push_back(detection_entry_json(e.sequence, e.run, e.detection));
  }
  j["detections"] = std::move(list);
  return j;
}

std::shared_ptr<const Project::RunArchive> Project::archive(int run) const {
  std::lock_guard lock(archive_mutex_);
  if (auto it = archives_.find(run); it != archives_.end()) return it->second;
  auto loaded = std::make_shared<RunArchive>();
  const std::string prefix = "runs/" + std::to_string(run);
  if (auto text = store_.read_document(id_, prefix + ".config.json")) {
    const Json config = parse_json(*text);
    const Json& defs = json_field::array(config, "definitions", "config");
    for (std::size_t i = 0; i < defs.size(); ++i) {
      loaded->definitions.push_back(resolved_from_json(defs[i], "config.definitions[" + std::to_string(i) + "]"));
    }
  }
  const bool complete = store_.read_document(id_, prefix + ".events.jsonl").has_value();
  for (const Json& line : store_.read_log(id_, prefix + ".events.jsonl")) {
    loaded->log.append(event_record_from_json(line));
  }
  // Only cache finished runs; an unfinished one may still be written.
  if (complete) archives_[run] = loaded;
  return loaded;
}

OrderedJson Project::explanation(const std::string& detection_id, std::optional<int> run) const {
  std::shared_lock lock(mutex_);
  const DetectionEntry* found = nullptr;
  for (auto it = detections_.rbegin(); it != detections_.rend(); ++it) {
    if (it->detection.id == detection_id && (!run || it->run == *run)) {
      found = &*it;
      break;
    }
  }
  if (found == nullptr) {
    throw Error(ErrorCode::unknown_detection, "unknown detection \"" + detection_id + "\"");
  }
  Explanation ex;
  if (active_ && active_->number == found->run) {
    EventLog log(active_->output.records);
    ex = explain(found->detection, log, active_->definitions);
  } else {
    auto archived = archive(found->run);
    ex = explain(found->detection, archived->log, archived->definitions);
  }
  OrderedJson j = explanation_to_json(ex);
  j["run"] = found->run;
  return j;
}

OrderedJson Project::suppression(const std::string& event_id, std::optional<int> run) const {
  std::shared_lock lock(mutex_);
  std::optional<SuppressionTrace> trace;
  int which = 0;
  if (active_ && (!run || *run == active_->number)) {
    which = active_->number;
    EventLog log(active_->output.records);
    trace = explain_suppression(event_id, log);
  } else {
    which = run ? *run : store_.next_run_number(id_) - 1;
    if (which <= 0) throw Error(ErrorCode::unknown_event, "unknown event \"" + event_id + "\"");
    trace = explain_suppression(event_id, archive(which)->log);
  }
  OrderedJson j;
  j["eventId"] = event_id;
  j["run"] = which;
  j["suppressed"] = trace.has_value();
  if (trace) j["trace"] = suppression_trace_to_json(*trace);
  return j;
}

void Project::step_locked(ActiveRun& run) {
  const SimpleEvent& e = run.events[run.next++];
  IngestResult r = run.engine->ingest(e);
  tellability_.record(e);

  OrderedJson ev = event_record_to_json(r.record);
  ev["run"] = run.number;
  hub_.publish(StreamKind::simple_event, std::move(ev));

  const std::int64_t count = ++run.class_counts[{e.feed_id, e.class_label}];
  OrderedJson freq;
  freq["run"] = run.number;
  freq["feedId"] = e.feed_id;
  freq["classLabel"] = e.class_label;
  freq["context"] = std::string(to_string(e.context));
  freq["count"] = count;
  freq["timestamp"] = e.timestamp;
  freq["regular"] = r.record.suppressed_by.has_value();
  hub_.publish(StreamKind::frequency_update, std::move(freq));

  for (const Detection& d : r.detections) {
    detections_.push_back({++detection_sequence_, run.number, d});
    hub_.publish(StreamKind::detection, detection_entry_json(detection_sequence_, run.number, d));
    run.output.detections.push_back(d);
  }
  run.output.records.push_back(std::move(r.record));
}

OrderedJson Project::finish_locked(ActiveRun& run) {
  // The run is over whether or not persisting it succeeds.
  const std::unique_ptr<ActiveRun> done = std::move(active_);
  std::string events;
  for (const auto& rec : run.output.records) {
    events += event_record_to_json(rec).dump();
    events += '\n';
  }
  // Detections first: an events file marks the run as complete.
  const std::string prefix = "runs/" + std::to_string(run.number);
  store_.write_document(id_, prefix + ".detections.jsonl", detections_to_jsonl(run.output.detections));
  store_.write_document(id_, prefix + ".events.jsonl", events);
  std::string block;
  for (const auto& e : detections_) {
    if (e.run != run.number) continue;
    if (!block.empty()) block += '\n';
    block += detection_entry_json(e.sequence, e.run, e.detection).dump();
  }
  if (!block.empty()) store_.append_log(id_, kDetectionLog, block);

  OrderedJson summary = run_summary(run.scenario, run.seed, run.definitions, run.output);
  summary["run"] = run.number;
  summary["status"] = "finished";
  return summary;
}

OrderedJson Project::run_scenario(const Json& body, const fs::path& base_dir) {
  std::unique_lock lock(mutex_);
  if (active_) throw Error(ErrorCode::busy, "a scenario run is already active in project \"" + id_ + "\"");
  if (runner_.joinable()) runner_.join();

  json_field::expect_object(body, "run");
  std::string text;
  if (body.contains("inline")) {
    const Json& inl = body["inline"];
    text = inl.is_string() ? inl.get<std::string>() : inl.dump();
  } else {
    fs::path path = json_field::string(body, "scenarioPath", "run");
    if (path.is_relative()) path = base_dir / path;
    auto read = read_file(path);
    if (!read) throw Error(ErrorCode::io_error, "cannot read scenario " + path.string());
    text = std::move(*read);
  }
  Scenario scenario = parse_scenario(text);
  std::uint64_t seed = scenario.seed;
  if (body.contains("seed")) {
    const Json& s = body["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      throw Error(ErrorCode::schema_violation, "run.seed: must be a non-negative integer");
    }
    seed = s.get<std::uint64_t>();
  }
  double pace = 0.0;
  if (body.contains("pace")) pace = json_field::number(body, "pace", "run");

  RunConfig config = apply_scenario_config(scenario, config_locked());
  std::vector<ResolvedDefinition> resolved = resolve_enabled(config);
  std::vector<SimpleEvent> events = generate(scenario, seed);
  persist_config_locked(config);

  auto run = std::make_unique<ActiveRun>();
  run->number = store_.next_run_number(id_);
  run->scenario = std::move(scenario);
  run->seed = seed;
  run->definitions = resolved;
  run->engine = std::make_unique<CepEngine>(resolved, tellability_.markings());
  run->events = std::move(events);

  OrderedJson config_doc;
  config_doc["scenario"] = scenario_to_json(run->scenario);
  config_doc["seed"] = seed;
  OrderedJson defs = OrderedJson::array();
  for (const auto& d : resolved) defs.push_back(resolved_to_json(d));
  config_doc["definitions"] = std::move(defs);
  store_.write_document(id_, "runs/" + std::to_string(run->number) + ".config.json", config_doc.dump(2) + "\n");

  tellability_.reset_feeds();
  active_ = std::move(run);

  if (pace <= 0.0) {
    while (active_->next < active_->events.size()) step_locked(*active_);
    return finish_locked(*active_);
  }
  OrderedJson started;
  started["run"] = active_->number;
  started["status"] = "started";
  started["events"] = active_->events.size();
  runner_ = std::thread(&Project::run_paced, this, pace);
  return started;
}

void Project::run_paced(double pace) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  while (!stopping_) {
    clock::time_point due;
    {
      std::unique_lock lock(mutex_);
      if (!active_) return;
      if (active_->next >= active_->events.size()) {
        try {
          finish_locked(*active_);
        } catch (const std::exception& e) {
          std::cerr << "hakf: run in project " << id_ << " failed to persist: " << e.what() << "\n";
        }
        return;
      }
      const double t = active_->events[active_->next].timestamp;
      due = start + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(t / pace));
    }
    const auto now = clock::now();
    if (now < due) {
      std::this_thread::sleep_for(std::min<clock::duration>(due - now, std::chrono::milliseconds(100)));
      continue;
    }
    std::unique_lock lock(mutex_);
    if (active_ && active_->next < active_->events.size()) step_locked(*active_);
  }
}

void Project::wait_idle() {
  for (;;) {
    {
      std::shared_lock lock(mutex_);
      if (!active_) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  std::unique_lock lock(mutex_);
  if (runner_.joinable() && runner_.get_id() != std::this_thread::get_id()) runner_.join();
}

}  // namespace hakf
