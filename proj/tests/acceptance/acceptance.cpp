// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "hakf/explainability.hpp"
#include "hakf/headless.hpp"
#include "hakf/project.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace hakf;
using hakf::testing::Rng;
using hakf::testing::sample;
using hakf::testing::slurp;
using hakf::testing::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome out;
  const auto start = Clock::now();
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (!out.pass) ++g_failures;
  std::printf("%s  %-28s %s (%.2fs)\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

double elapsed(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

ComplexEventDefinition load_definition(const std::string& name) {
  return definition_from_json(parse_json(slurp(sample(name))));
}

// IED: scripted explosion and siren, one detection, p = 0.72.
Outcome ied_scenario() {
  const auto start = Clock::now();
  const Scenario scenario = parse_scenario(slurp(sample("ied.scenario.json")));
  RunConfig config = apply_scenario_config(scenario, RunConfig{});
  const auto defs = resolve_enabled(config);
  const auto events = generate(scenario);
  CepEngine engine(defs, config.markings);
  const RunOutput out = run_events(engine, events);
  const double secs = elapsed(start);

  if (out.detections.size() != 1) return {false, std::to_string(out.detections.size()) + " detections, want 1"};
  const Detection& d = out.detections[0];
  EventLog log(out.records);
  const auto* init = log.find(d.constituents.at(0).event_id);
  const auto* term = log.find(d.constituents.at(1).event_id);
  const bool roles = d.constituents.size() == 2 && d.constituents[0].role == Role::initiator &&
                     d.constituents[1].role == Role::terminator && init && term &&
                     init->event.class_label == "explosion" && term->event.class_label == "siren";
  const bool ok = d.interval_start == 10.0 && d.interval_end == 60.0 && std::abs(d.probability - 0.72) <= 1e-9 &&
                  roles && secs < 1.0;
  return {ok, "interval [" + fmt(d.interval_start) + "," + fmt(d.interval_end) + "] p=" + fmt(d.probability) +
                  (roles ? " roles ok" : " roles WRONG") + " runtime " + fmt(secs) + "s"};
}

// Suppression: shotput and hammer_throw marked regular on the nightclub feed.
Outcome suppression() {
  const Scenario scenario = parse_scenario(slurp(sample("nightclub.scenario.json")));
  RunConfig base;
  for (const char* label : {"shotput", "hammer_throw"}) {
    base.markings.mark({"nightclub", label, Context::any, "operator", Timestamp(0)});
  }
  RunConfig config = apply_scenario_config(scenario, base);
  const auto defs = resolve_enabled(config);
  const auto events = generate(scenario);
  CepEngine engine(defs, config.markings);

  std::size_t open_seen = 0;
  std::size_t attributable = 0;
  std::size_t logged_marked = 0;
  std::size_t detections = 0;
  EventLog log;
  for (const auto& e : events) {
    IngestResult r = engine.ingest(e);
    log.append(r.record);
    for (const auto& inst : engine.open_instances()) {
      const auto& label = inst.initiator.event.class_label;
      if (label == "shotput" || label == "hammer_throw") ++open_seen;
    }
    for (const auto& d : r.detections) {
      ++detections;
      for (const auto& c : d.constituents) {
        const auto& label = log.find(c.event_id)->event.class_label;
        if (label == "shotput" || label == "hammer_throw") ++attributable;
      }
    }
  }
  std::size_t marked_in_stream = 0;
  for (const auto& e : events) {
    if (e.class_label == "shotput" || e.class_label == "hammer_throw") ++marked_in_stream;
  }
  for (const auto& rec : log.records()) {
    const auto& label = rec.event.class_label;
    if ((label == "shotput" || label == "hammer_throw") && rec.suppressed_by) ++logged_marked;
  }

  // Same flow through the gateway project service.
  TempDir dir("hakf-accept");
  ProjectStore store(dir.path());
  Project project(store, "nightclub");
  project.mark_regular("nightclub", Json{{"classLabel", "shotput"}});
  project.mark_regular("nightclub", Json{{"classLabel", "hammer_throw"}});
  const OrderedJson summary =
      project.run_scenario(Json{{"scenarioPath", sample("nightclub.scenario.json").string()}}, dir.path());
  const std::size_t project_logged = store.read_log("nightclub", "runs/1.events.jsonl").size();

  const bool ok = open_seen == 0 && attributable == 0 && detections == 0 && logged_marked > 0 &&
                  logged_marked == marked_in_stream && log.size() == events.size() &&
                  summary["total"] == 0 && project_logged == events.size() &&
                  summary["suppressed"].get<std::size_t>() == logged_marked;
  return {ok, std::to_string(events.size()) + " events over " + fmt(scenario.duration_seconds) + "s, " +
                  std::to_string(logged_marked) + " marked events logged, open instances " +
                  std::to_string(open_seen) + ", detections " + std::to_string(detections) + ", gateway total " +
                  summary["total"].dump()};
}

// Streaming engine vs batch oracle.
Outcome oracle_equivalence() {
  const auto start = Clock::now();
  Rng rng(20240611);
  const std::vector<std::string> labels = {"a", "b", "c", "d", "e", "f", "g", "h"};
  std::size_t mismatches = 0;
  std::size_t total = 0;
  std::size_t max_events = 0;
  for (int round = 0; round < 200; ++round) {
    std::vector<ResolvedDefinition> defs;
    const auto n = rng.range(1, 3);
    for (std::int64_t i = 0; i < n; ++i) {
      defs.push_back(resolve(hakf::testing::random_definition(rng, "D" + std::to_string(i), labels)));
    }
    const auto events = hakf::testing::random_stream(rng, static_cast<int>(rng.range(0, 200)), labels,
                                                     {"f1", "f2", "f3"});
    max_events = std::max(max_events, events.size());
    MarkingSet markings;
    if (rng.chance(25)) markings.mark({"f1", rng.pick(labels), Context::any, "op", Timestamp(0)});
    const auto streamed = hakf::testing::stream_all(defs, events, markings);
    if (streamed != match_brute(defs, events, markings)) ++mismatches;
    total += streamed.size();
  }
  const double secs = elapsed(start);
  return {mismatches == 0 && secs < 60.0 && total > 0,
          "200 streams (max " + std::to_string(max_events) + " events), " + std::to_string(total) +
              " detections, " + std::to_string(mismatches) + " mismatches, runtime " + fmt(secs) + "s"};
}

ProbabilisticFact pfact(double p, std::string label, double t, double x, double y) {
  return {p, {std::move(label), t, {x, y}}};
}

// Engine probabilities vs exact possible-worlds evaluation.
Outcome probability_oracle() {
  const ComplexEventDefinition ied = load_definition("ied.definition.json");
  const LogicFragment f = compile(ied);
  ComplexEventDefinition single = ied;
  single.name = "Boom";
  single.constituents[1].matcher = "explosion";
  const double p_single = evaluate_exact(compile(single), {pfact(0.5, "explosion", 10, 0, 0)}, "boom");
  const double p_conj =
      evaluate_exact(f, {pfact(0.9, "explosion", 10, 0, 0), pfact(0.8, "siren", 60, 100, 0)}, "ied");
  const double p_or = evaluate_exact(
      f, {pfact(0.9, "explosion", 10, 0, 0), pfact(0.8, "siren", 60, 100, 0), pfact(0.5, "siren", 90, 0, 200)},
      "ied");
  const bool hand = std::abs(p_single - 0.5) <= 1e-9 && std::abs(p_conj - 0.72) <= 1e-9 &&
                    std::abs(p_or - 0.81) <= 1e-9;

  Rng rng(77);
  const std::vector<std::string> labels = {"a", "b", "c", "d", "e"};
  int cases = 0;
  int worst_facts = 0;
  double worst = 0.0;
  for (int attempt = 0; attempt < 20000 && cases < 100; ++attempt) {
    const auto def = resolve(hakf::testing::random_definition(rng, "P", labels));
    const auto events = hakf::testing::random_stream(rng, static_cast<int>(rng.range(2, 10)), labels);
    for (const auto& d : hakf::testing::stream_all({def}, events)) {
      if (cases >= 100) break;
      const FactSet facts = hakf::testing::detection_facts(d, events);
      worst_facts = std::max(worst_facts, static_cast<int>(facts.size()));
      worst = std::max(worst, std::abs(evaluate_exact(compile(def), facts, head_atom(d.definition_name)) - d.probability));
      ++cases;
    }
  }
  const bool ok = hand && cases == 100 && worst <= 1e-9 && worst_facts <= 10;
  return {ok, "hand cases " + fmt(p_single) + "/" + fmt(p_conj) + "/" + fmt(p_or) + ", " + std::to_string(cases) +
                  " random cases (<=" + std::to_string(worst_facts) + " facts), max |diff| " + fmt(worst)};
}

Outcome graph_round_trip() {
  Rng rng(99);
  int round_trip_failures = 0;
  for (int i = 0; i < 100; ++i) {
    const Palette p = hakf::testing::random_palette(rng, static_cast<int>(rng.range(1, 10)));
    const KnowledgeGraph g = hakf::testing::random_graph(rng, p, static_cast<int>(rng.range(0, 25)),
                                                         static_cast<int>(rng.range(0, 25)));
    const std::string bytes = serialize(g);
    const KnowledgeGraph back = deserialize(bytes);
    if (!(back == g) || serialize(back) != bytes) ++round_trip_failures;
  }
  int merge_failures = 0;
  for (int i = 0; i < 50; ++i) {
    const Palette p = hakf::testing::random_palette(rng, static_cast<int>(rng.range(1, 8)));
    const KnowledgeGraph local = hakf::testing::random_graph(rng, p, static_cast<int>(rng.range(0, 15)),
                                                             static_cast<int>(rng.range(0, 15)), "l");
    const KnowledgeGraph remote = hakf::testing::random_graph(rng, p, static_cast<int>(rng.range(0, 15)),
                                                              static_cast<int>(rng.range(0, 15)), "r");
    const KnowledgeGraph once = merge(local, p, remote, p, "partner");
    if (!(merge(once, p, remote, p, "partner") == once)) ++merge_failures;
  }
  return {round_trip_failures == 0 && merge_failures == 0,
          "100 graphs, " + std::to_string(round_trip_failures) + " round-trip failures; 50 merges, " +
              std::to_string(merge_failures) + " not idempotent"};
}

Outcome compiler_round_trip() {
  Rng rng(4242);
  const std::vector<std::string> labels = {"explosion", "siren", "gunshot", "shout", "glass_break", "engine", "alarm"};
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    const auto def = hakf::testing::random_definition(rng, "Def" + std::to_string(i), labels);
    const LogicFragment f = compile(def);
    if (fragment::render(parse_fragment(f.text)) != f.text) ++failures;
  }
  const std::string golden = slurp(std::filesystem::path(HAKF_SOURCE_DIR) / "tests" / "golden" / "ied.pl");
  const bool golden_ok = fragment_file_text(compile(load_definition("ied.definition.json"))) == golden;
  return {failures == 0 && golden_ok,
          "100 definitions, " + std::to_string(failures) + " re-render mismatches; golden " +
              (golden_ok ? "matches" : "DIFFERS")};
}

Outcome determinism() {
  TempDir dir("hakf-accept");
  std::ostringstream out, err;
  bool ok = true;
  std::string detail;
  for (const char* name : {"nightclub.scenario.json", "ied.scenario.json"}) {
    const int a = run_headless(sample(name), std::nullopt, dir / "a.jsonl", out, err);
    const int b = run_headless(sample(name), std::nullopt, dir / "b.jsonl", out, err);
    const std::string x = slurp(dir / "a.jsonl");
    const bool same = a == 0 && b == 0 && !x.empty() && x == slurp(dir / "b.jsonl");
    ok = ok && same;
    detail += std::string(name) + ": " + std::to_string(std::count(x.begin(), x.end(), '\n')) + " lines " +
              (same ? "identical" : "DIFFER") + "; ";
  }
  return {ok, detail};
}

// ---- crash consistency ----------------------------------------------------

using Mutation = std::function<void(Project&)>;

std::vector<Mutation> random_mutations(Rng& rng) {
  static const std::vector<std::string> feeds = {"nightclub", "mic_2", "seismic_1"};
  static const std::vector<std::string> classes = {"shotput", "hammer_throw", "siren", "explosion", "horn"};
  std::vector<Mutation> ops;
  const auto n = rng.range(3, 10);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto kind = rng.range(0, 6);
    const std::string feed = rng.pick(feeds);
    const std::string label = rng.pick(classes);
    const int k = static_cast<int>(rng.range(0, 3));
    switch (kind) {
      case 0:
        ops.push_back([=](Project& p) { p.mark_regular(feed, Json{{"classLabel", label}}); });
        break;
      case 1:
        ops.push_back([=](Project& p) { p.unmark_regular(feed, label, Context::any); });
        break;
      case 2: {
        Rng local(static_cast<std::uint64_t>(rng.range(0, 1 << 30)));
        const auto def = hakf::testing::random_definition(local, "D" + std::to_string(k), classes);
        const std::string body = definition_to_json(def).dump();
        ops.push_back([=](Project& p) { p.add_definition(Json::parse(body)); });
        break;
      }
      case 3:
        ops.push_back([=](Project& p) { p.add_concept(Json{{"name", "C" + std::to_string(k)}}); });
        break;
      case 4: {
        Rng local(static_cast<std::uint64_t>(rng.range(0, 1 << 30)));
        const std::string body =
            serialize(hakf::testing::random_graph(local, Palette("default"), static_cast<int>(local.range(0, 6)),
                                                  static_cast<int>(local.range(0, 6))));
        ops.push_back([=](Project& p) { p.put_graph(Json::parse(body)); });
        break;
      }
      default: {
        const std::string name = rng.chance(50) ? "ied.scenario.json" : "nightclub.scenario.json";
        const auto seed = rng.range(0, 1000);
        ops.push_back([=](Project& p) {
          p.run_scenario(Json{{"scenarioPath", sample(name).string()}, {"seed", seed}}, ".");
        });
      }
    }
  }
  return ops;
}

void apply_all(const ProjectStore& store, const std::vector<Mutation>& ops) {
  Project project(store, "p");
  for (const auto& op : ops) {
    try {
      op(project);
    } catch (const Error&) {
      // Rejected mutations are part of the workload.
    }
  }
}

// Empty string when every file in the project parses completely.
std::string audit(const ProjectStore& store) {
  const auto dir = store.project_dir("p");
  if (!std::filesystem::exists(dir)) return "";
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto& path = entry.path();
    const std::string text = slurp(path);
    const std::string rel = std::filesystem::relative(path, dir).string();
    if (path.extension() == ".tmp") return "leftover " + rel;
    try {
      if (path.extension() == ".json") {
        parse_json(text);
      } else if (path.extension() == ".jsonl") {
        if (!text.empty() && text.back() != '\n') return "unterminated line in " + rel;
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) parse_json(line);
      }
    } catch (const Error& e) {
      return "partial JSON in " + rel + ": " + e.what();
    }
  }
  // Completed runs must be fully reflected in the detection log.
  const auto log = store.read_log("p", "detections.jsonl");
  for (int run = 1; run < store.next_run_number("p"); ++run) {
    const std::string prefix = "runs/" + std::to_string(run);
    if (!store.read_document("p", prefix + ".events.jsonl")) continue;
    const auto expected = store.read_log("p", prefix + ".detections.jsonl");
    std::vector<Json> logged;
    for (const auto& line : log) {
      if (line["run"] == run) logged.push_back(line["detection"]);
    }
    if (logged != expected) return "detection log disagrees with run " + std::to_string(run);
  }
  std::uint64_t last = 0;
  for (const auto& line : log) {
    const auto seq = line["sequence"].get<std::uint64_t>();
    if (seq <= last) return "detection sequence not increasing";
    last = seq;
  }
  return "";
}

Outcome crash_consistency() {
  Rng rng(8080);
  int recovered = 0;
  int killed = 0;
  std::string first_problem;
  for (int seq = 0; seq < 50; ++seq) {
    const auto ops = random_mutations(rng);

    // Dry run to count the durable-write points this sequence reaches.
    int points = 0;
    {
      TempDir dry("hakf-dry");
      ProjectStore store(dry.path(), [&](std::string_view) { ++points; });
      apply_all(store, ops);
    }
    const int kill_at = points > 0 ? static_cast<int>(rng.range(1, points)) : 1;

    TempDir dir("hakf-crash");
    std::fflush(nullptr);
    const pid_t child = ::fork();
    if (child == 0) {
      int seen = 0;
      ProjectStore store(dir.path(), [&](std::string_view) {
        if (++seen == kill_at) ::_exit(42);
      });
      apply_all(store, ops);
      ::_exit(0);
    }
    int status = 0;
    ::waitpid(child, &status, 0);
    if (WIFEXITED(status) && WEXITSTATUS(status) == 42) ++killed;

    std::string problem;
    try {
      ProjectStore store(dir.path());
      { Project reopened(store, "p"); }
      problem = audit(store);
      if (problem.empty()) {
        // A second recovery must be a no-op.
        Project again(store, "p");
        const std::string before = again.detections_since(0).dump();
        Project third(store, "p");
        if (third.detections_since(0).dump() != before) problem = "recovery not idempotent";
      }
    } catch (const std::exception& e) {
      problem = std::string("recovery failed: ") + e.what();
    }
    if (problem.empty()) {
      ++recovered;
    } else if (first_problem.empty()) {
      first_problem = "sequence " + std::to_string(seq) + ": " + problem;
    }
  }
  return {recovered == 50 && killed > 0,
          "50 sequences, " + std::to_string(killed) + " killed mid-write, " + std::to_string(recovered) +
              " recovered cleanly" + (first_problem.empty() ? "" : "; " + first_problem)};
}

}  // namespace

int main() {
  report("ied-scenario", ied_scenario);
  report("suppression", suppression);
  report("oracle-equivalence", oracle_equivalence);
  report("probability-oracle", probability_oracle);
  report("graph-round-trip", graph_round_trip);
  report("compiler-round-trip", compiler_round_trip);
  report("determinism", determinism);
  report("crash-consistency", crash_consistency);
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
