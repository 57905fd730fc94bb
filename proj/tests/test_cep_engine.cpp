// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "hakf/cep_engine.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace hakf;
using hakf::testing::Rng;

namespace {

SimpleEvent ev(std::string id, std::string label, double conf, double t, double x, double y,
               std::string feed = "f1") {
  SimpleEvent e;
  e.id = std::move(id);
  e.feed_id = std::move(feed);
  e.modality = Modality::audio;
  e.class_label = std::move(label);
  e.confidence = conf;
  e.timestamp = t;
  e.location = {x, y};
  e.partner = "UK";
  e.context = Context::night;
  return e;
}

ResolvedDefinition ied() {
  ComplexEventDefinition def;
  def.name = "IED";
  def.constituents = {{"explosion", MatcherKind::class_label, Role::initiator, 1},
                      {"siren", MatcherKind::class_label, Role::terminator, 1}};
  def.window_seconds = 300;
  def.radius_meters = 500;
  return resolve(def);
}

std::vector<ResolvedDefinition> random_defs(Rng& rng, const std::vector<std::string>& labels) {
  std::vector<ResolvedDefinition> defs;
  const auto n = rng.range(1, 3);
  for (std::int64_t i = 0; i < n; ++i) {
    defs.push_back(resolve(hakf::testing::random_definition(rng, "D" + std::to_string(i), labels)));
  }
  return defs;
}

}  // namespace

TEST_SUITE("cep_engine") {
  TEST_CASE("IED: one detection over [10, 60] with probability 0.72") {
    CepEngine engine({ied()});
    CHECK(engine.ingest(ev("x1", "explosion", 0.9, 10, 0, 0)).detections.empty());
    CHECK(engine.open_instance_count() == 1);
    const auto result = engine.ingest(ev("s1", "siren", 0.8, 60, 100, 0, "f2"));
    REQUIRE(result.detections.size() == 1);
    const Detection& d = result.detections[0];
    CHECK(d.id == "IED@x1");
    CHECK(d.definition_name == "IED");
    CHECK(d.interval_start == 10.0);
    CHECK(d.interval_end == 60.0);
    CHECK(std::abs(d.probability - 0.72) < 1e-9);
    REQUIRE(d.constituents.size() == 2);
    CHECK(d.constituents[0] == ConstituentRef{Role::initiator, "x1", -1});
    CHECK(d.constituents[1] == ConstituentRef{Role::terminator, "s1", -1});
    CHECK(engine.open_instance_count() == 0);

    const std::vector<SimpleEvent> log = {ev("x1", "explosion", 0.9, 10, 0, 0), ev("s1", "siren", 0.8, 60, 100, 0, "f2")};
    CHECK(match_brute({ied()}, log) == std::vector<Detection>{d});
  }

  TEST_CASE("siren after the window: the instance expires") {
    CepEngine engine({ied()});
    engine.ingest(ev("x1", "explosion", 0.9, 10, 0, 0));
    CHECK(engine.ingest(ev("s1", "siren", 0.8, 400, 100, 0)).detections.empty());
    CHECK(engine.open_instance_count() == 0);
  }

  TEST_CASE("siren beyond the radius is ignored") {
    CepEngine engine({ied()});
    engine.ingest(ev("x1", "explosion", 0.9, 10, 0, 0));
    CHECK(engine.ingest(ev("s1", "siren", 0.8, 60, 600, 0)).detections.empty());
    CHECK(engine.open_instance_count() == 1);
  }

  TEST_CASE("a suppressed initiator opens nothing but is logged") {
    ComplexEventDefinition def;
    def.name = "ThrowingAltercation";
    def.constituents = {{"shotput", MatcherKind::class_label, Role::initiator, 1},
                        {"hammer_throw", MatcherKind::class_label, Role::terminator, 1}};
    def.window_seconds = 120;
    def.radius_meters = 50;
    MarkingSet markings;
    markings.mark({"nightclub", "shotput", Context::any, "op", Timestamp(0)});
    CepEngine engine({resolve(def)}, markings);
    const auto r = engine.ingest(ev("a", "shotput", 0.9, 5, 0, 0, "nightclub"));
    REQUIRE(r.record.suppressed_by.has_value());
    CHECK(r.record.suppressed_by->class_label == "shotput");
    CHECK(r.record.sequence == 1);
    CHECK(engine.open_instance_count() == 0);
    CHECK(engine.ingest(ev("b", "hammer_throw", 0.9, 6, 0, 0, "nightclub")).detections.empty());
    CHECK(engine.processed() == 2);
  }

  TEST_CASE("two sirens: the first closes the instance, the second opens nothing") {
    CepEngine engine({ied()});
    engine.ingest(ev("x1", "explosion", 0.9, 10, 0, 0));
    const auto first = engine.ingest(ev("s1", "siren", 0.8, 20, 0, 0));
    REQUIRE(first.detections.size() == 1);
    CHECK(first.detections[0].constituents[1].event_id == "s1");
    CHECK(engine.ingest(ev("s2", "siren", 0.5, 30, 0, 0)).detections.empty());
    CHECK(engine.open_instance_count() == 0);
  }

  TEST_CASE("overlapping initiators each open their own instance") {
    CepEngine engine({ied()});
    engine.ingest(ev("x1", "explosion", 0.9, 10, 0, 0));
    engine.ingest(ev("x2", "explosion", 0.6, 20, 0, 0));
    CHECK(engine.open_instance_count() == 2);
    const auto r = engine.ingest(ev("s1", "siren", 0.5, 30, 0, 0));
    REQUIRE(r.detections.size() == 2);
    CHECK(r.detections[0].id == "IED@x1");
    CHECK(r.detections[1].id == "IED@x2");
    CHECK(std::abs(r.detections[1].probability - 0.3) < 1e-12);
  }

  TEST_CASE("supporting constituents pick the highest confidence") {
    ComplexEventDefinition def;
    def.name = "Gunfight";
    def.constituents = {{"shout", MatcherKind::class_label, Role::initiator, 1},
                        {"siren", MatcherKind::class_label, Role::terminator, 1},
                        {"gunshot", MatcherKind::class_label, Role::supporting, 2}};
    def.window_seconds = 100;
    def.radius_meters = 50;
    const std::vector<SimpleEvent> events = {
        ev("a", "shout", 0.5, 0, 0, 0),    ev("b", "gunshot", 0.4, 5, 0, 0), ev("c", "siren", 0.9, 6, 0, 0),
        ev("d", "gunshot", 0.7, 7, 0, 0),  ev("e", "gunshot", 0.9, 8, 1, 1), ev("f", "siren", 0.6, 9, 0, 0)};
    const auto dets = hakf::testing::stream_all({resolve(def)}, events);
    REQUIRE(dets.size() == 1);
    // Candidate c never gathers support inside [0, 6]; f does, with e and d.
    CHECK(dets[0].constituents[1].event_id == "f");
    CHECK(dets[0].interval_end == 9.0);
    CHECK(dets[0].emitted_at == 9.0);
    CHECK(dets[0].constituents[2].event_id == "e");
    CHECK(dets[0].constituents[3].event_id == "d");
    CHECK(std::abs(dets[0].probability - 0.5 * 0.6 * 0.9 * 0.7) < 1e-12);
    CHECK(dets == match_brute({resolve(def)}, events));
  }

  TEST_CASE("out-of-order and invalid events are rejected") {
    CepEngine engine({ied()});
    engine.ingest(ev("b", "explosion", 0.9, 10, 0, 0));
    try {
      engine.ingest(ev("a", "explosion", 0.9, 10, 0, 0));
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::out_of_order_timestamp);
    }
    CHECK_THROWS_AS(engine.ingest(ev("z", "siren", 1.5, 20, 0, 0)), Error);
  }

  TEST_CASE("match_brute edge cases") {
    CHECK(match_brute({ied()}, {}).empty());
    CHECK(match_brute({ied()}, {ev("x1", "explosion", 0.9, 1, 0, 0), ev("x2", "explosion", 0.9, 2, 0, 0)}).empty());
    std::vector<SimpleEvent> big;
    for (int i = 0; i < 201; ++i) big.push_back(ev("e" + std::to_string(i), "siren", 0.5, i, 0, 0));
    try {
      match_brute({ied()}, big);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::log_too_large);
    }
  }

  TEST_CASE("snapshot of an empty engine restores empty") {
    const CepEngine engine({ied()});
    const CepEngine back = CepEngine::restore(engine.snapshot());
    CHECK(back.open_instance_count() == 0);
    CHECK(back.processed() == 0);
    CHECK(back.definitions() == engine.definitions());
  }

  TEST_CASE("snapshot mid-stream then replay matches an uninterrupted run") {
    Rng rng(17);
    const std::vector<std::string> labels = {"a", "b", "c", "d", "e", "f"};
    for (int round = 0; round < 25; ++round) {
      const auto defs = random_defs(rng, labels);
      const auto events = hakf::testing::random_stream(rng, 80, labels);
      const auto expected = hakf::testing::stream_all(defs, events);
      const auto cut = static_cast<std::size_t>(rng.range(0, 80));
      CepEngine engine(defs);
      std::vector<Detection> got;
      for (std::size_t i = 0; i < cut; ++i)
        for (auto& d : engine.ingest(events[i]).detections) got.push_back(d);
      const EngineState state = snapshot(engine);
      CepEngine resumed = restore(state);
      CHECK(resumed.open_instances() == engine.open_instances());
      CHECK(resumed.snapshot().bytes == state.bytes);
      for (std::size_t i = cut; i < events.size(); ++i)
        for (auto& d : resumed.ingest(events[i]).detections) got.push_back(d);
      CHECK(got == expected);
    }
  }

  TEST_CASE("restore rejects corrupted state") {
    CepEngine engine({ied()});
    engine.ingest(ev("x1", "explosion", 0.9, 10, 0, 0));
    const std::string bytes = engine.snapshot().bytes;

    CHECK_THROWS_AS(CepEngine::restore({bytes.substr(0, bytes.size() / 2)}), SyntaxError);
    Json j = Json::parse(bytes);
    j["version"] = 99;
    try {
      CepEngine::restore({j.dump()});
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::version_mismatch);
    }
    CHECK_THROWS_AS(CepEngine::restore({"[]"}), Error);
  }

  TEST_CASE("random streams: streaming equals the batch oracle") {
    Rng rng(123);
    const std::vector<std::string> labels = {"a", "b", "c", "d", "e", "f", "g"};
    std::size_t total = 0;
    for (int round = 0; round < 60; ++round) {
      const auto defs = random_defs(rng, labels);
      const auto events = hakf::testing::random_stream(rng, static_cast<int>(rng.range(0, 150)), labels);
      MarkingSet markings;
      if (rng.chance(30)) markings.mark({"f1", rng.pick(labels), Context::any, "op", Timestamp(0)});
      const auto streamed = hakf::testing::stream_all(defs, events, markings);
      CHECK(streamed == match_brute(defs, events, markings));
      total += streamed.size();
    }
    CHECK(total > 0);
  }

  TEST_CASE("suppression soundness and probability consistency") {
    Rng rng(555);
    const std::vector<std::string> labels = {"a", "b", "c", "d", "e"};
    for (int round = 0; round < 40; ++round) {
      const auto defs = random_defs(rng, labels);
      const auto events = hakf::testing::random_stream(rng, 30, labels);
      MarkingSet markings;
      markings.mark({rng.pick(std::vector<std::string>{"f1", "f2"}), rng.pick(labels),
                     rng.chance(50) ? Context::any : Context::night, "op", Timestamp(0)});
      const auto dets = hakf::testing::stream_all(defs, events, markings);
      for (const auto& d : dets) {
        for (const auto& c : d.constituents) {
          const auto it = std::find_if(events.begin(), events.end(),
                                       [&](const SimpleEvent& e) { return e.id == c.event_id; });
          REQUIRE(it != events.end());
          CHECK_FALSE(markings.is_suppressed(*it));
        }
        const auto def = std::find_if(defs.begin(), defs.end(),
                                      [&](const ResolvedDefinition& r) { return r.name == d.definition_name; });
        const FactSet facts = hakf::testing::detection_facts(d, events);
        CHECK(std::abs(evaluate_exact(compile(*def), facts, head_atom(d.definition_name)) - d.probability) < 1e-9);
      }
    }
  }

  TEST_CASE("detection JSON round-trips and runs are deterministic") {
    Rng rng(9);
    const std::vector<std::string> labels = {"a", "b", "c", "d", "e"};
    const auto defs = random_defs(rng, labels);
    const auto events = hakf::testing::random_stream(rng, 120, labels);
    const auto one = hakf::testing::stream_all(defs, events);
    const auto two = hakf::testing::stream_all(defs, events);
    CHECK(detections_to_jsonl(one) == detections_to_jsonl(two));
    for (const auto& d : one) CHECK(detection_from_json(Json::parse(detection_to_json(d).dump())) == d);
  }
}
