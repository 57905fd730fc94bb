// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "hakf/explainability.hpp"
#include "support/generators.hpp"

using namespace hakf;

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

ResolvedDefinition make_def(std::string name, std::string init, std::string term, double window, double radius) {
  ComplexEventDefinition def;
  def.name = std::move(name);
  def.constituents = {{std::move(init), MatcherKind::class_label, Role::initiator, 1},
                      {std::move(term), MatcherKind::class_label, Role::terminator, 1}};
  def.window_seconds = window;
  def.radius_meters = radius;
  return resolve(def);
}

struct Run {
  EventLog log;
  std::vector<Detection> detections;
};

Run run(const std::vector<ResolvedDefinition>& defs, const std::vector<SimpleEvent>& events,
        CepEngine* engine_in = nullptr) {
  CepEngine local(defs);
  CepEngine& engine = engine_in != nullptr ? *engine_in : local;
  Run out;
  for (const auto& e : events) {
    auto r = engine.ingest(e);
    out.log.append(r.record);
    for (auto& d : r.detections) out.detections.push_back(std::move(d));
  }
  return out;
}

}  // namespace

TEST_SUITE("explainability") {
  TEST_CASE("IED explanation: temporal 50/300, spatial 100/500, product 0.72") {
    const std::vector<ResolvedDefinition> defs = {make_def("IED", "explosion", "siren", 300, 500)};
    const Run r = run(defs, {ev("x1", "explosion", 0.9, 10, 0, 0), ev("s1", "siren", 0.8, 60, 100, 0, "mic_2")});
    REQUIRE(r.detections.size() == 1);
    const Explanation x = explain(r.detections[0], r.log, defs);
    const std::vector<ConstraintCheck> expected = {{CheckKind::temporal, 50, 300, true},
                                                   {CheckKind::spatial, 100, 500, true}};
    CHECK(x.constraint_checks == expected);
    CHECK(std::abs(x.product - 0.72) < 1e-12);
    REQUIRE(x.constituents.size() == 2);
    CHECK(x.constituents[0].role == Role::initiator);
    CHECK(x.constituents[1].feed_id == "mic_2");
    CHECK(x.probability_terms.size() == 2);
    CHECK(x.narrative.find("IED detected") == 0);
    CHECK(x.narrative.find("\xCE\x94t=50s \xE2\x89\xA4 300s") != std::string::npos);
    CHECK(verify_explanation(x, r.detections[0], r.log, defs).empty());

    const OrderedJson j = explanation_to_json(x);
    CHECK(j["detectionId"] == "IED@x1");
    CHECK(j["constraintChecks"][0]["kind"] == "temporal");
    CHECK(j["constraintChecks"][1]["actual"] == 100.0);
  }

  TEST_CASE("degenerate definition: one temporal check of zero span") {
    const std::vector<ResolvedDefinition> defs = {make_def("Bang", "explosion", "explosion", 30, 10)};
    const Run r = run(defs, {ev("x1", "explosion", 0.6, 10, 0, 0)});
    REQUIRE(r.detections.size() == 1);
    const Explanation x = explain(r.detections[0], r.log, defs);
    CHECK(x.constraint_checks == std::vector<ConstraintCheck>{{CheckKind::temporal, 0, 30, true}});
    CHECK(x.probability_terms.size() == 1);
    CHECK(x.product == doctest::Approx(0.6));
  }

  TEST_CASE("purged constituents and unknown definitions") {
    const std::vector<ResolvedDefinition> defs = {make_def("IED", "explosion", "siren", 300, 500)};
    Run r = run(defs, {ev("x1", "explosion", 0.9, 10, 0, 0), ev("s1", "siren", 0.8, 60, 100, 0)});
    try {
      explain(r.detections[0], r.log, {});
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unknown_definition);
    }
    r.log.retain_only({"s1"});
    try {
      explain(r.detections[0], r.log, defs);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::dangling_constituent);
      CHECK(std::string(e.what()).find("x1") != std::string::npos);
    }
  }

  TEST_CASE("a tampered detection fails explanation") {
    const std::vector<ResolvedDefinition> defs = {make_def("IED", "explosion", "siren", 30, 500)};
    const Run r = run(defs, {ev("x1", "explosion", 0.9, 10, 0, 0), ev("s1", "siren", 0.8, 20, 100, 0),
                             ev("s2", "siren", 0.8, 90, 100, 0)});
    REQUIRE(r.detections.size() == 1);
    Detection forged = r.detections[0];
    forged.constituents[1].event_id = "s2";
    forged.interval_end = 90;
    try {
      explain(forged, r.log, defs);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::internal);
    }
    Explanation x = explain(r.detections[0], r.log, defs);
    x.product = 0.5;
    CHECK_FALSE(verify_explanation(x, r.detections[0], r.log, defs).empty());
  }

  TEST_CASE("suppression traces are decided at ingestion") {
    const std::vector<ResolvedDefinition> defs = {make_def("Throw", "shotput", "hammer_throw", 120, 50)};
    MarkingSet markings;
    markings.mark({"nightclub", "shotput", Context::any, "op", Timestamp(0)});
    CepEngine engine(defs, markings);
    Run r = run(defs, {ev("a", "shotput", 0.9, 5, 0, 0, "nightclub"), ev("b", "punch", 0.9, 6, 0, 0, "nightclub")},
                &engine);
    const auto trace = explain_suppression("a", r.log);
    REQUIRE(trace.has_value());
    CHECK(trace->marking.feed_id == "nightclub");
    CHECK(trace->marking.class_label == "shotput");
    CHECK(trace->marking.context == Context::any);
    CHECK(trace->decided_at == 5.0);
    CHECK(suppression_trace_to_json(*trace)["eventId"] == "a");
    CHECK_FALSE(explain_suppression("b", r.log).has_value());

    // Marking punch after b was ingested does not rewrite history.
    MarkingSet later = engine.markings();
    later.mark({"nightclub", "punch", Context::any, "op", Timestamp(0)});
    engine.set_markings(later);
    CHECK_FALSE(explain_suppression("b", r.log).has_value());
    const auto c = engine.ingest(ev("c", "punch", 0.9, 7, 0, 0, "nightclub"));
    r.log.append(c.record);
    CHECK(explain_suppression("c", r.log).has_value());

    try {
      explain_suppression("nope", r.log);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unknown_event);
    }
    CHECK_THROWS_AS(r.log.append(c.record), Error);
  }

  TEST_CASE("random detections explain faithfully and deterministically") {
    hakf::testing::Rng rng(64);
    const std::vector<std::string> labels = {"a", "b", "c", "d", "e", "f"};
    std::size_t explained = 0;
    for (int round = 0; round < 40; ++round) {
      std::vector<ResolvedDefinition> defs;
      for (int i = 0; i < 2; ++i)
        defs.push_back(resolve(hakf::testing::random_definition(rng, "D" + std::to_string(i), labels)));
      const Run r = run(defs, hakf::testing::random_stream(rng, 60, labels));
      for (const auto& d : r.detections) {
        const Explanation x = explain(d, r.log, defs);
        CHECK(verify_explanation(x, d, r.log, defs).empty());
        CHECK(explain(d, r.log, defs) == x);
        CHECK(std::abs(x.product - d.probability) < 1e-12);
        for (const auto& c : x.constraint_checks) CHECK(c.satisfied);
        ++explained;
      }
    }
    CHECK(explained > 0);
  }
}
