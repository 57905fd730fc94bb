// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "hakf/feed_sim.hpp"

using namespace hakf;

namespace {

// Counts frozen from tests/oracles/feed_sim_oracle.py, an independent
// implementation of the documented sampler.
const std::map<std::string, int> kNightclubCounts = {{"shotput", 23}, {"hammer_throw", 22}, {"other", 11}};
const std::map<std::string, int> kCamBCounts = {{"a", 278}, {"b", 580}, {"c", 904}};

std::string two_injections() {
  return R"({
    "name": "scripted", "seed": 7, "durationSeconds": 600,
    "feeds": [
      {"feedId": "seismic_1", "partner": "UK", "location": {"x": 0, "y": 0}, "modality": "seismic",
       "backgroundRate": 0, "backgroundClasses": [], "contextSchedule": [{"fromSecond": 0, "context": "day"}]},
      {"feedId": "mic_2", "partner": "US", "location": {"x": 100, "y": 0}, "modality": "audio",
       "backgroundRate": 0, "backgroundClasses": [], "contextSchedule": [{"fromSecond": 0, "context": "night"}]}
    ],
    "injections": [
      {"feedId": "mic_2", "classLabel": "siren", "atSecond": 60, "confidence": 0.8, "offset": {"dx": 0, "dy": 0}},
      {"feedId": "seismic_1", "classLabel": "explosion", "atSecond": 10, "confidence": 0.9, "offset": {"dx": 0, "dy": 0}}
    ]
  })";
}

Scenario one_feed(std::string feed, std::uint64_t seed, double rate, double duration,
                  std::vector<WeightedClass> classes) {
  Scenario s;
  s.name = "generated";
  s.seed = seed;
  s.duration_seconds = duration;
  FeedSpec f;
  f.feed_id = std::move(feed);
  f.partner = "UK";
  f.location = {250, 40};
  f.background_rate = rate;
  f.background_classes = std::move(classes);
  f.context_schedule = {{0, Context::day}, {duration / 2, Context::night}};
  s.feeds.push_back(std::move(f));
  return s;
}

std::map<std::string, int> class_counts(const std::vector<SimpleEvent>& events) {
  std::map<std::string, int> out;
  for (const auto& e : events) ++out[e.class_label];
  return out;
}

bool has_field(const std::vector<Violation>& vs, std::string_view needle) {
  return std::any_of(vs.begin(), vs.end(),
                     [&](const Violation& v) { return v.field.find(needle) != std::string::npos; });
}

}  // namespace

TEST_SUITE("feed_sim") {
  TEST_CASE("xoshiro256** matches the reference outputs") {
    Xoshiro256 rng(0);
    CHECK(rng.next() == 0x99ec5f36cb75f2b4ULL);
    CHECK(rng.next() == 0xbf6e1f784956452aULL);
    CHECK(rng.next() == 0x1a5f849d4933e6e0ULL);
    Xoshiro256 u(123);
    for (int i = 0; i < 1000; ++i) {
      const double x = u.uniform();
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
    }
  }

  TEST_CASE("zero background rate yields exactly the injections") {
    const Scenario s = parse_scenario(two_injections());
    const auto events = generate(s);
    REQUIRE(events.size() == 2);
    CHECK(events[0].id == "seismic_1-inj-1");
    CHECK(events[0].class_label == "explosion");
    CHECK(events[0].timestamp == 10.0);
    CHECK(events[0].confidence == 0.9);
    CHECK(events[0].modality == Modality::seismic);
    CHECK(events[1].id == "mic_2-inj-1");
    CHECK(events[1].location == Location{100, 0});
    CHECK(events[1].context == Context::night);
    CHECK(events[1].partner == "US");
  }

  TEST_CASE("same scenario and seed give byte-identical streams") {
    const Scenario s = one_feed("nightclub", 42, 0.1, 600, {{"shotput", 0.5}, {"hammer_throw", 0.35}, {"other", 0.15}});
    CHECK(events_to_jsonl(generate(s)) == events_to_jsonl(generate(s)));
    CHECK(events_to_jsonl(generate(s, 43)) != events_to_jsonl(generate(s)));
  }

  TEST_CASE("nightclub counts match the independent sampler") {
    const Scenario s = one_feed("nightclub", 42, 0.1, 600, {{"shotput", 0.5}, {"hammer_throw", 0.35}, {"other", 0.15}});
    const auto events = generate(s);
    CHECK(class_counts(events) == kNightclubCounts);
    REQUIRE(!events.empty());
    CHECK(events[0].id == "nightclub-bg-000001");
    CHECK(events[0].timestamp == doctest::Approx(31.53855468089063).epsilon(1e-15));
  }

  TEST_CASE("cam_b counts match the independent sampler") {
    const Scenario s = one_feed("cam_b", 1234, 0.5, 3600, {{"a", 1}, {"b", 2}, {"c", 3}});
    CHECK(class_counts(generate(s)) == kCamBCounts);
  }

  TEST_CASE("the bundled nightclub sample matches the frozen counts") {
    const auto text = R"({"name":"n","seed":42,"durationSeconds":600,"feeds":[{"feedId":"nightclub","partner":"UK",
      "location":{"x":250,"y":40},"modality":"video","backgroundRate":0.1,
      "backgroundClasses":[{"classLabel":"shotput","weight":0.5},{"classLabel":"hammer_throw","weight":0.35},
      {"classLabel":"other","weight":0.15}],"contextSchedule":[{"fromSecond":0,"context":"night"}]}],"injections":[]})";
    CHECK(class_counts(generate(parse_scenario(text))) == kNightclubCounts);
  }

  TEST_CASE("background counts stay within five sigma of rate times duration") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Scenario s = one_feed("f", seed, 0.4, 2000, {{"x", 1}, {"y", 3}});
      const auto counts = class_counts(generate(s));
      const double n = counts.count("x") ? counts.at("x") : 0;
      const double m = counts.count("y") ? counts.at("y") : 0;
      const double expected = 800.0;
      CHECK(std::abs(n + m - expected) < 5 * std::sqrt(expected));
      CHECK(std::abs(n - expected / 4) < 5 * std::sqrt(expected * 0.25 * 0.75));
    }
  }

  TEST_CASE("generated events satisfy the event invariants") {
    Scenario s = one_feed("cam", 5, 0.3, 400, {{"walk", 2}, {"run", 1}});
    s.feeds[0].confidence_low = 0.6;
    s.feeds[0].confidence_high = 0.7;
    s.injections.push_back({"cam", "fight", 399.5, 1.0, 3, -4});
    const auto events = generate(s);
    CHECK(std::is_sorted(events.begin(), events.end(), processing_before));
    for (const auto& e : events) {
      CHECK_NOTHROW(check_event(e));
      CHECK(e.timestamp >= 0.0);
      CHECK(e.timestamp <= 400.0);
      CHECK(e.context == (e.timestamp < 200 ? Context::day : Context::night));
      if (e.class_label == "fight") {
        CHECK(e.location == Location{253, 36});
      } else {
        CHECK(e.confidence >= 0.6);
        CHECK(e.confidence <= 0.7);
        CHECK(e.location == Location{250, 40});
      }
    }
  }

  TEST_CASE("scenario JSON round-trips") {
    const Scenario s = parse_scenario(two_injections());
    CHECK(parse_scenario(scenario_to_json(s).dump()) == s);
  }

  TEST_CASE("invalid scenarios report field-level violations") {
    Json late = Json::parse(two_injections());
    late["injections"][0]["atSecond"] = 601;
    auto v = validate_scenario(late.dump());
    CHECK_FALSE(v.scenario.has_value());
    CHECK(has_field(v.violations, "injections[0].atSecond"));

    Json dup = Json::parse(two_injections());
    dup["feeds"][1]["feedId"] = "seismic_1";
    CHECK(has_field(validate_scenario(dup.dump()).violations, "feeds[1].feedId"));

    Json unknown_feed = Json::parse(two_injections());
    unknown_feed["injections"][1]["feedId"] = "nope";
    CHECK(has_field(validate_scenario(unknown_feed.dump()).violations, "injections[1].feedId"));

    Json extra = Json::parse(two_injections());
    extra["bogus"] = 1;
    CHECK(has_field(validate_scenario(extra.dump()).violations, "bogus"));

    Json no_classes = Json::parse(two_injections());
    no_classes["feeds"][0]["backgroundRate"] = 0.5;
    CHECK(has_field(validate_scenario(no_classes.dump()).violations, "feeds[0].backgroundClasses"));

    try {
      parse_scenario(late.dump());
      FAIL("accepted");
    } catch (const ValidationError& e) {
      CHECK(e.code() == ErrorCode::invalid_scenario);
    }
    CHECK_THROWS_AS(validate_scenario("{\"name\": "), SyntaxError);
  }
}
