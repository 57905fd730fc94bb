// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <map>

#include "hakf/tellability.hpp"
#include "support/generators.hpp"

using namespace hakf;

namespace {

SimpleEvent club_event(std::string id, std::string label, double t, Context ctx = Context::night) {
  SimpleEvent e;
  e.id = std::move(id);
  e.feed_id = "nightclub";
  e.modality = Modality::video;
  e.class_label = std::move(label);
  e.confidence = 0.7;
  e.timestamp = t;
  e.location = {250, 40};
  e.partner = "UK";
  e.context = ctx;
  return e;
}

// 4 shotput, 3 hammer_throw, 2 salsa_spin, 1 punch, interleaved.
std::vector<SimpleEvent> scripted_club() {
  const char* labels[] = {"shotput",    "hammer_throw", "shotput", "salsa_spin",   "punch",
                          "hammer_throw", "shotput",    "salsa_spin", "hammer_throw", "shotput"};
  std::vector<SimpleEvent> out;
  for (int i = 0; i < 10; ++i) {
    out.push_back(club_event("n" + std::to_string(i), labels[i], 10.0 * (i + 1),
                             i % 2 == 0 ? Context::night : Context::day));
  }
  return out;
}

RegularMarking marking(std::string label, Context ctx, std::string feed = "nightclub") {
  return {std::move(feed), std::move(label), ctx, "operator", Timestamp(0)};
}

}  // namespace

TEST_SUITE("tellability") {
  TEST_CASE("scripted nightclub stream yields exact counts") {
    TellabilityState state;
    for (const auto& e : scripted_club()) state.record(e);
    const FrequencyTable table = state.frequency_table("nightclub", 1000.0);
    REQUIRE(table.entries.size() == 4);
    CHECK(table.entries.at("shotput").count == 4);
    CHECK(table.entries.at("hammer_throw").count == 3);
    CHECK(table.entries.at("salsa_spin").count == 2);
    CHECK(table.entries.at("punch").count == 1);
    CHECK(table.entries.at("shotput").rate == doctest::Approx(4.0 / 1000.0));

    const auto top = state.top_classes("nightclub", 1000.0, Context::any);
    const std::vector<ClassCount> expected = {
        {"shotput", 4}, {"hammer_throw", 3}, {"salsa_spin", 2}, {"punch", 1}};
    CHECK(top == expected);
  }

  TEST_CASE("first event on a fresh feed counts once; clock follows events") {
    TellabilityState state;
    CHECK_FALSE(state.has_feed("nightclub"));
    state.record(club_event("a", "shotput", 5));
    CHECK(state.frequency_table("nightclub", 60).entries.at("shotput").count == 1);
    CHECK(state.feed_clock("nightclub") == 5.0);
  }

  TEST_CASE("out-of-order events are rejected") {
    TellabilityState state;
    state.record(club_event("a", "shotput", 50));
    try {
      state.record(club_event("b", "shotput", 49));
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::out_of_order_timestamp);
      CHECK(std::string(e.what()).find("nightclub") != std::string::npos);
    }
    CHECK_NOTHROW(state.record(club_event("c", "shotput", 50)));
  }

  TEST_CASE("unknown feed and bad windows") {
    TellabilityState state;
    CHECK_THROWS_AS(state.frequency_table("nope", 10), Error);
    state.record(club_event("a", "shotput", 1));
    CHECK_THROWS_AS(state.frequency_table("nightclub", 0), Error);
    CHECK_THROWS_AS(state.frequency_table("nightclub", -5), Error);
  }

  TEST_CASE("top_classes: empty window, ties and context filter") {
    TellabilityState state;
    for (const auto& e : scripted_club()) state.record(e);
    // Window (100 - 5, 100] holds only the last shotput.
    CHECK(state.top_classes("nightclub", 5, Context::any) == std::vector<ClassCount>{{"shotput", 1}});
    CHECK(state.top_classes("nightclub", 5, Context::any, 500.0).empty());

    TellabilityState ties;
    ties.record(club_event("a", "zeta", 1));
    ties.record(club_event("b", "alpha", 2));
    ties.record(club_event("c", "zeta", 3));
    ties.record(club_event("d", "alpha", 4));
    const std::vector<ClassCount> tied = {{"alpha", 2}, {"zeta", 2}};
    CHECK(ties.top_classes("nightclub", 100, Context::any) == tied);

    // Night events are the even positions: shotput x3, punch, hammer_throw.
    const std::vector<ClassCount> night = {{"shotput", 3}, {"hammer_throw", 1}, {"punch", 1}};
    CHECK(state.top_classes("nightclub", 1000, Context::night) == night);
  }

  TEST_CASE("frequency tables agree with a brute recount on random streams") {
    testing::Rng rng(99);
    const std::vector<std::string> labels = {"a", "b", "c", "d"};
    for (int round = 0; round < 30; ++round) {
      const auto stream = testing::random_stream(rng, static_cast<int>(rng.range(1, 80)), labels, {"f1"});
      TellabilityState state;
      for (const auto& e : stream) state.record(e);
      const double window = static_cast<double>(rng.range(1, 120));
      const double now = state.feed_clock("f1");
      for (Context ctx : {Context::any, Context::day, Context::night}) {
        std::map<std::string, std::int64_t> brute;
        for (const auto& e : stream) {
          if (e.timestamp > now - window && e.timestamp <= now && (ctx == Context::any || e.context == ctx)) {
            ++brute[e.class_label];
          }
        }
        std::map<std::string, std::int64_t> got;
        for (const auto& cc : state.top_classes("f1", window, ctx)) got[cc.class_label] = cc.count;
        CHECK(got == brute);
      }
    }
  }

  TEST_CASE("marking contexts") {
    TellabilityState state;
    const SimpleEvent night = club_event("a", "shotput", 1, Context::night);
    const SimpleEvent day = club_event("b", "shotput", 2, Context::day);
    CHECK_FALSE(state.is_suppressed(night));

    state.mark_regular(marking("shotput", Context::any));
    CHECK(state.is_suppressed(night));
    CHECK(state.is_suppressed(day));
    state.unmark_regular("nightclub", "shotput", Context::any);
    CHECK_FALSE(state.is_suppressed(night));

    state.mark_regular(marking("shotput", Context::night));
    CHECK(state.is_suppressed(night));
    CHECK_FALSE(state.is_suppressed(day));

    MarkingSet only_day;
    only_day.mark(marking("shotput", Context::day));
    CHECK_FALSE(only_day.is_suppressed(night));

    // Other feed, other class: untouched.
    CHECK_FALSE(state.is_suppressed(club_event("c", "hammer_throw", 3)));
    SimpleEvent elsewhere = night;
    elsewhere.feed_id = "lobby";
    CHECK_FALSE(state.is_suppressed(elsewhere));
  }

  TEST_CASE("unmarking a missing marking fails; versions bump on each change") {
    TellabilityState state;
    try {
      state.unmark_regular("nightclub", "shotput", Context::any);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::no_such_marking);
    }
    const auto v0 = state.version();
    state.mark_regular(marking("shotput", Context::any));
    state.mark_regular(marking("shotput", Context::any));  // replace
    CHECK(state.markings().size() == 1);
    CHECK(state.version() == v0 + 2);
  }

  TEST_CASE("exact-context marking wins over any") {
    MarkingSet set;
    set.mark(marking("shotput", Context::any));
    set.mark(marking("shotput", Context::night));
    const auto m = set.matching(club_event("a", "shotput", 1, Context::night));
    REQUIRE(m.has_value());
    CHECK(m->context == Context::night);
    const auto d = set.matching(club_event("b", "shotput", 1, Context::day));
    REQUIRE(d.has_value());
    CHECK(d->context == Context::any);
  }

  TEST_CASE("marking set JSON round-trips") {
    MarkingSet set;
    set.mark(marking("shotput", Context::any));
    set.mark(marking("hammer_throw", Context::night, "cam"));
    const MarkingSet back = MarkingSet::from_json(Json::parse(set.to_json_text()));
    CHECK(back == set);
  }

  TEST_CASE("suppression is monotone in the marking set") {
    testing::Rng rng(31);
    const std::vector<std::string> labels = {"a", "b", "c"};
    const std::vector<Context> contexts = {Context::day, Context::night, Context::any};
    for (int round = 0; round < 20; ++round) {
      const auto stream = testing::random_stream(rng, 40, labels);
      MarkingSet set;
      std::vector<bool> before(stream.size(), false);
      for (int step = 0; step < 5; ++step) {
        set.mark(marking(rng.pick(labels), rng.pick(contexts), rng.pick(std::vector<std::string>{"f1", "f2"})));
        for (std::size_t i = 0; i < stream.size(); ++i) {
          const bool now = set.is_suppressed(stream[i]);
          if (before[i]) CHECK(now);
          before[i] = now;
        }
      }
    }
  }

  TEST_CASE("concept mapping") {
    Palette p("sounds");
    p = p.with_concept({"ThreatSound", std::nullopt, {}, false});
    p = p.with_concept({"Blast", std::string("ThreatSound"), {}, false});
    ConceptMapping m;
    m.set("explosion", "ThreatSound", p);
    m.set("detonation", "Blast", p);
    CHECK(map_class(m, "explosion") == std::optional<std::string>("ThreatSound"));
    CHECK_FALSE(map_class(m, "siren").has_value());
    CHECK(m.labels_for("ThreatSound", p) == std::vector<std::string>{"detonation", "explosion"});
    CHECK_THROWS_AS(m.set("siren", "Missing", p), Error);

    const Palette shrunk = p.without_concept("Blast");
    try {
      m.check_against(shrunk);
      FAIL("stale mapping accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unknown_concept);
    }
    CHECK(ConceptMapping::from_json(Json::parse(m.to_json().dump()), p) == m);
  }

  TEST_CASE("reset_feeds keeps markings") {
    TellabilityState state;
    state.record(club_event("a", "shotput", 100));
    state.mark_regular(marking("shotput", Context::any));
    state.reset_feeds();
    CHECK_FALSE(state.has_feed("nightclub"));
    CHECK_NOTHROW(state.record(club_event("b", "shotput", 1)));
    CHECK(state.markings().size() == 1);
  }
}
