// SPDX-License-Identifier: Apache-2.0
#include "hakf/feed_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

namespace hakf {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  for (auto& word : s_) word = splitmix64(seed);
}

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t Xoshiro256::next() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

Context FeedSpec::context_at(double second) const {
  Context current = context_schedule.empty() ? Context::day : context_schedule.front().context;
  for (const auto& change : context_schedule) {
    if (change.from_second <= second) current = change.context;
  }
  return current;
}

namespace {

// Collects violations instead of stopping at the first bad field.
class Reader {
 public:
  std::vector<Violation> violations;

  template <typename F>
  bool attempt(F&& f) {
    try {
      f();
      return true;
    } catch (const Error& e) {
      // Messages read "<path>: <rule>".
      std::string message = e.what();
      auto colon = message.find(": ");
      if (colon == std::string::npos) {
        violations.push_back({"", message});
      } else {
        violations.push_back({message.substr(0, colon), message.substr(colon + 2)});
      }
      return false;
    }
  }

  void add(std::string field, std::string rule) { violations.push_back({std::move(field), std::move(rule)}); }
};

std::optional<Json> optional_key(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  return *it;
}

FeedSpec read_feed(const Json& j, const std::string& path, Reader& r) {
  FeedSpec f;
  if (!j.is_object()) {
    r.add(path, "must be an object");
    return f;
  }
  r.attempt([&] { f.feed_id = json_field::string(j, "feedId", path); });
  r.attempt([&] { f.partner = json_field::string(j, "partner", path); });
  r.attempt([&] {
    const Json& loc = json_field::object(j, "location", path);
    f.location = {json_field::number(loc, "x", path + ".location"),
                  json_field::number(loc, "y", path + ".location")};
  });
  r.attempt([&] {
    std::string m = json_field::string(j, "modality", path);
    try {
      f.modality = modality_from_string(m);
    } catch (const Error&) {
      throw Error(ErrorCode::schema_violation, path + ".modality: unknown modality \"" + m + "\"");
    }
  });
  r.attempt([&] { f.background_rate = json_field::number(j, "backgroundRate", path); });
  r.attempt([&] {
    const Json& classes = json_field::array(j, "backgroundClasses", path);
    for (std::size_t i = 0; i < classes.size(); ++i) {
      std::string p = path + ".backgroundClasses[" + std::to_string(i) + "]";
      json_field::expect_object(classes[i], p);
      f.background_classes.push_back(
          {json_field::string(classes[i], "classLabel", p), json_field::number(classes[i], "weight", p)});
    }
  });
  r.attempt([&] {
    const Json& schedule = json_field::array(j, "contextSchedule", path);
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      std::string p = path + ".contextSchedule[" + std::to_string(i) + "]";
      json_field::expect_object(schedule[i], p);
      std::string c = json_field::string(schedule[i], "context", p);
      Context ctx;
      try {
        ctx = context_from_string(c);
      } catch (const Error&) {
        throw Error(ErrorCode::schema_violation, p + ".context: unknown context \"" + c + "\"");
      }
      f.context_schedule.push_back({json_field::number(schedule[i], "fromSecond", p), ctx});
    }
  });
  if (auto band = optional_key(j, "confidenceBand")) {
    if (!band->is_array() || band->size() != 2 || !(*band)[0].is_number() || !(*band)[1].is_number()) {
      r.add(path + ".confidenceBand", "must be [low, high]");
    } else {
      f.confidence_low = (*band)[0].get<double>();
      f.confidence_high = (*band)[1].get<double>();
    }
  }
  return f;
}

InjectedEvent read_injection(const Json& j, const std::string& path, Reader& r) {
  InjectedEvent e;
  if (!j.is_object()) {
    r.add(path, "must be an object");
    return e;
  }
  r.attempt([&] { e.feed_id = json_field::string(j, "feedId", path); });
  r.attempt([&] { e.class_label = json_field::string(j, "classLabel", path); });
  r.attempt([&] { e.at_second = json_field::number(j, "atSecond", path); });
  r.attempt([&] { e.confidence = json_field::number(j, "confidence", path); });
  if (j.contains("offset")) {
    r.attempt([&] {
      const Json& off = json_field::object(j, "offset", path);
      e.dx = json_field::number(off, "dx", path + ".offset");
      e.dy = json_field::number(off, "dy", path + ".offset");
    });
  }
  return e;
}

}  // namespace

std::vector<Violation> check_scenario(const Scenario& s) {
  std::vector<Violation> v;
  if (s.name.empty()) v.push_back({"name", "must not be empty"});
  if (!(s.duration_seconds > 0.0) || !std::isfinite(s.duration_seconds)) {
    v.push_back({"durationSeconds", "must be positive"});
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.feeds.size(); ++i) {
    const FeedSpec& f = s.feeds[i];
    const std::string p = "feeds[" + std::to_string(i) + "]";
    if (f.feed_id.empty()) v.push_back({p + ".feedId", "must not be empty"});
    if (!ids.insert(f.feed_id).second) v.push_back({p + ".feedId", "duplicate feed id \"" + f.feed_id + "\""});
    if (f.partner.empty()) v.push_back({p + ".partner", "must not be empty"});
    if (!(f.background_rate >= 0.0) || !std::isfinite(f.background_rate)) {
      v.push_back({p + ".backgroundRate", "must be non-negative"});
    }
    if (f.background_rate > 0.0 && f.background_classes.empty()) {
      v.push_back({p + ".backgroundClasses", "must not be empty when backgroundRate > 0"});
    }
    for (std::size_t k = 0; k < f.background_classes.size(); ++k) {
      const auto& wc = f.background_classes[k];
      const std::string q = p + ".backgroundClasses[" + std::to_string(k) + "]";
      if (wc.class_label.empty()) v.push_back({q + ".classLabel", "must not be empty"});
      if (!(wc.weight > 0.0) || !std::isfinite(wc.weight)) v.push_back({q + ".weight", "must be positive"});
    }
    if (f.context_schedule.empty()) {
      v.push_back({p + ".contextSchedule", "must cover [0, duration)"});
    } else {
      if (f.context_schedule.front().from_second != 0.0) {
        v.push_back({p + ".contextSchedule[0].fromSecond", "must be 0"});
      }
      for (std::size_t k = 0; k < f.context_schedule.size(); ++k) {
        const auto& c = f.context_schedule[k];
        const std::string q = p + ".contextSchedule[" + std::to_string(k) + "]";
        if (c.context == Context::any) v.push_back({q + ".context", "must be day or night"});
        if (k > 0 && !(c.from_second > f.context_schedule[k - 1].from_second)) {
          v.push_back({q + ".fromSecond", "must be strictly increasing"});
        }
        if (c.from_second >= s.duration_seconds && k > 0) {
          v.push_back({q + ".fromSecond", "must be below durationSeconds"});
        }
      }
    }
    if (!(0.0 <= f.confidence_low && f.confidence_low <= f.confidence_high && f.confidence_high <= 1.0)) {
      v.push_back({p + ".confidenceBand", "must satisfy 0 <= low <= high <= 1"});
    }
  }
  for (std::size_t i = 0; i < s.injections.size(); ++i) {
    const InjectedEvent& e = s.injections[i];
    const std::string p = "injections[" + std::to_string(i) + "]";
    if (ids.count(e.feed_id) == 0) v.push_back({p + ".feedId", "unknown feed \"" + e.feed_id + "\""});
    if (e.class_label.empty()) v.push_back({p + ".classLabel", "must not be empty"});
    if (!(e.at_second >= 0.0) || e.at_second > s.duration_seconds) {
      v.push_back({p + ".atSecond", "must lie within [0, durationSeconds]"});
    }
    if (!(e.confidence >= 0.0 && e.confidence <= 1.0)) v.push_back({p + ".confidence", "must lie in [0, 1]"});
    if (!std::isfinite(e.dx) || !std::isfinite(e.dy)) v.push_back({p + ".offset", "must be finite"});
  }
  return v;
}

ScenarioValidation validate_scenario(std::string_view text) {
  const Json j = parse_json(text);
  Reader r;
  Scenario s;
  if (!j.is_object()) {
    r.add("", "scenario must be a JSON object");
    return {std::nullopt, r.violations};
  }
  r.attempt([&] { s.name = json_field::string(j, "name", "scenario"); });
  r.attempt([&] {
    const Json& seed = json_field::require(j, "seed", "scenario");
    if (seed.is_number_unsigned()) {
      s.seed = seed.get<std::uint64_t>();
    } else if (seed.is_number_integer() && seed.get<std::int64_t>() >= 0) {
      s.seed = static_cast<std::uint64_t>(seed.get<std::int64_t>());
    } else {
      throw Error(ErrorCode::schema_violation, "scenario.seed: must be a non-negative 64-bit integer");
    }
  });
  r.attempt([&] { s.duration_seconds = json_field::number(j, "durationSeconds", "scenario"); });
  r.attempt([&] {
    const Json& feeds = json_field::array(j, "feeds", "scenario");
    for (std::size_t i = 0; i < feeds.size(); ++i) {
      s.feeds.push_back(read_feed(feeds[i], "scenario.feeds[" + std::to_string(i) + "]", r));
    }
  });
  if (j.contains("injections")) {
    r.attempt([&] {
      const Json& inj = json_field::array(j, "injections", "scenario");
      for (std::size_t i = 0; i < inj.size(); ++i) {
        s.injections.push_back(read_injection(inj[i], "scenario.injections[" + std::to_string(i) + "]", r));
      }
    });
  }
  s.definitions = optional_key(j, "definitions");
  s.markings = optional_key(j, "markings");
  s.concept_mappings = optional_key(j, "conceptMappings");
  s.palette = optional_key(j, "palette");

  static const std::set<std::string> kKnown = {"name",        "seed",       "durationSeconds",
                                               "feeds",       "injections", "definitions",
                                               "markings",    "conceptMappings", "palette"};
  for (const auto& item : j.items()) {
    if (kKnown.count(item.key()) == 0) r.add(item.key(), "unknown key");
  }
  if (!r.violations.empty()) return {std::nullopt, r.violations};
  auto checked = check_scenario(s);
  if (!checked.empty()) return {std::nullopt, checked};
  return {std::move(s), {}};
}

Scenario parse_scenario(std::string_view text) {
  ScenarioValidation v = validate_scenario(text);
  if (!v.scenario) throw ValidationError(ErrorCode::invalid_scenario, std::move(v.violations));
  return std::move(*v.scenario);
}

OrderedJson scenario_to_json(const Scenario& s) {
  OrderedJson j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["durationSeconds"] = s.duration_seconds;
  OrderedJson feeds = OrderedJson::array();
  for (const auto& f : s.feeds) {
    OrderedJson fj;
    fj["feedId"] = f.feed_id;
    fj["partner"] = f.partner;
    fj["location"] = {{"x", f.location.x}, {"y", f.location.y}};
    fj["modality"] = std::string(to_string(f.modality));
    fj["backgroundRate"] = f.background_rate;
    OrderedJson classes = OrderedJson::array();
    for (const auto& wc : f.background_classes) {
      classes.push_back({{"classLabel", wc.class_label}, {"weight", wc.weight}});
    }
    fj["backgroundClasses"] = std::move(classes);
    OrderedJson schedule = OrderedJson::array();
    for (const auto& c : f.context_schedule) {
      schedule.push_back({{"fromSecond", c.from_second}, {"context", std::string(to_string(c.context))}});
    }
    fj["contextSchedule"] = std::move(schedule);
    fj["confidenceBand"] = {f.confidence_low, f.confidence_high};
    feeds.push_back(std::move(fj));
  }
  j["feeds"] = std::move(feeds);
  OrderedJson inj = OrderedJson::array();
  for (const auto& e : s.injections) {
    OrderedJson ej;
    ej["feedId"] = e.feed_id;
    ej["classLabel"] = e.class_label;
    ej["atSecond"] = e.at_second;
    ej["confidence"] = e.confidence;
    ej["offset"] = {{"dx", e.dx}, {"dy", e.dy}};
    inj.push_back(std::move(ej));
  }
  j["injections"] = std::move(inj);
  if (s.definitions) j["definitions"] = OrderedJson::parse(s.definitions->dump());
  if (s.markings) j["markings"] = OrderedJson::parse(s.markings->dump());
  if (s.concept_mappings) j["conceptMappings"] = OrderedJson::parse(s.concept_mappings->dump());
  if (s.palette) j["palette"] = OrderedJson::parse(s.palette->dump());
  return j;
}

std::vector<SimpleEvent> generate(const Scenario& scenario, std::uint64_t seed) {
  auto violations = check_scenario(scenario);
  if (!violations.empty()) throw ValidationError(ErrorCode::invalid_scenario, std::move(violations));

  std::vector<SimpleEvent> out;
  for (const FeedSpec& feed : scenario.feeds) {
    if (!(feed.background_rate > 0.0)) continue;
    Xoshiro256 rng(seed ^ fnv1a64(feed.feed_id));
    double total = 0.0;
    for (const auto& wc : feed.background_classes) total += wc.weight;
    double t = 0.0;
    for (std::size_t n = 1;; ++n) {
      t += -std::log1p(-rng.uniform()) / feed.background_rate;
      if (t >= scenario.duration_seconds) break;
      const double pick = rng.uniform() * total;
      double cumulative = 0.0;
      const WeightedClass* chosen = &feed.background_classes.back();
      for (const auto& wc : feed.background_classes) {
        cumulative += wc.weight;
        if (pick < cumulative) {
          chosen = &wc;
          break;
        }
      }
      const double confidence =
          feed.confidence_low + rng.uniform() * (feed.confidence_high - feed.confidence_low);
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "%06zu", n);
      out.push_back({feed.feed_id + "-bg-" + suffix, feed.feed_id, feed.modality, chosen->class_label,
                     confidence, t, feed.location, feed.partner, feed.context_at(t)});
    }
  }

  std::map<std::string, std::size_t> per_feed;
  for (const InjectedEvent& inj : scenario.injections) {
    const FeedSpec& feed = *std::find_if(scenario.feeds.begin(), scenario.feeds.end(),
                                         [&](const FeedSpec& f) { return f.feed_id == inj.feed_id; });
    const std::size_t k = ++per_feed[inj.feed_id];
    out.push_back({inj.feed_id + "-inj-" + std::to_string(k), inj.feed_id, feed.modality, inj.class_label,
                   inj.confidence, inj.at_second,
                   Location{feed.location.x + inj.dx, feed.location.y + inj.dy}, feed.partner,
                   feed.context_at(inj.at_second)});
  }
  std::sort(out.begin(), out.end(), processing_before);
  return out;
}

std::vector<SimpleEvent> generate(const Scenario& scenario) { return generate(scenario, scenario.seed); }

std::string events_to_jsonl(const std::vector<SimpleEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

}  // namespace hakf
