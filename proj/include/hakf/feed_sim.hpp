// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic scenario simulator standing in for classifier services.
//
// PRNG: xoshiro256** with one substream per feed. The substream state is
// four successive SplitMix64 outputs seeded with (seed XOR fnv1a64(feedId)).
// A uniform double is (next() >> 11) * 2^-53. For every background event
// the draws are, in order: inter-arrival -log1p(-u)/rate, class by walking
// the weights in file order until u*total < cumulative, confidence
// lo + u*(hi-lo). Generation for a feed stops at the first arrival
// >= durationSeconds.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hakf/error.hpp"
#include "hakf/simple_event.hpp"

namespace hakf {

class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);
  std::uint64_t next() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

struct WeightedClass {
  std::string class_label;
  double weight = 0.0;

  bool operator==(const WeightedClass&) const = default;
};

struct ContextChange {
  double from_second = 0.0;
  Context context = Context::day;

  bool operator==(const ContextChange&) const = default;
};

struct FeedSpec {
  std::string feed_id;
  std::string partner;
  Location location;
  Modality modality = Modality::video;
  double background_rate = 0.0;  // events per second
  std::vector<WeightedClass> background_classes;
  std::vector<ContextChange> context_schedule;
  double confidence_low = 0.55;
  double confidence_high = 0.95;

  Context context_at(double second) const;

  bool operator==(const FeedSpec&) const = default;
};

struct InjectedEvent {
  std::string feed_id;
  std::string class_label;
  double at_second = 0.0;
  double confidence = 0.0;
  double dx = 0.0;
  double dy = 0.0;

  bool operator==(const InjectedEvent&) const = default;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  double duration_seconds = 0.0;
  std::vector<FeedSpec> feeds;
  std::vector<InjectedEvent> injections;
  // Optional run configuration carried alongside the scenario; generate()
  // ignores it.
  std::optional<Json> definitions;
  std::optional<Json> markings;
  std::optional<Json> concept_mappings;
  std::optional<Json> palette;

  bool operator==(const Scenario&) const = default;
};

inline constexpr std::string_view kScenarioSuffix = ".scenario.json";

/// Field-level invariant check on an already-parsed scenario.
std::vector<Violation> check_scenario(const Scenario& scenario);

struct ScenarioValidation {
  std::optional<Scenario> scenario;
  std::vector<Violation> violations;
};

/// Parses and checks; never throws for schema problems, only for text
/// that is not JSON (SyntaxError(parse_error)).
ScenarioValidation validate_scenario(std::string_view text);

/// validate_scenario, throwing ValidationError(invalid_scenario).
Scenario parse_scenario(std::string_view text);
OrderedJson scenario_to_json(const Scenario& scenario);

/// Background ids are "<feed>-bg-NNNNNN" (1-based, per feed); injection ids
/// are "<feed>-inj-K" (1-based, per feed, file order). Output sorted by
/// (timestamp, id). Errors: ValidationError(invalid_scenario).
std::vector<SimpleEvent> generate(const Scenario& scenario);
/// Same with the scenario's seed replaced.
std::vector<SimpleEvent> generate(const Scenario& scenario, std::uint64_t seed);

std::string events_to_jsonl(const std::vector<SimpleEvent>& events);

}  // namespace hakf
