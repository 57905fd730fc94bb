// SPDX-License-Identifier: Apache-2.0
//
// Batch oracle for the streaming engine. It works on the whole sorted log
// at once: for each initiator and each terminator candidate it computes the
// log position at which that candidate would first admit a complete
// binding, takes the minimum over candidates, and reads the selection off
// that position. No instance state, no expiry.

#include <algorithm>
#include <limits>
#include <tuple>

#include "hakf/cep_engine.hpp"

namespace hakf {

namespace {

constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

struct Candidate {
  Detection detection;
  std::size_t completed_at = 0;
  std::size_t initiator_at = 0;
};

}  // namespace

std::vector<Detection> match_brute(const std::vector<ResolvedDefinition>& definitions,
                                   const std::vector<SimpleEvent>& event_log,
                                   const MarkingSet& markings) {
  if (event_log.size() > kMaxBruteLog) {
    throw Error(ErrorCode::log_too_large, "match_brute accepts at most " + std::to_string(kMaxBruteLog) +
                                              " events, got " + std::to_string(event_log.size()));
  }
  std::vector<SimpleEvent> log = event_log;
  std::sort(log.begin(), log.end(), [](const SimpleEvent& a, const SimpleEvent& b) {
    return std::tie(a.timestamp, a.id) < std::tie(b.timestamp, b.id);
  });
  const std::size_t n = log.size();
  std::vector<bool> visible(n);
  for (std::size_t i = 0; i < n; ++i) visible[i] = !markings.is_suppressed(log[i]);

  std::vector<Candidate> found;
  for (const ResolvedDefinition& def : definitions) {
    auto within = [&](std::size_t anchor, std::size_t k) {
      return log[k].timestamp - log[anchor].timestamp <= def.window_seconds &&
             distance(log[anchor].location, log[k].location) <= def.radius_meters;
    };

    for (std::size_t i = 0; i < n; ++i) {
      if (!visible[i] || std::find(def.initiator.labels.begin(), def.initiator.labels.end(),
                                   log[i].class_label) == def.initiator.labels.end()) {
        continue;
      }
      // Positions of qualifying supporting events per spec, in log order.
      std::vector<std::vector<std::size_t>> support(def.supporting.size());
      for (std::size_t k = i + 1; k < n; ++k) {
        if (!visible[k] || !within(i, k)) continue;
        for (std::size_t s = 0; s < def.supporting.size(); ++s) {
          const auto& labels = def.supporting[s].labels;
          if (std::find(labels.begin(), labels.end(), log[k].class_label) != labels.end()) {
            support[s].push_back(k);
          }
        }
      }

      std::size_t best_completion = kNever;
      std::size_t best_terminator = kNever;
      for (std::size_t c = i; c < n; ++c) {
        const auto& tl = def.terminator.labels;
        if (!visible[c] || std::find(tl.begin(), tl.end(), log[c].class_label) == tl.end() ||
            !within(i, c)) {
          continue;
        }
        // Earliest position at which this terminator has all its support.
        std::size_t completion = c;
        for (std::size_t s = 0; s < def.supporting.size() && completion != kNever; ++s) {
          std::size_t seen = 0;
          std::size_t reached = kNever;
          for (std::size_t k : support[s]) {
            if (log[k].timestamp > log[c].timestamp) break;
            if (++seen == static_cast<std::size_t>(def.supporting[s].min_count)) {
              reached = k;
              break;
            }
          }
          completion = reached == kNever ? kNever : std::max(completion, reached);
        }
        if (completion < best_completion) {
          best_completion = completion;
          best_terminator = c;
        }
      }
      if (best_completion == kNever) continue;

      const SimpleEvent& init = log[i];
      const SimpleEvent& term = log[best_terminator];
      Detection d;
      d.id = def.name + "@" + init.id;
      d.definition_name = def.name;
      d.interval_start = init.timestamp;
      d.interval_end = term.timestamp;
      d.location = init.location;
      d.emitted_at = log[best_completion].timestamp;
      d.constituents.push_back({Role::initiator, init.id, -1});
      d.constituents.push_back({Role::terminator, term.id, -1});
      double p = init.confidence;
      if (best_terminator != i) p *= term.confidence;
      for (std::size_t s = 0; s < def.supporting.size(); ++s) {
        std::vector<std::size_t> pool;
        for (std::size_t k : support[s]) {
          if (k <= best_completion && log[k].timestamp <= term.timestamp) pool.push_back(k);
        }
        std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
          return std::make_tuple(-log[a].confidence, log[a].id) <
                 std::make_tuple(-log[b].confidence, log[b].id);
        });
        for (int m = 0; m < def.supporting[s].min_count; ++m) {
          d.constituents.push_back({Role::supporting, log[pool[m]].id, static_cast<int>(s)});
          p *= log[pool[m]].confidence;
        }
      }
      d.probability = p;
      found.push_back({std::move(d), best_completion, i});
    }
  }

  std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
    return std::make_tuple(a.detection.interval_end, a.completed_at, std::cref(a.detection.definition_name),
                           a.initiator_at) <
           std::make_tuple(b.detection.interval_end, b.completed_at, std::cref(b.detection.definition_name),
                           b.initiator_at);
  });
  std::vector<Detection> out;
  out.reserve(found.size());
  for (auto& c : found) out.push_back(std::move(c.detection));
  return out;
}

}  // namespace hakf
