// SPDX-License-Identifier: Apache-2.0
#pragma once

// Complex-event definitions and their compilation into logic fragments.
//
// A definition names one initiator, one terminator, and any number of
// supporting constituents. Each constituent matches either a classifier
// label directly or a palette concept, which is expanded through the
// label→concept mapping (subconcepts included) before matching or
// compiling. Spatial constraints are anchored on the initiator.

#include <string>
#include <string_view>
#include <vector>

#include "hakf/error.hpp"
#include "hakf/fragment.hpp"
#include "hakf/palette_graph.hpp"
#include "hakf/tellability.hpp"

namespace hakf {

enum class Role { initiator, terminator, supporting };
enum class MatcherKind { class_label, concept_name };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);
std::string_view to_string(MatcherKind kind);
MatcherKind matcher_kind_from_string(std::string_view text);

struct ConstituentSpec {
  std::string matcher;
  MatcherKind kind = MatcherKind::class_label;
  Role role = Role::supporting;
  int min_count = 1;

  bool operator==(const ConstituentSpec&) const = default;
};

struct ComplexEventDefinition {
  std::string name;
  std::vector<ConstituentSpec> constituents;
  double window_seconds = 0.0;  // max initiator→terminator span
  double radius_meters = 0.0;   // max distance of any constituent from the initiator
  bool enabled = true;

  bool operator==(const ComplexEventDefinition&) const = default;
};

/// Every broken invariant, each naming its field. Empty means valid.
std::vector<Violation> validate(const ComplexEventDefinition& definition);
/// Per-definition violations plus name uniqueness across the set.
std::vector<Violation> validate(const std::vector<ComplexEventDefinition>& definitions);

OrderedJson definition_to_json(const ComplexEventDefinition& definition);
/// Structural decoding only; call validate() for the invariants.
ComplexEventDefinition definition_from_json(const Json& json, const std::string& path = "definition");

/// Palette + mapping used to expand concept matchers.
struct ConceptContext {
  const Palette& palette;
  const ConceptMapping& mapping;
};

/// A constituent with its matcher expanded to concrete labels (sorted).
struct ResolvedSpec {
  std::string matcher;
  Role role = Role::supporting;
  int min_count = 1;
  std::vector<std::string> labels;

  bool matches(std::string_view label) const;
  bool operator==(const ResolvedSpec&) const = default;
};

/// Definition in the form the engine and compiler consume.
struct ResolvedDefinition {
  std::string name;
  double window_seconds = 0.0;
  double radius_meters = 0.0;
  ResolvedSpec initiator;
  ResolvedSpec terminator;
  std::vector<ResolvedSpec> supporting;  // definition order

  bool operator==(const ResolvedDefinition&) const = default;
};

/// Errors: ValidationError(invalid_definition) wrapping validation
/// violations, "unmapped concept" for concept matchers that expand to no
/// label, and overlapping supporting label sets.
ResolvedDefinition resolve(const ComplexEventDefinition& definition,
                           const ConceptContext* concepts = nullptr);

OrderedJson resolved_to_json(const ResolvedDefinition& definition);
ResolvedDefinition resolved_from_json(const Json& json, const std::string& path = "definition");

/// Head atom for a definition name (lowercased).
std::string head_atom(std::string_view definition_name);

/// Deterministic canonical rule text: one rule per combination of concrete
/// labels. Errors: as resolve().
LogicFragment compile(const ComplexEventDefinition& definition,
                      const ConceptContext* concepts = nullptr);
LogicFragment compile(const ResolvedDefinition& definition);

}  // namespace hakf
