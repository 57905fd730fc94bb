// SPDX-License-Identifier: Apache-2.0
#pragma once

// Concept palettes and the typed property graph they govern.
//
// Palettes and graphs are values: every mutation returns a new object and
// leaves the argument untouched, so snapshots can be shared across threads.
// Canonical JSON output sorts nodes/edges by id and property keys
// lexicographically, so equal graphs serialize to identical bytes.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hakf/error.hpp"
#include "hakf/util.hpp"

namespace hakf {

inline constexpr std::string_view kRootConcept = "thing";

enum class ValueKind { text, number, timestamp, geopoint };

std::string_view to_string(ValueKind kind);
ValueKind value_kind_from_string(std::string_view text);

struct PropertySpec {
  std::string key;
  ValueKind kind = ValueKind::text;

  bool operator==(const PropertySpec&) const = default;
};

struct Concept {
  std::string name;
  std::optional<std::string> parent;  // absent only for the root
  std::vector<PropertySpec> property_schema;
  bool builtin = false;

  bool operator==(const Concept&) const = default;
};

struct RelationType {
  std::string name;
  std::string domain;
  std::string range;

  bool operator==(const RelationType&) const = default;
};

class Palette {
 public:
  Palette() : Palette("default") {}
  explicit Palette(std::string name);

  const std::string& name() const noexcept { return name_; }
  std::int64_t version() const noexcept { return version_; }
  const std::map<std::string, Concept>& concepts() const noexcept { return concepts_; }
  const std::map<std::string, RelationType>& relations() const noexcept { return relations_; }

  bool has_concept(std::string_view name) const;
  /// Throws Error(unknown_concept) naming the concept.
  const Concept& concept_named(std::string_view name) const;
  const RelationType* find_relation(std::string_view name) const;

  /// Adds a concept; a missing parent defaults to the root.
  /// Errors: duplicate-id, unknown-concept (parent), schema-violation (name).
  Palette with_concept(Concept added) const;
  /// Removes a leaf concept that no relation references.
  Palette without_concept(std::string_view name) const;
  Palette with_relation(RelationType relation) const;

  /// True iff `ancestor` lies on `child`'s parent chain (reflexive).
  bool is_subconcept(std::string_view child, std::string_view ancestor) const;
  /// Parent chain from `name` up to the root, inclusive on both ends.
  std::vector<std::string> lineage(std::string_view name) const;
  /// Own schema followed by every ancestor's schema.
  std::vector<PropertySpec> inherited_schema(std::string_view name) const;

  bool operator==(const Palette&) const = default;

  friend Palette palette_from_json(const Json& json);

 private:
  std::string name_;
  std::int64_t version_ = 1;
  std::map<std::string, Concept> concepts_;
  std::map<std::string, RelationType> relations_;
};

bool is_subconcept(const Palette& palette, std::string_view child, std::string_view ancestor);

/// Concept names defined in both palettes with different parents.
std::vector<std::string> palette_conflicts(const Palette& a, const Palette& b);

OrderedJson palette_to_json(const Palette& palette);
Palette palette_from_json(const Json& json);
std::string serialize_palette(const Palette& palette);
Palette deserialize_palette(std::string_view text);

struct CanvasPosition {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const CanvasPosition&) const = default;
};

struct Provenance {
  std::string agent;
  std::string partner;
  Timestamp created_at;

  bool operator==(const Provenance&) const = default;
};

struct Node {
  std::string id;
  std::optional<std::string> concept_name;  // absent = untyped
  std::string label;
  std::map<std::string, Json> properties;
  CanvasPosition position;
  Provenance provenance;

  bool operator==(const Node&) const = default;
};

struct Edge {
  std::string id;
  std::optional<std::string> relation;
  std::string source;
  std::string target;
  Provenance provenance;

  bool operator==(const Edge&) const = default;
};

struct PaletteRef {
  std::string name;
  std::int64_t version = 1;

  bool operator==(const PaletteRef&) const = default;
};

struct KnowledgeGraph {
  std::string project_id;
  PaletteRef palette;
  std::map<std::string, Node> nodes;
  std::map<std::string, Edge> edges;

  std::size_t size() const noexcept { return nodes.size() + edges.size(); }
  bool operator==(const KnowledgeGraph&) const = default;
};

/// Schema problems of a node against a palette (empty when valid).
std::vector<Violation> check_node(const Palette& palette, const Node& node);

/// Errors: duplicate-id, schema-violation.
KnowledgeGraph add_node(const KnowledgeGraph& graph, const Palette& palette, Node node);
/// Errors: duplicate-id, dangling-endpoint, schema-violation.
KnowledgeGraph add_edge(const KnowledgeGraph& graph, const Palette& palette, Edge edge);

/// Checks every graph invariant against the palette; throws on the first.
void validate_graph(const KnowledgeGraph& graph, const Palette& palette);

std::vector<Node> query_by_concept(const KnowledgeGraph& graph, const Palette& palette,
                                   std::string_view concept_name);

/// Per-partner allow-list of concept names (subconcepts included).
/// Untyped nodes pass only when the root concept is allowed.
struct SharingPolicy {
  std::set<std::string> allowed_concepts;
};

/// Union of `local` with `remote`, remote ids rewritten to "partner/id"
/// unless they already contain '/'. Remote provenance keeps its agent and
/// records `remote_partner`. Edges whose endpoints were filtered out by the
/// policy are dropped. Idempotent. Errors: palette-conflict.
KnowledgeGraph merge(const KnowledgeGraph& local, const Palette& local_palette,
                     const KnowledgeGraph& remote, const Palette& remote_palette,
                     std::string_view remote_partner,
                     const SharingPolicy* policy = nullptr);

std::string namespaced_id(std::string_view partner, std::string_view id);

OrderedJson graph_to_json(const KnowledgeGraph& graph);
KnowledgeGraph graph_from_json(const Json& json);
std::string serialize(const KnowledgeGraph& graph);
/// Errors: SyntaxError(parse_error) with line/column; schema-violation
/// naming the offending path (including edges to unknown nodes).
KnowledgeGraph deserialize(std::string_view text);

}  // namespace hakf
