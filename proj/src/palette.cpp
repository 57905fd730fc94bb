// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "hakf/palette_graph.hpp"

namespace hakf {

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::text: return "text";
    case ValueKind::number: return "number";
    case ValueKind::timestamp: return "timestamp";
    case ValueKind::geopoint: return "geopoint";
  }
  return "text";
}

ValueKind value_kind_from_string(std::string_view text) {
  if (text == "text") return ValueKind::text;
  if (text == "number") return ValueKind::number;
  if (text == "timestamp") return ValueKind::timestamp;
  if (text == "geopoint") return ValueKind::geopoint;
  throw Error(ErrorCode::schema_violation, "unknown value kind \"" + std::string(text) + "\"");
}

Palette::Palette(std::string name) : name_(std::move(name)) {
  Concept root;
  root.name = std::string(kRootConcept);
  root.builtin = true;
  concepts_.emplace(root.name, std::move(root));
}

bool Palette::has_concept(std::string_view name) const {
  return concepts_.find(std::string(name)) != concepts_.end();
}

const Concept& Palette::concept_named(std::string_view name) const {
  auto it = concepts_.find(std::string(name));
  if (it == concepts_.end()) {
    throw Error(ErrorCode::unknown_concept, "unknown concept \"" + std::string(name) + "\"");
  }
  return it->second;
}

const RelationType* Palette::find_relation(std::string_view name) const {
  auto it = relations_.find(std::string(name));
  return it == relations_.end() ? nullptr : &it->second;
}

Palette Palette::with_concept(Concept added) const {
  if (!is_identifier(added.name)) {
    throw Error(ErrorCode::schema_violation,
                "concept name \"" + added.name + "\" is not an identifier");
  }
  if (has_concept(added.name)) {
    throw Error(ErrorCode::duplicate_id, "concept \"" + added.name + "\" already exists");
  }
  if (!added.parent) added.parent = std::string(kRootConcept);
  concept_named(*added.parent);
  std::set<std::string> keys;
  for (const auto& spec : added.property_schema) {
    if (!keys.insert(spec.key).second) {
      throw Error(ErrorCode::schema_violation,
                  "concept \"" + added.name + "\" declares property \"" + spec.key + "\" twice");
    }
  }
  added.builtin = false;
  Palette next = *this;
  next.concepts_.emplace(added.name, std::move(added));
  ++next.version_;
  return next;
}

Palette Palette::without_concept(std::string_view name) const {
  const Concept& target = concept_named(name);
  if (target.builtin) {
    throw Error(ErrorCode::schema_violation,
                "builtin concept \"" + target.name + "\" cannot be removed");
  }
  for (const auto& [other, c] : concepts_) {
    if (c.parent && *c.parent == name) {
      throw Error(ErrorCode::schema_violation,
                  "concept \"" + target.name + "\" has subconcept \"" + other + "\"");
    }
  }
  for (const auto& [rname, r] : relations_) {
    if (r.domain == name || r.range == name) {
      throw Error(ErrorCode::schema_violation,
                  "concept \"" + target.name + "\" is used by relation \"" + rname + "\"");
    }
  }
  Palette next = *this;
  next.concepts_.erase(std::string(name));
  ++next.version_;
  return next;
}

Palette Palette::with_relation(RelationType relation) const {
  if (!is_identifier(relation.name)) {
    throw Error(ErrorCode::schema_violation,
                "relation name \"" + relation.name + "\" is not an identifier");
  }
  if (relations_.count(relation.name) != 0) {
    throw Error(ErrorCode::duplicate_id, "relation \"" + relation.name + "\" already exists");
  }
  concept_named(relation.domain);
  concept_named(relation.range);
  Palette next = *this;
  next.relations_.emplace(relation.name, std::move(relation));
  ++next.version_;
  return next;
}

std::vector<std::string> Palette::lineage(std::string_view name) const {
  std::vector<std::string> chain;
  const Concept* current = &concept_named(name);
  while (true) {
    chain.push_back(current->name);
    if (!current->parent) break;
    if (chain.size() > concepts_.size()) {
      throw Error(ErrorCode::schema_violation, "cycle in concept hierarchy at \"" + current->name + "\"");
    }
    current = &concept_named(*current->parent);
  }
  return chain;
}

bool Palette::is_subconcept(std::string_view child, std::string_view ancestor) const {
  concept_named(ancestor);
  for (const auto& name : lineage(child)) {
    if (name == ancestor) return true;
  }
  return false;
}

std::vector<PropertySpec> Palette::inherited_schema(std::string_view name) const {
  std::vector<PropertySpec> schema;
  for (const auto& c : lineage(name)) {
    const auto& own = concept_named(c).property_schema;
    schema.insert(schema.end(), own.begin(), own.end());
  }
  return schema;
}

bool is_subconcept(const Palette& palette, std::string_view child, std::string_view ancestor) {
  return palette.is_subconcept(child, ancestor);
}

std::vector<std::string> palette_conflicts(const Palette& a, const Palette& b) {
  std::vector<std::string> clashes;
  for (const auto& [name, c] : a.concepts()) {
    auto it = b.concepts().find(name);
    if (it != b.concepts().end() && it->second.parent != c.parent) clashes.push_back(name);
  }
  return clashes;
}

OrderedJson palette_to_json(const Palette& palette) {
  OrderedJson j;
  j["name"] = palette.name();
  j["version"] = palette.version();
  OrderedJson concepts = OrderedJson::array();
  for (const auto& [name, c] : palette.concepts()) {
    OrderedJson cj;
    cj["name"] = c.name;
    cj["parent"] = c.parent ? OrderedJson(*c.parent) : OrderedJson(nullptr);
    OrderedJson schema = OrderedJson::array();
    for (const auto& spec : c.property_schema) {
      OrderedJson sj;
      sj["key"] = spec.key;
      sj["valueKind"] = std::string(to_string(spec.kind));
      schema.push_back(std::move(sj));
    }
    cj["propertySchema"] = std::move(schema);
    concepts.push_back(std::move(cj));
  }
  j["concepts"] = std::move(concepts);
  OrderedJson relations = OrderedJson::array();
  for (const auto& [name, r] : palette.relations()) {
    OrderedJson rj;
    rj["name"] = r.name;
    rj["domain"] = r.domain;
    rj["range"] = r.range;
    relations.push_back(std::move(rj));
  }
  j["relations"] = std::move(relations);
  return j;
}

Palette palette_from_json(const Json& json) {
  namespace f = json_field;
  Palette palette(f::string(json, "name", ""));
  palette.concepts_.clear();

  const Json& concepts = f::array(json, "concepts", "");
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    const std::string path = "concepts[" + std::to_string(i) + "]";
    const Json& cj = concepts[i];
    Concept c;
    c.name = f::string(cj, "name", path);
    c.parent = f::nullable_string(cj, "parent", path);
    if (cj.contains("propertySchema")) {
      const Json& schema = f::array(cj, "propertySchema", path);
      for (std::size_t k = 0; k < schema.size(); ++k) {
        const std::string spath = path + ".propertySchema[" + std::to_string(k) + "]";
        PropertySpec spec;
        spec.key = f::string(schema[k], "key", spath);
        try {
          spec.kind = value_kind_from_string(f::string(schema[k], "valueKind", spath));
        } catch (const Error& e) {
          throw Error(ErrorCode::schema_violation, spath + ".valueKind: " + e.what());
        }
        c.property_schema.push_back(std::move(spec));
      }
    }
    c.builtin = c.name == kRootConcept;
    if (c.builtin && c.parent) {
      throw Error(ErrorCode::schema_violation, path + ".parent: root concept has no parent");
    }
    if (!c.builtin && !c.parent) {
      throw Error(ErrorCode::schema_violation, path + ".parent: required for \"" + c.name + "\"");
    }
    if (!palette.concepts_.emplace(c.name, c).second) {
      throw Error(ErrorCode::duplicate_id, path + ".name: duplicate concept \"" + c.name + "\"");
    }
  }
  if (!palette.has_concept(kRootConcept)) {
    throw Error(ErrorCode::schema_violation, "concepts: missing root concept \"thing\"");
  }
  for (const auto& [name, c] : palette.concepts_) {
    if (c.parent && !palette.has_concept(*c.parent)) {
      throw Error(ErrorCode::unknown_concept,
                  "concept \"" + name + "\" has unknown parent \"" + *c.parent + "\"");
    }
    // lineage() throws on cycles.
    palette.lineage(name);
  }

  if (json.contains("relations")) {
    const Json& relations = f::array(json, "relations", "");
    for (std::size_t i = 0; i < relations.size(); ++i) {
      const std::string path = "relations[" + std::to_string(i) + "]";
      RelationType r{f::string(relations[i], "name", path),
                     f::string(relations[i], "domain", path),
                     f::string(relations[i], "range", path)};
      palette.concept_named(r.domain);
      palette.concept_named(r.range);
      if (!palette.relations_.emplace(r.name, r).second) {
        throw Error(ErrorCode::duplicate_id, path + ".name: duplicate relation \"" + r.name + "\"");
      }
    }
  }
  palette.version_ = f::integer(json, "version", "");
  return palette;
}

std::string serialize_palette(const Palette& palette) { return palette_to_json(palette).dump(); }

Palette deserialize_palette(std::string_view text) { return palette_from_json(parse_json(text)); }

}  // namespace hakf
