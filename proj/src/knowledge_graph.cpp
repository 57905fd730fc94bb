// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "hakf/palette_graph.hpp"

namespace hakf {

namespace {

bool value_matches(ValueKind kind, const Json& value) {
  switch (kind) {
    case ValueKind::text: return value.is_string();
    case ValueKind::number: return value.is_number();
    case ValueKind::timestamp:
      return value.is_string() &&
             Timestamp::try_parse_rfc3339(value.get_ref<const std::string&>()).has_value();
    case ValueKind::geopoint:
      return value.is_object() && value.size() == 2 && value.contains("x") &&
             value.contains("y") && value["x"].is_number() && value["y"].is_number();
  }
  return false;
}

std::string_view effective_concept(const Node& node) {
  return node.concept_name ? std::string_view(*node.concept_name) : kRootConcept;
}

void check_edge(const KnowledgeGraph& graph, const Palette& palette, const Edge& edge) {
  auto source = graph.nodes.find(edge.source);
  if (source == graph.nodes.end()) {
    throw Error(ErrorCode::dangling_endpoint,
                "edge \"" + edge.id + "\" source \"" + edge.source + "\" does not exist");
  }
  auto target = graph.nodes.find(edge.target);
  if (target == graph.nodes.end()) {
    throw Error(ErrorCode::dangling_endpoint,
                "edge \"" + edge.id + "\" target \"" + edge.target + "\" does not exist");
  }
  if (!edge.relation) return;
  const RelationType* relation = palette.find_relation(*edge.relation);
  if (relation == nullptr) {
    throw Error(ErrorCode::schema_violation,
                "edge \"" + edge.id + "\": unknown relation \"" + *edge.relation + "\"");
  }
  auto src_concept = effective_concept(source->second);
  auto dst_concept = effective_concept(target->second);
  if (!palette.has_concept(src_concept) || !palette.is_subconcept(src_concept, relation->domain)) {
    throw Error(ErrorCode::schema_violation,
                "edge \"" + edge.id + "\": relation \"" + relation->name + "\" requires source of concept \"" +
                    relation->domain + "\"");
  }
  if (!palette.has_concept(dst_concept) || !palette.is_subconcept(dst_concept, relation->range)) {
    throw Error(ErrorCode::schema_violation,
                "edge \"" + edge.id + "\": relation \"" + relation->name + "\" requires target of concept \"" +
                    relation->range + "\"");
  }
}

OrderedJson provenance_to_json(const Provenance& p) {
  OrderedJson j;
  j["agent"] = p.agent;
  j["partner"] = p.partner;
  j["createdAt"] = p.created_at.to_rfc3339();
  return j;
}

Provenance provenance_from_json(const Json& json, const std::string& path) {
  namespace f = json_field;
  const Json& pj = f::object(json, "provenance", path);
  const std::string ppath = path + ".provenance";
  Provenance p;
  p.agent = f::string(pj, "agent", ppath);
  p.partner = f::string(pj, "partner", ppath);
  auto created = Timestamp::try_parse_rfc3339(f::string(pj, "createdAt", ppath));
  if (!created) {
    throw Error(ErrorCode::schema_violation, ppath + ".createdAt: expected RFC-3339 timestamp");
  }
  p.created_at = *created;
  return p;
}

}  // namespace

std::vector<Violation> check_node(const Palette& palette, const Node& node) {
  std::vector<Violation> violations;
  if (!node.concept_name) return violations;
  if (!palette.has_concept(*node.concept_name)) {
    violations.push_back({"concept", "unknown concept \"" + *node.concept_name + "\""});
    return violations;
  }
  const auto schema = palette.inherited_schema(*node.concept_name);
  for (const auto& [key, value] : node.properties) {
    if (key.rfind("x-", 0) == 0) continue;
    auto spec = std::find_if(schema.begin(), schema.end(),
                             [&](const PropertySpec& s) { return s.key == key; });
    if (spec == schema.end()) {
      violations.push_back({"properties." + key,
                            "not in schema of concept \"" + *node.concept_name + "\""});
    } else if (!value_matches(spec->kind, value)) {
      violations.push_back({"properties." + key,
                            "expected " + std::string(to_string(spec->kind)) + " value"});
    }
  }
  return violations;
}

KnowledgeGraph add_node(const KnowledgeGraph& graph, const Palette& palette, Node node) {
  if (node.id.empty()) throw Error(ErrorCode::schema_violation, "node id is empty");
  if (graph.nodes.count(node.id) != 0 || graph.edges.count(node.id) != 0) {
    throw Error(ErrorCode::duplicate_id, "id \"" + node.id + "\" already in graph");
  }
  auto violations = check_node(palette, node);
  if (!violations.empty()) {
    if (violations.front().field == "concept") {
      throw Error(ErrorCode::unknown_concept,
                  "node \"" + node.id + "\": " + violations.front().rule);
    }
    throw ValidationError(ErrorCode::schema_violation, std::move(violations));
  }
  KnowledgeGraph next = graph;
  std::string id = node.id;
  next.nodes.emplace(std::move(id), std::move(node));
  return next;
}

KnowledgeGraph add_edge(const KnowledgeGraph& graph, const Palette& palette, Edge edge) {
  if (edge.id.empty()) throw Error(ErrorCode::schema_violation, "edge id is empty");
  if (graph.edges.count(edge.id) != 0 || graph.nodes.count(edge.id) != 0) {
    throw Error(ErrorCode::duplicate_id, "id \"" + edge.id + "\" already in graph");
  }
  check_edge(graph, palette, edge);
  KnowledgeGraph next = graph;
  std::string id = edge.id;
  next.edges.emplace(std::move(id), std::move(edge));
  return next;
}

void validate_graph(const KnowledgeGraph& graph, const Palette& palette) {
  for (const auto& [id, node] : graph.nodes) {
    if (id != node.id) throw Error(ErrorCode::internal, "node key/id mismatch at \"" + id + "\"");
    if (graph.edges.count(id) != 0) {
      throw Error(ErrorCode::duplicate_id, "id \"" + id + "\" used by a node and an edge");
    }
    auto violations = check_node(palette, node);
    if (!violations.empty()) throw ValidationError(ErrorCode::schema_violation, violations);
  }
  for (const auto& [id, edge] : graph.edges) {
    if (id != edge.id) throw Error(ErrorCode::internal, "edge key/id mismatch at \"" + id + "\"");
    check_edge(graph, palette, edge);
  }
}

std::vector<Node> query_by_concept(const KnowledgeGraph& graph, const Palette& palette,
                                   std::string_view concept_name) {
  palette.concept_named(concept_name);
  std::vector<Node> result;
  for (const auto& [id, node] : graph.nodes) {
    if (!node.concept_name) {
      if (concept_name == kRootConcept) result.push_back(node);
    } else if (palette.has_concept(*node.concept_name) &&
               palette.is_subconcept(*node.concept_name, concept_name)) {
      result.push_back(node);
    }
  }
  return result;
}

std::string namespaced_id(std::string_view partner, std::string_view id) {
  if (id.find('/') != std::string_view::npos) return std::string(id);
  return std::string(partner) + "/" + std::string(id);
}

KnowledgeGraph merge(const KnowledgeGraph& local, const Palette& local_palette,
                     const KnowledgeGraph& remote, const Palette& remote_palette,
                     std::string_view remote_partner, const SharingPolicy* policy) {
  auto clashes = palette_conflicts(local_palette, remote_palette);
  if (!clashes.empty()) {
    std::string names;
    for (const auto& c : clashes) names += (names.empty() ? "" : ", ") + c;
    throw Error(ErrorCode::palette_conflict, "palette conflict on concepts: " + names);
  }

  auto admitted = [&](const Node& node) {
    if (policy == nullptr) return true;
    auto concept_name = effective_concept(node);
    for (const auto& allowed : policy->allowed_concepts) {
      if (concept_name == allowed) return true;
      if (remote_palette.has_concept(concept_name) && remote_palette.has_concept(allowed) &&
          remote_palette.is_subconcept(concept_name, allowed)) {
        return true;
      }
    }
    return false;
  };

  KnowledgeGraph merged = local;
  std::set<std::string> shared_nodes;
  for (const auto& [id, node] : remote.nodes) {
    if (!admitted(node)) continue;
    Node copy = node;
    copy.id = namespaced_id(remote_partner, id);
    copy.provenance.partner = std::string(remote_partner);
    shared_nodes.insert(copy.id);
    merged.nodes.insert_or_assign(copy.id, std::move(copy));
  }
  for (const auto& [id, edge] : remote.edges) {
    Edge copy = edge;
    copy.id = namespaced_id(remote_partner, id);
    copy.source = namespaced_id(remote_partner, edge.source);
    copy.target = namespaced_id(remote_partner, edge.target);
    if (shared_nodes.count(copy.source) == 0 || shared_nodes.count(copy.target) == 0) continue;
    copy.provenance.partner = std::string(remote_partner);
    merged.edges.insert_or_assign(copy.id, std::move(copy));
  }
  return merged;
}

OrderedJson graph_to_json(const KnowledgeGraph& graph) {
  OrderedJson j;
  j["projectId"] = graph.project_id;
  OrderedJson palette;
  palette["name"] = graph.palette.name;
  palette["version"] = graph.palette.version;
  j["palette"] = std::move(palette);
  OrderedJson nodes = OrderedJson::array();
  for (const auto& [id, node] : graph.nodes) {
    OrderedJson nj;
    nj["id"] = node.id;
    nj["concept"] = node.concept_name ? OrderedJson(*node.concept_name) : OrderedJson(nullptr);
    nj["label"] = node.label;
    OrderedJson props = OrderedJson::object();
    for (const auto& [key, value] : node.properties) props[key] = OrderedJson::parse(value.dump());
    nj["properties"] = std::move(props);
    OrderedJson pos;
    pos["x"] = node.position.x;
    pos["y"] = node.position.y;
    nj["position"] = std::move(pos);
    nj["provenance"] = provenance_to_json(node.provenance);
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  OrderedJson edges = OrderedJson::array();
  for (const auto& [id, edge] : graph.edges) {
    OrderedJson ej;
    ej["id"] = edge.id;
    ej["relation"] = edge.relation ? OrderedJson(*edge.relation) : OrderedJson(nullptr);
    ej["source"] = edge.source;
    ej["target"] = edge.target;
    ej["provenance"] = provenance_to_json(edge.provenance);
    edges.push_back(std::move(ej));
  }
  j["edges"] = std::move(edges);
  return j;
}

KnowledgeGraph graph_from_json(const Json& json) {
  namespace f = json_field;
  KnowledgeGraph graph;
  graph.project_id = f::string(json, "projectId", "");
  const Json& pj = f::object(json, "palette", "");
  graph.palette.name = f::string(pj, "name", "palette");
  graph.palette.version = f::integer(pj, "version", "palette");

  const Json& nodes = f::array(json, "nodes", "");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    const Json& nj = nodes[i];
    Node node;
    node.id = f::string(nj, "id", path);
    node.concept_name = f::nullable_string(nj, "concept", path);
    node.label = f::string(nj, "label", path);
    for (const auto& [key, value] : f::object(nj, "properties", path).items()) {
      node.properties.emplace(key, value);
    }
    const Json& pos = f::object(nj, "position", path);
    node.position.x = f::number(pos, "x", path + ".position");
    node.position.y = f::number(pos, "y", path + ".position");
    node.provenance = provenance_from_json(nj, path);
    if (node.id.empty()) throw Error(ErrorCode::schema_violation, path + ".id: empty");
    if (!graph.nodes.emplace(node.id, node).second) {
      throw Error(ErrorCode::duplicate_id, path + ".id: duplicate id \"" + node.id + "\"");
    }
  }

  const Json& edges = f::array(json, "edges", "");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "edges[" + std::to_string(i) + "]";
    const Json& ej = edges[i];
    Edge edge;
    edge.id = f::string(ej, "id", path);
    edge.relation = f::nullable_string(ej, "relation", path);
    edge.source = f::string(ej, "source", path);
    edge.target = f::string(ej, "target", path);
    edge.provenance = provenance_from_json(ej, path);
    if (edge.id.empty()) throw Error(ErrorCode::schema_violation, path + ".id: empty");
    if (graph.nodes.count(edge.source) == 0) {
      throw Error(ErrorCode::schema_violation,
                  path + ".source: unknown node \"" + edge.source + "\"");
    }
    if (graph.nodes.count(edge.target) == 0) {
      throw Error(ErrorCode::schema_violation,
                  path + ".target: unknown node \"" + edge.target + "\"");
    }
    if (graph.nodes.count(edge.id) != 0 || !graph.edges.emplace(edge.id, edge).second) {
      throw Error(ErrorCode::duplicate_id, path + ".id: duplicate id \"" + edge.id + "\"");
    }
  }
  return graph;
}

std::string serialize(const KnowledgeGraph& graph) { return graph_to_json(graph).dump(); }

KnowledgeGraph deserialize(std::string_view text) { return graph_from_json(parse_json(text)); }

}  // namespace hakf
