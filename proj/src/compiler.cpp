// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "hakf/event_definitions.hpp"

namespace hakf {

namespace {

bool is_atom_text(std::string_view s) {
  if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

bool is_definition_name(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string spec_path(std::size_t i) { return "constituents[" + std::to_string(i) + "]"; }

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::initiator: return "initiator";
    case Role::terminator: return "terminator";
    case Role::supporting: return "supporting";
  }
  return "supporting";
}

Role role_from_string(std::string_view text) {
  if (text == "initiator") return Role::initiator;
  if (text == "terminator") return Role::terminator;
  if (text == "supporting") return Role::supporting;
  throw Error(ErrorCode::schema_violation, "unknown role \"" + std::string(text) + "\"");
}

std::string_view to_string(MatcherKind kind) {
  return kind == MatcherKind::class_label ? "class" : "concept";
}

MatcherKind matcher_kind_from_string(std::string_view text) {
  if (text == "class") return MatcherKind::class_label;
  if (text == "concept") return MatcherKind::concept_name;
  throw Error(ErrorCode::schema_violation, "unknown matcherKind \"" + std::string(text) + "\"");
}

std::vector<Violation> validate(const ComplexEventDefinition& def) {
  std::vector<Violation> out;
  if (!is_definition_name(def.name)) {
    out.push_back({"name", "must match [A-Za-z][A-Za-z0-9_]*"});
  }
  int initiators = 0;
  int terminators = 0;
  for (std::size_t i = 0; i < def.constituents.size(); ++i) {
    const auto& spec = def.constituents[i];
    if (spec.matcher.empty()) {
      out.push_back({spec_path(i) + ".matcher", "must be nonempty"});
    } else if (spec.kind == MatcherKind::class_label && !is_atom_text(spec.matcher)) {
      out.push_back({spec_path(i) + ".matcher", "class label must match [a-z][a-z0-9_]*"});
    }
    if (spec.min_count < 1) {
      out.push_back({spec_path(i) + ".minCount", "must be positive"});
    } else if (spec.role != Role::supporting && spec.min_count != 1) {
      out.push_back({spec_path(i) + ".minCount", "must be 1 for initiator and terminator"});
    }
    if (spec.role == Role::initiator) ++initiators;
    if (spec.role == Role::terminator) ++terminators;
  }
  if (initiators == 0) out.push_back({"constituents", "missing initiator"});
  if (initiators > 1) out.push_back({"constituents", "more than one initiator"});
  if (terminators == 0) out.push_back({"constituents", "missing terminator"});
  if (terminators > 1) out.push_back({"constituents", "more than one terminator"});

  // Class-level overlap; concept matchers are checked after expansion.
  for (std::size_t i = 0; i < def.constituents.size(); ++i) {
    const auto& a = def.constituents[i];
    if (a.role != Role::supporting || a.kind != MatcherKind::class_label) continue;
    for (std::size_t j = 0; j < def.constituents.size(); ++j) {
      const auto& b = def.constituents[j];
      if (i == j || b.kind != MatcherKind::class_label || b.matcher != a.matcher) continue;
      if (b.role != Role::supporting || j < i) {
        out.push_back({spec_path(i) + ".matcher",
                       "supporting label \"" + a.matcher + "\" overlaps " + spec_path(j)});
      }
    }
  }

  if (!(std::isfinite(def.window_seconds) && def.window_seconds > 0.0)) {
    out.push_back({"windowSeconds", "must be positive"});
  }
  if (!(std::isfinite(def.radius_meters) && def.radius_meters > 0.0)) {
    out.push_back({"radiusMeters", "must be positive"});
  }
  return out;
}

std::vector<Violation> validate(const std::vector<ComplexEventDefinition>& defs) {
  std::vector<Violation> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    const std::string prefix = "definitions[" + std::to_string(i) + "].";
    for (auto v : validate(defs[i])) {
      v.field = prefix + v.field;
      out.push_back(std::move(v));
    }
    if (!names.insert(head_atom(defs[i].name)).second) {
      out.push_back({prefix + "name", "duplicate definition name \"" + defs[i].name + "\""});
    }
  }
  return out;
}

OrderedJson definition_to_json(const ComplexEventDefinition& def) {
  OrderedJson j;
  j["name"] = def.name;
  OrderedJson constituents = OrderedJson::array();
  for (const auto& spec : def.constituents) {
    OrderedJson sj;
    sj["matcher"] = spec.matcher;
    sj["matcherKind"] = std::string(to_string(spec.kind));
    sj["role"] = std::string(to_string(spec.role));
    sj["minCount"] = spec.min_count;
    constituents.push_back(std::move(sj));
  }
  j["constituents"] = std::move(constituents);
  j["windowSeconds"] = def.window_seconds;
  j["radiusMeters"] = def.radius_meters;
  j["enabled"] = def.enabled;
  return j;
}

ComplexEventDefinition definition_from_json(const Json& json, const std::string& path) {
  namespace f = json_field;
  ComplexEventDefinition def;
  def.name = f::string(json, "name", path);
  const Json& constituents = f::array(json, "constituents", path);
  for (std::size_t i = 0; i < constituents.size(); ++i) {
    const std::string cpath = path + "." + spec_path(i);
    const Json& cj = constituents[i];
    ConstituentSpec spec;
    spec.matcher = f::string(cj, "matcher", cpath);
    if (cj.contains("matcherKind")) {
      try {
        spec.kind = matcher_kind_from_string(f::string(cj, "matcherKind", cpath));
      } catch (const Error& e) {
        throw Error(ErrorCode::schema_violation, cpath + ".matcherKind: " + e.what());
      }
    }
    try {
      spec.role = role_from_string(f::string(cj, "role", cpath));
    } catch (const Error& e) {
      throw Error(ErrorCode::schema_violation, cpath + ".role: " + e.what());
    }
    if (cj.contains("minCount")) spec.min_count = static_cast<int>(f::integer(cj, "minCount", cpath));
    def.constituents.push_back(std::move(spec));
  }
  def.window_seconds = f::number(json, "windowSeconds", path);
  def.radius_meters = f::number(json, "radiusMeters", path);
  if (json.contains("enabled")) def.enabled = f::boolean(json, "enabled", path);
  return def;
}

bool ResolvedSpec::matches(std::string_view label) const {
  return std::binary_search(labels.begin(), labels.end(), label);
}

std::string head_atom(std::string_view name) {
  std::string out(name);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

ResolvedDefinition resolve(const ComplexEventDefinition& def, const ConceptContext* concepts) {
  auto violations = validate(def);
  if (!violations.empty()) throw ValidationError(ErrorCode::invalid_definition, violations);

  ResolvedDefinition out;
  out.name = def.name;
  out.window_seconds = def.window_seconds;
  out.radius_meters = def.radius_meters;

  std::vector<std::size_t> supporting_index;
  for (std::size_t i = 0; i < def.constituents.size(); ++i) {
    const auto& spec = def.constituents[i];
    ResolvedSpec r;
    r.matcher = spec.matcher;
    r.role = spec.role;
    r.min_count = spec.min_count;
    if (spec.kind == MatcherKind::class_label) {
      r.labels = {spec.matcher};
    } else {
      if (concepts != nullptr && concepts->palette.has_concept(spec.matcher)) {
        r.labels = concepts->mapping.labels_for(spec.matcher, concepts->palette);
      }
      if (r.labels.empty()) {
        violations.push_back({spec_path(i) + ".matcher", "unmapped concept \"" + spec.matcher + "\""});
        continue;
      }
      for (const auto& label : r.labels) {
        if (!is_atom_text(label)) {
          violations.push_back({spec_path(i) + ".matcher",
                                "mapped label \"" + label + "\" is not a valid atom"});
        }
      }
    }
    switch (spec.role) {
      case Role::initiator: out.initiator = std::move(r); break;
      case Role::terminator: out.terminator = std::move(r); break;
      case Role::supporting:
        out.supporting.push_back(std::move(r));
        supporting_index.push_back(i);
        break;
    }
  }
  if (violations.empty()) {
    auto overlaps = [](const ResolvedSpec& a, const ResolvedSpec& b) {
      for (const auto& label : a.labels) {
        if (b.matches(label)) return true;
      }
      return false;
    };
    for (std::size_t s = 0; s < out.supporting.size(); ++s) {
      const auto& spec = out.supporting[s];
      const std::string field = spec_path(supporting_index[s]) + ".matcher";
      if (overlaps(spec, out.initiator) || overlaps(spec, out.terminator)) {
        violations.push_back({field, "supporting labels overlap the initiator or terminator"});
      }
      for (std::size_t t = 0; t < s; ++t) {
        if (overlaps(spec, out.supporting[t])) {
          violations.push_back({field, "supporting labels overlap " + spec_path(supporting_index[t])});
        }
      }
    }
  }
  if (!violations.empty()) throw ValidationError(ErrorCode::invalid_definition, violations);
  return out;
}

OrderedJson resolved_to_json(const ResolvedDefinition& def) {
  auto spec_json = [](const ResolvedSpec& s) {
    OrderedJson j;
    j["matcher"] = s.matcher;
    j["role"] = std::string(to_string(s.role));
    j["minCount"] = s.min_count;
    j["labels"] = s.labels;
    return j;
  };
  OrderedJson j;
  j["name"] = def.name;
  j["windowSeconds"] = def.window_seconds;
  j["radiusMeters"] = def.radius_meters;
  j["initiator"] = spec_json(def.initiator);
  j["terminator"] = spec_json(def.terminator);
  OrderedJson sup = OrderedJson::array();
  for (const auto& s : def.supporting) sup.push_back(spec_json(s));
  j["supporting"] = std::move(sup);
  return j;
}

ResolvedDefinition resolved_from_json(const Json& json, const std::string& path) {
  namespace f = json_field;
  auto spec_from = [](const Json& sj, const std::string& spath) {
    ResolvedSpec s;
    s.matcher = f::string(sj, "matcher", spath);
    s.role = role_from_string(f::string(sj, "role", spath));
    s.min_count = static_cast<int>(f::integer(sj, "minCount", spath));
    for (const auto& label : f::array(sj, "labels", spath)) {
      if (!label.is_string()) throw Error(ErrorCode::schema_violation, spath + ".labels: expected strings");
      s.labels.push_back(label.get<std::string>());
    }
    std::sort(s.labels.begin(), s.labels.end());
    return s;
  };
  ResolvedDefinition def;
  def.name = f::string(json, "name", path);
  def.window_seconds = f::number(json, "windowSeconds", path);
  def.radius_meters = f::number(json, "radiusMeters", path);
  def.initiator = spec_from(f::object(json, "initiator", path), path + ".initiator");
  def.terminator = spec_from(f::object(json, "terminator", path), path + ".terminator");
  const Json& sup = f::array(json, "supporting", path);
  for (std::size_t i = 0; i < sup.size(); ++i) {
    def.supporting.push_back(spec_from(sup[i], path + ".supporting[" + std::to_string(i) + "]"));
  }
  return def;
}

namespace {

fragment::Comparison compare(fragment::Expr lhs, fragment::CmpOp op, fragment::Expr rhs) {
  return fragment::Comparison{std::move(lhs), op, std::move(rhs)};
}

fragment::Expr var(const std::string& name) { return fragment::Expr{fragment::Var{name}, std::nullopt}; }

fragment::Expr number(double v) { return fragment::Expr{fragment::Number{v}, std::nullopt}; }

}  // namespace

LogicFragment compile(const ResolvedDefinition& def) {
  using namespace fragment;

  // One slot per atom: initiator, terminator, then each supporting spec
  // repeated minCount times.
  struct Slot {
    const ResolvedSpec* spec;
    std::size_t group;  // repeated slots of one spec share a group
  };
  std::vector<Slot> slots{{&def.initiator, 0}, {&def.terminator, 1}};
  for (std::size_t s = 0; s < def.supporting.size(); ++s) {
    for (int k = 0; k < def.supporting[s].min_count; ++k) slots.push_back({&def.supporting[s], s + 2});
  }

  const std::string name = head_atom(def.name);
  std::vector<std::string> tvar(slots.size());
  std::vector<std::string> lvar(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    tvar[i] = "T" + std::to_string(i + 1);
    lvar[i] = "L" + std::to_string(i + 1);
  }

  std::vector<Comparison> constraints;
  constraints.push_back(compare(var(tvar[1]), CmpOp::ge, var(tvar[0])));
  constraints.push_back(compare(Expr{Var{tvar[1]}, Term{Var{tvar[0]}}}, CmpOp::le,
                                number(def.window_seconds)));
  constraints.push_back(compare(Expr{Dist{lvar[0], lvar[1]}, std::nullopt}, CmpOp::le,
                                number(def.radius_meters)));
  for (std::size_t i = 2; i < slots.size(); ++i) {
    constraints.push_back(compare(var(tvar[0]), CmpOp::le, var(tvar[i])));
    constraints.push_back(compare(var(tvar[i]), CmpOp::le, var(tvar[1])));
    constraints.push_back(compare(Expr{Dist{lvar[0], lvar[i]}, std::nullopt}, CmpOp::le,
                                  number(def.radius_meters)));
  }

  // Enumerate label choices; repeated slots of one spec take labels in
  // non-decreasing order so each multiset appears once.
  RuleSet rules;
  std::vector<std::size_t> choice(slots.size(), 0);
  auto emit = [&] {
    Rule rule;
    rule.head = Head{name, tvar[0], tvar[1]};
    for (std::size_t i = 0; i < slots.size(); ++i) {
      rule.body.emplace_back(EventAtom{slots[i].spec->labels[choice[i]], tvar[i], lvar[i]});
    }
    for (const auto& c : constraints) rule.body.emplace_back(c);
    rules.rules.push_back(std::move(rule));
  };
  auto recurse = [&](auto&& self, std::size_t i) -> void {
    if (i == slots.size()) {
      emit();
      return;
    }
    std::size_t start = 0;
    if (i > 0 && slots[i].group == slots[i - 1].group && i >= 2) start = choice[i - 1];
    for (std::size_t c = start; c < slots[i].spec->labels.size(); ++c) {
      choice[i] = c;
      self(self, i + 1);
    }
  };
  recurse(recurse, 0);

  return make_fragment(render(rules), def.name);
}

LogicFragment compile(const ComplexEventDefinition& def, const ConceptContext* concepts) {
  return compile(resolve(def, concepts));
}

}  // namespace hakf
