// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "hakf/error.hpp"
#include "hakf/fragment.hpp"

namespace hakf {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// A variable is bound either to a time or to a location.
struct Binding {
  bool is_time = true;
  double time = 0.0;
  Location location;
};

using Bindings = std::map<std::string, Binding, std::less<>>;

std::optional<double> term_value(const fragment::Term& term, const Bindings& env) {
  if (const auto* v = std::get_if<fragment::Var>(&term)) {
    auto it = env.find(v->name);
    if (it == env.end() || !it->second.is_time) return std::nullopt;
    return it->second.time;
  }
  if (const auto* n = std::get_if<fragment::Number>(&term)) return n->value;
  const auto& d = std::get<fragment::Dist>(term);
  auto a = env.find(d.a);
  auto b = env.find(d.b);
  if (a == env.end() || b == env.end() || a->second.is_time || b->second.is_time) {
    return std::nullopt;
  }
  return distance(a->second.location, b->second.location);
}

std::optional<double> expr_value(const fragment::Expr& expr, const Bindings& env) {
  auto lhs = term_value(expr.lhs, env);
  if (!lhs) return std::nullopt;
  if (!expr.minus) return lhs;
  auto rhs = term_value(*expr.minus, env);
  if (!rhs) return std::nullopt;
  return *lhs - *rhs;
}

void collect_vars(const fragment::Term& term, std::set<std::string>& out) {
  if (const auto* v = std::get_if<fragment::Var>(&term)) out.insert(v->name);
  if (const auto* d = std::get_if<fragment::Dist>(&term)) {
    out.insert(d->a);
    out.insert(d->b);
  }
}

// Search state for one rule: event atoms are bound to facts in body order;
// each comparison is checked as soon as the last of its variables is bound.
class RuleMatcher {
 public:
  RuleMatcher(const fragment::Rule& rule, const std::vector<Fact>& facts)
      : rule_(rule), facts_(facts) {
    std::set<std::string> bound;
    for (const auto& item : rule.body) {
      if (const auto* atom = std::get_if<fragment::EventAtom>(&item)) {
        atoms_.push_back(atom);
        anchor_.push_back(atom->time_var == rule.head.start_var ||
                          atom->time_var == rule.head.end_var);
      }
    }
    // Schedule each comparison after the atom that completes its variables;
    // comparisons whose variables no atom binds can never hold.
    checks_after_.resize(atoms_.size());
    for (const auto& item : rule.body) {
      const auto* cmp = std::get_if<fragment::Comparison>(&item);
      if (cmp == nullptr) continue;
      std::set<std::string> vars;
      collect_vars(cmp->lhs.lhs, vars);
      if (cmp->lhs.minus) collect_vars(*cmp->lhs.minus, vars);
      collect_vars(cmp->rhs.lhs, vars);
      if (cmp->rhs.minus) collect_vars(*cmp->rhs.minus, vars);
      std::optional<std::size_t> last;
      bool all_bound = true;
      for (const auto& v : vars) {
        std::optional<std::size_t> first_binder;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
          if (atoms_[i]->time_var == v || atoms_[i]->loc_var == v) {
            first_binder = i;
            break;
          }
        }
        if (!first_binder) {
          all_bound = false;
          break;
        }
        last = std::max(last.value_or(0), *first_binder);
      }
      if (!all_bound) {
        unsatisfiable_ = true;
      } else if (!last) {
        constant_checks_.push_back(cmp);
      } else {
        checks_after_[*last].push_back(cmp);
      }
    }
  }

  bool derivable() {
    if (unsatisfiable_) return false;
    Bindings env;
    for (const auto* cmp : constant_checks_) {
      if (!holds(*cmp, env)) return false;
    }
    used_.assign(facts_.size(), 0);
    chosen_.assign(atoms_.size(), 0);
    return search(0, env);
  }

 private:
  static bool holds(const fragment::Comparison& cmp, const Bindings& env) {
    auto lhs = expr_value(cmp.lhs, env);
    auto rhs = expr_value(cmp.rhs, env);
    if (!lhs || !rhs) return false;
    return cmp.op == fragment::CmpOp::ge ? *lhs >= *rhs : *lhs <= *rhs;
  }

  static bool bind(Bindings& env, const std::string& var, const Binding& value) {
    auto [it, inserted] = env.emplace(var, value);
    if (inserted) return true;
    const Binding& old = it->second;
    if (old.is_time != value.is_time) return false;
    return old.is_time ? old.time == value.time : old.location == value.location;
  }

  bool may_use(std::size_t atom, std::size_t fact) const {
    if (used_[fact] == 0) return true;
    if (!anchor_[atom]) return false;
    // Shared only among anchor atoms.
    for (std::size_t j = 0; j < atom; ++j) {
      if (chosen_[j] == fact && !anchor_[j]) return false;
    }
    return true;
  }

  bool search(std::size_t index, const Bindings& env) {
    if (index == atoms_.size()) return true;
    const fragment::EventAtom& atom = *atoms_[index];
    for (std::size_t f = 0; f < facts_.size(); ++f) {
      const Fact& fact = facts_[f];
      if (fact.label != atom.label || !may_use(index, f)) continue;
      Bindings next = env;
      if (!bind(next, atom.time_var, Binding{true, fact.time, {}})) continue;
      if (!bind(next, atom.loc_var, Binding{false, 0.0, fact.location})) continue;
      bool ok = true;
      for (const auto* cmp : checks_after_[index]) {
        if (!holds(*cmp, next)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      ++used_[f];
      chosen_[index] = f;
      bool found = search(index + 1, next);
      --used_[f];
      if (found) return true;
    }
    return false;
  }

  const fragment::Rule& rule_;
  const std::vector<Fact>& facts_;
  std::vector<const fragment::EventAtom*> atoms_;
  std::vector<bool> anchor_;
  std::vector<std::vector<const fragment::Comparison*>> checks_after_;
  std::vector<const fragment::Comparison*> constant_checks_;
  std::vector<int> used_;
  std::vector<std::size_t> chosen_;
  bool unsatisfiable_ = false;
};

}  // namespace

std::string fragment_checksum(std::string_view text) { return "fnv1a64:" + hex64(fnv1a64(text)); }

LogicFragment make_fragment(std::string text, std::string source_definition) {
  LogicFragment f;
  f.checksum = fragment_checksum(text);
  f.text = std::move(text);
  f.source_definition = std::move(source_definition);
  return f;
}

fragment::RuleSet parse_fragment(std::string_view text) { return fragment::parse(text); }

std::string fragment_file_text(const LogicFragment& fragment) {
  return "% source: " + fragment.source_definition + "\n% checksum: " + fragment.checksum + "\n" +
         fragment.text + "\n";
}

LogicFragment read_fragment_file(std::string_view file_text) {
  std::string source;
  std::string checksum;
  std::size_t pos = 0;
  while (pos < file_text.size() && file_text[pos] == '%') {
    std::size_t end = file_text.find('\n', pos);
    if (end == std::string_view::npos) end = file_text.size();
    std::string_view line = file_text.substr(pos, end - pos);
    constexpr std::string_view kSource = "% source: ";
    constexpr std::string_view kChecksum = "% checksum: ";
    if (line.substr(0, kSource.size()) == kSource) source = line.substr(kSource.size());
    if (line.substr(0, kChecksum.size()) == kChecksum) checksum = line.substr(kChecksum.size());
    pos = end + 1;
  }
  if (source.empty() || checksum.empty()) {
    throw Error(ErrorCode::schema_violation, "fragment file: missing source/checksum header");
  }
  std::string_view body = pos < file_text.size() ? file_text.substr(pos) : std::string_view{};
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
  // Canonicalize so whitespace edits do not invalidate the file.
  std::string text = fragment::render(fragment::parse(body));
  LogicFragment f = make_fragment(std::move(text), std::move(source));
  if (f.checksum != checksum) {
    throw Error(ErrorCode::schema_violation,
                "fragment file: checksum " + checksum + " does not match body (" + f.checksum + ")");
  }
  return f;
}

std::string render_fact(const ProbabilisticFact& fact) {
  return format_number(fact.probability) + "::simple_event(" + fact.atom.label + ", " +
         format_number(fact.atom.time) + ", loc(" + format_number(fact.atom.location.x) + ", " +
         format_number(fact.atom.location.y) + ")).";
}

void check_facts(const FactSet& facts) {
  for (std::size_t i = 0; i < facts.size(); ++i) {
    const auto& f = facts[i];
    if (!(f.probability >= 0.0 && f.probability <= 1.0)) {
      throw Error(ErrorCode::schema_violation,
                  "facts[" + std::to_string(i) + "]: probability outside [0,1]");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (facts[j].atom == f.atom) {
        throw Error(ErrorCode::schema_violation,
                    "facts[" + std::to_string(i) + "]: duplicate atom " + render_fact(f));
      }
    }
  }
}

bool derivable(const fragment::RuleSet& rules, const std::vector<Fact>& facts,
               std::string_view query) {
  const std::string wanted = lowercase(query);
  for (const auto& rule : rules.rules) {
    if (rule.head.name != wanted) continue;
    if (RuleMatcher(rule, facts).derivable()) return true;
  }
  return false;
}

double evaluate_exact(const fragment::RuleSet& rules, const FactSet& facts, std::string_view query) {
  if (facts.size() > kMaxExactFacts) {
    throw Error(ErrorCode::too_many_facts,
                "exact evaluation is limited to " + std::to_string(kMaxExactFacts) + " facts, got " +
                    std::to_string(facts.size()));
  }
  check_facts(facts);
  const std::size_t n = facts.size();
  const std::uint64_t worlds = std::uint64_t{1} << n;
  double total = 0.0;
  std::vector<Fact> world;
  world.reserve(n);
  for (std::uint64_t mask = 0; mask < worlds; ++mask) {
    double mass = 1.0;
    world.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) {
        mass *= facts[i].probability;
        world.push_back(facts[i].atom);
      } else {
        mass *= 1.0 - facts[i].probability;
      }
    }
    if (mass == 0.0) continue;
    if (derivable(rules, world, query)) total += mass;
  }
  return std::clamp(total, 0.0, 1.0);
}

double evaluate_exact(const LogicFragment& fragment, const FactSet& facts, std::string_view query) {
  return evaluate_exact(fragment::parse(fragment.text), facts, query);
}

}  // namespace hakf
