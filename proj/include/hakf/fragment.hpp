// SPDX-License-Identifier: Apache-2.0
#pragma once

// ProbLog-style logic fragments: AST, canonical renderer, parser, and the
// exact possible-worlds evaluator.
//
// Grammar (whitespace-insensitive, '%' starts a line comment):
//
//   ruleset    := rule*
//   rule       := head ':-' body '.'
//   head       := 'complex_event' '(' ATOM ',' VAR ',' VAR ')'
//   body       := item (',' item)*
//   item       := 'simple_event' '(' ATOM ',' VAR ',' VAR ')' | comparison
//   comparison := expr ('>=' | '=<') expr
//   expr       := term ('-' term)?
//   term       := VAR | NUMBER | 'dist' '(' VAR ',' VAR ')'
//
// Canonical text puts one rule per line, ", " between items, " :- " after
// the head and single spaces around operators.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hakf/simple_event.hpp"

namespace hakf::fragment {

struct Var {
  std::string name;
  bool operator==(const Var&) const = default;
};

struct Number {
  double value = 0.0;
  bool operator==(const Number&) const = default;
};

struct Dist {
  std::string a;
  std::string b;
  bool operator==(const Dist&) const = default;
};

using Term = std::variant<Var, Number, Dist>;

/// `lhs` or `lhs - rhs`.
struct Expr {
  Term lhs;
  std::optional<Term> minus;
  bool operator==(const Expr&) const = default;
};

enum class CmpOp { ge, le };

struct Comparison {
  Expr lhs;
  CmpOp op = CmpOp::le;
  Expr rhs;
  bool operator==(const Comparison&) const = default;
};

struct EventAtom {
  std::string label;
  std::string time_var;
  std::string loc_var;
  bool operator==(const EventAtom&) const = default;
};

using BodyItem = std::variant<EventAtom, Comparison>;

struct Head {
  std::string name;
  std::string start_var;
  std::string end_var;
  bool operator==(const Head&) const = default;
};

struct Rule {
  Head head;
  std::vector<BodyItem> body;
  bool operator==(const Rule&) const = default;
};

struct RuleSet {
  std::vector<Rule> rules;
  bool operator==(const RuleSet&) const = default;
};

std::string render(const Rule& rule);
/// Rules joined by '\n', no trailing newline.
std::string render(const RuleSet& rules);

/// Errors: SyntaxError(syntax_error) with line/column and the expected
/// token set.
RuleSet parse(std::string_view text);

}  // namespace hakf::fragment

namespace hakf {

/// Compiled output of one definition.
struct LogicFragment {
  std::string text;
  std::string source_definition;
  std::string checksum;  // "fnv1a64:<16 hex digits>" of `text`

  bool operator==(const LogicFragment&) const = default;
};

std::string fragment_checksum(std::string_view text);
LogicFragment make_fragment(std::string text, std::string source_definition);

fragment::RuleSet parse_fragment(std::string_view text);

/// File form: "% source: <name>\n% checksum: <checksum>\n<text>\n".
std::string fragment_file_text(const LogicFragment& fragment);
/// Errors: syntax-error; schema-violation when the header is missing or the
/// checksum does not match the body.
LogicFragment read_fragment_file(std::string_view file_text);

/// Ground `simple_event(label, time, loc(x, y))`.
struct Fact {
  std::string label;
  double time = 0.0;
  Location location;

  bool operator==(const Fact&) const = default;
};

struct ProbabilisticFact {
  double probability = 0.0;
  Fact atom;

  bool operator==(const ProbabilisticFact&) const = default;
};

using FactSet = std::vector<ProbabilisticFact>;

inline constexpr std::size_t kMaxExactFacts = 20;

/// "0.9::simple_event(explosion, 10, loc(0, 0))."
std::string render_fact(const ProbabilisticFact& fact);

/// Errors: schema-violation (probability outside [0,1], duplicate atoms).
void check_facts(const FactSet& facts);

/// Whether `query` (a head name, compared case-insensitively) follows from
/// `facts` all being true. Body atoms bind distinct facts, except that the
/// atoms carrying the head's start and end variables may share one.
bool derivable(const fragment::RuleSet& rules, const std::vector<Fact>& facts,
               std::string_view query);

/// Sum over all 2^n worlds of the world's mass when `query` is derivable.
/// Errors: too-many-facts (limit kMaxExactFacts), schema-violation.
double evaluate_exact(const fragment::RuleSet& rules, const FactSet& facts, std::string_view query);
double evaluate_exact(const LogicFragment& fragment, const FactSet& facts, std::string_view query);

}  // namespace hakf
