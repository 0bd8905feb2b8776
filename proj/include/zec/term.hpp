#pragma once

// Terms of the surface language. Nodes are immutable and shared.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "zec/constraints.hpp"
#include "zec/rational.hpp"

namespace zec {

using Symbol = std::uint32_t;

/// Interns a functor name. Thread-safe.
Symbol intern(std::string_view name);
const std::string& symbol_name(Symbol s);

enum class TermKind : std::uint8_t { Var, Num, Compound };

struct TermNode;
using Term = std::shared_ptr<const TermNode>;

struct TermNode {
  TermKind kind = TermKind::Compound;
  std::uint32_t id = 0;  // VarId for Var, Symbol for Compound
  Rational num;
  std::vector<Term> args;
  bool ground = true;

  bool is_var() const { return kind == TermKind::Var; }
  bool is_num() const { return kind == TermKind::Num; }
  bool is_compound() const { return kind == TermKind::Compound; }
  bool is_atom() const { return kind == TermKind::Compound && args.empty(); }
  std::size_t arity() const { return args.size(); }
  const std::string& name() const { return symbol_name(id); }
};

Term make_var(VarId id);
Term make_num(Rational value);
Term make_atom(Symbol functor);
Term make_atom(std::string_view functor);
Term make_compound(Symbol functor, std::vector<Term> args);
Term make_compound(std::string_view functor, std::vector<Term> args);

bool structurally_equal(const Term& a, const Term& b);

/// Renders with `name` for variables. Arithmetic and constraint functors are
/// printed infix, every compound operand parenthesized.
std::string to_string(const Term& t, const std::function<std::string(VarId)>& name);
std::string to_string(const Term& t);

/// Well-known symbols, interned once.
namespace sym {
Symbol plus();
Symbol minus();
Symbol times();
Symbol divide();
Symbol neg();
Symbol eq();   // .=.
Symbol ne();   // .<>.
Symbol lt();   // .<.
Symbol le();   // .=<.
Symbol ge();   // .>=.
Symbol gt();   // .>.
}  // namespace sym

bool is_arith_functor(Symbol s, std::size_t arity);
/// Maps .=. etc. to a relation; false if `s` is not a constraint functor.
bool constraint_relation(Symbol s, Rel& out);
Symbol constraint_symbol(Rel r);

}  // namespace zec
