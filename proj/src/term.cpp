#include "zec/term.hpp"

#include <cctype>
#include <deque>
#include <mutex>
#include <unordered_map>

namespace zec {

namespace {

struct SymbolTable {
  std::mutex mu;
  std::unordered_map<std::string, Symbol> ids;
  std::deque<std::string> names;
};

SymbolTable& table() {
  static SymbolTable t;
  return t;
}

}  // namespace

Symbol intern(std::string_view name) {
  auto& t = table();
  std::lock_guard lock(t.mu);
  auto it = t.ids.find(std::string(name));
  if (it != t.ids.end()) return it->second;
  Symbol s = static_cast<Symbol>(t.names.size());
  t.names.emplace_back(name);
  t.ids.emplace(std::string(name), s);
  return s;
}

const std::string& symbol_name(Symbol s) {
  auto& t = table();
  std::lock_guard lock(t.mu);
  return t.names.at(s);
}

Term make_var(VarId id) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Var;
  n->id = id;
  n->ground = false;
  return n;
}

Term make_num(Rational value) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Num;
  n->num = std::move(value);
  return n;
}

Term make_atom(Symbol functor) { return make_compound(functor, {}); }
Term make_atom(std::string_view functor) { return make_compound(intern(functor), {}); }

Term make_compound(Symbol functor, std::vector<Term> args) {
  auto n = std::make_shared<TermNode>();
  n->kind = TermKind::Compound;
  n->id = functor;
  n->args = std::move(args);
  for (const auto& a : n->args) n->ground = n->ground && a->ground;
  return n;
}

Term make_compound(std::string_view functor, std::vector<Term> args) {
  return make_compound(intern(functor), std::move(args));
}

bool structurally_equal(const Term& a, const Term& b) {
  if (a == b) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TermKind::Var: return a->id == b->id;
    case TermKind::Num: return a->num == b->num;
    case TermKind::Compound:
      if (a->id != b->id || a->args.size() != b->args.size()) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!structurally_equal(a->args[i], b->args[i])) return false;
      return true;
  }
  return false;
}

namespace sym {
#define ZEC_SYMBOL(fn, text) \
  Symbol fn() {              \
    static Symbol s = intern(text); \
    return s;                \
  }
ZEC_SYMBOL(plus, "+")
ZEC_SYMBOL(minus, "-")
ZEC_SYMBOL(times, "*")
ZEC_SYMBOL(divide, "/")
ZEC_SYMBOL(neg, "-")
ZEC_SYMBOL(eq, ".=.")
ZEC_SYMBOL(ne, ".<>.")
ZEC_SYMBOL(lt, ".<.")
ZEC_SYMBOL(le, ".=<.")
ZEC_SYMBOL(ge, ".>=.")
ZEC_SYMBOL(gt, ".>.")
#undef ZEC_SYMBOL
}  // namespace sym

bool is_arith_functor(Symbol s, std::size_t arity) {
  if (arity == 2) return s == sym::plus() || s == sym::minus() || s == sym::times() || s == sym::divide();
  return arity == 1 && s == sym::neg();
}

bool constraint_relation(Symbol s, Rel& out) {
  if (s == sym::eq()) out = Rel::Eq;
  else if (s == sym::ne()) out = Rel::Ne;
  else if (s == sym::lt()) out = Rel::Lt;
  else if (s == sym::le()) out = Rel::Le;
  else if (s == sym::ge()) out = Rel::Ge;
  else if (s == sym::gt()) out = Rel::Gt;
  else return false;
  return true;
}

Symbol constraint_symbol(Rel r) {
  switch (r) {
    case Rel::Eq: return sym::eq();
    case Rel::Ne: return sym::ne();
    case Rel::Lt: return sym::lt();
    case Rel::Le: return sym::le();
    case Rel::Ge: return sym::ge();
    case Rel::Gt: return sym::gt();
  }
  return sym::eq();
}

namespace {

void write(std::string& out, const Term& t, const std::function<std::string(VarId)>& name) {
  switch (t->kind) {
    case TermKind::Var: out += name(t->id); return;
    case TermKind::Num:
      if (t->num < 0 || (t->num.get_den() != 1 && format_rational(t->num).find('/') != std::string::npos)) {
        out += "(" + format_rational(t->num) + ")";
      } else {
        out += format_rational(t->num);
      }
      return;
    case TermKind::Compound: break;
  }
  Rel rel;
  auto operand = [&](const Term& a) {
    if (a->is_compound() && !a->is_atom()) {
      out += "(";
      write(out, a, name);
      out += ")";
    } else {
      write(out, a, name);
    }
  };
  if (t->args.size() == 2 && (is_arith_functor(t->id, 2) || constraint_relation(t->id, rel))) {
    operand(t->args[0]);
    out += " " + t->name() + " ";
    operand(t->args[1]);
    return;
  }
  if (is_arith_functor(t->id, 1)) {
    out += "-";
    operand(t->args[0]);
    return;
  }
  const std::string& f = t->name();
  bool plain = !f.empty() && std::islower(static_cast<unsigned char>(f[0]));
  for (char c : f) plain = plain && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
  out += plain ? f : "'" + f + "'";
  if (t->args.empty()) return;
  out += "(";
  for (std::size_t i = 0; i < t->args.size(); ++i) {
    if (i) out += ", ";
    write(out, t->args[i], name);
  }
  out += ")";
}

}  // namespace

std::string to_string(const Term& t, const std::function<std::string(VarId)>& name) {
  std::string out;
  write(out, t, name);
  return out;
}

std::string to_string(const Term& t) {
  return to_string(t, [](VarId v) { return "_G" + std::to_string(v); });
}

}  // namespace zec
