#include "zec/program.hpp"

namespace zec {

void ModelProgram::add_clause(Clause c) {
  index_[{c.head->id, c.head->arity()}].push_back(clauses_.size());
  clauses_.push_back(std::move(c));
}

void ModelProgram::append(const ModelProgram& other) {
  for (const auto& c : other.clauses_) add_clause(c);
  for (const auto& q : other.queries_) add_query(q);
}

const std::vector<std::size_t>& ModelProgram::group(Symbol functor, std::size_t arity) const {
  static const std::vector<std::size_t> empty;
  auto it = index_.find({functor, arity});
  return it == index_.end() ? empty : it->second;
}

std::vector<Term> ModelProgram::declared(std::string_view kind) const {
  std::vector<Term> out;
  for (std::size_t i : group(intern(kind), 1)) {
    if (clauses_[i].is_fact()) out.push_back(clauses_[i].head->args[0]);
  }
  return out;
}

std::size_t ModelProgram::count_facts(std::string_view functor, std::size_t arity) const {
  std::size_t n = 0;
  for (std::size_t i : group(intern(functor), arity)) n += clauses_[i].is_fact() ? 1 : 0;
  return n;
}

std::size_t ModelProgram::count_rules(std::string_view functor, std::size_t arity) const {
  std::size_t n = 0;
  for (std::size_t i : group(intern(functor), arity)) n += clauses_[i].is_fact() ? 0 : 1;
  return n;
}

namespace {

bool same_terms(const std::vector<Term>& a, const std::vector<Term>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!structurally_equal(a[i], b[i])) return false;
  return true;
}

}  // namespace

bool operator==(const ModelProgram& a, const ModelProgram& b) {
  if (a.clauses_.size() != b.clauses_.size() || a.queries_.size() != b.queries_.size()) return false;
  for (std::size_t i = 0; i < a.clauses_.size(); ++i) {
    const auto& x = a.clauses_[i];
    const auto& y = b.clauses_[i];
    if (x.num_vars != y.num_vars || !structurally_equal(x.head, y.head) || !same_terms(x.body, y.body)) return false;
  }
  for (std::size_t i = 0; i < a.queries_.size(); ++i) {
    const auto& x = a.queries_[i];
    const auto& y = b.queries_[i];
    if (x.num_vars != y.num_vars || !same_terms(x.goals, y.goals)) return false;
    if (x.directives.size() != y.directives.size()) return false;
    for (std::size_t d = 0; d < x.directives.size(); ++d) {
      if (x.directives[d].name != y.directives[d].name || !same_terms(x.directives[d].args, y.directives[d].args))
        return false;
    }
  }
  return true;
}

std::string pretty_print(const Clause& c) {
  auto name = [&](VarId v) { return v < c.var_names.size() ? c.var_names[v] : "_G" + std::to_string(v); };
  std::string out = to_string(c.head, name);
  for (std::size_t i = 0; i < c.body.size(); ++i) {
    out += i == 0 ? " :-\n    " : ",\n    ";
    out += to_string(c.body[i], name);
  }
  return out + ".";
}

std::string pretty_print(const Query& q) {
  auto name = [&](VarId v) { return v < q.var_names.size() ? q.var_names[v] : "_G" + std::to_string(v); };
  std::string out = "?- ";
  bool first = true;
  for (const auto& d : q.directives) {
    if (!first) out += ", ";
    first = false;
    out += "!" + d.name + "(";
    for (std::size_t i = 0; i < d.args.size(); ++i) {
      if (i) out += ", ";
      out += to_string(d.args[i], name);
    }
    out += ")";
  }
  for (const auto& g : q.goals) {
    if (!first) out += ", ";
    first = false;
    out += to_string(g, name);
  }
  return out + ".";
}

std::string pretty_print(const ModelProgram& p) {
  std::string out;
  for (const auto& c : p.clauses()) {
    if (c.generated) continue;
    out += pretty_print(c) + "\n";
  }
  for (const auto& q : p.queries()) out += pretty_print(q) + "\n";
  return out;
}

}  // namespace zec
