#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zec/term.hpp"

namespace zec {

/// Variables of a clause are numbered 0..num_vars-1.
struct Clause {
  Term head;
  std::vector<Term> body;
  std::vector<std::string> var_names;
  std::uint32_t num_vars = 0;
  int line = 0;
  bool generated = false;  // derived can_* fact

  bool is_fact() const { return body.empty(); }
};

struct Directive {
  std::string name;
  std::vector<Term> args;
};

struct Query {
  std::vector<Term> goals;
  std::vector<Directive> directives;
  std::vector<std::string> var_names;  // index = VarId; "_" entries are anonymous
  std::uint32_t num_vars = 0;
  std::string text;
};

using PredKey = std::pair<Symbol, std::size_t>;

class ModelProgram {
 public:
  void add_clause(Clause c);
  void add_query(Query q) { queries_.push_back(std::move(q)); }
  /// Appends the clauses and queries of `other`.
  void append(const ModelProgram& other);

  const std::vector<Clause>& clauses() const { return clauses_; }
  const std::vector<Query>& queries() const { return queries_; }
  /// Clause indices for a predicate, in program order.
  const std::vector<std::size_t>& group(Symbol functor, std::size_t arity) const;
  bool defines(Symbol functor, std::size_t arity) const { return !group(functor, arity).empty(); }

  /// Declaration patterns: arguments of fluent/1, event/1 and incr_event/1 facts.
  std::vector<Term> declared(std::string_view kind) const;
  std::size_t count_facts(std::string_view functor, std::size_t arity) const;
  std::size_t count_rules(std::string_view functor, std::size_t arity) const;

  friend bool operator==(const ModelProgram& a, const ModelProgram& b);

 private:
  std::vector<Clause> clauses_;
  std::vector<Query> queries_;
  std::map<PredKey, std::vector<std::size_t>> index_;
};

struct ParseError : std::runtime_error {
  ParseError(int line, int column, const std::string& token, const std::string& message);
  int line;
  int column;
  std::string token;
};

/// `not_` predicates accepted in bodies and queries.
bool is_supported_negation(std::string_view functor, std::size_t arity);

ModelProgram parse_program(std::string_view text);
Query parse_query(std::string_view text);

/// Surface text that parses back to an equal program.
std::string pretty_print(const ModelProgram& program);
std::string pretty_print(const Clause& clause);
std::string pretty_print(const Query& query);

}  // namespace zec
