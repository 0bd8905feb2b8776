#include "zec/incremental.hpp"

#include <algorithm>

namespace zec {

namespace {

Term substitute(const Term& t, const std::vector<Term>& values) {
  if (t->ground) return t;
  if (t->is_var()) {
    if (t->id < values.size() && !values[t->id]->is_var()) return values[t->id];
    return t;
  }
  std::vector<Term> args;
  args.reserve(t->args.size());
  for (const auto& a : t->args) args.push_back(substitute(a, values));
  return make_compound(t->id, std::move(args));
}

std::string num_text(const Rational& r) {
  return "(" + format_rational(r) + ")";
}

// Query text for the next occurrence of `pattern` after the frontier.
Query occurrence_query(const Term& pattern, const Rational& frontier, const Rational& max_time) {
  auto namer = [](VarId v) { return "E" + std::to_string(v); };
  std::string text = "?- IncrT .>. " + num_text(frontier) + ", IncrT .=<. " + num_text(max_time) +
                     ", happens(" + to_string(pattern, namer) + ", IncrT).";
  return parse_query(text);
}

Rational point_of(const Answer& a, VarId t) {
  if (a.values[t]->is_num()) return a.values[t]->num;
  ConstraintStore store;
  for (const auto& c : a.residual) store = store.assert_constraint(c);
  if (auto v = store.value_of(t)) return *v;
  throw NonPointOccurrence("occurrence time is not a single point: " + a.text());
}

}  // namespace

std::optional<Rational> incr_max_time(const Query& query) {
  for (const auto& d : query.directives) {
    if (d.name == "incr_max_time" && d.args.size() == 1 && d.args[0]->is_num()) return d.args[0]->num;
  }
  return std::nullopt;
}

IncrementalState run_incremental(const Engine& engine, const Rational& max_time, const SolveOptions& options) {
  IncrementalState state;
  state.max_time = max_time;
  auto patterns = engine.program().declared("incr_event");
  for (;;) {
    ++state.iterations;
    SolveOptions opts = options;
    opts.incr_facts = state.facts;
    opts.answer_limit = 0;
    std::optional<Rational> best;
    std::vector<Term> found;
    std::size_t deepest = 0;
    for (const auto& pattern : patterns) {
      Query q = occurrence_query(pattern, state.frontier, max_time);
      auto t_var = static_cast<VarId>(std::find(q.var_names.begin(), q.var_names.end(), "IncrT") - q.var_names.begin());
      const Term& event_goal = q.goals.back()->args[0];
      SolveStats stats;
      auto answers = engine.solve_all(q, opts, &stats);
      deepest = std::max(deepest, stats.max_depth);
      for (const auto& a : answers) {
        Rational t = point_of(a, t_var);
        Term ev = substitute(event_goal, a.values);
        if (!best || t < *best) {
          best = t;
          found.clear();
        }
        if (t == *best && std::none_of(found.begin(), found.end(), [&](const Term& f) { return structurally_equal(f, ev); }))
          found.push_back(ev);
      }
    }
    if (!best) {
      state.complete_until = max_time;
      break;
    }
    // each fact rests on the ones before it, so the chain shares one depth budget
    state.chain_depth += deepest;
    if (state.chain_depth > options.depth_limit) throw DepthExhausted(options.depth_limit);
    for (auto& ev : found) state.facts.push_back({ev, *best});
    state.frontier = *best;
    state.complete_until = *best;
    if (state.frontier >= max_time) break;
  }
  return state;
}

std::vector<Answer> query_with_kb(const Engine& engine, const IncrementalState& state, const Query& query,
                                  SolveOptions options, SolveStats* stats) {
  options.incr_facts = state.facts;
  options.incr_complete = state.complete_until;
  return engine.solve_all(query, options, stats);
}

}  // namespace zec
