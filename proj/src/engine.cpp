#include "zec/engine.hpp"

#include <pthread.h>

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <unordered_map>

namespace zec {

namespace {

// The axioms are ordinary clauses. Literal order inside each body is
// significant: guard, then happens, then the effect body.
const char* kAxioms = R"(
holdsAt(F, T) :- T .>=. 0, initiallyP(F), not_stoppedIn(0, F, T).
holdsAt(F, T2) :- T1 .>. 0, T1 .<. T2,
    can_initiates(E, F, T1), happens(E, T1), initiates(E, F, T1),
    not_stoppedIn(T1, F, T2).
holdsAt(F2, T2) :- T1 .>. 0, T1 .<. T2,
    can_trajectory(F1, T1, F2, T2), can_initiates(E, F1, T1), happens(E, T1), initiates(E, F1, T1),
    trajectory(F1, T1, F2, T2), not_stoppedIn(T1, F1, T2).

stoppedIn(T1, F, T2) :- T1 .<. T, T .<. T2,
    can_terminates(E, F, T), happens(E, T), terminates(E, F, T).
stoppedIn(T1, F, T2) :- T1 .<. T, T .<. T2,
    can_releases(E, F, T), happens(E, T), releases(E, F, T).
startedIn(T1, F, T2) :- T1 .<. T, T .<. T2,
    can_initiates(E, F, T), happens(E, T), initiates(E, F, T).
startedIn(T1, F, T2) :- T1 .<. T, T .<. T2,
    can_releases(E, F, T), happens(E, T), releases(E, F, T).

'$holdsAt_cf'(F2, T2, F1) :- T1 .>. 0, T1 .<. T2,
    can_trajectory(F1, T1, F2, T2), can_initiates(E, F1, T1), happens(E, T1), initiates(E, F1, T1),
    trajectory(F1, T1, F2, T2), not_stoppedIn(T1, F1, T2).
'$holdsAt_cf_dur'(F2, T2, F1, Dur) :- T2 .=. T1 + Dur, T1 .>. 0,
    can_trajectory(F1, T1, F2, T2), can_initiates(E, F1, T1), happens(E, T1), initiates(E, F1, T1),
    trajectory(F1, T1, F2, T2), not_stoppedIn(T1, F1, T2).
'$holdsAt_delay'(F, T2, Dur) :- T2 .=. T1 + Dur, T1 .>. 0,
    can_initiates(E, F, T1), happens(E, T1), initiates(E, F, T1), not_stoppedIn(T1, F, T2).
'$holdsAt_event'(F, T2, Dur, E) :- T2 .=. T1 + Dur, T1 .>. 0,
    can_initiates(E, F, T1), happens(E, T1), initiates(E, F, T1), not_stoppedIn(T1, F, T2).
'$not_holdsAt_delay'(F, T2, Dur) :- T2 .=. T1 + Dur, T1 .>. 0,
    can_terminates(E, F, T1), happens(E, T1), terminates(E, F, T1), not_startedIn(T1, F, T2).
)";

void run_on_large_stack(const std::function<void()>& fn) {
  struct Ctx {
    const std::function<void()>* fn;
    std::exception_ptr err;
  } ctx{&fn, nullptr};
  pthread_attr_t attr;
  pthread_attr_init(&attr);
  pthread_attr_setstacksize(&attr, std::size_t{1} << 30);
  pthread_t th;
  auto body = [](void* p) -> void* {
    auto* c = static_cast<Ctx*>(p);
    try {
      (*c->fn)();
    } catch (...) {
      c->err = std::current_exception();
    }
    return nullptr;
  };
  if (pthread_create(&th, &attr, body, &ctx) != 0) {
    pthread_attr_destroy(&attr);
    fn();
    return;
  }
  pthread_join(th, nullptr);
  pthread_attr_destroy(&attr);
  if (ctx.err) std::rethrow_exception(ctx.err);
}

/// Variant check: equal up to a consistent renaming of variables.
bool variant(const Term& a, const Term& b, std::map<VarId, VarId>& ab, std::map<VarId, VarId>& ba) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TermKind::Num: return a->num == b->num;
    case TermKind::Var: {
      auto [i, fresh_a] = ab.try_emplace(a->id, b->id);
      auto [j, fresh_b] = ba.try_emplace(b->id, a->id);
      return i->second == b->id && j->second == a->id;
    }
    case TermKind::Compound:
      if (a->id != b->id || a->arity() != b->arity()) return false;
      for (std::size_t k = 0; k < a->arity(); ++k)
        if (!variant(a->args[k], b->args[k], ab, ba)) return false;
      return true;
  }
  return false;
}

bool variant(const std::vector<Term>& a, const std::vector<Term>& b) {
  if (a.size() != b.size()) return false;
  std::map<VarId, VarId> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!variant(a[i], b[i], ab, ba)) return false;
  return true;
}

/// One-way match of a declaration pattern against a term; pattern variables match anything.
bool matches(const Term& pattern, const Term& t) {
  if (pattern->is_var()) return true;
  if (t->is_var()) return false;
  if (pattern->kind != t->kind) return false;
  if (pattern->is_num()) return pattern->num == t->num;
  if (pattern->id != t->id || pattern->arity() != t->arity()) return false;
  for (std::size_t i = 0; i < t->arity(); ++i)
    if (!t->args[i]->is_var() && !matches(pattern->args[i], t->args[i])) return false;
  return true;
}

struct Symbols {
  Symbol holdsAt = intern("holdsAt");
  Symbol happens = intern("happens");
  Symbol incr_happens = intern("incr_happens");
  Symbol stoppedIn = intern("stoppedIn");
  Symbol startedIn = intern("startedIn");
  Symbol not_stoppedIn = intern("not_stoppedIn");
  Symbol not_startedIn = intern("not_startedIn");
  Symbol not_holdsAt = intern("not_holdsAt");
  Symbol not_happens = intern("not_happens");
  Symbol cf = intern("$holdsAt_cf");
  Symbol cf_dur = intern("$holdsAt_cf_dur");
  Symbol delay = intern("$holdsAt_delay");
  Symbol event = intern("$holdsAt_event");
  Symbol not_delay = intern("$not_holdsAt_delay");
};

const Symbols& S() {
  static const Symbols s;
  return s;
}

}  // namespace

// ---------------------------------------------------------------- can_* facts

ModelProgram generate_can_facts(const ModelProgram& program) {
  ModelProgram out = program;
  struct Spec {
    const char* pred;
    const char* can;
    std::size_t arity;
    std::size_t key_a, key_b;  // argument positions that identify the pattern
  };
  static const Spec specs[] = {{"initiates", "can_initiates", 3, 0, 1},
                               {"terminates", "can_terminates", 3, 0, 1},
                               {"releases", "can_releases", 3, 0, 1},
                               {"trajectory", "can_trajectory", 4, 0, 2}};
  for (const auto& spec : specs) {
    Symbol can = intern(spec.can);
    std::vector<std::vector<Term>> user_keys;
    for (std::size_t i : program.group(can, spec.arity)) {
      const Term& h = program.clauses()[i].head;
      user_keys.push_back({h->args[spec.key_a], h->args[spec.key_b]});
    }
    std::vector<Term> emitted;
    for (std::size_t i : program.group(intern(spec.pred), spec.arity)) {
      const Clause& c = program.clauses()[i];
      std::vector<Term> key{c.head->args[spec.key_a], c.head->args[spec.key_b]};
      bool suppressed = std::any_of(user_keys.begin(), user_keys.end(),
                                    [&](const std::vector<Term>& k) { return variant(k, key); });
      if (suppressed) continue;
      Term head = make_compound(can, c.head->args);
      bool dup = std::any_of(emitted.begin(), emitted.end(),
                             [&](const Term& e) { return variant(e->args, head->args); });
      if (dup) continue;
      emitted.push_back(head);
      Clause fact;
      fact.head = head;
      fact.var_names = c.var_names;
      fact.num_vars = c.num_vars;
      fact.line = c.line;
      fact.generated = true;
      out.add_clause(std::move(fact));
    }
  }
  return out;
}

// ---------------------------------------------------------------- rendering

std::string render_interval(const Bound& lo, const Bound& hi) {
  std::string out = lo.present ? (lo.strict ? "(" : "[") + format_rational(lo.value) : "(-inf";
  out += ", ";
  out += hi.present ? format_rational(hi.value) + (hi.strict ? ")" : "]") : "+inf)";
  return out;
}

std::string render_warning(const ZenoChainReport& r) {
  return "warning: Zeno-descending chain of events detected for " + r.event_text + ": happens/2 expanded at depths " +
         std::to_string(r.node_depths[0]) + ", " + std::to_string(r.node_depths[1]) + " and " +
         std::to_string(r.node_depths[2]) + " with " + r.current_var + " < " + r.newer_var + " < " + r.older_var +
         ", all constrained to the interval " + render_interval(r.lower, r.upper) + ". Derivation halted.";
}

std::string Answer::var_name(VarId v) const {
  if (v < names.size() && names[v] != "_") return names[v];
  return "_G" + std::to_string(v);
}

std::vector<std::string> Answer::lines() const {
  auto namer = [this](VarId v) { return var_name(v); };
  std::vector<std::string> out;
  std::map<VarId, std::vector<const LinConstraint*>> groups;
  for (const auto& c : residual) {
    if (c.expr.is_constant()) continue;
    groups[c.expr.terms().front().first].push_back(&c);
  }
  for (VarId q = 0; q < values.size(); ++q) {
    if (names[q] == "_" || names[q].empty() || names[q][0] == '_') continue;
    const Term& v = values[q];
    if (!v->is_var()) {
      out.push_back(names[q] + " = " + to_string(v, namer));
      continue;
    }
    if (v->id != q) {
      out.push_back(names[q] + " = " + var_name(v->id));
      continue;
    }
    auto it = groups.find(q);
    if (it == groups.end()) continue;
    const auto& cs = it->second;
    if (cs.size() == 1 && cs[0]->rel == Rel::Eq && cs[0]->expr.terms().size() == 1) {
      out.push_back(render_constraint(*cs[0], namer));
      continue;
    }
    std::vector<std::string> parts;
    for (const auto* c : cs) parts.push_back(render_constraint(*c, namer));
    out.push_back(render_residual(names[q], parts));
  }
  if (out.empty()) out.push_back("true");
  return out;
}

std::string Answer::text() const {
  std::string s;
  for (const auto& l : lines()) {
    if (!s.empty()) s += ", ";
    s += l;
  }
  return s;
}

// ---------------------------------------------------------------- engine

Engine::Engine(ModelProgram program, bool preprocess)
    : program_(preprocess ? generate_can_facts(program) : std::move(program)), axioms_(parse_program(kAxioms)) {
  fluents_ = program_.declared("fluent");
  events_ = program_.declared("event");
  auto incr = program_.declared("incr_event");
  events_.insert(events_.end(), incr.begin(), incr.end());
  incr_events_ = std::move(incr);
}

Engine::~Engine() = default;

bool Engine::is_incremental(const Term& event) const {
  if (event->is_var()) return false;
  return std::any_of(incr_events_.begin(), incr_events_.end(), [&](const Term& p) { return matches(p, event); });
}

bool Engine::is_declared(std::string_view kind, const Term& t) const {
  const auto& list = kind == "fluent" ? fluents_ : events_;
  return std::any_of(list.begin(), list.end(), [&](const Term& p) { return matches(p, t); });
}

class Machine {
 public:
  Machine(const Engine& engine, const SolveOptions& opts, const Query& query, const Engine::AnswerSink& sink)
      : eng_(engine), opts_(opts), query_(query), sink_(sink) {
    alloc(query.num_vars);
  }

  void run() {
    auto root = std::make_shared<Node>();
    GoalsP goals;
    for (auto it = query_.goals.rbegin(); it != query_.goals.rend(); ++it) {
      goals = std::make_shared<const GoalCell>(GoalCell{*it, root, goals});
    }
    solve(goals, [this] { return emit(); });
  }

  SolveStats stats;

 private:
  // ---- derivation tree -------------------------------------------------
  enum class NegKind : std::uint8_t { None, Stopped, Started, Other };

  struct Node {
    std::shared_ptr<const Node> parent;
    std::size_t depth = 0;
    const Node* last_happens = nullptr;  // nearest happens expansion at or above
    const Node* neg_node = nullptr;      // innermost negation context at or above
    Term event, time;                    // set on happens expansions
    NegKind neg = NegKind::None;
    Term neg_a, neg_f, neg_b;
  };
  using NodeP = std::shared_ptr<const Node>;

  struct GoalCell {
    Term goal;
    NodeP parent;
    std::shared_ptr<const GoalCell> next;
  };
  using GoalsP = std::shared_ptr<const GoalCell>;
  using Cont = std::function<bool()>;

  // ---- bindings and store ---------------------------------------------
  struct Mark {
    std::size_t trail;
    ConstraintStore store;
  };

  VarId alloc(std::uint32_t n) {
    VarId base = static_cast<VarId>(bind_.size());
    bind_.resize(bind_.size() + n);
    in_store_.resize(in_store_.size() + n, 0);
    return base;
  }

  Mark save() const { return {trail_.size(), store_}; }

  void restore(const Mark& m) {
    while (trail_.size() > m.trail) {
      auto [v, is_store] = trail_.back();
      trail_.pop_back();
      if (is_store) {
        in_store_[v] = 0;
      } else {
        bind_[v] = nullptr;
      }
    }
    store_ = m.store;
  }

  void bind(VarId v, Term t) {
    bind_[v] = std::move(t);
    trail_.emplace_back(v, false);
  }

  void register_var(VarId v) {
    if (in_store_[v]) return;
    in_store_[v] = 1;
    trail_.emplace_back(v, true);
  }

  Term deref(Term t) const {
    while (t->is_var() && bind_[t->id]) t = bind_[t->id];
    return t;
  }

  /// Fully substituted copy.
  Term resolve(const Term& t0) const {
    Term t = deref(t0);
    if (t->ground || t->is_var()) return t;
    std::vector<Term> args;
    args.reserve(t->arity());
    bool changed = false;
    for (const auto& a : t->args) {
      args.push_back(resolve(a));
      changed = changed || args.back() != a;
    }
    return changed ? make_compound(t->id, std::move(args)) : t;
  }

  bool same(const Term& x, const Term& y) const {
    Term a = deref(x), b = deref(y);
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
      case TermKind::Var: return a->id == b->id;
      case TermKind::Num: return a->num == b->num;
      case TermKind::Compound:
        if (a->id != b->id || a->arity() != b->arity()) return false;
        for (std::size_t i = 0; i < a->arity(); ++i)
          if (!same(a->args[i], b->args[i])) return false;
        return true;
    }
    return false;
  }

  bool assert_lin(const LinConstraint& c) {
    for (const auto& t : c.expr.terms()) register_var(t.first);
    store_ = store_.assert_constraint(c);
    return store_.is_satisfiable();
  }

  bool bind_value(VarId v, const Term& t) {
    if (in_store_[v]) {
      if (!t->is_num()) return false;
      if (!assert_lin({LinExpr::variable(v) - LinExpr(t->num), Rel::Eq})) return false;
    }
    bind(v, t);
    return true;
  }

  bool unify(const Term& x, const Term& y) {
    Term a = deref(x), b = deref(y);
    if (a == b) return true;
    if (a->is_var() && b->is_var()) {
      if (a->id == b->id) return true;
      bool sa = in_store_[a->id], sb = in_store_[b->id];
      if (sa && sb) {
        if (!assert_lin({LinExpr::variable(a->id) - LinExpr::variable(b->id), Rel::Eq})) return false;
        bind(a->id, b);
      } else if (sa) {
        bind(b->id, a);
      } else if (sb) {
        bind(a->id, b);
      } else if (a->id > b->id) {
        bind(a->id, b);
      } else {
        bind(b->id, a);
      }
      return true;
    }
    if (a->is_var()) return bind_value(a->id, b);
    if (b->is_var()) return bind_value(b->id, a);
    if (a->kind != b->kind) return false;
    if (a->is_num()) return a->num == b->num;
    if (a->id != b->id || a->arity() != b->arity()) return false;
    for (std::size_t i = 0; i < a->arity(); ++i)
      if (!unify(a->args[i], b->args[i])) return false;
    return true;
  }

  Term rename(const Term& t, VarId base) const {
    if (t->ground) return t;
    if (t->is_var()) return make_var(base + t->id);
    std::vector<Term> args;
    args.reserve(t->arity());
    for (const auto& a : t->args) args.push_back(rename(a, base));
    return make_compound(t->id, std::move(args));
  }

  LinExpr linearize(const Term& t0) {
    Term t = deref(t0);
    if (t->is_num()) return LinExpr(t->num);
    if (t->is_var()) {
      register_var(t->id);
      return LinExpr::variable(t->id);
    }
    if (is_arith_functor(t->id, t->arity())) {
      if (t->arity() == 1) return linearize(t->args[0]) * Rational(-1);
      LinExpr l = linearize(t->args[0]);
      LinExpr r = linearize(t->args[1]);
      if (t->id == sym::plus()) return l + r;
      if (t->id == sym::minus()) return l - r;
      if (t->id == sym::times()) {
        if (l.is_constant()) return r * l.constant();
        if (r.is_constant()) return l * r.constant();
        throw NonLinear("non-linear product: " + to_string(resolve(t)));
      }
      if (!r.is_constant()) throw NonLinear("non-linear division: " + to_string(resolve(t)));
      if (r.constant() == 0) throw EngineError("division by zero: " + to_string(resolve(t)));
      return l * (Rational(1) / r.constant());
    }
    throw EngineError("non-numeric term in arithmetic: " + to_string(resolve(t)));
  }

  // ---- resolution -------------------------------------------------------
  bool solve(const GoalsP& goals, const Cont& k) {
    if (!goals) return k();
    return call(goals->goal, goals->parent, [&] { return solve(goals->next, k); });
  }

  bool solve_one(const Term& goal, const NodeP& parent, const Cont& k) {
    auto cell = std::make_shared<const GoalCell>(GoalCell{goal, parent, nullptr});
    return solve(cell, k);
  }

  std::shared_ptr<Node> child(const NodeP& parent) {
    auto n = std::make_shared<Node>();
    n->parent = parent;
    n->depth = parent->depth + 1;
    n->last_happens = parent->last_happens;
    n->neg_node = parent->neg_node;
    return n;
  }

  bool call(const Term& goal0, const NodeP& parent, const Cont& k) {
    Term g = deref(goal0);
    if (!g->is_compound()) throw EngineError("goal is not callable: " + to_string(resolve(g)));
    ++stats.nodes;
    std::size_t depth = parent->depth + 1;
    if (depth > opts_.depth_limit) throw DepthExhausted(opts_.depth_limit);
    stats.max_depth = std::max(stats.max_depth, depth);
    deepest_ = std::max(deepest_, depth);
    if (opts_.trace) opts_.trace(to_string(resolve(g)), depth);

    const Symbols& s = S();
    const Symbol f = g->id;
    const std::size_t n = g->arity();
    Rel rel;
    if (n == 2 && constraint_relation(f, rel)) return call_constraint(rel, g->args[0], g->args[1], k);

    auto node = child(parent);
    if (f == s.happens && n == 2) {
      node->event = g->args[0];
      node->time = g->args[1];
      node->last_happens = node.get();
      if (opts_.zeno_halt) zeno_check(*node);
      if (opts_.incr_complete && eng_.is_incremental(deref(g->args[0])) && within_complete(g->args[1]))
        return call_complete(g, k);
      if (opts_.tabling) return tabled(g, node, k, [this](const Term& t, const NodeP& n, const Cont& c) {
        return resolve_user(t, n, c);
      });
      return resolve_user(g, node, k);
    }
    if (f == s.holdsAt && n == 3) {
      Term a3 = deref(g->args[2]);
      if (a3->is_compound() && eng_.is_declared("fluent", a3)) {
        return resolve_axiom(make_compound(s.cf, g->args), node, k);
      }
      check_duration(a3);
      return resolve_axiom(make_compound(s.delay, g->args), node, k);
    }
    if (f == s.holdsAt && n == 4) {
      Term a4 = deref(g->args[3]);
      if (a4->is_compound() && eng_.is_declared("event", a4)) {
        check_duration(deref(g->args[2]));
        return resolve_axiom(make_compound(s.event, g->args), node, k);
      }
      check_duration(a4);
      return resolve_axiom(make_compound(s.cf_dur, g->args), node, k);
    }
    if ((f == s.not_stoppedIn || f == s.not_startedIn) && n == 3) {
      NegKind kind = f == s.not_stoppedIn ? NegKind::Stopped : NegKind::Started;
      return not_interval(kind, g, node, k);
    }
    if (f == s.not_holdsAt && n == 2) {
      node->neg = NegKind::Other;
      node->neg_node = node.get();
      return negate(make_compound(s.holdsAt, g->args), node, k);
    }
    if (f == s.not_holdsAt && n == 3) {
      check_duration(deref(g->args[2]));
      return resolve_axiom(make_compound(s.not_delay, g->args), node, k);
    }
    if (f == s.not_happens && n == 2) {
      node->neg = NegKind::Other;
      node->neg_node = node.get();
      return negate(make_compound(s.happens, g->args), node, k);
    }
    if (f == s.incr_happens && n == 2) return call_incr(g, k);
    if (f == s.holdsAt && n == 2 && opts_.tabling) {
      return tabled(g, node, k, [this](const Term& t, const NodeP& n, const Cont& c) { return resolve_axiom(t, n, c); });
    }
    if (eng_.axioms_.defines(f, n)) return resolve_axiom(g, node, k);
    return resolve_user(g, node, k);
  }

  bool call_constraint(Rel rel, const Term& lhs, const Term& rhs, const Cont& k) {
    Mark m = save();
    LinConstraint c = make_constraint(linearize(lhs), rel, linearize(rhs));
    if (rel == Rel::Ne) {
      for (Rel r : {Rel::Lt, Rel::Gt}) {
        if (assert_lin(make_constraint(c.expr, r, LinExpr())) && k()) return true;
        restore(m);
      }
      return false;
    }
    bool ok;
    if (c.rel == Rel::Eq && c.expr.terms().size() == 1) {
      // Single-variable equality: bind to the value so later goals see a number.
      const auto& [v, a] = c.expr.terms().front();
      Rational value = -c.expr.constant() / a;
      ok = bind_value(v, make_num(value));
    } else {
      ok = assert_lin(c);
    }
    if (ok && k()) return true;
    restore(m);
    return false;
  }

  void check_duration(const Term& d) {
    if (d->is_num()) {
      if (d->num <= 0) throw InvalidDuration("duration must be positive, got " + format_rational(d->num));
      return;
    }
    if (d->is_var() && in_store_[d->id] &&
        store_.entails({LinExpr::variable(d->id) * Rational(-1), Rel::Lt})) {
      return;
    }
    throw InvalidDuration("duration must be a positive number, got " + to_string(resolve(d)));
  }

  bool resolve_clauses(const ModelProgram& prog, const Term& g, const NodeP& node, const Cont& k) {
    const auto& group = prog.group(g->id, g->arity());
    for (std::size_t idx : group) {
      const Clause& c = prog.clauses()[idx];
      Mark m = save();
      VarId base = alloc(c.num_vars);
      if (unify(rename(c.head, base), g)) {
        GoalsP body;
        for (auto it = c.body.rbegin(); it != c.body.rend(); ++it) {
          body = std::make_shared<const GoalCell>(GoalCell{rename(*it, base), node, body});
        }
        if (solve(body, k)) return true;
      }
      restore(m);
    }
    return false;
  }

  bool resolve_user(const Term& g, const NodeP& node, const Cont& k) {
    return resolve_clauses(eng_.program_, g, node, k);
  }

  bool resolve_axiom(const Term& g, const NodeP& node, const Cont& k) {
    return resolve_clauses(eng_.axioms_, g, node, k);
  }

  bool within_complete(const Term& time) {
    Term t = deref(time);
    if (t->is_num()) return t->num <= *opts_.incr_complete;
    if (!t->is_var() || !in_store_[t->id]) return false;
    return store_.entails(make_constraint(LinExpr::variable(t->id), Rel::Le, LinExpr(*opts_.incr_complete)));
  }

  bool call_complete(const Term& g, const Cont& k) {
    for (const auto& fact : opts_.incr_facts) {
      Mark m = save();
      if (unify(g->args[0], fact.event) && call_constraint(Rel::Eq, g->args[1], make_num(fact.time), k)) return true;
      restore(m);
    }
    return false;
  }

  bool call_incr(const Term& g, const Cont& k) {
    for (const auto& fact : opts_.incr_facts) {
      Mark m = save();
      if (unify(g->args[0], fact.event) && unify(g->args[1], make_num(fact.time)) && k()) return true;
      restore(m);
    }
    return false;
  }

  // ---- tabling -----------------------------------------------------------
  // Complete answer sets of happens(E, T) with ground E and of holdsAt(F, t)
  // at a numeric time. A happens entry serves any later call whose time
  // region lies inside the region it was computed for.
  struct TableEntry {
    Bound lo, hi;
    std::vector<VarId> outer;
    std::vector<std::vector<LinConstraint>> answers;
    std::size_t height = 0;
  };

  using Resolver = std::function<bool(const Term&, const NodeP&, const Cont&)>;

  static bool covers_lower(const Bound& outer, const Bound& inner) {
    if (!outer.present) return true;
    if (!inner.present) return false;
    return inner.value > outer.value || (inner.value == outer.value && (inner.strict || !outer.strict));
  }
  static bool covers_upper(const Bound& outer, const Bound& inner) {
    if (!outer.present) return true;
    if (!inner.present) return false;
    return inner.value < outer.value || (inner.value == outer.value && (inner.strict || !outer.strict));
  }

  std::pair<Bound, Bound> region(const Term& t0) const {
    Term t = deref(t0);
    if (t->is_num()) {
      Bound b{t->num, false, true};
      return {b, b};
    }
    if (in_store_[t->id]) return store_.bounds_of(t->id);
    return {};
  }

  /// Table key, the call's variables in order of appearance, and whether the
  /// time argument is part of the region rather than the key.
  bool table_key(const Term& g, std::string& key, std::vector<VarId>& outer, bool& timed) const {
    const Symbols& s = S();
    if (g->id == s.happens) {
      Term e = resolve(g->args[0]);
      Term t = deref(g->args[1]);
      if (!e->ground || !(t->is_var() || t->is_num())) return false;
      key = "happens|" + to_string(e);
      if (t->is_var()) outer.push_back(t->id);
      timed = true;
      return true;
    }
    Term t = deref(g->args[1]);
    Term f = resolve(g->args[0]);
    if (!t->is_num() || !f->is_compound()) return false;
    collect_vars(f, outer);
    std::set<VarId> seen;
    for (VarId v : outer) {
      if (in_store_[v] || !seen.insert(v).second) return false;
    }
    std::map<VarId, std::size_t> order;
    for (VarId v : outer) order.emplace(v, order.size());
    key = "holdsAt|" + to_string(f, [&](VarId v) { return "V" + std::to_string(order[v]); }) + "|" +
          format_rational(t->num);
    timed = false;
    return true;
  }

  bool replay(const std::vector<LinConstraint>& answer, const std::vector<VarId>& from, const Term& g,
              const std::vector<VarId>& to, const Cont& k) {
    std::map<VarId, LinExpr> map;
    if (to.empty() && from.size() == 1) {
      map.emplace(from[0], LinExpr(deref(g->args[1])->num));
    } else {
      for (std::size_t i = 0; i < from.size(); ++i) map.emplace(from[i], LinExpr::variable(to[i]));
    }
    Mark m = save();
    bool ok = true;
    for (const auto& c : answer) {
      LinExpr e(c.expr.constant());
      for (const auto& [v, a] : c.expr.terms()) e += map.at(v) * a;
      if (c.rel == Rel::Eq && e.terms().size() == 1) {
        const auto& [v, a] = e.terms().front();
        Term cur = deref(make_var(v));
        Rational value = -e.constant() / a;
        ok = cur->is_num() ? cur->num == value : bind_value(cur->id, make_num(value));
      } else {
        ok = assert_lin({e, c.rel});
      }
      if (!ok) break;
    }
    if (ok && k()) return true;
    restore(m);
    return false;
  }

  bool tabled(const Term& g, const std::shared_ptr<Node>& node, const Cont& k, const Resolver& resolve_fn) {
    std::string key;
    std::vector<VarId> outer;
    bool timed = false;
    if (!table_key(g, key, outer, timed) || untableable_.count(key)) return resolve_fn(g, node, k);
    auto [lo, hi] = timed ? region(g->args[1]) : std::pair<Bound, Bound>{};
    const std::size_t depth = node->depth;

    const TableEntry* hit = nullptr;
    auto range = table_.equal_range(key);
    for (auto it = range.first; it != range.second; ++it) {
      const TableEntry& e = it->second;
      if (!timed || (covers_lower(e.lo, lo) && covers_upper(e.hi, hi))) {
        hit = &e;
        break;
      }
    }
    if (!hit) {
      TableEntry fresh;
      fresh.lo = lo;
      fresh.hi = hi;
      fresh.outer = outer;
      std::size_t saved = deepest_;
      deepest_ = depth;
      Mark m = save();
      try {
        resolve_fn(g, node, [&] {
          auto a = capture(outer);
          if (std::find(fresh.answers.begin(), fresh.answers.end(), a) == fresh.answers.end())
            fresh.answers.push_back(std::move(a));
          return false;
        });
      } catch (const EngineError&) {
        restore(m);
        deepest_ = std::max(saved, deepest_);
        untableable_.insert(key);
        return resolve_fn(g, node, k);
      }
      restore(m);
      fresh.height = deepest_ - depth;
      deepest_ = std::max(saved, deepest_);
      hit = &table_.emplace(key, std::move(fresh))->second;
    } else {
      if (depth + hit->height > opts_.depth_limit) throw DepthExhausted(opts_.depth_limit);
      deepest_ = std::max(deepest_, depth + hit->height);
      ++stats.table_hits;
    }
    for (const auto& answer : hit->answers) {
      if (replay(answer, hit->outer, g, outer, k)) return true;
    }
    return false;
  }

  // ---- negation ---------------------------------------------------------
  bool not_interval(NegKind kind, const Term& g, const std::shared_ptr<Node>& node, const Cont& k) {
    const Term& a = g->args[0];
    const Term& f = g->args[1];
    const Term& b = g->args[2];
    Mark m = save();
    // Nested check of an interval start and fluent inside its own
    // refutation: only the earliest candidate point matters.
    for (const Node* ctx = node->parent->neg_node; ctx; ctx = ctx->parent ? ctx->parent->neg_node : nullptr) {
      if (ctx->neg != kind || !same(ctx->neg_a, a) || !same(ctx->neg_f, f)) continue;
      Term bt = deref(b);
      if (!bt->is_var() || !in_store_[bt->id]) break;
      LinConstraint within = make_constraint(LinExpr::variable(bt->id), Rel::Le, linearize(ctx->neg_b));
      if (!store_.entails(within)) continue;
      auto [lo, hi] = store_.bounds_of(bt->id);
      if (lo.present && !lo.strict && !bind_value(bt->id, make_num(lo.value))) {
        restore(m);
        return false;
      }
      break;
    }
    node->neg = kind;
    node->neg_a = a;
    node->neg_f = f;
    node->neg_b = b;
    node->neg_node = node.get();
    const Symbols& s = S();
    Term positive = make_compound(kind == NegKind::Stopped ? s.stoppedIn : s.startedIn, g->args);
    if (negate(positive, node, k)) return true;
    restore(m);
    return false;
  }

  void collect_vars(const Term& t0, std::vector<VarId>& out) const {
    Term t = deref(t0);
    if (t->is_var()) {
      out.push_back(t->id);
    } else if (t->is_compound() && !t->ground) {
      for (const auto& a : t->args) collect_vars(a, out);
    }
  }

  /// Constraints over the outer variables that describe one answer of a
  /// negated subgoal.
  std::vector<LinConstraint> capture(const std::vector<VarId>& outer) {
    std::vector<LinConstraint> eqs;
    std::vector<VarId> keep;
    std::map<VarId, VarId> alias;
    for (VarId v : outer) {
      Term t = deref(make_var(v));
      if (t->is_num()) {
        eqs.push_back({LinExpr::variable(v) - LinExpr(t->num), Rel::Eq});
        keep.push_back(v);
      } else if (t->is_var()) {
        VarId w = t->id;
        if (w == v) {
          if (in_store_[v]) keep.push_back(v);
        } else if (in_store_[w]) {
          eqs.push_back({LinExpr::variable(v) - LinExpr::variable(w), Rel::Eq});
          keep.push_back(v);
        } else if (auto it = alias.find(w); it != alias.end()) {
          eqs.push_back({LinExpr::variable(v) - LinExpr::variable(it->second), Rel::Eq});
          keep.push_back(v);
          keep.push_back(it->second);
        } else {
          alias.emplace(w, v);
        }
      } else {
        throw EngineError("negated goal binds a variable to a non-numeric term: " + to_string(resolve(t)));
      }
    }
    ConstraintStore tmp = store_;
    for (const auto& e : eqs) tmp = tmp.assert_constraint(e);
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    return tmp.project(keep);
  }

  bool negate(const Term& positive, const NodeP& node, const Cont& k) {
    std::vector<VarId> outer;
    collect_vars(positive, outer);
    std::sort(outer.begin(), outer.end());
    outer.erase(std::unique(outer.begin(), outer.end()), outer.end());

    std::vector<std::vector<LinConstraint>> answers;
    Mark m = save();
    solve_one(positive, node, [&] {
      auto a = capture(outer);
      if (std::find(answers.begin(), answers.end(), a) == answers.end()) answers.push_back(std::move(a));
      return false;
    });
    restore(m);
    return exclude(answers, 0, k);
  }

  /// Branches over the complement of every collected answer in turn.
  bool exclude(const std::vector<std::vector<LinConstraint>>& answers, std::size_t i, const Cont& k) {
    if (i == answers.size()) return k();
    std::vector<LinConstraint> open;
    for (const auto& c : answers[i])
      if (!store_.entails(c)) open.push_back(c);
    if (open.empty()) return false;
    for (std::size_t j = 0; j < open.size(); ++j) {
      Mark m = save();
      bool ok = true;
      for (std::size_t l = 0; l < j && ok; ++l) ok = assert_lin(open[l]);
      if (ok) {
        for (const auto& alt : zec::negate(open[j])) {
          Mark m2 = save();
          if (assert_lin(alt) && exclude(answers, i + 1, k)) return true;
          restore(m2);
        }
      }
      restore(m);
    }
    return false;
  }

  // ---- Zeno guard ---------------------------------------------------------
  std::string name_of(const Term& t) const {
    Term d = deref(t);
    if (d->is_var() && d->id < query_.var_names.size() && query_.var_names[d->id] != "_") {
      return query_.var_names[d->id];
    }
    return to_string(d);
  }

  void zeno_check(const Node& cur) {
    Term tc = deref(cur.time);
    if (!tc->is_var() || !in_store_[tc->id]) return;
    std::vector<const Node*> same_event;
    for (const Node* r = cur.parent ? cur.parent->last_happens : nullptr; r;
         r = r->parent ? r->parent->last_happens : nullptr) {
      if (same(r->event, cur.event)) same_event.push_back(r);
    }
    if (same_event.size() < 2) return;
    auto [clo, chi] = store_.bounds_of(tc->id);
    auto same_interval = [&](const Node* r) {
      Term t = deref(r->time);
      if (!t->is_var()) return false;
      auto [lo, hi] = store_.bounds_of(t->id);
      bool upper_ok = hi.present == chi.present && (!hi.present || hi.value == chi.value);
      return lo == clo && upper_ok;
    };
    auto before = [&](const Term& x, const Term& y) {
      Term a = deref(x), b = deref(y);
      if (!a->is_var() || !b->is_var()) return false;
      return store_.entails({LinExpr::variable(a->id) - LinExpr::variable(b->id), Rel::Lt});
    };
    std::vector<int> interval_ok(same_event.size(), -1);
    auto ok_at = [&](std::size_t i) {
      if (interval_ok[i] < 0) interval_ok[i] = same_interval(same_event[i]) ? 1 : 0;
      return interval_ok[i] == 1;
    };
    for (std::size_t i = 0; i < same_event.size(); ++i) {
      const Node* newer = same_event[i];
      if (!ok_at(i) || !before(cur.time, newer->time)) continue;
      for (std::size_t j = i + 1; j < same_event.size(); ++j) {
        const Node* older = same_event[j];
        if (!ok_at(j) || !before(newer->time, older->time)) continue;
        ZenoChainReport r;
        r.event = resolve(cur.event);
        r.event_text = to_string(r.event);
        r.older_var = name_of(older->time);
        r.newer_var = name_of(newer->time);
        r.current_var = name_of(cur.time);
        r.lower = clo;
        r.upper = chi;
        r.node_depths = {older->depth, newer->depth, cur.depth};
        r.warning = render_warning(r);
        throw ZenoHalt(std::move(r));
      }
    }
  }

  // ---- answers ------------------------------------------------------------
  bool emit() {
    Answer a;
    a.names = query_.var_names;
    const VarId n = query_.num_vars;
    std::map<VarId, VarId> rename;
    for (VarId q = 0; q < n; ++q) {
      Term t = deref(make_var(q));
      if (t->is_var()) rename.try_emplace(t->id, q);
    }
    VarId extra = n;
    std::function<Term(const Term&)> out = [&](const Term& t0) -> Term {
      Term t = deref(t0);
      if (t->is_var()) {
        auto [it, fresh] = rename.try_emplace(t->id, extra);
        if (fresh) ++extra;
        return make_var(it->second);
      }
      if (t->ground) return t;
      std::vector<Term> args;
      for (const auto& x : t->args) args.push_back(out(x));
      return make_compound(t->id, std::move(args));
    };
    for (VarId q = 0; q < n; ++q) a.values.push_back(out(make_var(q)));
    std::vector<VarId> keep;
    for (const auto& [machine, local] : rename)
      if (in_store_[machine]) keep.push_back(machine);
    for (const auto& c : store_.project(keep)) {
      LinExpr e(c.expr.constant());
      for (const auto& [v, coeff] : c.expr.terms()) e += LinExpr::variable(rename.at(v), coeff);
      a.residual.push_back({std::move(e), c.rel});
    }
    ++emitted_;
    if (sink_(a)) return true;
    return opts_.answer_limit != 0 && emitted_ >= opts_.answer_limit;
  }

  const Engine& eng_;
  const SolveOptions& opts_;
  const Query& query_;
  const Engine::AnswerSink& sink_;

  std::vector<Term> bind_;
  std::vector<std::uint8_t> in_store_;
  std::vector<std::pair<VarId, bool>> trail_;
  std::multimap<std::string, TableEntry> table_;
  std::set<std::string> untableable_;
  std::size_t deepest_ = 0;
  ConstraintStore store_;
  std::size_t emitted_ = 0;
};

SolveStats Engine::solve(const Query& query, const SolveOptions& options, const AnswerSink& sink) const {
  if (options.depth_limit == 0) throw EngineError("depth limit must be positive");
  auto start = std::chrono::steady_clock::now();
  Machine m(*this, options, query, sink);
  auto finish = [&] {
    m.stats.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    run_on_large_stack([&] { m.run(); });
  } catch (...) {
    finish();
    throw;
  }
  finish();
  return m.stats;
}

std::vector<Answer> Engine::solve_all(const Query& query, const SolveOptions& options, SolveStats* stats) const {
  std::vector<Answer> out;
  auto st = solve(query, options, [&](const Answer& a) {
    out.push_back(a);
    return false;
  });
  if (stats) *stats = st;
  return out;
}

}  // namespace zec
