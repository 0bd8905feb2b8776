#include "zec/check_ground.hpp"

#include <algorithm>
#include <functional>
#include <optional>

namespace zec {

namespace {

using Subst = std::map<VarId, Term>;

Term instantiate(const Term& t, const Subst& s) {
  if (t->ground) return t;
  if (t->is_var()) {
    auto it = s.find(t->id);
    return it == s.end() ? t : it->second;
  }
  std::vector<Term> args;
  for (const auto& a : t->args) args.push_back(instantiate(a, s));
  return make_compound(t->id, std::move(args));
}

bool same_ground(const Term& a, const Term& b) {
  if (a->kind != b->kind) return false;
  if (a->is_num()) return a->num == b->num;
  if (a->is_var()) return a->id == b->id;
  if (a->id != b->id || a->arity() != b->arity()) return false;
  for (std::size_t i = 0; i < a->arity(); ++i)
    if (!same_ground(a->args[i], b->args[i])) return false;
  return true;
}

/// Binds variables of `pat` so that it equals the ground term `g`.
bool match(const Term& pat, const Term& g, Subst& s) {
  if (pat->is_var()) {
    auto it = s.find(pat->id);
    if (it != s.end()) return same_ground(it->second, g);
    s.emplace(pat->id, g);
    return true;
  }
  if (pat->kind != g->kind) return false;
  if (pat->is_num()) return pat->num == g->num;
  if (pat->id != g->id || pat->arity() != g->arity()) return false;
  for (std::size_t i = 0; i < pat->arity(); ++i)
    if (!match(pat->args[i], g->args[i], s)) return false;
  return true;
}

// Value of a ground arithmetic term.
std::optional<Rational> eval(const Term& t) {
  if (t->is_num()) return t->num;
  if (t->is_var() || !is_arith_functor(t->id, t->arity())) return std::nullopt;
  auto l = eval(t->args[0]);
  if (!l) return std::nullopt;
  if (t->arity() == 1) return -*l;
  auto r = eval(t->args[1]);
  if (!r) return std::nullopt;
  if (t->id == sym::plus()) return *l + *r;
  if (t->id == sym::minus()) return *l - *r;
  if (t->id == sym::times()) return *l * *r;
  if (*r == 0) return std::nullopt;
  return *l / *r;
}

// Coefficients of an arithmetic term that is linear in its variables.
bool linear(const Term& t, std::map<VarId, Rational>& coeffs, Rational& constant, const Rational& scale) {
  if (t->is_num()) {
    constant += scale * t->num;
    return true;
  }
  if (t->is_var()) {
    coeffs[t->id] += scale;
    return true;
  }
  if (!is_arith_functor(t->id, t->arity())) return false;
  if (t->arity() == 1) return linear(t->args[0], coeffs, constant, -scale);
  if (t->id == sym::plus())
    return linear(t->args[0], coeffs, constant, scale) && linear(t->args[1], coeffs, constant, scale);
  if (t->id == sym::minus())
    return linear(t->args[0], coeffs, constant, scale) && linear(t->args[1], coeffs, constant, -scale);
  if (t->id == sym::times()) {
    if (auto k = eval(t->args[0])) return linear(t->args[1], coeffs, constant, scale * *k);
    if (auto k = eval(t->args[1])) return linear(t->args[0], coeffs, constant, scale * *k);
    return false;
  }
  auto k = eval(t->args[1]);
  if (!k || *k == 0) return false;
  return linear(t->args[0], coeffs, constant, scale / *k);
}

bool compare(Rel rel, const Rational& a, const Rational& b) {
  switch (rel) {
    case Rel::Eq: return a == b;
    case Rel::Ne: return a != b;
    case Rel::Lt: return a < b;
    case Rel::Le: return a <= b;
    case Rel::Ge: return a >= b;
    case Rel::Gt: return a > b;
  }
  return false;
}

std::string key_of(const Term& pattern, const Rational& t) {
  std::map<VarId, std::size_t> order;
  std::function<void(const Term&)> walk = [&](const Term& x) {
    if (x->is_var()) order.emplace(x->id, order.size());
    for (const auto& a : x->args) walk(a);
  };
  walk(pattern);
  return to_string(pattern, [&](VarId v) { return "V" + std::to_string(order[v]); }) + "@" + format_rational(t);
}

}  // namespace

struct GroundChecker::Impl {
  const ModelProgram& program;
  const std::vector<Occurrence>& occ;
  std::map<std::string, std::vector<Term>> memo;

  Impl(const ModelProgram& p, const std::vector<Occurrence>& o) : program(p), occ(o) {}

  std::vector<const Clause*> clauses(std::string_view name, std::size_t arity) const {
    std::vector<const Clause*> out;
    for (std::size_t i : program.group(intern(name), arity)) out.push_back(&program.clauses()[i]);
    return out;
  }

  using Sink = std::function<void(const Subst&)>;

  // Solves `body` from position i; constraints that cannot be decided yet are
  // carried in `pending` until enough variables are known.
  void solve(const std::vector<Term>& body, std::size_t i, Subst s, std::vector<Term> pending, const Sink& sink) {
    for (bool progress = true; progress && !pending.empty();) {
      progress = false;
      for (std::size_t j = 0; j < pending.size(); ++j) {
        int r = constraint(pending[j], s);
        if (r == 0) return;
        if (r == 1) {
          pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(j));
          progress = true;
          break;
        }
      }
    }
    if (i == body.size()) {
      if (pending.empty()) sink(s);
      return;
    }
    Term g = instantiate(body[i], s);
    Rel rel;
    if (g->arity() == 2 && constraint_relation(g->id, rel)) {
      pending.push_back(g);
      solve(body, i + 1, s, pending, sink);
      return;
    }
    const std::string& f = g->name();
    auto next = [&](const Subst& s2) { solve(body, i + 1, s2, pending, sink); };
    if (f == "holdsAt" && g->arity() == 3 && numeric(g->args[2])) {
      delayed(g->args[0], g->args[1], g->args[2], nullptr, "initiates", s, next);
    } else if (f == "holdsAt" && g->arity() == 4 && !numeric(g->args[3])) {
      delayed(g->args[0], g->args[1], g->args[2], g->args[3], "initiates", s, next);
    } else if (f == "holdsAt" && g->arity() == 4) {
      controlled_for(g->args[0], g->args[1], g->args[2], g->args[3], s, next);
    } else if (f == "not_holdsAt" && g->arity() == 3) {
      delayed(g->args[0], g->args[1], g->args[2], nullptr, "terminates", s, next);
    } else if (f == "holdsAt" && (g->arity() == 2 || g->arity() == 3)) {
      auto t = eval(g->args[1]);
      if (!t) return;
      std::vector<Term> insts = g->arity() == 2 ? holding(g->args[0], *t) : controlled(g->args[0], *t, g->args[2]);
      for (const auto& inst : insts) {
        Subst s2 = s;
        if (match(g->args[0], inst, s2)) next(s2);
      }
    } else if (f == "happens" && g->arity() == 2) {
      for (const auto& o : occ) {
        Subst s2 = s;
        if (match(g->args[0], o.event, s2) && match(g->args[1], make_num(o.time), s2)) next(s2);
      }
    } else if (f == "not_happens" && g->arity() == 2) {
      auto t = eval(g->args[1]);
      if (!t) return;
      for (const auto& o : occ) {
        Subst probe;
        if (o.time == *t && match(g->args[0], o.event, probe)) return;
      }
      next(s);
    } else if (f == "not_holdsAt" && g->arity() == 2) {
      auto t = eval(g->args[1]);
      if (!t || !holding(g->args[0], *t).empty()) return;
      next(s);
    } else if (f == "incr_happens" && g->arity() == 2) {
      for (const auto& o : occ) {
        Subst s2 = s;
        if (match(g->args[0], o.event, s2) && match(g->args[1], make_num(o.time), s2)) next(s2);
      }
    }
  }

  static bool numeric(const Term& t) { return t->is_num() || t->is_var() || is_arith_functor(t->id, t->arity()); }

  // Occurrences at T1 = T2 - Dur, with an unknown Dur taking every
  // positive value an occurrence offers.
  template <class Fn>
  void at_offsets(const Term& t2_term, const Term& dur, Subst& s, const Fn& fn) {
    auto t2 = eval(t2_term);
    if (!t2) return;
    auto d = eval(dur);
    for (const auto& o : occ) {
      if (!(o.time > 0 && o.time < *t2)) continue;
      if (d && o.time != *t2 - *d) continue;
      Subst s2 = s;
      if (!d && !match(dur, make_num(*t2 - o.time), s2)) continue;
      fn(o, *t2, s2);
    }
  }

  // F was initiated (or terminated) by an occurrence Dur before T2, optionally
  // by an event matching `event`, and has not changed since.
  void delayed(const Term& f, const Term& t2_term, const Term& dur, const Term& event, std::string_view effect_name,
               Subst& s, const Sink& next) {
    bool positive = effect_name == "initiates";
    at_offsets(t2_term, dur, s, [&](const Occurrence& o, const Rational& t2, Subst& s2) {
      if (event) {
        if (!match(instantiate(event, s2), o.event, s2)) return;
      }
      Term fp = instantiate(f, s2);
      heads(effect_name, {o.event, fp, make_num(o.time)}, [&](const Term& h) {
        const Term& fl = h->args[1];
        if (positive ? stopped(o.time, fl, t2) : started(o.time, fl, t2)) return;
        Subst s3 = s2;
        if (match(fp, fl, s3)) next(s3);
      });
    });
  }

  // F2 is on the trajectory of control fluent F1 started exactly Dur before T2.
  void controlled_for(const Term& f2, const Term& t2_term, const Term& f1, const Term& dur, Subst& s,
                      const Sink& next) {
    at_offsets(t2_term, dur, s, [&](const Occurrence& o, const Rational& t2, Subst& s2) {
      Term f1p = instantiate(f1, s2);
      heads("initiates", {o.event, f1p, make_num(o.time)}, [&](const Term& ini) {
        const Term& c = ini->args[1];
        if (stopped(o.time, c, t2)) return;
        Term f2p = instantiate(f2, s2);
        heads("trajectory", {c, make_num(o.time), f2p, make_num(t2)}, [&](const Term& tr) {
          Subst s3 = s2;
          if (match(f1p, c, s3) && match(f2p, tr->args[2], s3)) next(s3);
        });
      });
    });
  }

  bool started(const Rational& t1, const Term& f, const Rational& t2) {
    for (const auto& o : occ) {
      if (!(t1 < o.time && o.time < t2)) continue;
      if (effect("initiates", o.event, f, o.time) || effect("releases", o.event, f, o.time)) return true;
    }
    return false;
  }

  // 1 holds, 0 fails, -1 undecided. Solves single-unknown equalities.
  int constraint(const Term& g0, Subst& s) {
    Term g = instantiate(g0, s);
    Rel rel;
    constraint_relation(g->id, rel);
    auto l = eval(g->args[0]), r = eval(g->args[1]);
    if (l && r) return compare(rel, *l, *r) ? 1 : 0;
    if (rel != Rel::Eq) return -1;
    std::map<VarId, Rational> coeffs;
    Rational constant = 0;
    if (!linear(g->args[0], coeffs, constant, 1) || !linear(g->args[1], coeffs, constant, -1)) return -1;
    std::erase_if(coeffs, [](const auto& kv) { return kv.second == 0; });
    if (coeffs.size() != 1) return coeffs.empty() ? (constant == 0 ? 1 : 0) : -1;
    auto [v, a] = *coeffs.begin();
    s[v] = make_num(-constant / a);
    return 1;
  }

  // Ground heads of `name` clauses matching `args` (some may be patterns).
  void heads(std::string_view name, const std::vector<Term>& args, const std::function<void(const Term&)>& out) {
    for (const Clause* c : clauses(name, args.size())) {
      Subst s;
      bool ok = true;
      for (std::size_t i = 0; i < args.size() && ok; ++i)
        if (args[i]->ground) ok = match(c->head->args[i], args[i], s);
      if (!ok) continue;
      solve(c->body, 0, s, {}, [&](const Subst& s2) {
        Term h = instantiate(c->head, s2);
        if (!h->ground) return;
        Subst probe;
        for (std::size_t i = 0; i < args.size(); ++i)
          if (!match(args[i], h->args[i], probe)) return;
        out(h);
      });
    }
  }

  bool effect(std::string_view name, const Term& e, const Term& f, const Rational& t) {
    bool found = false;
    heads(name, {e, f, make_num(t)}, [&](const Term&) { found = true; });
    return found;
  }

  bool stopped(const Rational& t1, const Term& f, const Rational& t2) {
    for (const auto& o : occ) {
      if (!(t1 < o.time && o.time < t2)) continue;
      if (effect("terminates", o.event, f, o.time) || effect("releases", o.event, f, o.time)) return true;
    }
    return false;
  }

  void add(std::vector<Term>& out, const Term& t) {
    if (std::none_of(out.begin(), out.end(), [&](const Term& x) { return same_ground(x, t); })) out.push_back(t);
  }

  // Instances of `pattern` at t produced by trajectories of a control fluent
  // matching `control` (nullptr = any).
  std::vector<Term> trajectories(const Term& pattern, const Rational& t, const Term& control) {
    std::vector<Term> out;
    for (const auto& o : occ) {
      if (!(o.time < t)) continue;
      Term any_fluent = make_var(0);
      heads("initiates", {o.event, control ? control : any_fluent, make_num(o.time)}, [&](const Term& ini) {
        const Term& f1 = ini->args[1];
        if (stopped(o.time, f1, t)) return;
        heads("trajectory", {f1, make_num(o.time), pattern, make_num(t)}, [&](const Term& tr) { add(out, tr->args[2]); });
      });
    }
    return out;
  }

  std::vector<Term> controlled(const Term& pattern, const Rational& t, const Term& control) {
    return trajectories(pattern, t, control);
  }

  std::vector<Term> holding(const Term& pattern, const Rational& t) {
    std::string key = key_of(pattern, t);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<Term> out;
    if (t >= 0) {
      for (const Clause* c : clauses("initiallyP", 1)) {
        Term f = c->head->args[0];
        Subst probe;
        if (f->ground && match(pattern, f, probe) && !stopped(0, f, t)) add(out, f);
      }
    }
    for (const auto& o : occ) {
      if (!(o.time < t)) continue;
      heads("initiates", {o.event, pattern, make_num(o.time)}, [&](const Term& h) {
        if (!stopped(o.time, h->args[1], t)) add(out, h->args[1]);
      });
    }
    for (const auto& f : trajectories(pattern, t, nullptr)) add(out, f);
    memo.emplace(key, out);
    return out;
  }
};

GroundChecker::GroundChecker(const ModelProgram& program, std::vector<Occurrence> occurrences)
    : occurrences_(std::move(occurrences)) {
  std::sort(occurrences_.begin(), occurrences_.end(),
            [](const Occurrence& a, const Occurrence& b) { return a.time < b.time; });
  impl_ = std::make_unique<Impl>(program, occurrences_);
}

GroundChecker::~GroundChecker() = default;

std::vector<Term> GroundChecker::holding(const Term& pattern, const Rational& t) {
  return impl_->holding(pattern, t);
}

bool GroundChecker::holds(const Term& fluent, const Rational& t) {
  for (const auto& f : impl_->holding(fluent, t))
    if (same_ground(f, fluent)) return true;
  return false;
}

bool GroundChecker::happens(const Term& event, const Rational& t) const {
  return std::any_of(occurrences_.begin(), occurrences_.end(),
                     [&](const Occurrence& o) { return o.time == t && same_ground(o.event, event); });
}

bool GroundChecker::check_goal(const Term& goal) {
  bool ok = false;
  impl_->solve({goal}, 0, {}, {}, [&](const Subst&) { ok = true; });
  return ok;
}

bool GroundChecker::supported(const Occurrence& occ) {
  for (const Clause* c : impl_->clauses("happens", 2)) {
    Subst s;
    if (!match(c->head->args[0], occ.event, s) || !match(c->head->args[1], make_num(occ.time), s)) continue;
    bool ok = false;
    impl_->solve(c->body, 0, s, {}, [&](const Subst&) { ok = true; });
    if (ok) return true;
  }
  return false;
}

bool check_ground(const ModelProgram& program, const std::vector<Occurrence>& occurrences, const Term& fluent,
                  const Rational& t) {
  GroundChecker checker(program, occurrences);
  return checker.holds(fluent, t);
}

}  // namespace zec
