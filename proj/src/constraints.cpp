#include "zec/constraints.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace zec {

// ---------------------------------------------------------------- LinExpr

LinExpr LinExpr::variable(VarId v, const Rational& coeff) {
  LinExpr e;
  if (coeff != 0) e.terms_.emplace_back(v, coeff);
  return e;
}

Rational LinExpr::coeff(VarId v) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), v,
                             [](const Term& t, VarId id) { return t.first < id; });
  return (it != terms_.end() && it->first == v) ? it->second : Rational(0);
}

bool LinExpr::mentions(VarId v) const {
  return std::binary_search(terms_.begin(), terms_.end(), Term{v, 0},
                            [](const Term& a, const Term& b) { return a.first < b.first; });
}

namespace {

void merge_terms(std::vector<LinExpr::Term>& into, const std::vector<LinExpr::Term>& from,
                 const Rational& scale) {
  std::vector<LinExpr::Term> out;
  out.reserve(into.size() + from.size());
  std::size_t i = 0, j = 0;
  while (i < into.size() || j < from.size()) {
    if (j == from.size() || (i < into.size() && into[i].first < from[j].first)) {
      out.push_back(std::move(into[i++]));
    } else if (i == into.size() || from[j].first < into[i].first) {
      out.emplace_back(from[j].first, from[j].second * scale);
      ++j;
    } else {
      Rational sum = into[i].second + from[j].second * scale;
      if (sum != 0) out.emplace_back(into[i].first, std::move(sum));
      ++i;
      ++j;
    }
  }
  into = std::move(out);
}

}  // namespace

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  merge_terms(terms_, other.terms_, 1);
  constant_ += other.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
  merge_terms(terms_, other.terms_, -1);
  constant_ -= other.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(const Rational& k) {
  if (k == 0) {
    terms_.clear();
    constant_ = 0;
    return *this;
  }
  for (auto& t : terms_) t.second *= k;
  constant_ *= k;
  return *this;
}

LinExpr LinExpr::substitute(VarId v, const LinExpr& value) const {
  Rational k = coeff(v);
  if (k == 0) return *this;
  LinExpr out = *this;
  out -= LinExpr::variable(v, k);
  merge_terms(out.terms_, value.terms_, k);
  out.constant_ += value.constant_ * k;
  return out;
}

// ---------------------------------------------------------- constraints

LinConstraint make_constraint(const LinExpr& lhs, Rel rel, const LinExpr& rhs) {
  switch (rel) {
    case Rel::Ge: return {rhs - lhs, Rel::Le};
    case Rel::Gt: return {rhs - lhs, Rel::Lt};
    default: return {lhs - rhs, rel};
  }
}

std::vector<LinConstraint> negate(const LinConstraint& c) {
  LinExpr neg = c.expr * Rational(-1);
  switch (c.rel) {
    case Rel::Eq: return {{c.expr, Rel::Lt}, {neg, Rel::Lt}};
    case Rel::Ne: return {{c.expr, Rel::Eq}};
    case Rel::Lt: return {{neg, Rel::Le}};
    case Rel::Le: return {{neg, Rel::Lt}};
    case Rel::Ge: return {{c.expr, Rel::Lt}};
    case Rel::Gt: return {{c.expr, Rel::Le}};
  }
  return {};
}

namespace {

bool constant_holds(const LinConstraint& c) {
  const Rational& k = c.expr.constant();
  switch (c.rel) {
    case Rel::Eq: return k == 0;
    case Rel::Ne: return k != 0;
    case Rel::Lt: return k < 0;
    case Rel::Le: return k <= 0;
    case Rel::Ge: return k >= 0;
    case Rel::Gt: return k > 0;
  }
  return false;
}

/// Removes variable-free members; false if one of them is violated.
bool prune_constants(std::vector<LinConstraint>& cs) {
  bool ok = true;
  std::erase_if(cs, [&](const LinConstraint& c) {
    if (!c.expr.is_constant()) return false;
    if (!constant_holds(c)) ok = false;
    return true;
  });
  return ok;
}

/// Scales so the leading coefficient is +-1 (Eq: +1).
void canonicalize(LinConstraint& c) {
  if (c.expr.is_constant()) return;
  Rational lead = c.expr.terms().front().second;
  if (c.rel == Rel::Eq) {
    c.expr *= Rational(1) / lead;
  } else {
    c.expr *= Rational(1) / abs(lead);
  }
}

/// Keeps the tightest inequality per left-hand side and drops duplicate equalities.
void dedupe(std::vector<LinConstraint>& cs) {
  std::map<std::pair<std::vector<LinExpr::Term>, bool>, std::size_t> index;
  std::vector<LinConstraint> out;
  out.reserve(cs.size());
  for (auto& c : cs) {
    canonicalize(c);
    auto key = std::make_pair(c.expr.terms(), c.rel == Rel::Eq);
    auto [it, inserted] = index.try_emplace(key, out.size());
    if (inserted) {
      out.push_back(std::move(c));
      continue;
    }
    LinConstraint& kept = out[it->second];
    if (c.rel == Rel::Eq) {
      if (kept.expr.constant() != c.expr.constant()) {
        // Contradictory equalities: keep both so the caller sees the conflict.
        out.push_back(std::move(c));
      }
      continue;
    }
    // t + k rel 0: larger k is tighter; at equal k strict is tighter.
    if (c.expr.constant() > kept.expr.constant() ||
        (c.expr.constant() == kept.expr.constant() && c.rel == Rel::Lt)) {
      kept = std::move(c);
    }
  }
  cs = std::move(out);
}

void substitute_all(std::vector<LinConstraint>& cs, VarId v, const LinExpr& value) {
  for (auto& c : cs) {
    if (c.expr.mentions(v)) c.expr = c.expr.substitute(v, value);
  }
}

/// Solves `eq` for v and substitutes it into the rest; eq itself is removed.
void eliminate_by_equality(std::vector<LinConstraint>& cs, std::size_t eq_index, VarId v) {
  LinConstraint eq = std::move(cs[eq_index]);
  cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(eq_index));
  Rational a = eq.expr.coeff(v);
  LinExpr rest = eq.expr - LinExpr::variable(v, a);
  LinExpr value = rest * (Rational(-1) / a);
  substitute_all(cs, v, value);
}

void eliminate_by_fm(std::vector<LinConstraint>& cs, VarId v) {
  std::vector<LinConstraint> upper, lower, out;
  for (auto& c : cs) {
    Rational a = c.expr.coeff(v);
    if (a > 0) {
      upper.push_back(std::move(c));
    } else if (a < 0) {
      lower.push_back(std::move(c));
    } else {
      out.push_back(std::move(c));
    }
  }
  for (const auto& u : upper) {
    Rational a = u.expr.coeff(v);
    for (const auto& l : lower) {
      Rational b = -l.expr.coeff(v);
      LinExpr combined = u.expr * b + l.expr * a;
      Rel rel = (u.rel == Rel::Lt || l.rel == Rel::Lt) ? Rel::Lt : Rel::Le;
      out.push_back({std::move(combined), rel});
    }
  }
  cs = std::move(out);
}

/// Picks the inequality variable whose elimination creates the fewest rows.
VarId cheapest_variable(const std::vector<LinConstraint>& cs,
                        const std::function<bool(VarId)>& eligible) {
  std::unordered_map<VarId, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& c : cs) {
    for (const auto& [v, a] : c.expr.terms()) {
      if (!eligible(v)) continue;
      auto& [pos, neg] = counts[v];
      if (a > 0) ++pos; else ++neg;
    }
  }
  VarId best = 0;
  long best_cost = std::numeric_limits<long>::max();
  for (const auto& [v, pn] : counts) {
    long cost = static_cast<long>(pn.first * pn.second) - static_cast<long>(pn.first + pn.second);
    if (cost < best_cost || (cost == best_cost && v > best)) {
      best_cost = cost;
      best = v;
    }
  }
  return best;
}

/// Eliminates every eligible variable. False when a contradiction shows up.
bool eliminate(std::vector<LinConstraint>& cs, const std::function<bool(VarId)>& eligible) {
  for (;;) {
    if (!prune_constants(cs)) return false;
    bool substituted = false;
    for (std::size_t i = 0; i < cs.size() && !substituted; ++i) {
      if (cs[i].rel != Rel::Eq) continue;
      const auto& terms = cs[i].expr.terms();
      for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
        if (eligible(it->first)) {
          eliminate_by_equality(cs, i, it->first);
          substituted = true;
          break;
        }
      }
    }
    if (substituted) continue;

    bool any = false;
    for (const auto& c : cs) {
      for (const auto& t : c.expr.terms()) {
        if (eligible(t.first)) {
          any = true;
          break;
        }
      }
      if (any) break;
    }
    if (!any) return true;
    eliminate_by_fm(cs, cheapest_variable(cs, eligible));
    dedupe(cs);
  }
}

bool sort_key_less(const LinConstraint& a, const LinConstraint& b) {
  const auto& ta = a.expr.terms();
  const auto& tb = b.expr.terms();
  std::size_t n = std::min(ta.size(), tb.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (ta[i].first != tb[i].first) return ta[i].first < tb[i].first;
  }
  if (ta.size() != tb.size()) return ta.size() < tb.size();
  // Lower bounds (negative leading coefficient) before upper bounds.
  bool a_lower = !ta.empty() && ta.front().second < 0 && a.rel != Rel::Eq;
  bool b_lower = !tb.empty() && tb.front().second < 0 && b.rel != Rel::Eq;
  if (a.rel == Rel::Eq || b.rel == Rel::Eq) return a.rel == Rel::Eq && b.rel != Rel::Eq;
  return a_lower && !b_lower;
}

}  // namespace

bool fm_satisfiable(std::vector<LinConstraint> cs) {
  for (const auto& c : cs) {
    if (c.rel == Rel::Ne) throw NeedsSplit();
  }
  return eliminate(cs, [](VarId) { return true; });
}

std::vector<LinConstraint> fm_project(std::vector<LinConstraint> cs, const std::vector<VarId>& keep) {
  std::unordered_set<VarId> kept(keep.begin(), keep.end());
  if (!eliminate(cs, [&](VarId v) { return !kept.contains(v); })) {
    return {{LinExpr(Rational(1)), Rel::Le}};
  }
  return cs;
}

std::vector<LinConstraint> simplify(std::vector<LinConstraint> cs) {
  if (!prune_constants(cs)) return {{LinExpr(Rational(1)), Rel::Le}};
  dedupe(cs);

  // Opposite non-strict bounds on the same expression collapse to an equality.
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (cs[i].rel != Rel::Le) continue;
    LinExpr flipped = cs[i].expr * Rational(-1);
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      if (cs[j].rel == Rel::Le && cs[j].expr == flipped) {
        LinConstraint eq{cs[i].expr, Rel::Eq};
        canonicalize(eq);
        cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(j));
        cs[i] = std::move(eq);
        break;
      }
    }
  }

  for (std::size_t i = 0; i < cs.size();) {
    std::vector<LinConstraint> others;
    others.reserve(cs.size());
    for (std::size_t j = 0; j < cs.size(); ++j)
      if (j != i) others.push_back(cs[j]);
    bool redundant = true;
    for (const auto& n : negate(cs[i])) {
      auto trial = others;
      trial.push_back(n);
      if (fm_satisfiable(std::move(trial))) {
        redundant = false;
        break;
      }
    }
    if (redundant) {
      cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  std::stable_sort(cs.begin(), cs.end(), sort_key_less);
  return cs;
}

// ---------------------------------------------------------- ConstraintStore

ConstraintStore ConstraintStore::assert_constraint(const LinConstraint& c) const {
  if (c.rel == Rel::Ne) throw NeedsSplit();
  if (failed_) return *this;
  ConstraintStore next;
  if (c.expr.is_constant()) {
    if (constant_holds(c)) return *this;
    next.failed_ = true;
    return next;
  }
  next.head_ = std::make_shared<const Node>(Node{c, head_, size() + 1});
  std::vector<VarId> seeds;
  for (const auto& t : c.expr.terms()) seeds.push_back(t.first);
  if (!fm_satisfiable(next.component(seeds))) {
    next.head_ = nullptr;
    next.failed_ = true;
  }
  return next;
}

std::vector<LinConstraint> ConstraintStore::component(const std::vector<VarId>& seeds) const {
  std::unordered_map<VarId, VarId> parent;
  auto find = [&](VarId v) {
    auto it = parent.find(v);
    if (it == parent.end()) {
      parent.emplace(v, v);
      return v;
    }
    VarId root = v;
    while (parent[root] != root) root = parent[root];
    while (parent[v] != root) {
      VarId up = parent[v];
      parent[v] = root;
      v = up;
    }
    return root;
  };
  for (const Node* n = head_.get(); n; n = n->next.get()) {
    const auto& terms = n->c.expr.terms();
    VarId first = find(terms.front().first);
    for (std::size_t i = 1; i < terms.size(); ++i) {
      VarId r = find(terms[i].first);
      if (r != first) parent[r] = first;
    }
  }
  std::unordered_set<VarId> roots;
  for (VarId s : seeds) roots.insert(find(s));
  std::vector<LinConstraint> out;
  for (const Node* n = head_.get(); n; n = n->next.get()) {
    if (roots.contains(find(n->c.expr.terms().front().first))) out.push_back(n->c);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

bool ConstraintStore::entails(const LinConstraint& c) const {
  if (failed_) return true;
  if (c.expr.is_constant()) return constant_holds(c);
  std::vector<VarId> seeds;
  for (const auto& t : c.expr.terms()) seeds.push_back(t.first);
  auto base = component(seeds);
  for (const auto& n : negate(c)) {
    auto trial = base;
    trial.push_back(n);
    if (fm_satisfiable(std::move(trial))) return false;
  }
  return true;
}

std::pair<Bound, Bound> ConstraintStore::bounds_of(VarId v) const {
  return bounds_of(LinExpr::variable(v));
}

std::pair<Bound, Bound> ConstraintStore::bounds_of(const LinExpr& e) const {
  Bound lower, upper;
  if (e.is_constant()) {
    lower = {e.constant(), false, true};
    upper = lower;
    return {lower, upper};
  }
  constexpr VarId probe = std::numeric_limits<VarId>::max();
  std::vector<VarId> seeds;
  for (const auto& t : e.terms()) seeds.push_back(t.first);
  auto cs = component(seeds);
  cs.push_back({LinExpr::variable(probe) - e, Rel::Eq});
  for (auto& c : fm_project(std::move(cs), {probe})) {
    Rational a = c.expr.coeff(probe);
    if (a == 0) continue;
    Rational value = -c.expr.constant() / a;
    bool strict = c.rel == Rel::Lt;
    auto tighten_upper = [&] {
      if (!upper.present || value < upper.value || (value == upper.value && strict)) upper = {value, strict, true};
    };
    auto tighten_lower = [&] {
      if (!lower.present || value > lower.value || (value == lower.value && strict)) lower = {value, strict, true};
    };
    if (c.rel == Rel::Eq) {
      tighten_upper();
      tighten_lower();
    } else if (a > 0) {
      tighten_upper();
    } else {
      tighten_lower();
    }
  }
  return {lower, upper};
}

std::optional<Rational> ConstraintStore::value_of(VarId v) const {
  auto [lo, hi] = bounds_of(v);
  if (lo.present && hi.present && !lo.strict && !hi.strict && lo.value == hi.value) return lo.value;
  return std::nullopt;
}

std::vector<LinConstraint> ConstraintStore::project(const std::vector<VarId>& keep) const {
  return simplify(fm_project(component(keep), keep));
}

std::vector<LinConstraint> ConstraintStore::constraints() const {
  std::vector<LinConstraint> out;
  for (const Node* n = head_.get(); n; n = n->next.get()) out.push_back(n->c);
  std::reverse(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- render

namespace {

std::string render_side(const std::vector<LinExpr::Term>& terms, const Rational& constant,
                        const VarNamer& name) {
  std::string out;
  for (const auto& [v, a] : terms) {
    bool negative = a < 0;
    Rational mag = abs(a);
    if (out.empty()) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    if (mag != 1) out += format_rational(mag) + "*";
    out += name(v);
  }
  if (constant != 0 || out.empty()) {
    if (out.empty()) {
      out = format_rational(constant);
    } else {
      out += constant < 0 ? " - " : " + ";
      out += format_rational(abs(constant));
    }
  }
  return out;
}

}  // namespace

std::string render_constraint(const LinConstraint& c, const VarNamer& name) {
  // Positive terms stay left, negative terms and the constant move right.
  std::vector<LinExpr::Term> left, right;
  for (const auto& [v, a] : c.expr.terms()) {
    if (a > 0) left.emplace_back(v, a);
    else right.emplace_back(v, -a);
  }
  Rational rhs_const = -c.expr.constant();
  bool flipped = false;
  if (left.empty()) {
    // -a*x + k rel 0  reads better as  x rel' k/a.
    std::swap(left, right);
    rhs_const = -rhs_const;
    flipped = true;
  }
  const char* op = "=";
  switch (c.rel) {
    case Rel::Eq: op = "="; break;
    case Rel::Ne: op = "\\="; break;
    case Rel::Lt: op = flipped ? ">" : "<"; break;
    case Rel::Le: op = flipped ? ">=" : "=<"; break;
    case Rel::Gt: op = flipped ? "<" : ">"; break;
    case Rel::Ge: op = flipped ? "=<" : ">="; break;
  }
  if (left.size() == 1 && right.empty() && left.front().second != 1) {
    // Single variable: divide through.
    Rational k = left.front().second;
    left.front().second = 1;
    rhs_const /= k;
  }
  return render_side(left, 0, name) + " " + op + " " + render_side(right, rhs_const, name);
}

std::string render_residual(const std::string& var, const std::vector<std::string>& parts) {
  std::string out = var + " ~ {";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out + "}";
}

}  // namespace zec
