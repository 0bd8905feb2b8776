#pragma once

// Brute-force feasibility by vertex enumeration. Independent of the
// Fourier-Motzkin code: it only shares the LinConstraint container.
//
// Strict rows get a slack s (a.x + s <= b); the system is feasible iff the
// maximum of s over the boxed polytope is positive (or no strict rows and the
// polytope is nonempty).

#include <algorithm>
#include <optional>
#include <vector>

#include "zec/constraints.hpp"

namespace zec::oracle {

struct Row {
  std::vector<Rational> a;  // over n dense variables (+ slack column last)
  Rational b;
};

inline bool solve_square(std::vector<std::vector<Rational>> m, std::vector<Rational> rhs,
                         std::vector<Rational>& x) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && m[piv][col] == 0) ++piv;
    if (piv == n) return false;
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || m[r][col] == 0) continue;
      Rational f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i][i];
  return true;
}

/// Witness point (over `vars` order) of the system, or nullopt.
inline std::optional<std::vector<Rational>> oracle_witness(const std::vector<LinConstraint>& cs,
                                                           const std::vector<VarId>& vars,
                                                           long box = 1000000) {
  const std::size_t n = vars.size();
  const std::size_t dim = n + 1;  // slack last
  std::vector<Row> rows;
  bool any_strict = false;
  auto dense = [&](const LinExpr& e) {
    std::vector<Rational> a(dim, 0);
    for (const auto& [v, k] : e.terms()) {
      for (std::size_t i = 0; i < n; ++i)
        if (vars[i] == v) a[i] = k;
    }
    return a;
  };
  for (const auto& c : cs) {
    auto a = dense(c.expr);
    Rational b = -c.expr.constant();
    if (c.rel == Rel::Eq) {
      rows.push_back({a, b});
      for (auto& x : a) x = -x;
      rows.push_back({a, -b});
    } else {
      if (c.rel == Rel::Lt) {
        a[n] = 1;
        any_strict = true;
      }
      rows.push_back({a, b});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Rational> a(dim, 0);
    a[i] = 1;
    rows.push_back({a, box});
    a[i] = -1;
    rows.push_back({a, box});
  }
  {
    std::vector<Rational> a(dim, 0);
    a[n] = 1;
    rows.push_back({a, 1});
    a[n] = -1;
    rows.push_back({a, 0});
  }

  std::optional<std::vector<Rational>> best;
  Rational best_s = -1;
  std::vector<std::size_t> pick(dim);
  const std::size_t m = rows.size();
  std::vector<Rational> x;
  // Enumerate all dim-subsets of rows.
  std::vector<std::size_t> idx(dim);
  for (std::size_t i = 0; i < dim; ++i) idx[i] = i;
  for (;;) {
    std::vector<std::vector<Rational>> mat(dim);
    std::vector<Rational> rhs(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      mat[i] = rows[idx[i]].a;
      rhs[i] = rows[idx[i]].b;
    }
    if (solve_square(mat, rhs, x)) {
      bool feasible = true;
      for (const auto& r : rows) {
        Rational lhs = 0;
        for (std::size_t i = 0; i < dim; ++i)
          if (r.a[i] != 0) lhs += r.a[i] * x[i];
        if (lhs > r.b) {
          feasible = false;
          break;
        }
      }
      if (feasible && x[n] > best_s) {
        best_s = x[n];
        best = std::vector<Rational>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
      }
    }
    // next combination
    std::size_t k = dim;
    while (k > 0 && idx[k - 1] == m - dim + k - 1) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < dim; ++j) idx[j] = idx[j - 1] + 1;
  }
  if (!best) return std::nullopt;
  if (any_strict && best_s <= 0) return std::nullopt;
  return best;
}

inline bool oracle_satisfiable(const std::vector<LinConstraint>& cs) {
  std::vector<VarId> vars;
  for (const auto& c : cs)
    for (const auto& t : c.expr.terms()) vars.push_back(t.first);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return oracle_witness(cs, vars).has_value();
}

inline bool satisfied_by(const LinConstraint& c, const std::vector<VarId>& vars,
                         const std::vector<Rational>& point) {
  Rational v = c.expr.constant();
  for (const auto& [id, k] : c.expr.terms()) {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == id) v += k * point[i];
  }
  switch (c.rel) {
    case Rel::Eq: return v == 0;
    case Rel::Ne: return v != 0;
    case Rel::Lt: return v < 0;
    case Rel::Le: return v <= 0;
    case Rel::Ge: return v >= 0;
    case Rel::Gt: return v > 0;
  }
  return false;
}

}  // namespace zec::oracle
