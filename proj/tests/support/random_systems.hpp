#pragma once

#include <random>
#include <vector>

#include "zec/constraints.hpp"

namespace zec::oracle {

/// Up to `max_vars` variables (ids 1..), up to `max_rows` rows, coefficients in [-5, 5].
inline std::vector<LinConstraint> random_system(std::mt19937& rng, int max_vars = 4, int max_rows = 6) {
  std::uniform_int_distribution<int> nvars(1, max_vars), nrows(1, max_rows), coef(-5, 5), rel(0, 9);
  int n = nvars(rng);
  int m = nrows(rng);
  std::vector<LinConstraint> out;
  for (int r = 0; r < m; ++r) {
    LinExpr e(Rational(coef(rng)));
    for (int v = 1; v <= n; ++v) e += LinExpr::variable(static_cast<VarId>(v), coef(rng));
    int k = rel(rng);
    Rel rl = k < 2 ? Rel::Eq : (k < 6 ? Rel::Lt : Rel::Le);
    out.push_back({e, rl});
  }
  return out;
}

}  // namespace zec::oracle
