#pragma once

// Exact linear constraints over rational-valued variables.
//
// A ConstraintStore is an immutable conjunction. Every assertion returns a
// new store and is checked eagerly with Fourier-Motzkin elimination that
// tracks strictness, so a Consistent store always has a rational solution.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zec/rational.hpp"

namespace zec {

using VarId = std::uint32_t;

class LinExpr {
 public:
  using Term = std::pair<VarId, Rational>;

  LinExpr() = default;
  explicit LinExpr(Rational constant) : constant_(std::move(constant)) {}
  static LinExpr variable(VarId v, const Rational& coeff = 1);

  /// Sorted by variable id, no zero coefficients.
  const std::vector<Term>& terms() const { return terms_; }
  const Rational& constant() const { return constant_; }
  Rational coeff(VarId v) const;
  bool is_constant() const { return terms_.empty(); }
  bool mentions(VarId v) const;

  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(const Rational& k);

  /// Replaces v by `value` everywhere.
  LinExpr substitute(VarId v, const LinExpr& value) const;

  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(LinExpr a, const Rational& k) { return a *= k; }
  friend bool operator==(const LinExpr& a, const LinExpr& b) {
    return a.constant_ == b.constant_ && a.terms_ == b.terms_;
  }

 private:
  std::vector<Term> terms_;
  Rational constant_ = 0;
};

enum class Rel { Eq, Ne, Lt, Le, Ge, Gt };

/// `expr rel 0`. Stored constraints only use Eq, Lt and Le.
struct LinConstraint {
  LinExpr expr;
  Rel rel = Rel::Eq;

  friend bool operator==(const LinConstraint& a, const LinConstraint& b) {
    return a.rel == b.rel && a.expr == b.expr;
  }
};

/// lhs rel rhs, with Ge/Gt flipped to Le/Lt. Ne is kept as Ne.
LinConstraint make_constraint(const LinExpr& lhs, Rel rel, const LinExpr& rhs);

/// The complement as a disjunction: one element for inequalities, two
/// (lower branch first) for equalities, one Eq for a disequality.
std::vector<LinConstraint> negate(const LinConstraint& c);

struct Bound {
  Rational value = 0;
  bool strict = false;
  bool present = false;

  friend bool operator==(const Bound& a, const Bound& b) {
    if (a.present != b.present) return false;
    return !a.present || (a.value == b.value && a.strict == b.strict);
  }
};

/// Raised when a disequality reaches the store; callers split it into < and >.
struct NeedsSplit : std::logic_error {
  NeedsSplit() : std::logic_error("disequality must be split before assertion") {}
};

class ConstraintStore {
 public:
  enum class Status { Consistent, Failed };

  ConstraintStore() = default;

  ConstraintStore assert_constraint(const LinConstraint& c) const;

  Status status() const { return failed_ ? Status::Failed : Status::Consistent; }
  bool is_satisfiable() const { return !failed_; }
  bool entails(const LinConstraint& c) const;
  std::pair<Bound, Bound> bounds_of(VarId v) const;
  /// Bounds of an arbitrary expression over store variables.
  std::pair<Bound, Bound> bounds_of(const LinExpr& e) const;
  /// A single value when the store pins v to one point.
  std::optional<Rational> value_of(VarId v) const;
  /// Conjunction over `keep` with exactly the restricted solution set.
  std::vector<LinConstraint> project(const std::vector<VarId>& keep) const;

  /// Constraints in assertion order.
  std::vector<LinConstraint> constraints() const;
  std::size_t size() const { return head_ ? head_->size : 0; }

 private:
  struct Node {
    LinConstraint c;
    std::shared_ptr<const Node> next;
    std::size_t size;
  };

  std::vector<LinConstraint> component(const std::vector<VarId>& seeds) const;

  std::shared_ptr<const Node> head_;
  bool failed_ = false;
};

// Set-level operations, shared by the store and by the test oracles.
bool fm_satisfiable(std::vector<LinConstraint> cs);
std::vector<LinConstraint> fm_project(std::vector<LinConstraint> cs, const std::vector<VarId>& keep);
/// Drops redundant members and merges opposite bounds into equalities.
std::vector<LinConstraint> simplify(std::vector<LinConstraint> cs);

using VarNamer = std::function<std::string(VarId)>;

/// "T > 10", "T1 < T2 - 3", "X = 12.5".
std::string render_constraint(const LinConstraint& c, const VarNamer& name);
/// "T ~ {T > 10, T =< 20}".
std::string render_residual(const std::string& var, const std::vector<std::string>& parts);

}  // namespace zec
