#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace zec {

/// Exact rational number. All times and quantities go through this type.
using Rational = mpq_class;

/// Parses an unsigned decimal literal ("16.25", "7", "0.000001") exactly.
Rational parse_decimal(std::string_view text);

/// Exact decimal when the reduced denominator is 2^a * 5^b ("12.5"),
/// otherwise "p/q" ("1/3"). Negative values carry a leading '-'.
std::string format_rational(const Rational& value);

inline Rational make_rational(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

}  // namespace zec
