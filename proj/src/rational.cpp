#include "zec/rational.hpp"

#include <stdexcept>

namespace zec {

Rational parse_decimal(std::string_view text) {
  std::string digits;
  std::size_t frac_digits = 0;
  bool seen_dot = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("malformed decimal: " + std::string(text));
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_dot) ++frac_digits;
    } else {
      throw std::invalid_argument("malformed decimal: " + std::string(text));
    }
  }
  if (digits.empty()) throw std::invalid_argument("malformed decimal: " + std::string(text));
  mpz_class num(digits, 10);
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_digits);
  Rational r(num, den);
  r.canonicalize();
  return r;
}

std::string format_rational(const Rational& value) {
  mpz_class den = value.get_den();
  unsigned twos = 0, fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
    den /= 2;
    ++twos;
  }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return value.get_str();

  unsigned places = std::max(twos, fives);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, places);
  mpz_class scaled = value.get_num() * (scale / value.get_den());
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string s = scaled.get_str();
  if (places > 0) {
    if (s.size() <= places) s.insert(0, places - s.size() + 1, '0');
    s.insert(s.size() - places, ".");
  }
  return negative ? "-" + s : s;
}

}  // namespace zec
