#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace ppeq {

using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline double to_double(const Rational& q) { return q.get_d(); }

inline bool is_integer(const Rational& q) { return q.get_den() == 1; }

inline long to_long(const Rational& q) {
  if (!is_integer(q) || !q.get_num().fits_slong_p())
    throw std::overflow_error("rational does not fit a long: " + q.get_str());
  return q.get_num().get_si();
}

/// Parses "3", "-7/2", "0.25", "1e3" style literals into an exact rational.
inline std::optional<Rational> parse_rational(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::string s = text;
  bool neg = false;
  size_t i = 0;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
  }
  std::string intpart, fracpart, exppart;
  std::string* cur = &intpart;
  bool seen_slash = false;
  std::string denom;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      if (seen_slash)
        denom.push_back(c);
      else
        cur->push_back(c);
    } else if (c == '.' && cur == &intpart && !seen_slash) {
      cur = &fracpart;
    } else if ((c == 'e' || c == 'E') && !seen_slash && cur != &exppart) {
      cur = &exppart;
      if (i + 1 < s.size() && (s[i + 1] == '+' || s[i + 1] == '-')) {
        if (s[i + 1] == '-') exppart.push_back('-');
        ++i;
      }
    } else if (c == '/' && !seen_slash && cur == &intpart) {
      seen_slash = true;
    } else {
      return std::nullopt;
    }
  }
  if (intpart.empty() && fracpart.empty()) return std::nullopt;
  if (seen_slash) {
    if (denom.empty()) return std::nullopt;
    mpz_class n(intpart.empty() ? "0" : intpart), d(denom);
    if (d == 0) return std::nullopt;
    Rational q(n, d);
    q.canonicalize();
    return neg ? Rational(-q) : q;
  }
  mpz_class n(intpart.empty() ? "0" : intpart);
  Rational q(n);
  if (!fracpart.empty()) {
    mpz_class f(fracpart);
    mpz_class scale = 1;
    for (size_t k = 0; k < fracpart.size(); ++k) scale *= 10;
    Rational fq(f, scale);
    fq.canonicalize();
    q += fq;
  }
  if (!exppart.empty()) {
    bool eneg = exppart[0] == '-';
    long e = std::stol(eneg ? exppart.substr(1) : exppart);
    if (e > 64) return std::nullopt;  // absurd literal
    Rational p = 1;
    for (long k = 0; k < e; ++k) p *= 10;
    if (eneg)
      q /= p;
    else
      q *= p;
  }
  return neg ? Rational(-q) : q;
}

/// Best rational approximation of x with denominator <= max_den, via
/// continued fractions. Exact inputs (small dyadics, integers) round-trip.
inline Rational rational_from_double(double x, uint64_t max_den = 1000000000ull) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite double");
  bool neg = x < 0;
  double v = neg ? -x : x;
  // Convergents p/q of the continued fraction of v.
  uint64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = v;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(frac);
    if (fl > 9e18) break;
    uint64_t a = static_cast<uint64_t>(fl);
    // guard overflow of p1*a + p0
    if (q1 != 0 && a != 0 && q1 > (max_den - q0) / a) break;
    uint64_t p2 = a * p1 + p0;
    uint64_t q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    double rem = frac - fl;
    if (rem < 1e-15 * std::max(1.0, v)) break;
    frac = 1.0 / rem;
  }
  if (q1 == 0) {  // fell through immediately; fall back to truncation
    p1 = static_cast<uint64_t>(v);
    q1 = 1;
  }
  Rational q(mpz_class(static_cast<unsigned long>(p1)), mpz_class(static_cast<unsigned long>(q1)));
  q.canonicalize();
  return neg ? Rational(-q) : q;
}

inline std::string rat_str(const Rational& q) { return q.get_str(); }

}  // namespace ppeq
