#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "ppeq/rational.hpp"

namespace ppeq {

/// Closed rational interval with optional infinities. Empty intervals are
/// represented explicitly; arithmetic on empty propagates empty.
struct Interval {
  std::optional<Rational> lo;  // nullopt = -inf
  std::optional<Rational> hi;  // nullopt = +inf
  bool empty = false;

  static Interval top() { return Interval{}; }
  static Interval bottom() {
    Interval iv;
    iv.empty = true;
    return iv;
  }
  static Interval point(const Rational& v) { return Interval{v, v, false}; }
  static Interval range(const Rational& a, const Rational& b) {
    if (a > b) return bottom();
    return Interval{a, b, false};
  }

  bool is_point() const { return !empty && lo && hi && *lo == *hi; }
  bool bounded() const { return !empty && lo && hi; }

  bool contains(const Rational& v) const {
    if (empty) return false;
    if (lo && v < *lo) return false;
    if (hi && v > *hi) return false;
    return true;
  }

  bool operator==(const Interval& o) const {
    if (empty != o.empty) return false;
    if (empty) return true;
    return lo == o.lo && hi == o.hi;
  }

  Interval join(const Interval& o) const {
    if (empty) return o;
    if (o.empty) return *this;
    Interval r;
    if (lo && o.lo) r.lo = std::min(*lo, *o.lo);
    if (hi && o.hi) r.hi = std::max(*hi, *o.hi);
    return r;
  }

  Interval meet(const Interval& o) const {
    if (empty || o.empty) return bottom();
    Interval r;
    if (lo && o.lo)
      r.lo = std::max(*lo, *o.lo);
    else
      r.lo = lo ? lo : o.lo;
    if (hi && o.hi)
      r.hi = std::min(*hi, *o.hi);
    else
      r.hi = hi ? hi : o.hi;
    if (r.lo && r.hi && *r.lo > *r.hi) return bottom();
    return r;
  }

  /// Standard widening: unstable bounds jump to infinity.
  Interval widen(const Interval& newer) const {
    if (empty) return newer;
    if (newer.empty) return *this;
    Interval r;
    r.lo = (lo && newer.lo && *newer.lo >= *lo) ? lo : std::nullopt;
    r.hi = (hi && newer.hi && *newer.hi <= *hi) ? hi : std::nullopt;
    return r;
  }

  Interval operator+(const Interval& o) const {
    if (empty || o.empty) return bottom();
    Interval r;
    if (lo && o.lo) r.lo = *lo + *o.lo;
    if (hi && o.hi) r.hi = *hi + *o.hi;
    return r;
  }

  Interval operator-() const {
    if (empty) return bottom();
    Interval r;
    if (hi) r.lo = -*hi;
    if (lo) r.hi = -*lo;
    return r;
  }

  Interval operator-(const Interval& o) const { return *this + (-o); }

  Interval operator*(const Interval& o) const {
    if (empty || o.empty) return bottom();
    if (is_point() && *lo == 0) return point(Rational(0));
    if (o.is_point() && *o.lo == 0) return point(Rational(0));
    // Any unbounded side with a possibly-nonzero partner yields unbounded.
    auto mul = [](const std::optional<Rational>& a, const std::optional<Rational>& b)
        -> std::optional<Rational> {
      if (!a || !b) return std::nullopt;
      return *a * *b;
    };
    std::optional<Rational> cands[4] = {mul(lo, o.lo), mul(lo, o.hi), mul(hi, o.lo),
                                        mul(hi, o.hi)};
    bool any_inf = false;
    std::optional<Rational> mn, mx;
    for (auto& c : cands) {
      if (!c) {
        any_inf = true;
        continue;
      }
      if (!mn || *c < *mn) mn = c;
      if (!mx || *c > *mx) mx = c;
    }
    Interval r;
    if (any_inf) return top();
    r.lo = mn;
    r.hi = mx;
    return r;
  }

  Interval scaled(const Rational& c) const {
    if (empty) return bottom();
    if (c == 0) return point(Rational(0));
    Interval r;
    if (c > 0) {
      if (lo) r.lo = *lo * c;
      if (hi) r.hi = *hi * c;
    } else {
      if (hi) r.lo = *hi * c;
      if (lo) r.hi = *lo * c;
    }
    return r;
  }

  Interval pow(unsigned e) const {
    if (empty) return bottom();
    if (e == 0) return point(Rational(1));
    Interval acc = *this;
    // even powers of sign-spanning intervals need care
    if (e % 2 == 0) {
      Interval sq = (*this) * (*this);
      if (contains(Rational(0)) && sq.lo && *sq.lo > 0) sq.lo = Rational(0);
      if (!sq.empty && sq.lo && *sq.lo < 0) sq.lo = Rational(0);
      Interval r = sq;
      for (unsigned k = 2; k + 2 <= e; k += 2) r = r * sq;
      return r;
    }
    for (unsigned k = 1; k < e; ++k) acc = acc * (*this);
    return acc;
  }

  /// Magnitude bound: sup |v| over the interval, if finite.
  std::optional<Rational> abs_bound() const {
    if (empty) return Rational(0);
    if (!lo || !hi) return std::nullopt;
    Rational a = abs(*lo), b = abs(*hi);
    return a > b ? a : b;
  }

  std::string str() const {
    if (empty) return "<empty>";
    std::string a = lo ? rat_str(*lo) : "-inf";
    std::string b = hi ? rat_str(*hi) : "+inf";
    return "[" + a + ", " + b + "]";
  }
};

}  // namespace ppeq
