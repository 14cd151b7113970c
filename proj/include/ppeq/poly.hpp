#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ppeq/interval.hpp"
#include "ppeq/rational.hpp"

namespace ppeq {

/// Exponent vector over a fixed variable universe. Trailing zeros are
/// significant only up to arity; two monomials compare lexicographically.
using Mono = std::vector<uint32_t>;

inline Mono mono_unit(size_t nvars) { return Mono(nvars, 0); }

inline Mono mono_var(size_t nvars, size_t v, uint32_t e = 1) {
  Mono m(nvars, 0);
  m[v] = e;
  return m;
}

inline uint32_t mono_degree(const Mono& m) {
  uint32_t d = 0;
  for (uint32_t e : m) d += e;
  return d;
}

inline Mono mono_mul(const Mono& a, const Mono& b) {
  Mono r(a);
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

/// Sparse multivariate polynomial with exact rational coefficients.
/// Canonical: no zero coefficients stored.
class PolyExpr {
 public:
  PolyExpr() : nvars_(0) {}
  explicit PolyExpr(size_t nvars) : nvars_(nvars) {}

  static PolyExpr constant(size_t nvars, const Rational& c) {
    PolyExpr p(nvars);
    if (c != 0) p.terms_[mono_unit(nvars)] = c;
    return p;
  }
  static PolyExpr variable(size_t nvars, size_t v) {
    PolyExpr p(nvars);
    p.terms_[mono_var(nvars, v)] = 1;
    return p;
  }

  size_t nvars() const { return nvars_; }
  const std::map<Mono, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  bool is_constant() const {
    if (terms_.empty()) return true;
    return terms_.size() == 1 && mono_degree(terms_.begin()->first) == 0;
  }

  Rational constant_value() const {
    auto it = terms_.find(mono_unit(nvars_));
    return it == terms_.end() ? Rational(0) : it->second;
  }

  Rational coeff(const Mono& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  uint32_t degree() const {
    uint32_t d = 0;
    for (auto& [m, c] : terms_) d = std::max(d, mono_degree(m));
    return d;
  }

  void add_term(const Mono& m, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  PolyExpr& operator+=(const PolyExpr& o) {
    for (auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  PolyExpr& operator-=(const PolyExpr& o) {
    for (auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  PolyExpr operator+(const PolyExpr& o) const {
    PolyExpr r(*this);
    r += o;
    return r;
  }
  PolyExpr operator-(const PolyExpr& o) const {
    PolyExpr r(*this);
    r -= o;
    return r;
  }
  PolyExpr operator-() const {
    PolyExpr r(nvars_);
    for (auto& [m, c] : terms_) r.terms_[m] = -c;
    return r;
  }
  PolyExpr operator*(const PolyExpr& o) const {
    PolyExpr r(nvars_);
    for (auto& [ma, ca] : terms_)
      for (auto& [mb, cb] : o.terms_) r.add_term(mono_mul(ma, mb), ca * cb);
    return r;
  }
  PolyExpr scaled(const Rational& c) const {
    PolyExpr r(nvars_);
    if (c == 0) return r;
    for (auto& [m, k] : terms_) r.terms_[m] = k * c;
    return r;
  }
  PolyExpr pow(uint32_t e) const {
    PolyExpr r = constant(nvars_, 1);
    PolyExpr base(*this);
    while (e > 0) {
      if (e & 1) r = r * base;
      base = base * base;
      e >>= 1;
    }
    return r;
  }

  bool operator==(const PolyExpr& o) const { return terms_ == o.terms_; }
  bool operator!=(const PolyExpr& o) const { return !(*this == o); }

  /// Substitutes variable v by the given polynomial (over the same universe).
  PolyExpr substituted(size_t v, const PolyExpr& repl) const {
    PolyExpr r(nvars_);
    for (auto& [m, c] : terms_) {
      if (m[v] == 0) {
        r.add_term(m, c);
        continue;
      }
      Mono rest(m);
      uint32_t e = rest[v];
      rest[v] = 0;
      PolyExpr part = repl.pow(e);
      for (auto& [pm, pc] : part.terms_) r.add_term(mono_mul(rest, pm), pc * c);
    }
    return r;
  }

  Rational eval(const std::vector<Rational>& point) const {
    Rational acc = 0;
    for (auto& [m, c] : terms_) {
      Rational t = c;
      for (size_t v = 0; v < nvars_; ++v)
        for (uint32_t k = 0; k < m[v]; ++k) t *= point[v];
      acc += t;
    }
    return acc;
  }

  /// Interval evaluation, monomial by monomial (sound over-approximation).
  Interval eval_interval(const std::vector<Interval>& box) const {
    Interval acc = Interval::point(Rational(0));
    for (auto& [m, c] : terms_) {
      Interval t = Interval::point(Rational(1));
      for (size_t v = 0; v < nvars_; ++v)
        if (m[v] > 0) t = t * box[v].pow(m[v]);
      acc = acc + t.scaled(c);
    }
    return acc;
  }

  /// Collects coefficients by the power of one variable: result[k] is the
  /// polynomial multiplying v^k, with v zeroed out of its monomials.
  std::map<uint32_t, PolyExpr> collect_powers(size_t v) const {
    std::map<uint32_t, PolyExpr> out;
    for (auto& [m, c] : terms_) {
      Mono rest(m);
      uint32_t e = rest[v];
      rest[v] = 0;
      auto [it, ins] = out.emplace(e, PolyExpr(nvars_));
      it->second.add_term(rest, c);
    }
    return out;
  }

  /// Extends the universe to new_nvars, mapping old var i to var_map[i].
  PolyExpr remapped(size_t new_nvars, const std::vector<size_t>& var_map) const {
    PolyExpr r(new_nvars);
    for (auto& [m, c] : terms_) {
      Mono nm(new_nvars, 0);
      for (size_t v = 0; v < nvars_; ++v)
        if (m[v]) nm[var_map[v]] += m[v];
      r.add_term(nm, c);
    }
    return r;
  }

  std::vector<size_t> vars_used() const {
    std::vector<bool> used(nvars_, false);
    for (auto& [m, c] : terms_)
      for (size_t v = 0; v < nvars_; ++v)
        if (m[v]) used[v] = true;
    std::vector<size_t> out;
    for (size_t v = 0; v < nvars_; ++v)
      if (used[v]) out.push_back(v);
    return out;
  }

  std::string str(const std::vector<std::string>& names) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [m, c] : terms_) {
      Rational a = c;
      if (first) {
        if (a < 0) {
          os << "-";
          a = -a;
        }
      } else {
        os << (a < 0 ? " - " : " + ");
        if (a < 0) a = -a;
      }
      first = false;
      bool printed = false;
      if (a != 1 || mono_degree(m) == 0) {
        os << rat_str(a);
        printed = true;
      }
      for (size_t v = 0; v < nvars_; ++v) {
        if (!m[v]) continue;
        if (printed) os << "*";
        os << names[v];
        if (m[v] > 1) os << "^" << m[v];
        printed = true;
      }
    }
    return os.str();
  }

 private:
  size_t nvars_;
  std::map<Mono, Rational> terms_;
};

}  // namespace ppeq
