#pragma once

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "ppeq/ast.hpp"
#include "ppeq/pcfg.hpp"

namespace ppeq {

struct DegreeOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Bernoulli numbers with B1 = +1/2 (the Faulhaber-friendly convention),
// via the standard recurrence.
inline const std::vector<Rational>& bernoulli_plus(size_t upto) {
  static std::vector<Rational> cache{Rational(1)};
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  while (cache.size() <= upto) {
    size_t m = cache.size();
    // sum_{j=0}^{m} C(m+1, j) B_j = m+1  (with B1 = +1/2)
    Rational sum = 0;
    Rational binom = 1;  // C(m+1, 0)
    for (size_t j = 0; j < m; ++j) {
      sum += binom * cache[j];
      binom = binom * Rational(static_cast<long>(m + 1 - j)) /
              Rational(static_cast<long>(j + 1));
    }
    // binom now C(m+1, m) = m+1
    cache.push_back((Rational(static_cast<long>(m + 1)) - sum) / binom);
  }
  return cache;
}

/// power_sum(n, p) = sum_{k=1}^{n} k^p for integer n >= 0, exact.
inline Rational power_sum(const mpz_class& n, unsigned p) {
  if (n <= 0) return 0;
  const auto& B = bernoulli_plus(p);
  // S_p(n) = 1/(p+1) * sum_{j=0}^{p} C(p+1, j) * B_j * n^{p+1-j}
  Rational total = 0;
  Rational binom = 1;
  mpz_class npow;
  for (unsigned j = 0; j <= p; ++j) {
    mpz_pow_ui(npow.get_mpz_t(), n.get_mpz_t(), p + 1 - j);
    total += binom * B[j] * Rational(npow);
    binom = binom * Rational(static_cast<long>(p + 1 - j)) / Rational(static_cast<long>(j + 1));
  }
  return total / Rational(static_cast<long>(p + 1));
}

/// sum_{k=a}^{b} k^p for any integers a <= b.
inline Rational power_sum_range(const mpz_class& a, const mpz_class& b, unsigned p) {
  Rational total = 0;
  if (b >= 0) {
    mpz_class lo = a > 0 ? a : mpz_class(0);
    total += power_sum(b, p) - power_sum(lo - 1, p);
    if (a <= 0 && p == 0) total += 1;  // k = 0 term
  } else if (a <= 0 && b >= 0) {
  }
  if (a < 0) {
    mpz_class hi = b < -1 ? b : mpz_class(-1);
    if (a <= hi) {
      Rational mag = power_sum(-a, p) - power_sum(-hi - 1, p);
      total += (p % 2 == 0) ? mag : -mag;
    }
  }
  return total;
}

}  // namespace detail

/// Exact raw moments E[X^p] for the supported bounded distributions,
/// memoized per (distribution, order).
class MomentTable {
 public:
  Rational raw_moment(const DistributionSpec& d, unsigned p) {
    if (p == 0) return 1;
    Key key{d.kind, d.params, p};
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    Rational m = compute(d, p);
    std::lock_guard<std::mutex> lock(mu_);
    cache_.emplace(std::move(key), m);
    return m;
  }

 private:
  using Key = std::tuple<DistKind, std::vector<Rational>, unsigned>;
  std::map<Key, Rational> cache_;
  std::mutex mu_;

  static Rational rat_pow(const Rational& x, unsigned p) {
    Rational r = 1;
    for (unsigned i = 0; i < p; ++i) r *= x;
    return r;
  }

  static Rational compute(const DistributionSpec& d, unsigned p) {
    switch (d.kind) {
      case DistKind::Bernoulli:
        return d.params[0];  // X in {0,1}
      case DistKind::PointMass:
        return rat_pow(d.params[0], p);
      case DistKind::Uniform: {
        const Rational &a = d.params[0], &b = d.params[1];
        return (rat_pow(b, p + 1) - rat_pow(a, p + 1)) /
               (Rational(static_cast<long>(p + 1)) * (b - a));
      }
      case DistKind::DiscreteUniform: {
        mpz_class a = d.params[0].get_num(), b = d.params[1].get_num();
        Rational count(b - a + 1);
        return detail::power_sum_range(a, b, p) / count;
      }
      case DistKind::Beta: {
        // E[X^p] = prod_{i=0}^{p-1} (alpha+i) / (alpha+beta+i)
        Rational r = 1;
        for (unsigned i = 0; i < p; ++i)
          r *= (d.params[0] + Rational(static_cast<long>(i))) /
               (d.params[0] + d.params[1] + Rational(static_cast<long>(i)));
        return r;
      }
    }
    throw UnsupportedDistribution("no moment rule for distribution");
  }
};

/// E[P(x') | x' = update(x)] as an exact polynomial over the pre-state.
/// Deterministic updates substitute simultaneously; sampled variables are
/// integrated out via raw moments (independent within a transition).
inline PolyExpr expected_poly_after_update(const PolyExpr& poly, const UpdateMap& updates,
                                           MomentTable& table) {
  size_t n = poly.nvars();
  // simultaneous substitution of deterministic updates, term by term
  PolyExpr det(n);
  for (auto& [m, c] : poly.terms()) {
    PolyExpr term = PolyExpr::constant(n, c);
    for (size_t v = 0; v < n; ++v) {
      if (!m[v]) continue;
      auto it = updates.find(v);
      if (it != updates.end() && it->second.kind == Update::Kind::Poly)
        term = term * it->second.poly.pow(m[v]);
      else
        term = term * PolyExpr::variable(n, v).pow(m[v]);
    }
    det += term;
  }
  // integrate sampled variables
  PolyExpr acc = det;
  for (auto& [v, up] : updates) {
    if (up.kind != Update::Kind::Sample) continue;
    std::map<uint32_t, PolyExpr> by_pow = acc.collect_powers(v);
    PolyExpr next(n);
    for (auto& [k, coeff] : by_pow)
      next += coeff.scaled(table.raw_moment(*up.dist, k));
    acc = next;
  }
  return acc;
}

}  // namespace ppeq
