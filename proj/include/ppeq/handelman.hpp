#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ppeq/linear.hpp"
#include "ppeq/lp.hpp"
#include "ppeq/poly.hpp"

namespace ppeq {

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Polynomial over program variables whose coefficients are affine in a set
/// of symbolic template coefficients ("theta" variables).
struct LinPoly {
  PolyExpr constant;                   // theta-free part
  std::map<size_t, PolyExpr> coeffs;   // theta id -> multiplier polynomial

  explicit LinPoly(size_t nvars = 0) : constant(nvars) {}

  static LinPoly of_theta(size_t nvars, size_t theta, PolyExpr mult) {
    LinPoly r(nvars);
    if (!mult.is_zero()) r.coeffs.emplace(theta, std::move(mult));
    return r;
  }
  static LinPoly of_const(PolyExpr p) {
    LinPoly r(p.nvars());
    r.constant = std::move(p);
    return r;
  }

  size_t nvars() const { return constant.nvars(); }

  LinPoly& operator+=(const LinPoly& o) {
    constant += o.constant;
    for (auto& [t, p] : o.coeffs) {
      auto [it, ins] = coeffs.emplace(t, p);
      if (!ins) {
        it->second += p;
        if (it->second.is_zero()) coeffs.erase(it);
      }
    }
    return *this;
  }
  LinPoly operator+(const LinPoly& o) const {
    LinPoly r(*this);
    r += o;
    return r;
  }
  LinPoly operator-() const {
    LinPoly r(nvars());
    r.constant = -constant;
    for (auto& [t, p] : coeffs) r.coeffs.emplace(t, -p);
    return r;
  }
  LinPoly operator-(const LinPoly& o) const { return *this + (-o); }

  LinPoly times(const PolyExpr& p) const {
    LinPoly r(nvars());
    r.constant = constant * p;
    for (auto& [t, q] : coeffs) {
      PolyExpr m = q * p;
      if (!m.is_zero()) r.coeffs.emplace(t, std::move(m));
    }
    return r;
  }
  LinPoly scaled(const Rational& c) const {
    LinPoly r(nvars());
    r.constant = constant.scaled(c);
    for (auto& [t, q] : coeffs) {
      PolyExpr m = q.scaled(c);
      if (!m.is_zero()) r.coeffs.emplace(t, std::move(m));
    }
    return r;
  }

  /// Applies a variable-substitution map (var -> PolyExpr) to every part.
  LinPoly substituted(size_t var, const PolyExpr& repl) const {
    LinPoly r(nvars());
    r.constant = constant.substituted(var, repl);
    for (auto& [t, q] : coeffs) {
      PolyExpr m = q.substituted(var, repl);
      if (!m.is_zero()) r.coeffs.emplace(t, std::move(m));
    }
    return r;
  }

  uint32_t degree() const {
    uint32_t d = constant.degree();
    for (auto& [t, q] : coeffs) d = std::max(d, q.degree());
    return d;
  }

  bool is_zero() const { return constant.is_zero() && coeffs.empty(); }

  PolyExpr instantiate(const std::map<size_t, Rational>& theta) const {
    PolyExpr p = constant;
    for (auto& [t, q] : coeffs) {
      auto it = theta.find(t);
      Rational v = it == theta.end() ? Rational(0) : it->second;
      if (v != 0) p += q.scaled(v);
    }
    return p;
  }

  std::set<Mono> support() const {
    std::set<Mono> s;
    for (auto& [m, c] : constant.terms()) s.insert(m);
    for (auto& [t, q] : coeffs)
      for (auto& [m, c] : q.terms()) s.insert(m);
    return s;
  }
};

enum class EntailSense { Geq, Leq };

/// "hypothesis (affine conjunction) entails claim >= 0", claim affine in the
/// template coefficients.
struct EntailmentConstraint {
  std::vector<AffineConstraint> hypothesis;
  LinPoly claim;  // normalized to claim >= 0
  std::string label;
  int d_h = 0;  // 0 = default: deg(claim)
  bool polytope_bounded = true;
};

struct HandelmanProduct {
  std::vector<uint32_t> expo;  // exponent per hypothesis form
  PolyExpr poly;
};

struct HandelmanOptions {
  size_t max_products = 20000;
  int extra_degree = 0;  // raises d_H above deg(claim)
};

/// The monoid of products of hypothesis forms up to a degree budget. The
/// form list is canonical for a given hypothesis (pruning only restricts
/// which forms enter products), so stored exponent vectors stay meaningful
/// across re-construction during exact verification.
class HandelmanBasis {
 public:
  HandelmanBasis(const std::vector<AffineConstraint>& hypothesis, size_t nvars,
                 const std::set<size_t>& relevant_vars, int d_h, size_t max_products)
      : nvars_(nvars) {
    // Equalities contribute both directions; strict inequalities weaken to
    // non-strict on the hypothesis side.
    for (auto& c : hypothesis) {
      PolyExpr p = c.to_poly();
      if (p.nvars() != nvars) throw std::logic_error("hypothesis variable universe mismatch");
      add_form(p);
      if (c.sense == CmpSense::Eq) add_form(-p);
    }
    for (size_t i = 0; i < forms_.size(); ++i) {
      if (relevant_vars.empty()) {
        active_.push_back(i);
        continue;
      }
      bool any = forms_[i].vars_used().empty();
      for (size_t v : forms_[i].vars_used())
        if (relevant_vars.count(v)) any = true;
      if (any) active_.push_back(i);
    }
    build(d_h, max_products);
  }

  const std::vector<PolyExpr>& forms() const { return forms_; }
  const std::vector<HandelmanProduct>& products() const { return products_; }

  /// Expands a product exponent vector against the canonical form list.
  PolyExpr expand_expo(const std::vector<uint32_t>& expo) const {
    PolyExpr p = PolyExpr::constant(nvars_, 1);
    for (size_t i = 0; i < expo.size() && i < forms_.size(); ++i)
      for (uint32_t k = 0; k < expo[i]; ++k) p = p * forms_[i];
    return p;
  }

 private:
  size_t nvars_;
  std::vector<PolyExpr> forms_;
  std::vector<size_t> active_;
  std::vector<HandelmanProduct> products_;

  void add_form(PolyExpr p) {
    if (p.is_zero()) return;
    // normalize so the largest coefficient has magnitude 1
    Rational mx = 0;
    for (auto& [m, c] : p.terms()) {
      Rational a = abs(c);
      if (a > mx) mx = a;
    }
    if (mx != 0 && mx != 1) p = p.scaled(Rational(1) / mx);
    for (auto& f : forms_)
      if (f == p) return;
    forms_.push_back(std::move(p));
  }

  void build(int d_h, size_t max_products) {
    products_.push_back({std::vector<uint32_t>(forms_.size(), 0), PolyExpr::constant(nvars_, 1)});
    std::vector<uint32_t> expo(forms_.size(), 0);
    PolyExpr acc = PolyExpr::constant(nvars_, 1);
    rec(0, d_h, expo, acc, max_products);
  }

  void rec(size_t pos, int remaining, std::vector<uint32_t>& expo, const PolyExpr& acc,
           size_t max_products) {
    if (pos >= active_.size() || remaining == 0) return;
    size_t idx = active_[pos];
    PolyExpr next = acc * forms_[idx];
    expo[idx] += 1;
    if (products_.size() >= max_products)
      throw BudgetExceeded("Handelman monoid exceeds the product cap");
    products_.push_back({expo, next});
    rec(pos, remaining - 1, expo, next, max_products);
    expo[idx] -= 1;
    rec(pos + 1, remaining, expo, acc, max_products);
  }
};

namespace handelman {

/// Transitive closure of variables connected to the claim through shared
/// hypothesis forms; forms outside the closure cannot help the derivation.
inline std::set<size_t> relevant_vars(const EntailmentConstraint& ec) {
  std::set<size_t> rel;
  for (auto& m : ec.claim.support())
    for (size_t v = 0; v < m.size(); ++v)
      if (m[v]) rel.insert(v);
  bool grew = true;
  while (grew) {
    grew = false;
    for (auto& h : ec.hypothesis) {
      bool touches = false;
      std::vector<size_t> hv;
      for (size_t v = 0; v < h.coeffs.size(); ++v)
        if (h.coeffs[v] != 0) {
          hv.push_back(v);
          if (rel.count(v)) touches = true;
        }
      if (!touches) continue;
      for (size_t v : hv)
        if (rel.insert(v).second) grew = true;
    }
  }
  return rel;
}

inline int default_budget(const EntailmentConstraint& ec, int extra) {
  int d = static_cast<int>(ec.claim.degree());
  if (ec.d_h > 0) d = ec.d_h;
  return std::max(1, d) + extra;
}

/// Exact entailment check for a concrete claim: is claim representable as a
/// nonnegative combination of hypothesis products within the budget?
/// Returns the witness multipliers on success.
inline std::optional<std::vector<std::pair<std::vector<uint32_t>, Rational>>> entails(
    const std::vector<AffineConstraint>& hypothesis, const PolyExpr& claim, int d_h,
    size_t max_products = 20000) {
  EntailmentConstraint ec;
  ec.hypothesis = hypothesis;
  ec.claim = LinPoly::of_const(claim);
  HandelmanBasis basis(hypothesis, claim.nvars(), relevant_vars(ec), d_h, max_products);
  // rows: one per monomial, A lambda = c
  std::map<Mono, size_t> row_of;
  auto row_for = [&](const Mono& m) {
    auto [it, ins] = row_of.emplace(m, row_of.size());
    return it->second;
  };
  for (auto& [m, c] : claim.terms()) row_for(m);
  std::vector<std::vector<std::pair<size_t, Rational>>> cols;
  for (auto& pr : basis.products()) {
    std::vector<std::pair<size_t, Rational>> col;
    for (auto& [m, c] : pr.poly.terms()) col.emplace_back(row_for(m), c);
    cols.push_back(std::move(col));
  }
  size_t nrows = row_of.size();
  std::vector<std::vector<std::pair<size_t, Rational>>> rows(nrows);
  for (size_t j = 0; j < cols.size(); ++j)
    for (auto& [r, v] : cols[j]) rows[r].emplace_back(j, v);
  std::vector<Rational> b(nrows, Rational(0));
  for (auto& [m, c] : claim.terms()) b[row_of[m]] = c;
  auto sol = ratlp::feasible_eq_nonneg(rows, b, cols.size());
  if (!sol) return std::nullopt;
  std::vector<std::pair<std::vector<uint32_t>, Rational>> witness;
  for (size_t j = 0; j < sol->size(); ++j)
    if ((*sol)[j] != 0) witness.emplace_back(basis.products()[j].expo, (*sol)[j]);
  return witness;
}

/// Exact re-expansion of a stored witness: confirms coefficient-wise that
/// claim == sum of lambda * product with lambda >= 0.
inline bool check_witness(const std::vector<AffineConstraint>& hypothesis, const PolyExpr& claim,
                          const std::vector<std::pair<std::vector<uint32_t>, Rational>>& witness) {
  HandelmanBasis basis(hypothesis, claim.nvars(), {}, 0, SIZE_MAX);
  PolyExpr sum(claim.nvars());
  for (auto& [expo, lam] : witness) {
    if (lam < 0) return false;
    sum += basis.expand_expo(expo).scaled(lam);
  }
  return sum == claim;
}

}  // namespace handelman
}  // namespace ppeq
