#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ppeq/poly.hpp"

namespace ppeq {

enum class CmpSense { Geq, Gt, Eq };

/// Affine inequality  coeffs . x + constant  (>= | > | =)  0.
struct AffineConstraint {
  std::vector<Rational> coeffs;
  Rational constant = 0;
  CmpSense sense = CmpSense::Geq;

  size_t nvars() const { return coeffs.size(); }

  bool is_trivially_true() const {
    for (auto& c : coeffs)
      if (c != 0) return false;
    switch (sense) {
      case CmpSense::Geq: return constant >= 0;
      case CmpSense::Gt: return constant > 0;
      case CmpSense::Eq: return constant == 0;
    }
    return false;
  }

  bool holds_at(const std::vector<Rational>& point) const {
    Rational v = constant;
    for (size_t i = 0; i < coeffs.size(); ++i) v += coeffs[i] * point[i];
    switch (sense) {
      case CmpSense::Geq: return v >= 0;
      case CmpSense::Gt: return v > 0;
      case CmpSense::Eq: return v == 0;
    }
    return false;
  }

  PolyExpr to_poly() const {
    PolyExpr p(coeffs.size());
    for (size_t i = 0; i < coeffs.size(); ++i)
      if (coeffs[i] != 0) p.add_term(mono_var(coeffs.size(), i), coeffs[i]);
    if (constant != 0) p.add_term(mono_unit(coeffs.size()), constant);
    return p;
  }

  AffineConstraint negated() const {
    // not(e >= 0)  is  -e > 0 ; not(e > 0) is -e >= 0. Equalities do not negate
    // to a single constraint and are handled by the caller.
    AffineConstraint r;
    r.coeffs.resize(coeffs.size());
    for (size_t i = 0; i < coeffs.size(); ++i) r.coeffs[i] = -coeffs[i];
    r.constant = -constant;
    r.sense = sense == CmpSense::Geq ? CmpSense::Gt : CmpSense::Geq;
    return r;
  }

  std::string str(const std::vector<std::string>& names) const {
    std::string op = sense == CmpSense::Geq ? " >= 0" : (sense == CmpSense::Gt ? " > 0" : " = 0");
    return to_poly().str(names) + op;
  }
};

/// Conjunction of affine constraints; empty conjunction means "true".
struct LinearPredicate {
  std::vector<AffineConstraint> conjuncts;

  bool is_true() const { return conjuncts.empty(); }

  bool holds_at(const std::vector<Rational>& point) const {
    for (auto& c : conjuncts)
      if (!c.holds_at(point)) return false;
    return true;
  }

  LinearPredicate conjoin(const LinearPredicate& o) const {
    LinearPredicate r(*this);
    r.conjuncts.insert(r.conjuncts.end(), o.conjuncts.begin(), o.conjuncts.end());
    return r;
  }

  std::string str(const std::vector<std::string>& names) const {
    if (conjuncts.empty()) return "true";
    std::string s;
    for (size_t i = 0; i < conjuncts.size(); ++i) {
      if (i) s += "  &&  ";
      s += conjuncts[i].str(names);
    }
    return s;
  }
};

}  // namespace ppeq
