#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ppeq/handelman.hpp"
#include "ppeq/invariant.hpp"
#include "ppeq/moments.hpp"
#include "ppeq/restart.hpp"

namespace ppeq {

/// Monomials of total degree <= d over n variables, graded-lex order.
inline std::vector<Mono> monomials_upto(size_t nvars, uint32_t d) {
  std::vector<Mono> out;
  Mono cur(nvars, 0);
  std::function<void(size_t, uint32_t)> rec = [&](size_t v, uint32_t left) {
    if (v == nvars) {
      out.push_back(cur);
      return;
    }
    for (uint32_t e = 0; e <= left; ++e) {
      cur[v] = e;
      rec(v + 1, left - e);
    }
    cur[v] = 0;
  };
  rec(0, d);
  return out;
}

/// Symbolic template: fresh coefficient ids for f (shared across both
/// programs) and one state-function row per non-terminal location.
struct Templates {
  uint32_t degree = 1;
  uint32_t f_degree = 1;
  size_t ntheta = 0;
  std::vector<std::string> theta_names;

  // f over the shared out-variable universe (k = |out_vars|)
  std::vector<std::pair<size_t, Mono>> f_terms;

  // state function rows: [loc] -> list of (theta, mono over program vars);
  // the terminal location row is empty (zero on output, hard-coded)
  std::vector<std::vector<std::pair<size_t, Mono>>> upper_rows;  // program 1
  std::vector<std::vector<std::pair<size_t, Mono>>> lower_rows;  // program 2

  size_t fresh(const std::string& name) {
    theta_names.push_back(name);
    return ntheta++;
  }
};

inline std::string mono_str(const Mono& m, const std::vector<std::string>& names) {
  std::string s;
  for (size_t v = 0; v < m.size(); ++v)
    for (uint32_t k = 0; k < m[v]; ++k) s += (s.empty() ? "" : "*") + names[v];
  return s.empty() ? "1" : s;
}

inline Templates make_templates(const Pcfg& p1, const Pcfg& p2, uint32_t degree,
                                uint32_t f_degree) {
  Templates t;
  t.degree = degree;
  t.f_degree = f_degree;
  size_t k = p1.out_vars.size();
  std::vector<std::string> out_names;
  for (size_t v : p1.out_vars) out_names.push_back(p1.vars[v]);
  for (auto& m : monomials_upto(k, f_degree))
    t.f_terms.emplace_back(t.fresh("f[" + mono_str(m, out_names) + "]"), m);
  auto make_rows = [&](const Pcfg& p, const char* tag) {
    std::vector<std::vector<std::pair<size_t, Mono>>> rows(p.nlocs());
    for (size_t l = 0; l < p.nlocs(); ++l) {
      if (l == p.out_loc) continue;
      for (auto& m : monomials_upto(p.nvars(), degree))
        rows[l].emplace_back(
            t.fresh(std::string(tag) + "@" + p.loc_names[l] + "[" + mono_str(m, p.vars) + "]"), m);
    }
    return rows;
  };
  t.upper_rows = make_rows(p1, "U");
  t.lower_rows = make_rows(p2, "L");
  return t;
}

/// f(x^out) embedded into a program's full variable universe as a LinPoly.
inline LinPoly embed_f(const std::vector<std::pair<size_t, Mono>>& f_terms, const Pcfg& cfg) {
  LinPoly r(cfg.nvars());
  for (auto& [theta, m] : f_terms) {
    Mono full(cfg.nvars(), 0);
    for (size_t i = 0; i < m.size(); ++i) full[cfg.out_vars[i]] += m[i];
    PolyExpr mult(cfg.nvars());
    mult.add_term(full, Rational(1));
    r += LinPoly::of_theta(cfg.nvars(), theta, std::move(mult));
  }
  return r;
}

/// Y(loc) = state_fun(loc) + f(x^out), per location, as LinPolys. The
/// terminal row is exactly f (zero on output).
inline std::vector<LinPoly> state_plus_f(
    const std::vector<std::vector<std::pair<size_t, Mono>>>& rows,
    const std::vector<std::pair<size_t, Mono>>& f_terms, const Pcfg& cfg) {
  LinPoly f = embed_f(f_terms, cfg);
  std::vector<LinPoly> y(cfg.nlocs(), LinPoly(cfg.nvars()));
  for (size_t l = 0; l < cfg.nlocs(); ++l) {
    y[l] = f;
    for (auto& [theta, m] : rows[l]) {
      PolyExpr mult(cfg.nvars());
      mult.add_term(m, Rational(1));
      y[l] += LinPoly::of_theta(cfg.nvars(), theta, std::move(mult));
    }
  }
  return y;
}

namespace detail {

inline LinPoly lin_expected(const LinPoly& y, const UpdateMap& updates, MomentTable& mt) {
  LinPoly r(y.nvars());
  r.constant = expected_poly_after_update(y.constant, updates, mt);
  for (auto& [theta, q] : y.coeffs) {
    PolyExpr e = expected_poly_after_update(q, updates, mt);
    if (!e.is_zero()) r.coeffs.emplace(theta, std::move(e));
  }
  return r;
}

}  // namespace detail

struct CollectOptions {
  uint32_t max_claim_degree = 8;
};

/// Expected next-step value of Y across one transition, as a LinPoly over the
/// pre-state. Probabilistic branches form the probability-weighted affine
/// combination of their arms.
inline LinPoly expected_step(const Transition& t, const std::vector<LinPoly>& y,
                             MomentTable& mt) {
  if (t.kind == Transition::Kind::Det) return detail::lin_expected(y[t.dst], t.updates, mt);
  LinPoly yt = detail::lin_expected(y[t.dst_true], t.updates_true, mt);
  LinPoly yf = detail::lin_expected(y[t.dst_false], t.updates_false, mt);
  size_t n = yt.nvars();
  PolyExpr one_minus = PolyExpr::constant(n, Rational(1)) - t.prob;
  return yt.times(t.prob) + yf.times(one_minus);
}

/// One entailment per transition: upper sense emits Y(src) - E[Y'] >= 0,
/// lower sense the mirror. Transitions out of unreachable locations and the
/// terminal self-loop are skipped; order is deterministic so stored witnesses
/// stay aligned between synthesis and verification.
inline std::vector<EntailmentConstraint> collect_claims(const Pcfg& cfg, const Invariant& inv,
                                                        const std::vector<LinPoly>& y, bool upper,
                                                        MomentTable& mt,
                                                        const CollectOptions& opts = {}) {
  std::vector<EntailmentConstraint> out;
  for (size_t ti = 0; ti < cfg.transitions.size(); ++ti) {
    const Transition& t = cfg.transitions[ti];
    if (t.src == cfg.out_loc) continue;  // zero-on-output absorbs the self-loop
    if (!inv.reachable.empty() && !inv.reachable[t.src]) continue;
    EntailmentConstraint ec;
    ec.hypothesis = inv.at[t.src].conjuncts;
    if (t.kind == Transition::Kind::Det)
      for (auto& g : t.guard.conjuncts) ec.hypothesis.push_back(g);
    LinPoly next = expected_step(t, y, mt);
    ec.claim = upper ? y[t.src] - next : next - y[t.src];
    ec.label = (upper ? "uesm:" : "lesm:") + cfg.loc_names[t.src] + "->#" + std::to_string(ti);
    if (ec.claim.degree() > opts.max_claim_degree)
      throw DegreeOverflow("claim degree " + std::to_string(ec.claim.degree()) +
                           " exceeds the configured maximum at " + ec.label);
    ec.polytope_bounded = !inv.bounded.empty() && inv.bounded[t.src];
    out.push_back(std::move(ec));
  }
  return out;
}

enum class Mode { Refute, Distance };

/// The full constraint system of one orientation: martingale entailments for
/// both programs, the gap side condition, and (in distance mode) the ids of
/// the f-coefficients that enter the 1-Lipschitz encoding.
struct ConstraintSystem {
  std::vector<EntailmentConstraint> upper_claims;  // program carrying the UESM
  std::vector<EntailmentConstraint> lower_claims;  // program carrying the LESM
  std::map<size_t, Rational> gap_coeffs;           // gap = sum theta + const
  Rational gap_const = 0;
  std::vector<size_t> lipschitz_thetas;  // degree-1 f coefficients, distance mode
  Mode mode = Mode::Refute;
  size_t ntheta = 0;
  std::vector<std::string> theta_names;
  bool all_polytopes_bounded = true;

  std::string dump_sexpr() const {
    std::ostringstream os;
    os << "(constraint-system\n  (mode " << (mode == Mode::Refute ? "refute" : "distance")
       << ")\n";
    auto dump_side = [&](const char* tag, const std::vector<EntailmentConstraint>& claims) {
      for (auto& ec : claims) {
        os << "  (" << tag << " \"" << ec.label << "\" (hyps " << ec.hypothesis.size()
           << ") (claim-degree " << ec.claim.degree() << "))\n";
      }
    };
    dump_side("entail", upper_claims);
    dump_side("entail", lower_claims);
    os << "  (gap";
    for (auto& [t, c] : gap_coeffs) os << " (" << theta_names[t] << " " << rat_str(c) << ")";
    os << " (const " << rat_str(gap_const) << ")))\n";
    return os.str();
  }
};

/// Evaluates a LinPoly at a concrete program state, yielding an affine
/// expression over the template coefficients.
inline std::pair<std::map<size_t, Rational>, Rational> eval_at_state(
    const LinPoly& y, const std::vector<Rational>& x) {
  std::map<size_t, Rational> coeffs;
  for (auto& [theta, q] : y.coeffs) {
    Rational v = q.eval(x);
    if (v != 0) coeffs.emplace(theta, v);
  }
  return {std::move(coeffs), y.constant.eval(x)};
}

inline ConstraintSystem collect(const RestartedProgram& p1, const RestartedProgram& p2,
                                const Invariant& inv1, const Invariant& inv2,
                                const Templates& tpl, Mode mode, MomentTable& mt,
                                const CollectOptions& opts = {}) {
  ConstraintSystem cs;
  cs.mode = mode;
  cs.ntheta = tpl.ntheta;
  cs.theta_names = tpl.theta_names;
  std::vector<LinPoly> yu = state_plus_f(tpl.upper_rows, tpl.f_terms, p1.pcfg);
  std::vector<LinPoly> yl = state_plus_f(tpl.lower_rows, tpl.f_terms, p2.pcfg);
  cs.upper_claims = collect_claims(p1.pcfg, inv1, yu, true, mt, opts);
  cs.lower_claims = collect_claims(p2.pcfg, inv2, yl, false, mt, opts);
  for (auto& ec : cs.upper_claims)
    if (!ec.polytope_bounded) cs.all_polytopes_bounded = false;
  for (auto& ec : cs.lower_claims)
    if (!ec.polytope_bounded) cs.all_polytopes_bounded = false;
  // gap = [L + f](init2) - [U + f](init1)
  auto [uc, ub] = eval_at_state(yu[p1.pcfg.init_loc], p1.pcfg.init_valuation);
  auto [lc, lb] = eval_at_state(yl[p2.pcfg.init_loc], p2.pcfg.init_valuation);
  for (auto& [t, v] : lc) cs.gap_coeffs[t] += v;
  for (auto& [t, v] : uc) cs.gap_coeffs[t] -= v;
  for (auto it = cs.gap_coeffs.begin(); it != cs.gap_coeffs.end();)
    it = it->second == 0 ? cs.gap_coeffs.erase(it) : std::next(it);
  cs.gap_const = lb - ub;
  if (mode == Mode::Distance) {
    // degree-1 coefficients of f (excluding the constant monomial)
    for (auto& [theta, m] : tpl.f_terms)
      if (mono_degree(m) == 1) cs.lipschitz_thetas.push_back(theta);
  }
  return cs;
}

// ---------------------------------------------------------------------------
// OST condition (C2): uniform boundedness of |state_fun + f| along runs,
// certified by interval evaluation over the per-location variable boxes.
// ---------------------------------------------------------------------------

struct UnboundedY : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct C2Certificate {
  Rational bound;  // |state_fun + f| <= bound at every location within boxes
  std::vector<Rational> per_location;
};

/// Interval-evaluates |Y(loc)| over the variable bounds; each restart attempt
/// ranges over the same per-location boxes, so the bound holds across
/// restarts as well.
inline C2Certificate certify_c2(const Pcfg& cfg, const VarBounds& bounds,
                                const std::vector<PolyExpr>& y_concrete) {
  C2Certificate cert;
  cert.per_location.assign(cfg.nlocs(), Rational(0));
  for (size_t l = 0; l < cfg.nlocs(); ++l) {
    std::vector<Interval> box = bounds.at[l];
    bool unreachable = false;
    for (auto& iv : box)
      if (iv.empty) unreachable = true;
    if (unreachable) continue;
    Interval range = y_concrete[l].eval_interval(box);
    auto mag = range.abs_bound();
    if (!mag)
      throw UnboundedY("state function + f is unbounded at location " + cfg.loc_names[l]);
    cert.per_location[l] = *mag;
    cert.bound = std::max(cert.bound, *mag);
  }
  return cert;
}

}  // namespace ppeq
