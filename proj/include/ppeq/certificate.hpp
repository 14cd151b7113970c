#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppeq/constraints.hpp"

namespace ppeq {

/// Concrete witness triple (f, U, L) with the Handelman multipliers that
/// certify every martingale entailment, plus the OST (C2) bounds.
struct CertificateTriple {
  uint32_t degree = 1;
  Mode mode = Mode::Refute;
  bool swapped = false;  // true: program 2 carries the UESM

  PolyExpr f;                      // over the shared out-variable universe
  std::vector<PolyExpr> upper;     // per location of the UESM program
  std::vector<PolyExpr> lower;     // per location of the LESM program
  Rational gap = 0;

  struct Witness {
    std::string label;
    std::vector<std::pair<std::vector<uint32_t>, Rational>> lambdas;
  };
  std::vector<Witness> witnesses;  // upper claims then lower claims, in order

  Rational c2_upper = 0, c2_lower = 0;
};

struct ObligationResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerificationReport {
  std::vector<ObligationResult> items;

  bool all_pass() const {
    for (auto& o : items)
      if (!o.pass) return false;
    return true;
  }
  size_t failures() const {
    size_t n = 0;
    for (auto& o : items)
      if (!o.pass) ++n;
    return n;
  }
  std::string summary() const {
    std::ostringstream os;
    for (auto& o : items)
      os << (o.pass ? "  [ok]   " : "  [FAIL] ") << o.name
         << (o.detail.empty() ? "" : "  (" + o.detail + ")") << "\n";
    return os.str();
  }
};

/// Converts concrete state functions plus f into per-location Y polynomials.
inline std::vector<PolyExpr> concrete_y(const std::vector<PolyExpr>& state_fun,
                                        const PolyExpr& f, const Pcfg& cfg) {
  std::vector<size_t> emb(f.nvars());
  for (size_t i = 0; i < f.nvars(); ++i) emb[i] = cfg.out_vars[i];
  PolyExpr f_full = f.remapped(cfg.nvars(), emb);
  std::vector<PolyExpr> y(cfg.nlocs(), PolyExpr(cfg.nvars()));
  for (size_t l = 0; l < cfg.nlocs(); ++l) y[l] = state_fun[l] + f_full;
  return y;
}

/// Re-derives every obligation of Theorem-style soundness from scratch in
/// exact rational arithmetic: zero-on-output, the per-transition martingale
/// entailments through their stored Handelman witnesses, the positive
/// initial-state gap, the (C2) boundedness certificate, and in distance mode
/// the 1-Lipschitz bound on f. No floating point influences the verdict.
inline VerificationReport check_certificate(const CertificateTriple& cert,
                                            const RestartedProgram& up_prog,
                                            const RestartedProgram& low_prog,
                                            const Invariant& up_inv, const Invariant& low_inv,
                                            MomentTable& mt) {
  VerificationReport rep;
  auto push = [&](const std::string& name, bool pass, const std::string& detail = "") {
    rep.items.push_back({name, pass, detail});
  };

  const Pcfg& pu = up_prog.pcfg;
  const Pcfg& pl = low_prog.pcfg;
  push("zero-on-output (UESM)", cert.upper[pu.out_loc].is_zero());
  push("zero-on-output (LESM)", cert.lower[pl.out_loc].is_zero());

  // rebuild claims over the concrete polynomials
  std::vector<PolyExpr> yu = concrete_y(cert.upper, cert.f, pu);
  std::vector<PolyExpr> yl = concrete_y(cert.lower, cert.f, pl);
  auto wrap = [](const std::vector<PolyExpr>& ys) {
    std::vector<LinPoly> out;
    for (auto& p : ys) out.push_back(LinPoly::of_const(p));
    return out;
  };
  CollectOptions copts;
  copts.max_claim_degree = 64;  // the checker never rejects on degree
  std::vector<EntailmentConstraint> claims = collect_claims(pu, up_inv, wrap(yu), true, mt, copts);
  std::vector<EntailmentConstraint> lower_claims =
      collect_claims(pl, low_inv, wrap(yl), false, mt, copts);
  claims.insert(claims.end(), lower_claims.begin(), lower_claims.end());

  if (claims.size() != cert.witnesses.size()) {
    push("witness alignment", false,
         "expected " + std::to_string(claims.size()) + " witnesses, have " +
             std::to_string(cert.witnesses.size()));
  } else {
    for (size_t i = 0; i < claims.size(); ++i) {
      const PolyExpr& claim = claims[i].claim.constant;  // theta-free here
      bool ok = handelman::check_witness(claims[i].hypothesis, claim, cert.witnesses[i].lambdas);
      push("entailment " + claims[i].label, ok,
           ok ? "" : "lambda re-expansion does not reproduce the claim");
    }
  }

  // gap, exactly, at the initial states
  Rational at_u = yu[pu.init_loc].eval(pu.init_valuation);
  Rational at_l = yl[pl.init_loc].eval(pl.init_valuation);
  Rational gap = at_l - at_u;
  push("gap recomputation", gap == cert.gap,
       "recomputed " + rat_str(gap) + ", stored " + rat_str(cert.gap));
  push("gap > 0", gap > 0, "gap = " + rat_str(gap));

  // OST condition (C2) through interval bounds
  try {
    VarBounds bu = propagate_bounds(pu);
    C2Certificate cu = certify_c2(pu, bu, yu);
    push("C2 boundedness (UESM side)", true, "|Y| <= " + rat_str(cu.bound));
  } catch (const std::exception& e) {
    push("C2 boundedness (UESM side)", false, e.what());
  }
  try {
    VarBounds bl = propagate_bounds(pl);
    C2Certificate cl = certify_c2(pl, bl, yl);
    push("C2 boundedness (LESM side)", true, "|Y| <= " + rat_str(cl.bound));
  } catch (const std::exception& e) {
    push("C2 boundedness (LESM side)", false, e.what());
  }

  if (cert.mode == Mode::Distance) {
    bool deg_ok = cert.f.degree() <= 1;
    Rational l1 = 0;
    for (auto& [m, c] : cert.f.terms())
      if (mono_degree(m) == 1) l1 += abs(c);
    push("f is 1-Lipschitz (L1 ground metric)", deg_ok && l1 <= 1,
         "degree " + std::to_string(cert.f.degree()) + ", |coeffs|_1 = " + rat_str(l1));
  }
  return rep;
}

}  // namespace ppeq
