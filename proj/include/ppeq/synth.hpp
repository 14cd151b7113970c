#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ppeq/certificate.hpp"
#include "ppeq/constraints.hpp"
#include "ppeq/lp.hpp"

namespace ppeq {

struct SynthOptions {
  int handelman_extra = 0;
  size_t max_products = 20000;
  double epsilon = 1e-6;      // strictness floor for the gap
  double gap_cap = 1000.0;    // refute mode: certificates scale, so cap the LP
  double distance_cap = 1e12;
  uint64_t lift_den_cap = 1000000000ull;
  long max_lp_iters = 400000;
  int repair_rounds = 2;
  bool collect_lp_dump = false;
};

struct SynthResult {
  enum class Outcome { Verified, Infeasible, Unbounded, SolverFailure, LiftFailure };
  Outcome outcome = Outcome::SolverFailure;
  std::optional<CertificateTriple> cert;
  VerificationReport report;
  long lp_iterations = 0;
  std::string detail;
  std::string lp_dump;
  bool semi_completeness_forfeited = false;
};

namespace detail {

struct EntailmentBlock {
  const EntailmentConstraint* ec;
  int used_budget = 0;  // initialized before basis (declaration order matters)
  HandelmanBasis basis;
  size_t lambda_offset = 0;  // first LP column of this block
  bool degraded = false;  // product cap forced a lower degree than deg(claim)

  static HandelmanBasis build(const EntailmentConstraint& e, size_t nvars, int& budget,
                              size_t max_products) {
    // degrade the product degree under the cap instead of giving up; a lower
    // degree only restricts which coefficients the LP may use
    while (true) {
      try {
        return HandelmanBasis(e.hypothesis, nvars, handelman::relevant_vars(e), budget,
                              max_products);
      } catch (const BudgetExceeded&) {
        if (budget <= 1) throw;
        --budget;
      }
    }
  }

  EntailmentBlock(const EntailmentConstraint& e, size_t nvars, int extra, size_t max_products)
      : ec(&e),
        used_budget(handelman::default_budget(e, extra)),
        basis(build(e, nvars, used_budget, max_products)) {
    degraded = used_budget < handelman::default_budget(e, extra);
  }
};

/// Exact nonnegative fit of claim = sum lambda * product, warm-started from
/// the float solution's support and widened on failure.
inline std::optional<std::vector<std::pair<std::vector<uint32_t>, Rational>>> fit_lambda(
    const HandelmanBasis& basis, const PolyExpr& claim, const std::vector<double>& hint) {
  const auto& products = basis.products();
  auto attempt = [&](const std::vector<size_t>& cols)
      -> std::optional<std::vector<std::pair<std::vector<uint32_t>, Rational>>> {
    std::map<Mono, size_t> row_of;
    auto row_for = [&](const Mono& m) {
      auto [it, ins] = row_of.emplace(m, row_of.size());
      return it->second;
    };
    for (auto& [m, c] : claim.terms()) row_for(m);
    std::vector<std::vector<std::pair<size_t, Rational>>> colv;
    for (size_t j : cols) {
      std::vector<std::pair<size_t, Rational>> col;
      for (auto& [m, c] : products[j].poly.terms()) col.emplace_back(row_for(m), c);
      colv.push_back(std::move(col));
    }
    std::vector<std::vector<std::pair<size_t, Rational>>> rows(row_of.size());
    for (size_t j = 0; j < colv.size(); ++j)
      for (auto& [r, v] : colv[j]) rows[r].emplace_back(j, v);
    std::vector<Rational> b(row_of.size(), Rational(0));
    for (auto& [m, c] : claim.terms()) b[row_of[m]] = c;
    auto sol = ratlp::feasible_eq_nonneg(rows, b, cols.size());
    if (!sol) return std::nullopt;
    std::vector<std::pair<std::vector<uint32_t>, Rational>> witness;
    for (size_t j = 0; j < sol->size(); ++j)
      if ((*sol)[j] != 0) witness.emplace_back(products[cols[j]].expo, (*sol)[j]);
    return witness;
  };
  // restricted attempt on the float support
  std::vector<size_t> support;
  for (size_t j = 0; j < products.size() && j < hint.size(); ++j)
    if (hint[j] > 1e-9) support.push_back(j);
  if (support.empty() || support[0] != 0) support.insert(support.begin(), 0);  // constant product
  if (support.size() < products.size()) {
    if (auto w = attempt(support)) return w;
  }
  // full fallback
  std::vector<size_t> all(products.size());
  for (size_t j = 0; j < all.size(); ++j) all[j] = j;
  return attempt(all);
}

}  // namespace detail

/// One synthesis attempt at a fixed degree and orientation: build the LP via
/// the Handelman translation, solve in floating point, lift the template
/// coefficients to rationals, re-fit every multiplier exactly, and verify the
/// assembled certificate from scratch. Only the exact verification decides.
inline SynthResult synthesize(const RestartedProgram& up_prog, const RestartedProgram& low_prog,
                              const Invariant& up_inv, const Invariant& low_inv, uint32_t degree,
                              Mode mode, MomentTable& mt, const SynthOptions& opts,
                              bool swapped) {
  SynthResult result;
  uint32_t f_degree = mode == Mode::Distance ? 1 : degree;
  Templates tpl = make_templates(up_prog.pcfg, low_prog.pcfg, degree, f_degree);
  ConstraintSystem cs;
  try {
    cs = collect(up_prog, low_prog, up_inv, low_inv, tpl, mode, mt);
  } catch (const DegreeOverflow& e) {
    result.outcome = SynthResult::Outcome::SolverFailure;
    result.detail = e.what();
    return result;
  }
  result.semi_completeness_forfeited = !cs.all_polytopes_bounded;

  std::vector<detail::EntailmentBlock> blocks;
  try {
    for (auto& ec : cs.upper_claims)
      blocks.emplace_back(ec, up_prog.pcfg.nvars(), opts.handelman_extra, opts.max_products);
    for (auto& ec : cs.lower_claims)
      blocks.emplace_back(ec, low_prog.pcfg.nvars(), opts.handelman_extra, opts.max_products);
  } catch (const BudgetExceeded& e) {
    result.outcome = SynthResult::Outcome::SolverFailure;
    result.detail = e.what();
    return result;
  }
  for (auto& blk : blocks)
    if (blk.degraded) {
      result.semi_completeness_forfeited = true;
      if (result.detail.empty())
        result.detail = "product cap degraded the Handelman degree at " + blk.ec->label;
    }

  double margin = 0.0;
  for (int round = 0; round <= opts.repair_rounds; ++round) {
    // ---- assemble the LP -------------------------------------------------
    lp::Problem prob;
    prob.maximize = true;
    for (size_t t = 0; t < cs.ntheta; ++t)
      prob.add_col(-lp::kInf, lp::kInf, 0.0, cs.theta_names[t]);
    double cap = mode == Mode::Distance ? opts.distance_cap : opts.gap_cap;
    size_t gap_col = prob.add_col(opts.epsilon, cap, 1.0, "gap");
    // gap definition row
    {
      lp::Row row;
      row.sense = '=';
      row.coeffs.emplace_back(gap_col, 1.0);
      for (auto& [t, c] : cs.gap_coeffs) row.coeffs.emplace_back(t, -to_double(c));
      row.rhs = to_double(cs.gap_const);
      prob.rows.push_back(std::move(row));
    }
    if (mode == Mode::Distance) {
      std::vector<size_t> pos, neg;
      for (size_t t : cs.lipschitz_thetas) {
        pos.push_back(prob.add_col(0.0, lp::kInf, 0.0, "lip+" + std::to_string(t)));
        neg.push_back(prob.add_col(0.0, lp::kInf, 0.0, "lip-" + std::to_string(t)));
        lp::Row row;
        row.sense = '=';
        row.coeffs.emplace_back(t, 1.0);
        row.coeffs.emplace_back(pos.back(), -1.0);
        row.coeffs.emplace_back(neg.back(), 1.0);
        row.rhs = 0.0;
        prob.rows.push_back(std::move(row));
      }
      lp::Row sum;
      sum.sense = '<';
      for (size_t j = 0; j < pos.size(); ++j) {
        sum.coeffs.emplace_back(pos[j], 1.0);
        sum.coeffs.emplace_back(neg[j], 1.0);
      }
      sum.rhs = 1.0;
      prob.rows.push_back(std::move(sum));
    }
    for (auto& blk : blocks) {
      blk.lambda_offset = prob.ncols;
      for (size_t j = 0; j < blk.basis.products().size(); ++j)
        prob.add_col(0.0, lp::kInf, 0.0, "lam");
      // monomial-matching rows
      std::set<Mono> monos = blk.ec->claim.support();
      for (auto& pr : blk.basis.products())
        for (auto& [m, c] : pr.poly.terms()) monos.insert(m);
      Mono unit = mono_unit(blk.ec->claim.nvars());
      for (auto& m : monos) {
        lp::Row row;
        row.sense = '=';
        for (size_t j = 0; j < blk.basis.products().size(); ++j) {
          Rational v = blk.basis.products()[j].poly.coeff(m);
          if (v != 0) row.coeffs.emplace_back(blk.lambda_offset + j, to_double(v));
        }
        for (auto& [theta, q] : blk.ec->claim.coeffs) {
          Rational v = q.coeff(m);
          if (v != 0) row.coeffs.emplace_back(theta, -to_double(v));
        }
        row.rhs = to_double(blk.ec->claim.constant.coeff(m)) - (m == unit ? margin : 0.0);
        prob.rows.push_back(std::move(row));
      }
    }
    if (opts.collect_lp_dump) result.lp_dump = prob.dump_lp_format();

    // ---- solve ------------------------------------------------------------
    lp::Solution sol = lp::solve(prob, opts.max_lp_iters);
    result.lp_iterations += sol.iterations;
    if (sol.status == lp::Status::Infeasible) {
      result.outcome = SynthResult::Outcome::Infeasible;
      return result;
    }
    if (sol.status == lp::Status::Unbounded) {
      result.outcome = SynthResult::Outcome::Unbounded;
      result.detail = "objective unbounded despite the gap cap";
      return result;
    }
    if (sol.status != lp::Status::Optimal) {
      result.outcome = SynthResult::Outcome::SolverFailure;
      result.detail = "simplex did not converge (" + sol.detail + ")";
      return result;
    }

    // ---- rational lift + exact refit ---------------------------------------
    std::map<size_t, Rational> theta;
    for (size_t t = 0; t < cs.ntheta; ++t) {
      Rational v = rational_from_double(sol.x[t], opts.lift_den_cap);
      if (v != 0) theta.emplace(t, v);
    }
    Rational exact_gap = cs.gap_const;
    for (auto& [t, c] : cs.gap_coeffs) {
      auto it = theta.find(t);
      if (it != theta.end()) exact_gap += c * it->second;
    }
    bool ok = exact_gap > 0;
    CertificateTriple cert;
    if (ok) {
      cert.degree = degree;
      cert.mode = mode;
      cert.swapped = swapped;
      cert.gap = exact_gap;
      cert.f = PolyExpr(up_prog.pcfg.out_vars.size());
      for (auto& [t, m] : tpl.f_terms) {
        auto it = theta.find(t);
        if (it != theta.end()) cert.f.add_term(m, it->second);
      }
      auto build_rows = [&](const std::vector<std::vector<std::pair<size_t, Mono>>>& rows,
                            const Pcfg& cfg) {
        std::vector<PolyExpr> out(cfg.nlocs(), PolyExpr(cfg.nvars()));
        for (size_t l = 0; l < cfg.nlocs(); ++l)
          for (auto& [t, m] : rows[l]) {
            auto it = theta.find(t);
            if (it != theta.end()) out[l].add_term(m, it->second);
          }
        return out;
      };
      cert.upper = build_rows(tpl.upper_rows, up_prog.pcfg);
      cert.lower = build_rows(tpl.lower_rows, low_prog.pcfg);
      for (auto& blk : blocks) {
        PolyExpr claim_exact = blk.ec->claim.instantiate(theta);
        std::vector<double> hint;
        for (size_t j = 0; j < blk.basis.products().size(); ++j)
          hint.push_back(sol.x[blk.lambda_offset + j]);
        auto witness = detail::fit_lambda(blk.basis, claim_exact, hint);
        if (!witness) {
          ok = false;
          result.detail = "exact multiplier fit failed at " + blk.ec->label;
          break;
        }
        cert.witnesses.push_back({blk.ec->label, std::move(*witness)});
      }
    }
    if (!ok) {
      // repair: push the solution into the interior and retry
      margin = margin == 0.0 ? 1e-7 : margin * 100.0;
      if (round == opts.repair_rounds) {
        result.outcome = SynthResult::Outcome::LiftFailure;
        if (result.detail.empty()) result.detail = "rational lift lost feasibility";
        return result;
      }
      continue;
    }
    result.report = check_certificate(cert, up_prog, low_prog, up_inv, low_inv, mt);
    if (result.report.all_pass()) {
      result.outcome = SynthResult::Outcome::Verified;
      result.cert = std::move(cert);
      return result;
    }
    margin = margin == 0.0 ? 1e-7 : margin * 100.0;
    result.detail = "certificate failed exact verification (" +
                    std::to_string(result.report.failures()) + " obligations)";
  }
  result.outcome = SynthResult::Outcome::LiftFailure;
  return result;
}

}  // namespace ppeq
