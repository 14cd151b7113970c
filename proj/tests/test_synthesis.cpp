#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "ppeq/desugar.hpp"
#include "ppeq/oracle.hpp"
#include "ppeq/parser.hpp"
#include "ppeq/synth.hpp"

using namespace ppeq;

namespace {

Pcfg make(const std::string& src) { return build_pcfg(desugar_prob_branch(parse_program(src))); }

struct Prepared {
  RestartedProgram rp;
  Invariant inv;
};

Prepared prep(const std::string& src) {
  Pcfg cfg = make(src);
  RestartedProgram rp = weighted_restart(cfg, infer_weight_bound(cfg));
  Invariant inv = generate_invariant(rp.pcfg);
  return {std::move(rp), std::move(inv)};
}

AffineConstraint affine(std::vector<Rational> coeffs, Rational constant,
                        CmpSense sense = CmpSense::Geq) {
  return AffineConstraint{std::move(coeffs), std::move(constant), sense};
}

}  // namespace

TEST(Handelman, ProductWitness) {
  // {x >= 0, 1 - x >= 0} entails x - x^2 = h1 * h2
  std::vector<AffineConstraint> hyps = {affine({rat(1)}, rat(0)), affine({rat(-1)}, rat(1))};
  PolyExpr x = PolyExpr::variable(1, 0);
  PolyExpr claim = x - x.pow(2);
  auto witness = handelman::entails(hyps, claim, 2);
  ASSERT_TRUE(witness);
  EXPECT_TRUE(handelman::check_witness(hyps, claim, *witness));
  // the witness is exactly lambda = 1 on the product h1*h2
  ASSERT_EQ(witness->size(), 1u);
  EXPECT_EQ((*witness)[0].first, (std::vector<uint32_t>{1, 1}));
  EXPECT_EQ((*witness)[0].second, rat(1));
}

TEST(Handelman, TrivialClaims) {
  std::vector<AffineConstraint> hyps = {affine({rat(1)}, rat(0))};
  // identically zero claim
  auto w0 = handelman::entails(hyps, PolyExpr(1), 1);
  ASSERT_TRUE(w0);
  EXPECT_TRUE(w0->empty());
  // claim equal to a hypothesis form
  PolyExpr h1 = PolyExpr::variable(1, 0);
  auto w1 = handelman::entails(hyps, h1, 1);
  ASSERT_TRUE(w1);
  EXPECT_TRUE(handelman::check_witness(hyps, h1, *w1));
}

TEST(Handelman, MonotoneInBudget) {
  std::vector<AffineConstraint> hyps = {affine({rat(1)}, rat(0)), affine({rat(-1)}, rat(1))};
  PolyExpr x = PolyExpr::variable(1, 0);
  PolyExpr claim = x - x.pow(2);
  for (int d = 2; d <= 4; ++d)
    EXPECT_TRUE(handelman::entails(hyps, claim, d)) << "budget " << d;
}

TEST(Handelman, InfeasibleClaimRejected) {
  // x >= 0 alone does not entail x - 1 >= 0
  std::vector<AffineConstraint> hyps = {affine({rat(1)}, rat(0))};
  PolyExpr claim = PolyExpr::variable(1, 0) - PolyExpr::constant(1, rat(1));
  EXPECT_FALSE(handelman::entails(hyps, claim, 3));
}

TEST(Handelman, WitnessImpliesPointwiseNonnegativity) {
  // random rational points inside the polytope stay nonnegative whenever the
  // lambda identity holds (numerical spot check of Handelman soundness)
  std::vector<AffineConstraint> hyps = {affine({rat(1), rat(0)}, rat(0)),
                                        affine({rat(-1), rat(0)}, rat(2)),
                                        affine({rat(0), rat(1)}, rat(0)),
                                        affine({rat(-1), rat(-1)}, rat(3))};
  PolyExpr x = PolyExpr::variable(2, 0), y = PolyExpr::variable(2, 1);
  PolyExpr claim = (x + y) * (PolyExpr::constant(2, rat(3)) - x - y) + x;
  auto witness = handelman::entails(hyps, claim, 2);
  ASSERT_TRUE(witness);
  ASSERT_TRUE(handelman::check_witness(hyps, claim, *witness));
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> num(0, 1000);
  int checked = 0;
  while (checked < 1000) {
    Rational px(num(rng), 500), py(num(rng), 500);
    px.canonicalize();
    py.canonicalize();
    std::vector<Rational> pt{px, py};
    bool inside = true;
    for (auto& h : hyps)
      if (!h.holds_at(pt)) inside = false;
    if (!inside) continue;
    ++checked;
    EXPECT_GE(claim.eval(pt), 0);
  }
}

TEST(Handelman, BudgetCap) {
  std::vector<AffineConstraint> hyps;
  for (int i = 0; i < 8; ++i) {
    std::vector<Rational> cs(4, rat(0));
    cs[i % 4] = rat(i % 2 ? 1 : -1);
    hyps.push_back(affine(std::move(cs), rat(i)));
  }
  EntailmentConstraint ec;
  ec.hypothesis = hyps;
  ec.claim = LinPoly::of_const(PolyExpr::constant(4, rat(1)));
  EXPECT_THROW(HandelmanBasis(hyps, 4, {}, 6, 50), BudgetExceeded);
}

TEST(Templates, BasisCounts) {
  Pcfg one = make(fixtures::bernoulli_program("1/2"));
  Pcfg two = make(fixtures::bernoulli_program("1/3"));
  // D=1 with shared single output x: monomials {1, x}
  Templates t1 = make_templates(one, two, 1, 1);
  EXPECT_EQ(t1.f_terms.size(), 2u);
  // degree-2 template over two outputs would give C(4,2)=6 monomials
  Pcfg p1 = make(fixtures::running_example_discrete(3, 0, 1));
  Pcfg p2 = make(fixtures::running_example_discrete(3, 0, 1));
  Templates t2 = make_templates(p1, p2, 2, 2);
  EXPECT_EQ(t2.f_terms.size(), 6u);
  // state rows: degree 1 over the 4 program vars + W would be 6 monomials,
  // one row per non-terminal location
  RestartedProgram rp1 = weighted_restart(p1, rat(3));
  RestartedProgram rp2 = weighted_restart(p2, rat(3));
  Templates t3 = make_templates(rp1.pcfg, rp2.pcfg, 1, 1);
  for (size_t l = 0; l < rp1.pcfg.nlocs(); ++l) {
    if (l == rp1.pcfg.out_loc)
      EXPECT_TRUE(t3.upper_rows[l].empty());
    else
      EXPECT_EQ(t3.upper_rows[l].size(), 6u);
  }
}

TEST(Collect, ZeroTemplateCertificate) {
  // the all-zero triple satisfies every martingale obligation but fails the
  // strict-gap requirement
  auto a = prep(fixtures::bernoulli_program("1/2"));
  auto b = prep(fixtures::bernoulli_program("1/2"));
  MomentTable mt;
  CertificateTriple cert;
  cert.degree = 1;
  cert.mode = Mode::Refute;
  cert.f = PolyExpr(1);
  cert.upper.assign(a.rp.pcfg.nlocs(), PolyExpr(a.rp.pcfg.nvars()));
  cert.lower.assign(b.rp.pcfg.nlocs(), PolyExpr(b.rp.pcfg.nvars()));
  cert.gap = 0;
  std::vector<LinPoly> yu, yl;
  for (auto& p : concrete_y(cert.upper, cert.f, a.rp.pcfg)) yu.push_back(LinPoly::of_const(p));
  for (auto& p : concrete_y(cert.lower, cert.f, b.rp.pcfg)) yl.push_back(LinPoly::of_const(p));
  size_t n_up = collect_claims(a.rp.pcfg, a.inv, yu, true, mt).size();
  size_t n_low = collect_claims(b.rp.pcfg, b.inv, yl, false, mt).size();
  cert.witnesses.resize(n_up + n_low);
  VerificationReport rep = check_certificate(cert, a.rp, b.rp, a.inv, b.inv, mt);
  size_t failures = 0;
  for (auto& o : rep.items) {
    if (!o.pass) {
      ++failures;
      EXPECT_EQ(o.name, "gap > 0");
    }
  }
  EXPECT_EQ(failures, 1u);
}

TEST(Synthesize, BernoulliPairRefutesAtDegreeOne) {
  auto a = prep(fixtures::bernoulli_program("1/2"));
  auto b = prep(fixtures::bernoulli_program("1/3"));
  MomentTable mt;
  SynthOptions opts;
  // E[x] differs (1/2 vs 1/3): the lower program must carry the larger mean,
  // so the swapped orientation succeeds
  SynthResult direct = synthesize(a.rp, b.rp, a.inv, b.inv, 1, Mode::Refute, mt, opts, false);
  SynthResult swapped = synthesize(b.rp, a.rp, b.inv, a.inv, 1, Mode::Refute, mt, opts, true);
  EXPECT_TRUE(direct.outcome == SynthResult::Outcome::Verified ||
              swapped.outcome == SynthResult::Outcome::Verified);
  const SynthResult& win = swapped.outcome == SynthResult::Outcome::Verified ? swapped : direct;
  ASSERT_TRUE(win.cert);
  EXPECT_TRUE(win.report.all_pass());
  EXPECT_GT(win.cert->gap, 0);
}

TEST(Synthesize, IdenticalProgramsNeverRefuted) {
  auto a = prep(fixtures::score_example());
  auto b = prep(fixtures::score_example());
  MomentTable mt;
  SynthOptions opts;
  for (uint32_t d = 1; d <= 2; ++d) {
    SynthResult r1 = synthesize(a.rp, b.rp, a.inv, b.inv, d, Mode::Refute, mt, opts, false);
    EXPECT_NE(r1.outcome, SynthResult::Outcome::Verified) << "degree " << d;
    SynthResult r2 = synthesize(b.rp, a.rp, b.inv, a.inv, d, Mode::Refute, mt, opts, true);
    EXPECT_NE(r2.outcome, SynthResult::Outcome::Verified) << "degree " << d;
  }
}

TEST(Synthesize, DistanceBernoulliExact) {
  // Kantorovich distance between Bernoulli(1/2) and Bernoulli(1/3) under the
  // L1 ground metric is exactly 1/6
  auto a = prep(fixtures::bernoulli_program("1/2"));
  auto b = prep(fixtures::bernoulli_program("1/3"));
  MomentTable mt;
  SynthOptions opts;
  SynthResult direct = synthesize(a.rp, b.rp, a.inv, b.inv, 1, Mode::Distance, mt, opts, false);
  SynthResult swapped = synthesize(b.rp, a.rp, b.inv, a.inv, 1, Mode::Distance, mt, opts, true);
  Rational best = 0;
  if (direct.outcome == SynthResult::Outcome::Verified) best = std::max(best, direct.cert->gap);
  if (swapped.outcome == SynthResult::Outcome::Verified) best = std::max(best, swapped.cert->gap);
  Rational truth = rat(1, 6);
  Rational err = abs(best - truth);
  EXPECT_LE(err, rat(1, 1000000)) << "bound " << rat_str(best);
}

TEST(Synthesize, ScoreVsObservePair) {
  // score(1+x) tilts towards x=1 (2/3 vs 1/2): refutable against the plain
  // coin. The lower side's one-attempt value function is quadratic, so this
  // takes a degree-2 template.
  auto a = prep(fixtures::bernoulli_program("1/2"));
  auto b = prep(fixtures::score_example());
  MomentTable mt;
  SynthOptions opts;
  SynthResult direct;
  for (uint32_t d = 1; d <= 2; ++d) {
    direct = synthesize(a.rp, b.rp, a.inv, b.inv, d, Mode::Refute, mt, opts, false);
    if (direct.outcome == SynthResult::Outcome::Verified) break;
  }
  ASSERT_EQ(direct.outcome, SynthResult::Outcome::Verified) << direct.detail;
  // exact bracketing: certified bounds straddle the true expectations
  OutputDistribution da = exact_enumerate(a.rp);
  OutputDistribution db = exact_enumerate(b.rp);
  Expectation ea = expected_value(da, direct.cert->f);
  Expectation eb = expected_value(db, direct.cert->f);
  std::vector<PolyExpr> yu = concrete_y(direct.cert->upper, direct.cert->f, a.rp.pcfg);
  std::vector<PolyExpr> yl = concrete_y(direct.cert->lower, direct.cert->f, b.rp.pcfg);
  Rational u0 = yu[a.rp.pcfg.init_loc].eval(a.rp.pcfg.init_valuation);
  Rational l0 = yl[b.rp.pcfg.init_loc].eval(b.rp.pcfg.init_valuation);
  EXPECT_LE(ea.value_exact, u0);
  EXPECT_GE(eb.value_exact, l0);
}

TEST(Synthesize, MutatedLambdaIsCaught) {
  auto a = prep(fixtures::bernoulli_program("1/2"));
  auto b = prep(fixtures::bernoulli_program("1/3"));
  MomentTable mt;
  SynthOptions opts;
  SynthResult r = synthesize(b.rp, a.rp, b.inv, a.inv, 1, Mode::Refute, mt, opts, true);
  ASSERT_EQ(r.outcome, SynthResult::Outcome::Verified);
  CertificateTriple mutated = *r.cert;
  bool bumped = false;
  for (auto& w : mutated.witnesses) {
    if (!w.lambdas.empty()) {
      w.lambdas[0].second += rat(1, 1000000);
      bumped = true;
      break;
    }
  }
  ASSERT_TRUE(bumped);
  VerificationReport rep = check_certificate(mutated, b.rp, a.rp, b.inv, a.inv, mt);
  EXPECT_FALSE(rep.all_pass());
}

TEST(CertifyC2, IntervalExamples) {
  Pcfg cfg = make(fixtures::bernoulli_program("1/2"));
  VarBounds vb = propagate_bounds(cfg);
  // zero polynomial: bound 0
  std::vector<PolyExpr> zero(cfg.nlocs(), PolyExpr(cfg.nvars()));
  EXPECT_EQ(certify_c2(cfg, vb, zero).bound, rat(0));
  // f = x with x in [0,1]: contribution 1
  std::vector<PolyExpr> fx(cfg.nlocs(), PolyExpr::variable(cfg.nvars(), 0));
  EXPECT_EQ(certify_c2(cfg, vb, fx).bound, rat(1));
  // manufactured wide box: f = x on [-5,5] has magnitude bound 5
  VarBounds wide = vb;
  for (auto& row : wide.at) row[0] = Interval::range(rat(-5), rat(5));
  EXPECT_EQ(certify_c2(cfg, wide, fx).bound, rat(5));
}
