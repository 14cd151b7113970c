#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ppeq/desugar.hpp"
#include "ppeq/oracle.hpp"
#include "ppeq/parser.hpp"
#include "state_enum.hpp"

using namespace ppeq;

namespace {

Pcfg make(const std::string& src) { return build_pcfg(desugar_prob_branch(parse_program(src))); }

PolyExpr out_var(const Pcfg& cfg, size_t i) {
  return PolyExpr::variable(cfg.out_vars.size(), i);
}

}  // namespace

TEST(Oracle, ObserveConditioning) {
  // observe removes the x=0 branch: point mass at x=1
  Pcfg cfg = make(fixtures::observe_example());
  OutputDistribution d = exact_enumerate(cfg);
  ASSERT_EQ(d.pmf.size(), 1u);
  EXPECT_EQ(d.pmf.begin()->first, (std::vector<Rational>{rat(1)}));
  EXPECT_EQ(d.pmf.begin()->second, rat(1));
  EXPECT_EQ(d.normalizer, rat(1, 2));
}

TEST(Oracle, ScoreReweighting) {
  // score(1+x): P[x=1] = (2 * 1/2) / (1/2 + 2 * 1/2) = 2/3
  Pcfg cfg = make(fixtures::score_example());
  OutputDistribution d = exact_enumerate(cfg);
  EXPECT_EQ(d.pmf.at({rat(1)}), rat(2, 3));
  EXPECT_EQ(d.pmf.at({rat(0)}), rat(1, 3));
}

TEST(Oracle, ZeroNormalizer) {
  EXPECT_THROW(exact_enumerate(make("x := 0\nobserve(x == 1)\nreturn(x)\n")), ZeroNormalizer);
}

TEST(Oracle, ExpectedValueExamples) {
  Pcfg cfg = make(fixtures::score_example());
  OutputDistribution d = exact_enumerate(cfg);
  Expectation e = expected_value(d, out_var(cfg, 0));
  EXPECT_EQ(e.value_exact, rat(2, 3));
  Expectation z = expected_value(d, PolyExpr(1));
  EXPECT_EQ(z.value_exact, rat(0));
  Pcfg pm = make("x := 0\nx := sample(point(1))\nreturn(x)\n");
  EXPECT_EQ(expected_value(exact_enumerate(pm), out_var(pm, 0)).value_exact, rat(1));
}

TEST(Oracle, DesugarPreservesDistribution) {
  std::string src =
      "a := 0\n"
      "if prob(1/4):\n"
      "    a := 1\n"
      "elif prob(1/4):\n"
      "    a := 2\n"
      "else:\n"
      "    a := 3\n"
      "return(a)\n";
  // desugared chain: exact masses 1/4, 1/4, 1/2
  OutputDistribution d = exact_enumerate(make(src));
  EXPECT_EQ(d.pmf.at({rat(1)}), rat(1, 4));
  EXPECT_EQ(d.pmf.at({rat(2)}), rat(1, 4));
  EXPECT_EQ(d.pmf.at({rat(3)}), rat(1, 2));
}

TEST(Oracle, TerminationBoundHolds) {
  Pcfg cfg = make(fixtures::running_example_discrete(4, 0, 1));
  ASSERT_TRUE(cfg.termination_bound);
  unsigned long bound = *cfg.termination_bound;
  unsigned long max_steps = 0;
  testenum::enumerate_states(cfg, [&](const testenum::StateVisit& s) {
    max_steps = std::max(max_steps, s.step);
  });
  EXPECT_LE(max_steps, bound);
}

TEST(Oracle, SimulateSeededDeterminism) {
  Pcfg cfg = make(fixtures::score_example());
  OutputDistribution a = simulate(cfg, 2000, 42);
  OutputDistribution b = simulate(cfg, 2000, 42);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].first, b.samples[i].first);
    EXPECT_EQ(a.samples[i].second, b.samples[i].second);
  }
  OutputDistribution c = simulate(cfg, 2000, 43);
  bool same = a.samples == c.samples;
  EXPECT_FALSE(same);
}

TEST(Oracle, SimulateBinomialWithinFiveSigma) {
  Pcfg cfg = make(fixtures::bernoulli_program("1/2"));
  size_t n = 100000;
  OutputDistribution d = simulate(cfg, n, 7);
  Expectation e = expected_value(d, out_var(cfg, 0));
  double sigma = 0.5 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(e.value, 0.5, 5 * sigma);
}

TEST(Oracle, PointMassTracesIdentical) {
  Pcfg cfg = make("x := 0\nx := sample(point(3/2))\nreturn(x)\n");
  OutputDistribution d = simulate(cfg, 100, 5);
  for (auto& [v, w] : d.samples) {
    EXPECT_EQ(v[0], 1.5);
    EXPECT_EQ(w, 1.0);
  }
}

// ---------------------------------------------------------------------------
// Weighted restarting
// ---------------------------------------------------------------------------

TEST(Restart, WeightBoundRunningExample) {
  Pcfg cfg = make(fixtures::running_example(1000, 2, 2));
  EXPECT_EQ(infer_weight_bound(cfg), rat(1000));
}

TEST(Restart, WeightBoundTrivialCases) {
  EXPECT_EQ(infer_weight_bound(make(fixtures::bernoulli_program("1/2"))), rat(1));
  EXPECT_EQ(infer_weight_bound(make(fixtures::observe_example())), rat(1));
}

TEST(Restart, NegativeScoreRejected) {
  Pcfg cfg = make("x := 0\nx := x - 5\nscore(x)\nreturn(x)\n");
  EXPECT_THROW(infer_weight_bound(cfg), NegativeScore);
}

TEST(Restart, RestartedIsConditioningFree) {
  Pcfg cfg = make(fixtures::running_example_discrete(4, 0, 1));
  RestartedProgram rp = weighted_restart(cfg, infer_weight_bound(cfg));
  EXPECT_TRUE(rp.pcfg.conditioning_free);
  for (auto& t : rp.pcfg.transitions) EXPECT_EQ(t.weight.kind, WeightSpec::Kind::One);
  EXPECT_EQ(rp.pcfg.vars.back(), "W");
  EXPECT_EQ(rp.pcfg.init_valuation.back(), rat(1));  // W starts at 1
  // restart branch: true arm to out, false arm resets everything to init
  const Transition& rt = rp.pcfg.transitions[rp.restart_transition];
  EXPECT_TRUE(rt.is_restart);
  EXPECT_EQ(rt.dst_true, rp.pcfg.out_loc);
  EXPECT_EQ(rt.dst_false, rp.pcfg.init_loc);
  EXPECT_EQ(rt.updates_false.size(), rp.pcfg.nvars());
}

TEST(Restart, OutputEquivalenceExact) {
  // Theorem-style property: exact NOD of the original equals the exact NOD
  // of the restarted program, rational-exactly, on every support point.
  for (const std::string& src : {
           fixtures::observe_example(),
           fixtures::score_example(),
           fixtures::running_example_discrete(4, 0, 2),
           std::string("x := 0\ny := 0\nx := sample(duniform(0, 3))\nobserve(x >= 1)\n"
                       "score(x + 1)\ny := x * x\nreturn(y)\n"),
       }) {
    Pcfg cfg = make(src);
    OutputDistribution orig = exact_enumerate(cfg);
    Rational m = infer_weight_bound(cfg);
    RestartedProgram rp = weighted_restart(cfg, m);
    OutputDistribution res = exact_enumerate(rp);
    ASSERT_EQ(orig.pmf.size(), res.pmf.size()) << src;
    for (auto& [v, p] : orig.pmf) {
      ASSERT_TRUE(res.pmf.count(v)) << src;
      EXPECT_EQ(res.pmf.at(v), p) << src;
    }
  }
}

TEST(Restart, RestartProbabilityIdentity) {
  // p_restart = 1 - E[W]/M, exactly
  Pcfg cfg = make(fixtures::running_example_discrete(3, 0, 1));
  OutputDistribution orig = exact_enumerate(cfg);
  Rational m = infer_weight_bound(cfg);
  RestartedProgram rp = weighted_restart(cfg, m);
  OutputDistribution res = exact_enumerate(rp);
  EXPECT_EQ(res.restart_mass, rat(1) - orig.normalizer / m);
}

TEST(Restart, ConditioningFreeRestartNeverFires) {
  Pcfg cfg = make(fixtures::bernoulli_program("1/3"));
  RestartedProgram rp = weighted_restart(cfg, rat(1));
  OutputDistribution res = exact_enumerate(rp);
  EXPECT_EQ(res.restart_mass, rat(0));
  EXPECT_EQ(res.pmf.at({rat(1)}), rat(1, 3));
}

TEST(Restart, BernoulliObserveGeometricSeries) {
  // observe(x = 1) on a fair coin: the restarted program outputs 1 a.s.
  Pcfg cfg = make(fixtures::observe_example());
  RestartedProgram rp = weighted_restart(cfg, rat(1));
  OutputDistribution res = exact_enumerate(rp);
  ASSERT_EQ(res.pmf.size(), 1u);
  EXPECT_EQ(res.pmf.at({rat(1)}), rat(1));
  EXPECT_EQ(res.restart_mass, rat(1, 2));
}

TEST(Restart, NativeRestartSimulationAgrees) {
  // simulate the restarted program with real restarts and compare the
  // restart frequency with 1 - E[W]/M within five standard errors
  Pcfg cfg = make(fixtures::score_example());
  Rational m = infer_weight_bound(cfg);
  RestartedProgram rp = weighted_restart(cfg, m);
  size_t n = 50000;
  double restarts = 0;
  for (size_t i = 0; i < n; ++i) {
    RunTrace tr = simulate_trace(rp.pcfg, 1000 + i, {}, rp.attempt_bound);
    ASSERT_TRUE(tr.ok);
    restarts += tr.restarted_count > 0 ? 1 : 0;
  }
  OutputDistribution orig = exact_enumerate(cfg);
  double p_restart = to_double(rat(1) - orig.normalizer / m);
  double sigma = std::sqrt(p_restart * (1 - p_restart) / static_cast<double>(n));
  EXPECT_NEAR(restarts / static_cast<double>(n), p_restart, 5 * sigma);
}

TEST(Restart, AttemptStepsBounded) {
  // per-attempt step count stays within the original bound plus a constant
  Pcfg cfg = make(fixtures::running_example_discrete(3, 0, 1));
  RestartedProgram rp = weighted_restart(cfg, infer_weight_bound(cfg));
  ASSERT_TRUE(rp.attempt_bound);
  EXPECT_LE(*rp.attempt_bound, *cfg.termination_bound + 2);
}

TEST(Restart, DumpRoundTrip) {
  // the dumped restarted DSL parses and its simulated NOD matches the exact
  // one (the reparsed form has a goto loop, so only statistics are available)
  Pcfg cfg = make(fixtures::observe_example());
  ProgramAst ast = desugar_prob_branch(parse_program(fixtures::observe_example()));
  std::string dumped = dump_restarted_dsl(ast, rat(1));
  ProgramAst reparsed = desugar_prob_branch(parse_program(dumped));
  Pcfg rcfg = build_pcfg(reparsed);
  OutputDistribution d = simulate(rcfg, 20000, 11);
  ASSERT_GT(d.samples.size(), 15000u);
  for (auto& [v, w] : d.samples) {
    EXPECT_EQ(v[0], 1.0);  // point mass at x = 1
    EXPECT_EQ(w, 1.0);
  }
}

TEST(Restart, CsvExport) {
  Pcfg cfg = make(fixtures::score_example());
  OutputDistribution d = simulate(cfg, 10, 3);
  std::string csv = d.csv({"x"});
  EXPECT_NE(csv.find("x,weight"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);  // header + 10 rows
}
