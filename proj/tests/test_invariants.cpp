#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "ppeq/desugar.hpp"
#include "ppeq/invariant.hpp"
#include "ppeq/oracle.hpp"
#include "ppeq/parser.hpp"
#include "state_enum.hpp"

using namespace ppeq;

namespace {

Pcfg make(const std::string& src) { return build_pcfg(desugar_prob_branch(parse_program(src))); }

bool implies_fact(const LinearPredicate& pred, const std::vector<Rational>& counterexample) {
  return !pred.holds_at(counterexample);
}

}  // namespace

TEST(Invgen, SoundOnReachableStates) {
  // every reachable state of the scaled discrete running example satisfies
  // the generated invariant and the propagated bounds (exhaustive check)
  Pcfg cfg = make(fixtures::running_example_discrete(6, 0, 1));
  RestartedProgram rp = weighted_restart(cfg, infer_weight_bound(cfg));
  Invariant inv = generate_invariant(rp.pcfg);
  VarBounds vb = propagate_bounds(rp.pcfg);
  size_t states = 0;
  testenum::enumerate_states(rp.pcfg, [&](const testenum::StateVisit& s) {
    ++states;
    ASSERT_TRUE(inv.reachable[s.loc]);
    EXPECT_TRUE(inv.at[s.loc].holds_at(s.x))
        << "state at " << rp.pcfg.loc_names[s.loc] << " violates the invariant";
    for (size_t v = 0; v < rp.pcfg.nvars(); ++v)
      EXPECT_TRUE(vb.of(s.loc, v).contains(s.x[v]))
          << rp.pcfg.vars[v] << " out of bounds at " << rp.pcfg.loc_names[s.loc];
  });
  EXPECT_GT(states, 100u);
}

TEST(Invgen, LoopHeaderFacts) {
  // at l1 the invariant pins 0 <= c <= K and 0 <= y <= c
  Pcfg cfg = make(fixtures::running_example_discrete(10, 0, 1));
  Invariant inv = generate_invariant(cfg);
  size_t l1 = *cfg.loc_index("l1");
  size_t x = 0, y = 1, c = 2, r = 3;
  (void)x;
  (void)r;
  auto state = [&](Rational yv, Rational cv) {
    std::vector<Rational> st(cfg.nvars(), Rational(0));
    st[y] = yv;
    st[c] = cv;
    return st;
  };
  EXPECT_TRUE(inv.at[l1].holds_at(state(rat(3), rat(5))));
  EXPECT_TRUE(implies_fact(inv.at[l1], state(rat(0), rat(11))));   // c <= 10
  EXPECT_TRUE(implies_fact(inv.at[l1], state(rat(0), rat(-1))));   // c >= 0
  EXPECT_TRUE(implies_fact(inv.at[l1], state(rat(-1), rat(0))));   // y >= 0
  EXPECT_TRUE(implies_fact(inv.at[l1], state(rat(3), rat(2))));    // y <= c
}

TEST(Invgen, BoundsExamples) {
  Pcfg cfg = make(fixtures::running_example(10, 2, 2));
  RestartedProgram rp = weighted_restart(cfg, infer_weight_bound(cfg));
  VarBounds vb = propagate_bounds(rp.pcfg);
  auto y = 1u, r = 3u, w = 4u;
  for (size_t l = 0; l < rp.pcfg.nlocs(); ++l) {
    if (!vb.of(l, y).empty) {
      EXPECT_TRUE(vb.of(l, y).lo && *vb.of(l, y).lo >= 0);
      EXPECT_TRUE(vb.of(l, y).hi && *vb.of(l, y).hi <= 10);
      EXPECT_TRUE(vb.of(l, r).lo && *vb.of(l, r).lo >= 0);
      EXPECT_TRUE(vb.of(l, r).hi && *vb.of(l, r).hi <= 1);
      EXPECT_TRUE(vb.of(l, w).lo && *vb.of(l, w).lo >= 0);
      EXPECT_TRUE(vb.of(l, w).hi && *vb.of(l, w).hi <= 10);
    }
  }
}

TEST(Invgen, BoundsAgainstSimulationMaxima) {
  // cross-check: simulated trajectories never leave the certified boxes
  Pcfg cfg = make(fixtures::running_example(8, 2, 3));
  RestartedProgram rp = weighted_restart(cfg, infer_weight_bound(cfg));
  VarBounds vb = propagate_bounds(rp.pcfg);
  OutputDistribution d = simulate(rp, 5000, 99);
  size_t xi = 0, yi = 1;
  double xlo = 0, yhi = 0;
  for (auto& [v, wgt] : d.samples) {
    xlo = std::min(xlo, v[xi]);
    yhi = std::max(yhi, v[yi]);
  }
  const Interval& xout = vb.of(rp.pcfg.out_loc, xi);
  const Interval& yout = vb.of(rp.pcfg.out_loc, yi);
  EXPECT_LE(to_double(*xout.lo), xlo);
  EXPECT_GE(to_double(*yout.hi), yhi);
}

TEST(Invgen, TopInvariantIsSound) {
  // the all-true invariant passes the inductiveness check on any program
  Pcfg cfg = make(fixtures::score_example());
  Invariant top;
  top.at.resize(cfg.nlocs());
  top.bounded.assign(cfg.nlocs(), false);
  top.reachable.assign(cfg.nlocs(), true);
  EXPECT_NO_THROW(check_inductive(cfg, top));
}

TEST(Invgen, GeneratedInvariantIsInductive) {
  // the one-step Handelman re-derivation accepts the generator's own output
  for (const std::string& src : {fixtures::observe_example(), fixtures::score_example()}) {
    Pcfg cfg = make(src);
    RestartedProgram rp = weighted_restart(cfg, infer_weight_bound(cfg));
    Invariant inv = generate_invariant(rp.pcfg);
    EXPECT_NO_THROW(check_inductive(rp.pcfg, inv, 1)) << src;
  }
}

TEST(Invgen, ObligationSeeds) {
  Pcfg cfg = make(fixtures::running_example_discrete(10, 0, 1));
  auto obligations = location_invariant_obligations(cfg);
  ASSERT_EQ(obligations.size(), cfg.nlocs());
  // out location gets the trivial seed
  for (auto& [loc, pred] : obligations)
    if (loc == cfg.out_loc) EXPECT_TRUE(pred.is_true());
  // l1 seed includes c >= 0
  size_t l1 = *cfg.loc_index("l1");
  std::vector<Rational> bad(cfg.nvars(), Rational(0));
  bad[2] = rat(-1);  // c = -1
  for (auto& [loc, pred] : obligations)
    if (loc == l1) EXPECT_FALSE(pred.holds_at(bad));
  // loop-body location seed includes c <= 9 (guard restriction)
  size_t l2 = *cfg.loc_index("l2");
  std::vector<Rational> over(cfg.nvars(), Rational(0));
  over[2] = rat(10);
  for (auto& [loc, pred] : obligations)
    if (loc == l2) EXPECT_FALSE(pred.holds_at(over));
}

TEST(UserInvariant, AcceptInductiveFile) {
  Pcfg cfg = make(fixtures::running_example_discrete(1000, 0, 1));
  std::string path = "/tmp/ppeq_inv_ok.txt";
  {
    std::ofstream f(path);
    f << "# counter range at the loop head\n";
    f << "loc l1: c <= 1000; c >= 0\n";
  }
  Invariant inv = load_user_invariant(path, cfg);
  size_t l1 = *cfg.loc_index("l1");
  EXPECT_EQ(inv.at[l1].conjuncts.size(), 2u);
}

TEST(UserInvariant, RejectUnsoundFile) {
  Pcfg cfg = make(fixtures::running_example_discrete(1000, 0, 1));
  std::string path = "/tmp/ppeq_inv_bad.txt";
  {
    std::ofstream f(path);
    f << "loc l1: c <= 5\n";  // violated when c reaches 6
  }
  EXPECT_THROW(load_user_invariant(path, cfg), UnsoundInvariant);
}

TEST(UserInvariant, EmptyFileIsTop) {
  Pcfg cfg = make(fixtures::score_example());
  std::string path = "/tmp/ppeq_inv_empty.txt";
  { std::ofstream f(path); }
  Invariant inv = load_user_invariant(path, cfg);
  for (auto& pred : inv.at) EXPECT_TRUE(pred.is_true());
}

TEST(UserInvariant, FormatErrors) {
  Pcfg cfg = make(fixtures::score_example());
  std::string path = "/tmp/ppeq_inv_fmt.txt";
  {
    std::ofstream f(path);
    f << "loc nowhere: x >= 0\n";
  }
  EXPECT_THROW(load_user_invariant(path, cfg), FormatError);
  {
    std::ofstream f(path);
    f << "something else entirely\n";
  }
  EXPECT_THROW(load_user_invariant(path, cfg), FormatError);
}
