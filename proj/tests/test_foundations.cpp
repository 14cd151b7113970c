#include <gtest/gtest.h>

#include "ppeq/interval.hpp"
#include "ppeq/lp.hpp"
#include "ppeq/moments.hpp"
#include "ppeq/poly.hpp"
#include "ppeq/rational.hpp"

using namespace ppeq;

TEST(Rational, ParseForms) {
  EXPECT_EQ(*parse_rational("3"), rat(3));
  EXPECT_EQ(*parse_rational("-7/2"), rat(-7, 2));
  EXPECT_EQ(*parse_rational("0.25"), rat(1, 4));
  EXPECT_EQ(*parse_rational("1e3"), rat(1000));
  EXPECT_EQ(*parse_rational("2.5e-1"), rat(1, 4));
  EXPECT_FALSE(parse_rational("abc"));
  EXPECT_FALSE(parse_rational("1/0"));
}

TEST(Rational, ContinuedFractionLift) {
  EXPECT_EQ(rational_from_double(0.5), rat(1, 2));
  EXPECT_EQ(rational_from_double(to_double(rat(1, 3))), rat(1, 3));
  EXPECT_EQ(rational_from_double(to_double(rat(-999, 4))), rat(-999, 4));
  EXPECT_EQ(rational_from_double(0.0), rat(0));
  // near-miss floats snap to the intended rational
  EXPECT_EQ(rational_from_double(0.10000000000000002), rat(1, 10));
}

TEST(Interval, Arithmetic) {
  Interval a = Interval::range(rat(-1), rat(2));
  Interval b = Interval::range(rat(3), rat(4));
  Interval s = a + b;
  EXPECT_EQ(*s.lo, rat(2));
  EXPECT_EQ(*s.hi, rat(6));
  Interval p = a * b;
  EXPECT_EQ(*p.lo, rat(-4));
  EXPECT_EQ(*p.hi, rat(8));
  Interval sq = a.pow(2);
  EXPECT_EQ(*sq.lo, rat(0));
  EXPECT_EQ(*sq.hi, rat(4));
  Interval t = Interval::top();
  EXPECT_FALSE((a * t).bounded());
  EXPECT_TRUE((t.scaled(rat(0))).is_point());
}

TEST(Poly, BasicAlgebra) {
  // (x + y)^2 = x^2 + 2xy + y^2 over vars {x, y}
  PolyExpr x = PolyExpr::variable(2, 0), y = PolyExpr::variable(2, 1);
  PolyExpr p = (x + y).pow(2);
  EXPECT_EQ(p.coeff(mono_var(2, 0, 2)), rat(1));
  EXPECT_EQ(p.coeff(mono_mul(mono_var(2, 0), mono_var(2, 1))), rat(2));
  EXPECT_EQ(p.degree(), 2u);
  // substitution x := y + 1
  PolyExpr q = p.substituted(0, y + PolyExpr::constant(2, rat(1)));
  // (2y + 1)^2 = 4y^2 + 4y + 1
  EXPECT_EQ(q.coeff(mono_var(2, 1, 2)), rat(4));
  EXPECT_EQ(q.coeff(mono_var(2, 1)), rat(4));
  EXPECT_EQ(q.constant_value(), rat(1));
  EXPECT_EQ(p.eval({rat(2), rat(3)}), rat(25));
}

TEST(Poly, IntervalEval) {
  PolyExpr x = PolyExpr::variable(2, 0), y = PolyExpr::variable(2, 1);
  PolyExpr p = x * y - y;  // over x in [0,1], y in [0,2]: range [-2, 2]
  std::vector<Interval> box{Interval::range(rat(0), rat(1)), Interval::range(rat(0), rat(2))};
  Interval r = p.eval_interval(box);
  EXPECT_EQ(*r.lo, rat(-2));
  EXPECT_EQ(*r.hi, rat(2));
}

TEST(Moments, ClosedForms) {
  MomentTable mt;
  // Beta(2,2) first moment: 1/2
  EXPECT_EQ(mt.raw_moment({DistKind::Beta, {rat(2), rat(2)}}, 1), rat(1, 2));
  // Bernoulli(q) third moment: q
  EXPECT_EQ(mt.raw_moment({DistKind::Bernoulli, {rat(3, 7)}}, 3), rat(3, 7));
  // Uniform(0,1) second moment: 1/3
  EXPECT_EQ(mt.raw_moment({DistKind::Uniform, {rat(0), rat(1)}}, 2), rat(1, 3));
  // PointMass(c): c^p
  EXPECT_EQ(mt.raw_moment({DistKind::PointMass, {rat(-3, 2)}}, 2), rat(9, 4));
  // DiscreteUniform(1,6) mean 7/2, second moment 91/6
  EXPECT_EQ(mt.raw_moment({DistKind::DiscreteUniform, {rat(1), rat(6)}}, 1), rat(7, 2));
  EXPECT_EQ(mt.raw_moment({DistKind::DiscreteUniform, {rat(1), rat(6)}}, 2), rat(91, 6));
  // negative range: sum_{k=-2}^{1} k = -2, four values -> mean -1/2
  EXPECT_EQ(mt.raw_moment({DistKind::DiscreteUniform, {rat(-2), rat(1)}}, 1), rat(-1, 2));
  // E[X^0] = 1 everywhere
  EXPECT_EQ(mt.raw_moment({DistKind::Beta, {rat(5), rat(1)}}, 0), rat(1));
}

TEST(Moments, BetaAgainstQuadrature) {
  // independent oracle: adaptive Simpson integration of x^p * density
  auto beta_pdf = [](double x, int a, int b) {
    // pdf = x^{a-1} (1-x)^{b-1} / B(a,b); B from factorials for integer a,b
    auto fact = [](int n) {
      double f = 1;
      for (int i = 2; i <= n; ++i) f *= i;
      return f;
    };
    double B = fact(a - 1) * fact(b - 1) / fact(a + b - 1);
    return std::pow(x, a - 1) * std::pow(1 - x, b - 1) / B;
  };
  std::function<double(double, double, std::function<double(double)> const&, double, double,
                       double, int)>
      simpson = [&](double lo, double hi, const std::function<double(double)>& f, double flo,
                    double fhi, double eps, int depth) -> double {
    double mid = (lo + hi) / 2, fmid = f(mid);
    double s1 = (hi - lo) / 6 * (flo + 4 * fmid + fhi);
    double lm = (lo + mid) / 2, rm = (mid + hi) / 2;
    double flm = f(lm), frm = f(rm);
    double s2 = (hi - lo) / 12 * (flo + 4 * flm + 2 * fmid + 4 * frm + fhi);
    if (depth > 24 || std::abs(s2 - s1) < 15 * eps) return s2 + (s2 - s1) / 15;
    return simpson(lo, mid, f, flo, fmid, eps / 2, depth + 1) +
           simpson(mid, hi, f, fmid, fhi, eps / 2, depth + 1);
  };
  MomentTable mt;
  for (int a = 1; a <= 3; ++a) {
    for (int b = 1; b <= 3; ++b) {
      for (int p = 1; p <= 4; ++p) {
        std::function<double(double)> ig = [&](double x) {
          return std::pow(x, p) * beta_pdf(x, a, b);
        };
        double numeric = simpson(1e-12, 1.0 - 1e-12, ig, ig(1e-12), ig(1.0 - 1e-12), 1e-12, 0);
        double exact = to_double(mt.raw_moment(
            {DistKind::Beta, {rat(a), rat(b)}}, static_cast<unsigned>(p)));
        EXPECT_NEAR(numeric, exact, 1e-9) << "a=" << a << " b=" << b << " p=" << p;
      }
    }
  }
}

TEST(Lp, TrivialMaximize) {
  // maximize g subject to g <= 100
  lp::Problem p;
  size_t g = p.add_col(-lp::kInf, lp::kInf, 1.0, "g");
  lp::Row r;
  r.sense = '<';
  r.coeffs.emplace_back(g, 1.0);
  r.rhs = 100.0;
  p.rows.push_back(r);
  auto sol = lp::solve(p);
  ASSERT_EQ(sol.status, lp::Status::Optimal);
  EXPECT_NEAR(sol.objective, 100.0, 1e-6);
}

TEST(Lp, Infeasible) {
  // lambda >= 0 and lambda <= -1
  lp::Problem p;
  size_t l = p.add_col(0.0, lp::kInf, 0.0, "lam");
  lp::Row r;
  r.sense = '<';
  r.coeffs.emplace_back(l, 1.0);
  r.rhs = -1.0;
  p.rows.push_back(r);
  auto sol = lp::solve(p);
  EXPECT_EQ(sol.status, lp::Status::Infeasible);
}

TEST(Lp, Unbounded) {
  lp::Problem p;
  size_t x = p.add_col(0.0, lp::kInf, 1.0, "x");
  lp::Row r;
  r.sense = '>';
  r.coeffs.emplace_back(x, 1.0);
  r.rhs = 1.0;
  p.rows.push_back(r);
  auto sol = lp::solve(p);
  EXPECT_EQ(sol.status, lp::Status::Unbounded);
}

TEST(Lp, SmallSystem) {
  // max x + y st x + 2y <= 4, 3x + y <= 6, x,y >= 0 -> (8/5, 6/5), obj 14/5
  lp::Problem p;
  size_t x = p.add_col(0, lp::kInf, 1, "x");
  size_t y = p.add_col(0, lp::kInf, 1, "y");
  lp::Row r1;
  r1.sense = '<';
  r1.coeffs = {{x, 1.0}, {y, 2.0}};
  r1.rhs = 4;
  lp::Row r2;
  r2.sense = '<';
  r2.coeffs = {{x, 3.0}, {y, 1.0}};
  r2.rhs = 6;
  p.rows = {r1, r2};
  auto sol = lp::solve(p);
  ASSERT_EQ(sol.status, lp::Status::Optimal);
  EXPECT_NEAR(sol.objective, 2.8, 1e-7);
  EXPECT_NEAR(sol.x[x], 1.6, 1e-7);
  EXPECT_NEAR(sol.x[y], 1.2, 1e-7);
}

TEST(Lp, EqualityWithFreeVariables) {
  // max g st g - 2t = 0, t <= 7, g <= 100: optimum t=7 -> g=14
  lp::Problem p;
  size_t g = p.add_col(-lp::kInf, 100.0, 1.0, "g");
  size_t t = p.add_col(-lp::kInf, 7.0, 0.0, "t");
  lp::Row r;
  r.sense = '=';
  r.coeffs = {{g, 1.0}, {t, -2.0}};
  r.rhs = 0.0;
  p.rows.push_back(r);
  auto sol = lp::solve(p);
  ASSERT_EQ(sol.status, lp::Status::Optimal);
  EXPECT_NEAR(sol.objective, 14.0, 1e-7);
}

TEST(RatLp, ExactFeasibility) {
  // x1 + x2 = 3, x1 - x2 = 1, x >= 0 -> (2, 1)
  std::vector<std::vector<std::pair<size_t, Rational>>> rows = {
      {{0, rat(1)}, {1, rat(1)}}, {{0, rat(1)}, {1, rat(-1)}}};
  std::vector<Rational> b = {rat(3), rat(1)};
  auto sol = ratlp::feasible_eq_nonneg(rows, b, 2);
  ASSERT_TRUE(sol);
  EXPECT_EQ((*sol)[0], rat(2));
  EXPECT_EQ((*sol)[1], rat(1));
  // infeasible: x1 = -1, x1 >= 0
  std::vector<std::vector<std::pair<size_t, Rational>>> rows2 = {{{0, rat(1)}}};
  std::vector<Rational> b2 = {rat(-1)};
  EXPECT_FALSE(ratlp::feasible_eq_nonneg(rows2, b2, 1));
}

TEST(RatLp, ExactOptimum) {
  // min x1 + x2 st x1 + 2 x2 = 4, x >= 0 -> x2 = 2, obj 2
  std::vector<std::vector<std::pair<size_t, Rational>>> rows = {{{0, rat(1)}, {1, rat(2)}}};
  std::vector<Rational> b = {rat(4)};
  std::vector<Rational> c = {rat(1), rat(1)};
  auto r = ratlp::solve_eq_nonneg(rows, b, c, 2);
  ASSERT_EQ(r.status, ratlp::Status::Optimal);
  EXPECT_EQ(r.objective, rat(2));
}
