#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppeq/interval.hpp"
#include "ppeq/linear.hpp"
#include "ppeq/poly.hpp"

namespace ppeq {

struct SyntaxError : std::runtime_error {
  int line, col;
  SyntaxError(const std::string& msg, int line_, int col_)
      : std::runtime_error(std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_) {}
};

struct ShapeError : std::runtime_error {
  int line;
  ShapeError(const std::string& msg, int line_ = 0)
      : std::runtime_error(line_ ? std::to_string(line_) + ": " + msg : msg), line(line_) {}
};

/// Unbounded-support distributions are outside the supported program class.
struct UnsupportedDistribution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DistKind { Bernoulli, Uniform, DiscreteUniform, Beta, PointMass };

struct DistributionSpec {
  DistKind kind;
  // Bernoulli: params[0] = p. Uniform: a, b. DiscreteUniform: a, b (integers).
  // Beta: alpha, beta (positive integers). PointMass: c.
  std::vector<Rational> params;

  Interval support() const {
    switch (kind) {
      case DistKind::Bernoulli: return Interval::range(Rational(0), Rational(1));
      case DistKind::Uniform: return Interval::range(params[0], params[1]);
      case DistKind::DiscreteUniform: return Interval::range(params[0], params[1]);
      case DistKind::Beta: return Interval::range(Rational(0), Rational(1));
      case DistKind::PointMass: return Interval::point(params[0]);
    }
    return Interval::top();
  }

  bool discrete() const {
    return kind == DistKind::Bernoulli || kind == DistKind::DiscreteUniform ||
           kind == DistKind::PointMass;
  }

  bool operator==(const DistributionSpec& o) const {
    return kind == o.kind && params == o.params;
  }

  std::string str() const {
    auto args = [&](size_t n) {
      std::string s;
      for (size_t i = 0; i < n; ++i) s += (i ? ", " : "") + rat_str(params[i]);
      return s;
    };
    switch (kind) {
      case DistKind::Bernoulli: return "bernoulli(" + args(1) + ")";
      case DistKind::Uniform: return "uniform(" + args(2) + ")";
      case DistKind::DiscreteUniform: return "duniform(" + args(2) + ")";
      case DistKind::Beta: return "beta(" + args(2) + ")";
      case DistKind::PointMass: return "point(" + args(1) + ")";
    }
    return "?";
  }

  static DistributionSpec validated(DistKind kind, std::vector<Rational> params, int line) {
    DistributionSpec d{kind, std::move(params)};
    switch (kind) {
      case DistKind::Bernoulli:
        if (d.params.size() != 1 || d.params[0] < 0 || d.params[0] > 1)
          throw ShapeError("bernoulli probability must lie in [0,1]", line);
        break;
      case DistKind::Uniform:
        if (d.params.size() != 2 || !(d.params[0] < d.params[1]))
          throw ShapeError("uniform(a,b) requires a < b", line);
        break;
      case DistKind::DiscreteUniform:
        if (d.params.size() != 2 || !is_integer(d.params[0]) || !is_integer(d.params[1]) ||
            d.params[0] > d.params[1])
          throw ShapeError("duniform(a,b) requires integers a <= b", line);
        break;
      case DistKind::Beta:
        if (d.params.size() != 2 || !is_integer(d.params[0]) || !is_integer(d.params[1]) ||
            d.params[0] < 1 || d.params[1] < 1)
          throw ShapeError("beta(alpha,beta) requires positive integers", line);
        break;
      case DistKind::PointMass:
        if (d.params.size() != 1) throw ShapeError("point(c) takes one argument", line);
        break;
    }
    return d;
  }
};

struct Stmt;
using StmtSeq = std::vector<Stmt>;

enum class StmtKind { Assign, SampleAssign, Observe, Score, IfProb, IfGuard, While, GoTo, Skip };

struct ProbArm {
  // Marginal probability of this arm within its chain. Chains of length > 1
  // need constants; a single binary branch may use a polynomial (the
  // weighted-restarting branch is prob(1 - W/M)).
  PolyExpr prob;
  StmtSeq body;
};

struct Stmt {
  StmtKind kind;
  std::optional<std::string> label;
  int line = 0;

  // Assign / SampleAssign
  size_t var = 0;
  PolyExpr rhs;                          // Assign
  std::optional<DistributionSpec> dist;  // SampleAssign

  // Observe / IfGuard / While
  LinearPredicate pred;

  // Score
  PolyExpr score_expr;

  // IfProb
  std::vector<ProbArm> arms;

  // IfGuard / IfProb / While bodies
  StmtSeq then_branch;  // while body reuses this
  StmtSeq else_branch;

  // While
  std::optional<long> bound_annotation;

  // GoTo
  std::string target;
};

struct ProgramAst {
  std::vector<std::string> vars;      // declaration order
  std::vector<Rational> init_values;  // same order
  StmtSeq body;
  std::vector<size_t> outputs;  // indices into vars, return(...) order

  size_t nvars() const { return vars.size(); }

  std::optional<size_t> var_index(const std::string& name) const {
    for (size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == name) return i;
    return std::nullopt;
  }
};

}  // namespace ppeq
