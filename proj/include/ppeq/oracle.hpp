#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ppeq/moments.hpp"
#include "ppeq/pcfg.hpp"
#include "ppeq/restart.hpp"

namespace ppeq {

struct NotEnumerable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroNormalizer : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StepBudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunTrace {
  std::vector<double> out_valuation;
  double cumulative_weight = 1.0;
  unsigned long termination_step = 0;
  unsigned long restarted_count = 0;
  bool ok = true;
};

/// Normalized output distribution: exact (rational pmf over out-valuations,
/// with the weight normalizer) or sampled (weighted Monte-Carlo rows).
struct OutputDistribution {
  bool exact = true;

  // exact variant
  std::map<std::vector<Rational>, Rational> pmf;  // sums to 1
  Rational normalizer = 0;                        // E[W] (restarted: E[W]/M share)
  Rational restart_mass = 0;                      // p_restart for restarted inputs

  // sampled variant
  std::vector<std::pair<std::vector<double>, double>> samples;
  uint64_t seed = 0;
  size_t discarded = 0;

  std::string csv(const std::vector<std::string>& out_names) const {
    std::ostringstream os;
    for (size_t i = 0; i < out_names.size(); ++i) os << out_names[i] << ",";
    os << "weight\n";
    if (exact) {
      for (auto& [v, p] : pmf) {
        for (auto& x : v) os << rat_str(x) << ",";
        os << rat_str(p) << "\n";
      }
    } else {
      for (auto& [v, w] : samples) {
        for (double x : v) os << x << ",";
        os << w << "\n";
      }
    }
    return os.str();
  }
};

struct EnumerateOptions {
  size_t node_cap = 2000000;
  std::optional<unsigned long> step_cap;  // overrides the pCFG bound
};

namespace detail {

inline Rational eval_weight(const WeightSpec& w, const std::vector<Rational>& x) {
  switch (w.kind) {
    case WeightSpec::Kind::One: return 1;
    case WeightSpec::Kind::Score: {
      Rational v = w.expr.eval(x);
      if (v < 0) throw NegativeScore("score expression evaluated to a negative value");
      return v;
    }
    case WeightSpec::Kind::ObserveGuard: return w.guard.holds_at(x) ? 1 : 0;
  }
  return 1;
}

inline void apply_updates_exact(std::vector<Rational>& x, const UpdateMap& u,
                                const std::vector<Rational>& pre) {
  for (auto& [v, up] : u) {
    if (up.kind == Update::Kind::Poly) x[v] = up.poly.eval(pre);
  }
}

inline std::vector<std::pair<Rational, Rational>> discrete_support(const DistributionSpec& d) {
  std::vector<std::pair<Rational, Rational>> out;  // (value, prob)
  switch (d.kind) {
    case DistKind::Bernoulli:
      if (d.params[0] != 1) out.emplace_back(Rational(0), Rational(1) - d.params[0]);
      if (d.params[0] != 0) out.emplace_back(Rational(1), d.params[0]);
      return out;
    case DistKind::PointMass:
      out.emplace_back(d.params[0], Rational(1));
      return out;
    case DistKind::DiscreteUniform: {
      mpz_class a = d.params[0].get_num(), b = d.params[1].get_num();
      mpz_class count = b - a + 1;
      Rational p(mpz_class(1), count);
      p.canonicalize();
      for (mpz_class k = a; k <= b; ++k) out.emplace_back(Rational(k), p);
      return out;
    }
    default:
      throw NotEnumerable("continuous distribution in exact enumeration");
  }
}

}  // namespace detail

/// Exact NOD by weighted run-tree enumeration. Requires discrete bounded
/// sampling and a termination bound. Restart branches are not traversed:
/// a single attempt is enumerated and the geometric-series normalization
/// divides out the restart mass.
inline OutputDistribution exact_enumerate(const Pcfg& cfg, EnumerateOptions opts = {}) {
  unsigned long step_cap;
  if (opts.step_cap)
    step_cap = *opts.step_cap;
  else if (cfg.termination_bound)
    step_cap = *cfg.termination_bound;
  else
    throw NotEnumerable("no termination bound available for enumeration");

  struct Node {
    size_t loc;
    std::vector<Rational> x;
    Rational mass;  // path probability * cumulative weight
    unsigned long steps;
  };
  OutputDistribution dist;
  dist.exact = true;
  std::map<std::vector<Rational>, Rational> raw;
  Rational total = 0, restart_mass = 0;
  size_t explored = 0;
  std::vector<Node> stack;
  stack.push_back({cfg.init_loc, cfg.init_valuation, Rational(1), 0});
  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    if (++explored > opts.node_cap) throw NotEnumerable("enumeration node cap exceeded");
    if (node.mass == 0) continue;
    if (node.loc == cfg.out_loc) {
      std::vector<Rational> outv;
      for (size_t v : cfg.out_vars) outv.push_back(node.x[v]);
      raw[outv] += node.mass;
      total += node.mass;
      continue;
    }
    if (node.steps > step_cap)
      throw NotEnumerable("run exceeded the termination bound during enumeration");
    // find the enabled transition
    const Transition* enabled = nullptr;
    for (size_t ti : cfg.outgoing(node.loc)) {
      const Transition& t = cfg.transitions[ti];
      if (t.kind == Transition::Kind::ProbBranch || t.guard.holds_at(node.x)) {
        if (enabled)
          throw GuardError("multiple transitions enabled at location " +
                           cfg.loc_names[node.loc]);
        enabled = &t;
      }
    }
    if (!enabled)
      throw GuardError("no transition enabled at location " + cfg.loc_names[node.loc]);
    const Transition& t = *enabled;
    if (t.kind == Transition::Kind::ProbBranch) {
      Rational p = t.prob.eval(node.x);
      if (p < 0 || p > 1)
        throw GuardError("branch probability outside [0,1] at " + cfg.loc_names[node.loc]);
      if (t.is_restart) {
        // true arm continues to output; the false arm restarts and is folded
        // into the closed-form normalization
        restart_mass += node.mass * (1 - p);
        if (p != 0) {
          Node next{t.dst_true, node.x, node.mass * p, node.steps + 1};
          detail::apply_updates_exact(next.x, t.updates_true, node.x);
          stack.push_back(std::move(next));
        }
        continue;
      }
      if (p != 0) {
        Node next{t.dst_true, node.x, node.mass * p, node.steps + 1};
        detail::apply_updates_exact(next.x, t.updates_true, node.x);
        stack.push_back(std::move(next));
      }
      if (p != 1) {
        Node next{t.dst_false, node.x, node.mass * (1 - p), node.steps + 1};
        detail::apply_updates_exact(next.x, t.updates_false, node.x);
        stack.push_back(std::move(next));
      }
      continue;
    }
    Rational w = detail::eval_weight(t.weight, node.x);
    if (w == 0) continue;  // zero-weight runs contribute to neither side
    // sampled update?
    const DistributionSpec* sampled = nullptr;
    size_t sampled_var = 0;
    for (auto& [v, up] : t.updates) {
      if (up.kind == Update::Kind::Sample) {
        sampled = &*up.dist;
        sampled_var = v;
      }
    }
    if (!sampled) {
      Node next{t.dst, node.x, node.mass * w, node.steps + 1};
      detail::apply_updates_exact(next.x, t.updates, node.x);
      stack.push_back(std::move(next));
      continue;
    }
    for (auto& [value, prob] : detail::discrete_support(*sampled)) {
      Node next{t.dst, node.x, node.mass * w * prob, node.steps + 1};
      detail::apply_updates_exact(next.x, t.updates, node.x);
      next.x[sampled_var] = value;
      stack.push_back(std::move(next));
    }
  }
  if (total == 0) throw ZeroNormalizer("total expected weight is zero; NOD undefined");
  dist.normalizer = total;
  dist.restart_mass = restart_mass;
  for (auto& [v, mass] : raw) dist.pmf[v] = mass / total;
  return dist;
}

inline OutputDistribution exact_enumerate(const RestartedProgram& rp, EnumerateOptions opts = {}) {
  if (!opts.step_cap) opts.step_cap = rp.attempt_bound;
  return exact_enumerate(rp.pcfg, opts);
}

// ---------------------------------------------------------------------------
// Monte-Carlo simulation
// ---------------------------------------------------------------------------

struct SimulateOptions {
  unsigned long step_budget_factor = 10;   // times the termination bound
  unsigned long fallback_step_budget = 1000000;
  unsigned long restart_cap = 1000000;
};

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double sample_dist(const DistributionSpec& d, std::mt19937_64& rng) {
  switch (d.kind) {
    case DistKind::Bernoulli: {
      std::bernoulli_distribution b(to_double(d.params[0]));
      return b(rng) ? 1.0 : 0.0;
    }
    case DistKind::PointMass:
      return to_double(d.params[0]);
    case DistKind::Uniform: {
      std::uniform_real_distribution<double> u(to_double(d.params[0]), to_double(d.params[1]));
      return u(rng);
    }
    case DistKind::DiscreteUniform: {
      std::uniform_int_distribution<long> u(to_long(d.params[0]), to_long(d.params[1]));
      return static_cast<double>(u(rng));
    }
    case DistKind::Beta: {
      std::gamma_distribution<double> ga(to_double(d.params[0]), 1.0);
      std::gamma_distribution<double> gb(to_double(d.params[1]), 1.0);
      double x = ga(rng), y = gb(rng);
      return x / (x + y);
    }
  }
  return 0.0;
}

inline double eval_poly_d(const PolyExpr& p, const std::vector<double>& x) {
  double acc = 0;
  for (auto& [m, c] : p.terms()) {
    double t = to_double(c);
    for (size_t v = 0; v < m.size(); ++v)
      for (uint32_t k = 0; k < m[v]; ++k) t *= x[v];
    acc += t;
  }
  return acc;
}

inline bool pred_holds_d(const LinearPredicate& pred, const std::vector<double>& x) {
  for (auto& c : pred.conjuncts) {
    double v = to_double(c.constant);
    for (size_t i = 0; i < c.coeffs.size(); ++i)
      if (c.coeffs[i] != 0) v += to_double(c.coeffs[i]) * x[i];
    switch (c.sense) {
      case CmpSense::Geq:
        if (!(v >= 0)) return false;
        break;
      case CmpSense::Gt:
        if (!(v > 0)) return false;
        break;
      case CmpSense::Eq:
        if (std::abs(v) > 1e-9) return false;
        break;
    }
  }
  return true;
}

}  // namespace detail

/// Executes one run of the Markov-chain semantics (restarts included).
inline RunTrace simulate_trace(const Pcfg& cfg, uint64_t trace_seed,
                               const SimulateOptions& opts = {},
                               std::optional<unsigned long> attempt_bound = {}) {
  std::mt19937_64 rng(detail::splitmix64(trace_seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(cfg.nvars());
  for (size_t v = 0; v < cfg.nvars(); ++v) x[v] = to_double(cfg.init_valuation[v]);
  unsigned long budget;
  std::optional<unsigned long> bound = cfg.termination_bound ? cfg.termination_bound : attempt_bound;
  budget = bound ? *bound * opts.step_budget_factor : opts.fallback_step_budget;
  RunTrace tr;
  size_t loc = cfg.init_loc;
  unsigned long attempt_steps = 0;
  while (loc != cfg.out_loc) {
    if (++attempt_steps > budget) {
      tr.ok = false;
      return tr;
    }
    ++tr.termination_step;
    const Transition* enabled = nullptr;
    for (size_t ti : cfg.outgoing(loc)) {
      const Transition& t = cfg.transitions[ti];
      if (t.kind == Transition::Kind::ProbBranch || detail::pred_holds_d(t.guard, x)) {
        enabled = &t;
        break;
      }
    }
    if (!enabled) {
      tr.ok = false;
      return tr;
    }
    const Transition& t = *enabled;
    if (t.kind == Transition::Kind::ProbBranch) {
      double p = detail::eval_poly_d(t.prob, x);
      bool take_true = unit(rng) < p;
      const UpdateMap& u = take_true ? t.updates_true : t.updates_false;
      std::vector<double> pre = x;
      for (auto& [v, up] : u)
        x[v] = up.kind == Update::Kind::Poly ? detail::eval_poly_d(up.poly, pre)
                                             : detail::sample_dist(*up.dist, rng);
      if (t.is_restart && !take_true) {
        if (++tr.restarted_count > opts.restart_cap) {
          tr.ok = false;
          return tr;
        }
        attempt_steps = 0;
      }
      loc = take_true ? t.dst_true : t.dst_false;
      continue;
    }
    switch (t.weight.kind) {
      case WeightSpec::Kind::One: break;
      case WeightSpec::Kind::Score:
        tr.cumulative_weight *= detail::eval_poly_d(t.weight.expr, x);
        break;
      case WeightSpec::Kind::ObserveGuard:
        if (!detail::pred_holds_d(t.weight.guard, x)) tr.cumulative_weight = 0.0;
        break;
    }
    std::vector<double> pre = x;
    for (auto& [v, up] : t.updates)
      x[v] = up.kind == Update::Kind::Poly ? detail::eval_poly_d(up.poly, pre)
                                           : detail::sample_dist(*up.dist, rng);
    loc = t.dst;
  }
  for (size_t v : cfg.out_vars) tr.out_valuation.push_back(x[v]);
  return tr;
}

/// n weighted traces; deterministic in (seed, n) regardless of threading
/// because every trace derives its own counter-based generator.
inline OutputDistribution simulate(const Pcfg& cfg, size_t n, uint64_t seed,
                                   const SimulateOptions& opts = {},
                                   std::optional<unsigned long> attempt_bound = {}) {
  OutputDistribution dist;
  dist.exact = false;
  dist.seed = seed;
  dist.samples.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    RunTrace tr = simulate_trace(cfg, seed ^ detail::splitmix64(i + 1), opts, attempt_bound);
    if (!tr.ok) {
      ++dist.discarded;
      continue;
    }
    dist.samples.emplace_back(std::move(tr.out_valuation), tr.cumulative_weight);
  }
  return dist;
}

inline OutputDistribution simulate(const RestartedProgram& rp, size_t n, uint64_t seed,
                                   const SimulateOptions& opts = {}) {
  return simulate(rp.pcfg, n, seed, opts, rp.attempt_bound);
}

/// Expectation of a polynomial over output variables. Exact distributions
/// give exact rationals; sampled ones a self-normalized estimate with a
/// delta-method standard error.
struct Expectation {
  bool exact;
  Rational value_exact;
  double value = 0, stderr_est = 0;
};

inline Expectation expected_value(const OutputDistribution& dist, const PolyExpr& f) {
  Expectation e{};
  e.exact = dist.exact;
  if (dist.exact) {
    Rational acc = 0;
    for (auto& [v, p] : dist.pmf) acc += f.eval(v) * p;
    e.value_exact = acc;
    e.value = to_double(acc);
    return e;
  }
  double wsum = 0, fwsum = 0;
  for (auto& [v, w] : dist.samples) {
    wsum += w;
    fwsum += w * detail::eval_poly_d(f, v);
  }
  if (wsum <= 0) throw ZeroNormalizer("all sampled weights are zero");
  double mu = fwsum / wsum;
  double var = 0;
  for (auto& [v, w] : dist.samples) {
    double d = detail::eval_poly_d(f, v) - mu;
    var += w * w * d * d;
  }
  e.value = mu;
  e.stderr_est = std::sqrt(var) / wsum;
  return e;
}

}  // namespace ppeq
