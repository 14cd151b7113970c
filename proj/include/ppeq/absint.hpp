#pragma once

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "ppeq/pcfg.hpp"

namespace ppeq {

struct Divergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace absint {

/// A tracked dimension: a +/-1 combination of program variables. Singles give
/// interval bounds, pairs and counter-linked triples octagon-style facts.
struct DimSpec {
  std::vector<std::pair<size_t, int>> parts;  // (var, +1|-1), sorted by var

  bool is_single() const { return parts.size() == 1 && parts[0].second == 1; }

  PolyExpr to_poly(size_t nvars) const {
    PolyExpr p(nvars);
    for (auto& [v, s] : parts) p.add_term(mono_var(nvars, v), Rational(s));
    return p;
  }

  Rational eval(const std::vector<Rational>& x) const {
    Rational r = 0;
    for (auto& [v, s] : parts) r += Rational(s) * x[v];
    return r;
  }
};

using State = std::vector<Interval>;  // indexed by dim

struct Options {
  int widen_after = 32;
  int narrow_rounds = 8;  // decreasing sweeps; bounds flow one location per round
  int max_joins = 4096;
  bool track_triples = true;
};

class Analyzer {
 public:
  Analyzer(const Pcfg& cfg, Options opts = {}) : cfg_(cfg), opts_(opts) { make_dims(); }

  const std::vector<DimSpec>& dims() const { return dims_; }

  /// Identity self-loops (the absorbing terminal) contribute nothing to the
  /// least fixpoint and would block the decreasing iteration, so skip them.
  static bool identity_self_loop(const Transition& t) {
    return t.kind == Transition::Kind::Det && t.src == t.dst && t.guard.is_true() &&
           t.updates.empty();
  }

  /// Per-location abstract state; nullopt marks unreachable locations.
  std::vector<std::optional<State>> run() {
    size_t L = cfg_.nlocs();
    std::vector<std::optional<State>> state(L);
    std::vector<int> joins(L, 0);
    state[cfg_.init_loc] = initial_state();
    std::deque<size_t> work{cfg_.init_loc};
    std::vector<bool> queued(L, false);
    queued[cfg_.init_loc] = true;
    int total = 0;
    while (!work.empty()) {
      if (++total > opts_.max_joins * static_cast<int>(L))
        throw Divergence("interval analysis failed to stabilize");
      size_t l = work.front();
      work.pop_front();
      queued[l] = false;
      for (size_t ti : cfg_.outgoing(l)) {
        const Transition& t = cfg_.transitions[ti];
        if (identity_self_loop(t)) continue;
        for (auto& [dst, st] : transfer(t, *state[l])) {
          if (!st) continue;
          State joined;
          if (!state[dst]) {
            joined = *st;
          } else {
            joined = join(*state[dst], *st);
            if (joined == *state[dst]) continue;
            if (++joins[dst] > opts_.widen_after) joined = widen(*state[dst], joined);
          }
          state[dst] = std::move(joined);
          if (!queued[dst]) {
            queued[dst] = true;
            work.push_back(dst);
          }
        }
      }
    }
    // decreasing rounds recover guard-derived bounds lost to widening
    for (int round = 0; round < opts_.narrow_rounds; ++round) {
      std::vector<std::optional<State>> next(L);
      next[cfg_.init_loc] = initial_state();
      for (size_t l = 0; l < L; ++l) {
        if (!state[l]) continue;
        for (size_t ti : cfg_.outgoing(l)) {
          if (identity_self_loop(cfg_.transitions[ti])) continue;
          for (auto& [dst, st] : transfer(cfg_.transitions[ti], *state[l])) {
            if (!st) continue;
            if (!next[dst])
              next[dst] = *st;
            else
              next[dst] = join(*next[dst], *st);
          }
        }
      }
      for (size_t l = 0; l < L; ++l) {
        if (!state[l] || !next[l]) continue;
        State meetv(dims_.size());
        for (size_t d = 0; d < dims_.size(); ++d) meetv[d] = (*state[l])[d].meet((*next[l])[d]);
        state[l] = std::move(meetv);
      }
    }
    return state;
  }

  /// Refines a state in place with an affine conjunct (used for guards).
  void refine(State& st, const AffineConstraint& c) const {
    // single pass per base var, then dim/base closure
    refine_bases(st, c);
    closure(st);
  }

  void closure(State& st) const {
    // tighten each dim from base intervals and each base from point dims
    for (size_t d = 0; d < dims_.size(); ++d) {
      Interval implied = Interval::point(Rational(0));
      for (auto& [v, s] : dims_[d].parts) implied = implied + st[base_dim_[v]].scaled(Rational(s));
      st[d] = st[d].meet(implied);
    }
    for (size_t d = 0; d < dims_.size(); ++d) {
      if (dims_[d].parts.size() < 2) continue;
      // a bounded dim constrains each participating base var
      for (auto& [v, s] : dims_[d].parts) {
        Interval others = Interval::point(Rational(0));
        for (auto& [u, su] : dims_[d].parts)
          if (u != v) others = others + st[base_dim_[u]].scaled(Rational(su));
        // s*v = dim - others
        Interval vi = (st[d] - others).scaled(Rational(1) / Rational(s));
        st[base_dim_[v]] = st[base_dim_[v]].meet(vi);
      }
    }
  }

  State initial_state() const {
    State st(dims_.size());
    for (size_t d = 0; d < dims_.size(); ++d)
      st[d] = Interval::point(dims_[d].eval(cfg_.init_valuation));
    return st;
  }

  std::vector<std::pair<size_t, std::optional<State>>> transfer(const Transition& t,
                                                                const State& in) const {
    std::vector<std::pair<size_t, std::optional<State>>> out;
    if (t.kind == Transition::Kind::Det) {
      State st = in;
      bool feasible = true;
      for (auto& c : t.guard.conjuncts) {
        refine_bases(st, c);
        for (auto& iv : st)
          if (iv.empty) feasible = false;
      }
      if (!feasible) {
        out.emplace_back(t.dst, std::nullopt);
        return out;
      }
      closure(st);
      apply_updates(st, t.updates);
      out.emplace_back(t.dst, std::move(st));
      return out;
    }
    // probabilistic branch: no guard; constant prob 0/1 prunes an arm
    std::optional<Rational> pconst;
    if (t.prob.is_constant()) pconst = t.prob.constant_value();
    if (!pconst || *pconst > 0) {
      State st = in;
      apply_updates(st, t.updates_true);
      out.emplace_back(t.dst_true, std::move(st));
    }
    if (!pconst || *pconst < 1) {
      State st = in;
      apply_updates(st, t.updates_false);
      out.emplace_back(t.dst_false, std::move(st));
    }
    return out;
  }

  size_t base_dim(size_t var) const { return base_dim_[var]; }

 private:
  const Pcfg& cfg_;
  Options opts_;
  std::vector<DimSpec> dims_;
  std::vector<size_t> base_dim_;  // var -> dim index

  void make_dims() {
    size_t n = cfg_.nvars();
    base_dim_.resize(n);
    for (size_t v = 0; v < n; ++v) {
      base_dim_[v] = dims_.size();
      dims_.push_back(DimSpec{{{v, 1}}});
    }
    for (size_t u = 0; u < n; ++u)
      for (size_t v = u + 1; v < n; ++v) {
        dims_.push_back(DimSpec{{{u, 1}, {v, -1}}});
        dims_.push_back(DimSpec{{{u, 1}, {v, 1}}});
      }
    if (opts_.track_triples && n <= 8) {
      for (size_t u = 0; u < n; ++u)
        for (size_t v = u + 1; v < n; ++v)
          for (size_t w = 0; w < n; ++w) {
            if (w == u || w == v) continue;
            dims_.push_back(sorted_dim({{u, 1}, {v, -1}, {w, 1}}));
            dims_.push_back(sorted_dim({{u, 1}, {v, -1}, {w, -1}}));
            dims_.push_back(sorted_dim({{u, 1}, {v, 1}, {w, -1}}));
          }
    }
  }

  static DimSpec sorted_dim(std::vector<std::pair<size_t, int>> parts) {
    std::sort(parts.begin(), parts.end());
    return DimSpec{std::move(parts)};
  }

  void refine_bases(State& st, const AffineConstraint& c) const {
    // a.x + b >= 0 (or > / =): bound each var with nonzero coefficient
    auto bound_one = [&](bool upper_from_eq) {
      for (size_t v = 0; v < c.coeffs.size(); ++v) {
        if (c.coeffs[v] == 0) continue;
        // c_v * v >= -(b + sum_{u != v} c_u u)
        Interval rest = Interval::point(c.constant);
        for (size_t u = 0; u < c.coeffs.size(); ++u)
          if (u != v && c.coeffs[u] != 0) rest = rest + st[base_dim_[u]].scaled(c.coeffs[u]);
        Interval& vi = st[base_dim_[v]];
        if (c.coeffs[v] > 0) {
          // v >= -rest.hi / c_v  ... lower bound uses the rest's upper end
          if (rest.hi) {
            Rational lb = -*rest.hi / c.coeffs[v];
            vi = vi.meet(Interval{lb, std::nullopt, false});
          }
          if (upper_from_eq && rest.lo) {
            Rational ub = -*rest.lo / c.coeffs[v];
            vi = vi.meet(Interval{std::nullopt, ub, false});
          }
        } else {
          if (rest.hi) {
            Rational ub = -*rest.hi / c.coeffs[v];
            vi = vi.meet(Interval{std::nullopt, ub, false});
          }
          if (upper_from_eq && rest.lo) {
            Rational lb = -*rest.lo / c.coeffs[v];
            vi = vi.meet(Interval{lb, std::nullopt, false});
          }
        }
      }
    };
    bound_one(c.sense == CmpSense::Eq);
  }

  void apply_updates(State& st, const UpdateMap& updates) const {
    if (updates.empty()) return;
    // adjustments read the pre-state; updates are simultaneous
    std::map<size_t, Interval> delta;  // var -> interval of (new - old)
    for (auto& [v, up] : updates) {
      if (up.kind == Update::Kind::Poly) {
        PolyExpr diff = up.poly - PolyExpr::variable(cfg_.nvars(), v);
        delta.emplace(v, eval_with_singletons(diff, st));
      } else {
        Interval support = up.dist->support();
        delta.emplace(v, support - st[base_dim_[v]]);
      }
    }
    State out = st;
    for (size_t d = 0; d < dims_.size(); ++d) {
      Interval adj = Interval::point(Rational(0));
      bool touched = false;
      for (auto& [v, s] : dims_[d].parts) {
        auto it = delta.find(v);
        if (it == delta.end()) continue;
        touched = true;
        adj = adj + it->second.scaled(Rational(s));
      }
      if (touched) out[d] = st[d] + adj;
    }
    // direct images are sharper than deltas for base dimensions
    for (auto& [v, up] : updates) {
      if (up.kind == Update::Kind::Sample) {
        out[base_dim_[v]] = up.dist->support();
      } else {
        out[base_dim_[v]] = out[base_dim_[v]].meet(eval_with_singletons(up.poly, st));
      }
    }
    // exact recomputation when every part of a dim is set to a constant
    for (size_t d = 0; d < dims_.size(); ++d) {
      bool all_const = true;
      Rational val = 0;
      for (auto& [v, s] : dims_[d].parts) {
        auto it = updates.find(v);
        if (it == updates.end() || it->second.kind != Update::Kind::Poly ||
            !it->second.poly.is_constant()) {
          all_const = false;
          break;
        }
        val += Rational(s) * it->second.poly.constant_value();
      }
      if (all_const) out[d] = Interval::point(val);
    }
    st = std::move(out);
    closure(st);
  }

  /// Interval evaluation after substituting point-valued variables exactly.
  /// Folding singletons first keeps correlated terms like W*y - y with W = 1.
  Interval eval_with_singletons(const PolyExpr& p, const State& st) const {
    PolyExpr q = p;
    for (size_t v = 0; v < cfg_.nvars(); ++v) {
      const Interval& iv = st[base_dim_[v]];
      if (iv.is_point())
        q = q.substituted(v, PolyExpr::constant(cfg_.nvars(), *iv.lo));
    }
    std::vector<Interval> box(cfg_.nvars());
    for (size_t v = 0; v < cfg_.nvars(); ++v) box[v] = st[base_dim_[v]];
    return q.eval_interval(box);
  }

  State join(const State& a, const State& b) const {
    State r(dims_.size());
    for (size_t d = 0; d < dims_.size(); ++d) r[d] = a[d].join(b[d]);
    return r;
  }

  State widen(const State& older, const State& newer) const {
    State r(dims_.size());
    for (size_t d = 0; d < dims_.size(); ++d) r[d] = older[d].widen(newer[d]);
    return r;
  }
};

}  // namespace absint
}  // namespace ppeq
