#pragma once

#include <optional>
#include <sstream>
#include <string>

#include "ppeq/invariant.hpp"
#include "ppeq/pcfg.hpp"
#include "ppeq/printer.hpp"

namespace ppeq {

struct UnboundedWeight : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NegativeScore : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Conditioning-free program produced by weighted restarting, together with
/// the weight variable and the verified cumulative-weight bound.
struct RestartedProgram {
  Pcfg pcfg;
  Rational weight_bound;      // M
  size_t weight_var = 0;      // index of W
  size_t restart_transition = 0;
  // per-attempt step bound of the underlying program (the restarted program
  // itself terminates a.s. but not within any fixed number of steps)
  std::optional<unsigned long> attempt_bound;
};

namespace detail {

/// Steps 1-3 of weighted restarting: add the weight variable, replace
/// observe by a weight-zeroing branch and score by a weight multiplication.
/// No restart branch yet; used both for bound inference and the transform.
inline std::pair<Pcfg, size_t> instrument_weights(const Pcfg& cfg) {
  Pcfg out;
  size_t n = cfg.nvars();
  out.vars = cfg.vars;
  std::string wname = "W";
  while (std::find(out.vars.begin(), out.vars.end(), wname) != out.vars.end()) wname += "_";
  out.vars.push_back(wname);
  size_t w = n;
  size_t nn = n + 1;
  std::vector<size_t> id(n);
  for (size_t i = 0; i < n; ++i) id[i] = i;

  out.loc_names = cfg.loc_names;
  out.init_loc = cfg.init_loc;
  out.out_loc = cfg.out_loc;
  out.out_vars = cfg.out_vars;
  out.init_valuation = cfg.init_valuation;
  out.init_valuation.push_back(Rational(1));  // W = 1 initially
  out.termination_bound = cfg.termination_bound;
  out.conditioning_free = true;

  auto up = [&](const PolyExpr& p) { return p.remapped(nn, id); };
  auto up_pred = [&](const LinearPredicate& pr) {
    LinearPredicate q;
    for (auto& c : pr.conjuncts) {
      AffineConstraint nc;
      nc.coeffs = c.coeffs;
      nc.coeffs.resize(nn, Rational(0));
      nc.constant = c.constant;
      nc.sense = c.sense;
      q.conjuncts.push_back(std::move(nc));
    }
    return q;
  };
  auto up_updates = [&](const UpdateMap& u) {
    UpdateMap r;
    for (auto& [v, upd] : u) {
      if (upd.kind == Update::Kind::Poly)
        r.emplace(v, Update::assign(up(upd.poly)));
      else
        r.emplace(v, Update::sample(*upd.dist));
    }
    return r;
  };

  for (auto& t : cfg.transitions) {
    if (t.kind == Transition::Kind::ProbBranch) {
      Transition nt;
      nt.kind = Transition::Kind::ProbBranch;
      nt.src = t.src;
      nt.dst_true = t.dst_true;
      nt.dst_false = t.dst_false;
      nt.prob = up(t.prob);
      nt.updates_true = up_updates(t.updates_true);
      nt.updates_false = up_updates(t.updates_false);
      out.transitions.push_back(std::move(nt));
      continue;
    }
    switch (t.weight.kind) {
      case WeightSpec::Kind::One: {
        out.transitions.push_back(
            Transition::det(t.src, t.dst, up_pred(t.guard), up_updates(t.updates)));
        break;
      }
      case WeightSpec::Kind::Score: {
        // W := W * e
        UpdateMap u = up_updates(t.updates);
        PolyExpr we = PolyExpr::variable(nn, w) * up(t.weight.expr);
        u.emplace(w, Update::assign(std::move(we)));
        out.transitions.push_back(Transition::det(t.src, t.dst, up_pred(t.guard), std::move(u)));
        break;
      }
      case WeightSpec::Kind::ObserveGuard: {
        // pass through when the predicate holds, zero the weight otherwise
        LinearPredicate phi = up_pred(t.weight.guard);
        if (phi.conjuncts.empty()) {
          out.transitions.push_back(
              Transition::det(t.src, t.dst, up_pred(t.guard), up_updates(t.updates)));
          break;
        }
        LinearPredicate base = up_pred(t.guard);
        out.transitions.push_back(
            Transition::det(t.src, t.dst, base.conjoin(phi), up_updates(t.updates)));
        for (auto& neg : negate_predicate(phi)) {
          UpdateMap u = up_updates(t.updates);
          u.emplace(w, Update::assign(PolyExpr::constant(nn, Rational(0))));
          out.transitions.push_back(
              Transition::det(t.src, t.dst, base.conjoin(neg), std::move(u)));
        }
        break;
      }
    }
  }
  return {std::move(out), w};
}

}  // namespace detail

/// Weight-bound inference: instruments the program, checks that every score
/// expression is provably non-negative under the interval invariant, and
/// returns the smallest interval-derived upper bound M on the weight
/// variable. Observe weights only ever contribute factors in {0,1}.
inline Rational infer_weight_bound(const Pcfg& cfg) {
  auto [aux, w] = detail::instrument_weights(cfg);
  absint::Analyzer an(aux);
  auto states = an.run();
  // score expressions must be non-negative where they execute
  for (auto& t : cfg.transitions) {
    if (t.kind != Transition::Kind::Det || t.weight.kind != WeightSpec::Kind::Score) continue;
    if (!states[t.src]) continue;  // unreachable
    absint::State st = *states[t.src];
    for (auto& c : t.guard.conjuncts) {
      AffineConstraint ext = c;
      ext.coeffs.resize(aux.nvars(), Rational(0));
      an.refine(st, ext);
    }
    std::vector<Interval> box(aux.nvars());
    for (size_t v = 0; v < aux.nvars(); ++v) box[v] = st[an.base_dim(v)];
    std::vector<size_t> id(cfg.nvars());
    for (size_t i = 0; i < cfg.nvars(); ++i) id[i] = i;
    Interval range = t.weight.expr.remapped(aux.nvars(), id).eval_interval(box);
    if (!range.lo || *range.lo < 0)
      throw NegativeScore("cannot establish non-negativity of score expression " +
                          t.weight.expr.str(cfg.vars) + " at location " + cfg.loc_names[t.src]);
  }
  Rational m = 0;
  bool any = false;
  for (size_t l = 0; l < aux.nlocs(); ++l) {
    if (!states[l]) continue;
    const Interval& wi = (*states[l])[an.base_dim(w)];
    if (wi.empty) continue;
    if (!wi.hi)
      throw UnboundedWeight("no finite bound on the cumulative weight at location " +
                            aux.loc_names[l]);
    m = std::max(m, *wi.hi);
    any = true;
  }
  if (!any || m <= 0) m = 1;  // degenerate: weight identically zero
  return m;
}

/// Steps 1-4 of weighted restarting: produces the conditioning-free program
/// whose normalized output distribution equals the original's. The terminal
/// branch continues to the output location with probability W/M and otherwise
/// resets every variable to its initial value and jumps back to the start.
inline RestartedProgram weighted_restart(const Pcfg& cfg, const Rational& m) {
  if (m <= 0) throw UnboundedWeight("weight bound M must be positive");
  auto [aux, w] = detail::instrument_weights(cfg);
  size_t nn = aux.nvars();
  size_t res = aux.loc_names.size();
  std::string res_name = "res";
  while (aux.loc_index(res_name)) res_name += "_";
  aux.loc_names.push_back(res_name);
  for (auto& t : aux.transitions) {
    if (t.src == aux.out_loc && t.dst == aux.out_loc) continue;  // terminal self-loop
    if (t.kind == Transition::Kind::Det) {
      if (t.dst == aux.out_loc) t.dst = res;
    } else {
      if (t.dst_true == aux.out_loc) t.dst_true = res;
      if (t.dst_false == aux.out_loc) t.dst_false = res;
    }
  }
  Transition rt;
  rt.kind = Transition::Kind::ProbBranch;
  rt.src = res;
  rt.dst_true = aux.out_loc;
  rt.dst_false = aux.init_loc;
  rt.prob = PolyExpr::variable(nn, w).scaled(Rational(1) / m);  // W / M
  for (size_t v = 0; v < nn; ++v)
    rt.updates_false.emplace(v, Update::assign(PolyExpr::constant(nn, aux.init_valuation[v])));
  rt.is_restart = true;
  aux.transitions.push_back(std::move(rt));

  RestartedProgram out;
  out.attempt_bound = aux.termination_bound ? std::optional<unsigned long>(*aux.termination_bound + 2)
                                            : std::nullopt;
  aux.termination_bound.reset();  // restarts make the total run length unbounded
  out.pcfg = std::move(aux);
  out.weight_bound = m;
  out.weight_var = w;
  out.restart_transition = out.pcfg.transitions.size() - 1;
  return out;
}

/// Renders the restarted program as DSL text (observe/score rewritten to
/// weight updates, terminal restart block appended).
inline std::string dump_restarted_dsl(const ProgramAst& ast, const Rational& m) {
  ProgramAst prog = ast;
  std::string wname = "W";
  while (prog.var_index(wname)) wname += "_";
  size_t old_n = prog.nvars();
  prog.vars.push_back(wname);
  prog.init_values.push_back(Rational(1));
  size_t nn = prog.nvars();
  size_t w = old_n;
  std::vector<size_t> id(old_n);
  for (size_t i = 0; i < old_n; ++i) id[i] = i;

  struct Rewriter {
    size_t w, nn;
    std::vector<size_t> id;
    void walk(StmtSeq& seq) {
      StmtSeq out;
      for (auto& st : seq) {
        remap_stmt(st);
        if (st.kind == StmtKind::Observe) {
          // if phi: skip else: W := 0
          Stmt iff;
          iff.kind = StmtKind::IfGuard;
          iff.label = st.label;
          iff.line = st.line;
          iff.pred = st.pred;
          Stmt skip;
          skip.kind = StmtKind::Skip;
          iff.then_branch.push_back(skip);
          Stmt zero;
          zero.kind = StmtKind::Assign;
          zero.var = w;
          zero.rhs = PolyExpr::constant(nn, Rational(0));
          iff.else_branch.push_back(zero);
          out.push_back(std::move(iff));
          continue;
        }
        if (st.kind == StmtKind::Score) {
          Stmt mul;
          mul.kind = StmtKind::Assign;
          mul.label = st.label;
          mul.line = st.line;
          mul.var = w;
          mul.rhs = PolyExpr::variable(nn, w) * st.score_expr;
          out.push_back(std::move(mul));
          continue;
        }
        walk(st.then_branch);
        walk(st.else_branch);
        for (auto& a : st.arms) walk(a.body);
        out.push_back(std::move(st));
      }
      seq = std::move(out);
    }
    void remap_stmt(Stmt& st) {
      st.rhs = st.rhs.nvars() ? st.rhs.remapped(nn, id) : PolyExpr(nn);
      st.score_expr = st.score_expr.nvars() ? st.score_expr.remapped(nn, id) : PolyExpr(nn);
      for (auto& c : st.pred.conjuncts) c.coeffs.resize(nn, Rational(0));
      for (auto& a : st.arms) a.prob = a.prob.nvars() ? a.prob.remapped(nn, id) : PolyExpr(nn);
    }
  } rw{w, nn, id};
  rw.walk(prog.body);

  // leading anchor for the restart jump
  Stmt anchor;
  anchor.kind = StmtKind::Skip;
  anchor.label = "start";
  prog.body.insert(prog.body.begin(), anchor);

  // restart: if prob(1 - W/M): reset; W := 1; go-to start
  Stmt branch;
  branch.kind = StmtKind::IfProb;
  branch.label = "restart";
  ProbArm arm;
  PolyExpr p = PolyExpr::constant(nn, Rational(1)) - PolyExpr::variable(nn, w).scaled(Rational(1) / m);
  arm.prob = std::move(p);
  for (size_t v = 0; v < old_n; ++v) {
    Stmt reset;
    reset.kind = StmtKind::Assign;
    reset.var = v;
    reset.rhs = PolyExpr::constant(nn, prog.init_values[v]);
    arm.body.push_back(std::move(reset));
  }
  Stmt wreset;
  wreset.kind = StmtKind::Assign;
  wreset.var = w;
  wreset.rhs = PolyExpr::constant(nn, Rational(1));
  arm.body.push_back(std::move(wreset));
  Stmt jump;
  jump.kind = StmtKind::GoTo;
  jump.target = "start";
  arm.body.push_back(std::move(jump));
  branch.arms.push_back(std::move(arm));
  prog.body.push_back(std::move(branch));
  return print_program(prog);
}

}  // namespace ppeq
