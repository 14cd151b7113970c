#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ppeq/ast.hpp"

namespace ppeq {

struct BoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Update {
  enum class Kind { Poly, Sample };
  Kind kind = Kind::Poly;
  PolyExpr poly;                         // Kind::Poly
  std::optional<DistributionSpec> dist;  // Kind::Sample

  static Update assign(PolyExpr p) {
    Update u;
    u.kind = Kind::Poly;
    u.poly = std::move(p);
    return u;
  }
  static Update sample(DistributionSpec d) {
    Update u;
    u.kind = Kind::Sample;
    u.dist = std::move(d);
    return u;
  }
};

/// Per-variable updates; variables not present keep their value.
using UpdateMap = std::map<size_t, Update>;

struct WeightSpec {
  enum class Kind { One, Score, ObserveGuard };
  Kind kind = Kind::One;
  PolyExpr expr;          // Score: w = expr(x)
  LinearPredicate guard;  // ObserveGuard: w = [x |= guard]
};

struct Transition {
  enum class Kind { Det, ProbBranch };
  Kind kind = Kind::Det;
  size_t src = 0;

  // Det
  size_t dst = 0;
  LinearPredicate guard;
  UpdateMap updates;
  WeightSpec weight;

  // ProbBranch: with probability `prob` take dst_true (applying updates_true),
  // otherwise dst_false (applying updates_false). User-level branches are pure
  // coins; only the restart branch carries arm updates.
  size_t dst_true = 0, dst_false = 0;
  PolyExpr prob;
  UpdateMap updates_true, updates_false;
  bool is_restart = false;

  static Transition det(size_t src, size_t dst, LinearPredicate g = {}, UpdateMap u = {},
                        WeightSpec w = {}) {
    Transition t;
    t.kind = Kind::Det;
    t.src = src;
    t.dst = dst;
    t.guard = std::move(g);
    t.updates = std::move(u);
    t.weight = std::move(w);
    return t;
  }
};

/// not(c1 && ... && ck) as disjoint conjunctions: the i-th branch keeps
/// c1..c_{i-1} and negates c_i. Equalities split into two strict branches.
/// The trivial predicate yields no branches.
inline std::vector<LinearPredicate> negate_predicate(const LinearPredicate& p) {
  std::vector<LinearPredicate> out;
  LinearPredicate prefix;
  for (auto& c : p.conjuncts) {
    if (c.sense == CmpSense::Eq) {
      AffineConstraint gt = c;
      gt.sense = CmpSense::Gt;
      AffineConstraint lt;  // -e > 0
      lt.coeffs.resize(c.coeffs.size());
      for (size_t i = 0; i < c.coeffs.size(); ++i) lt.coeffs[i] = -c.coeffs[i];
      lt.constant = -c.constant;
      lt.sense = CmpSense::Gt;
      LinearPredicate b1 = prefix;
      b1.conjuncts.push_back(gt);
      out.push_back(std::move(b1));
      LinearPredicate b2 = prefix;
      b2.conjuncts.push_back(lt);
      out.push_back(std::move(b2));
    } else {
      LinearPredicate b = prefix;
      b.conjuncts.push_back(c.negated());
      out.push_back(std::move(b));
    }
    prefix.conjuncts.push_back(c);
  }
  return out;
}

struct Pcfg {
  std::vector<std::string> loc_names;
  size_t init_loc = 0, out_loc = 0;
  std::vector<std::string> vars;
  std::vector<size_t> out_vars;
  std::vector<Rational> init_valuation;
  std::vector<Transition> transitions;

  std::optional<unsigned long> termination_bound;
  bool conditioning_free = true;

  size_t nlocs() const { return loc_names.size(); }
  size_t nvars() const { return vars.size(); }

  std::vector<size_t> outgoing(size_t loc) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < transitions.size(); ++i)
      if (transitions[i].src == loc) out.push_back(i);
    return out;
  }

  std::optional<size_t> loc_index(const std::string& name) const {
    for (size_t i = 0; i < loc_names.size(); ++i)
      if (loc_names[i] == name) return i;
    return std::nullopt;
  }

  std::string dot() const {
    std::ostringstream os;
    os << "digraph pcfg {\n  rankdir=TB;\n";
    for (size_t i = 0; i < loc_names.size(); ++i) {
      os << "  n" << i << " [label=\"" << loc_names[i] << "\""
         << (i == init_loc ? ", shape=box" : i == out_loc ? ", shape=doublecircle" : "")
         << "];\n";
    }
    auto upd_str = [&](const UpdateMap& u) {
      std::string s;
      for (auto& [v, up] : u) {
        if (!s.empty()) s += ", ";
        s += vars[v] + " := " +
             (up.kind == Update::Kind::Sample ? up.dist->str() : up.poly.str(vars));
      }
      return s;
    };
    for (auto& t : transitions) {
      if (t.kind == Transition::Kind::Det) {
        std::string label;
        if (!t.guard.is_true()) label += "[" + t.guard.str(vars) + "] ";
        label += upd_str(t.updates);
        if (t.weight.kind == WeightSpec::Kind::Score)
          label += " w=" + t.weight.expr.str(vars);
        else if (t.weight.kind == WeightSpec::Kind::ObserveGuard)
          label += " w=[" + t.weight.guard.str(vars) + "]";
        os << "  n" << t.src << " -> n" << t.dst << " [label=\"" << label << "\"];\n";
      } else {
        os << "  n" << t.src << " -> n" << t.dst_true << " [label=\"p=" << t.prob.str(vars)
           << (t.updates_true.empty() ? "" : "; " + upd_str(t.updates_true)) << "\"];\n";
        os << "  n" << t.src << " -> n" << t.dst_false << " [label=\"p=1-(" << t.prob.str(vars)
           << ")" << (t.updates_false.empty() ? "" : "; " + upd_str(t.updates_false))
           << "\"];\n";
      }
    }
    os << "}\n";
    return os.str();
  }
};

namespace detail {

class PcfgBuilder {
 public:
  explicit PcfgBuilder(const ProgramAst& ast) : ast_(ast) {
    cfg_.vars = ast.vars;
    cfg_.init_valuation = ast.init_values;
    cfg_.out_vars = ast.outputs;
  }

  Pcfg build() {
    cfg_.init_loc = new_loc("in");
    cfg_.out_loc = new_loc("out");
    size_t body_exit = lower_seq(ast_.body, cfg_.init_loc, LabelScope{});
    if (body_exit != cfg_.out_loc)
      cfg_.transitions.push_back(Transition::det(body_exit, cfg_.out_loc));
    // absorbing terminal self-loop
    cfg_.transitions.push_back(Transition::det(cfg_.out_loc, cfg_.out_loc));
    cfg_.termination_bound = compute_bound(ast_.body);
    cfg_.conditioning_free = conditioning_free_;
    return std::move(cfg_);
  }

 private:
  const ProgramAst& ast_;
  Pcfg cfg_;
  std::set<std::string> used_names_;
  bool conditioning_free_ = true;

  struct LabelScope {
    std::map<std::string, size_t> forward;  // labels of later stmts in open seqs
  };

  size_t new_loc(const std::string& hint) {
    std::string name = hint;
    int suffix = 1;
    while (used_names_.count(name)) name = hint + "_" + std::to_string(suffix++);
    used_names_.insert(name);
    cfg_.loc_names.push_back(name);
    return cfg_.loc_names.size() - 1;
  }

  size_t stmt_loc(const Stmt& st, size_t idx) {
    if (st.label) return new_loc(*st.label);
    return new_loc("L" + std::to_string(idx));
  }

  // Lowers a sequence starting at `entry`, returns its exit location.
  size_t lower_seq(const StmtSeq& seq, size_t entry, LabelScope scope) {
    // pre-allocate entry locations for labeled statements (forward gotos)
    std::vector<std::optional<size_t>> pre(seq.size());
    for (size_t i = 0; i < seq.size(); ++i) {
      if (seq[i].label) {
        pre[i] = stmt_loc(seq[i], i);
        scope.forward[*seq[i].label] = *pre[i];
      }
    }
    size_t cur = entry;
    for (size_t i = 0; i < seq.size(); ++i) {
      const Stmt& st = seq[i];
      if (st.kind == StmtKind::Skip && !st.label) continue;
      size_t at;
      if (pre[i]) {
        at = *pre[i];
        if (cur != at) cfg_.transitions.push_back(Transition::det(cur, at));
      } else {
        at = cur;
      }
      cur = lower_stmt(st, at, scope);
    }
    return cur;
  }

  size_t lower_stmt(const Stmt& st, size_t at, LabelScope& scope) {
    switch (st.kind) {
      case StmtKind::Assign: {
        size_t next = new_loc("L" + std::to_string(cfg_.nlocs()));
        UpdateMap u;
        u.emplace(st.var, Update::assign(st.rhs));
        cfg_.transitions.push_back(Transition::det(at, next, {}, std::move(u)));
        return next;
      }
      case StmtKind::SampleAssign: {
        size_t next = new_loc("L" + std::to_string(cfg_.nlocs()));
        UpdateMap u;
        u.emplace(st.var, Update::sample(*st.dist));
        cfg_.transitions.push_back(Transition::det(at, next, {}, std::move(u)));
        return next;
      }
      case StmtKind::Observe: {
        conditioning_free_ = false;
        size_t next = new_loc("L" + std::to_string(cfg_.nlocs()));
        WeightSpec w;
        w.kind = WeightSpec::Kind::ObserveGuard;
        w.guard = st.pred;
        cfg_.transitions.push_back(Transition::det(at, next, {}, {}, std::move(w)));
        return next;
      }
      case StmtKind::Score: {
        conditioning_free_ = false;
        size_t next = new_loc("L" + std::to_string(cfg_.nlocs()));
        WeightSpec w;
        w.kind = WeightSpec::Kind::Score;
        w.expr = st.score_expr;
        cfg_.transitions.push_back(Transition::det(at, next, {}, {}, std::move(w)));
        return next;
      }
      case StmtKind::Skip: {
        size_t next = new_loc("L" + std::to_string(cfg_.nlocs()));
        cfg_.transitions.push_back(Transition::det(at, next));
        return next;
      }
      case StmtKind::GoTo: {
        auto it = scope.forward.find(st.target);
        if (it == scope.forward.end())
          throw ShapeError(
              "go-to " + st.target + " does not target a statement in an enclosing scope",
              st.line);
        cfg_.transitions.push_back(Transition::det(at, it->second));
        // unreachable continuation
        return new_loc("dead" + std::to_string(cfg_.nlocs()));
      }
      case StmtKind::IfGuard: {
        size_t join = new_loc("L" + std::to_string(cfg_.nlocs()));
        size_t then_entry = new_loc("L" + std::to_string(cfg_.nlocs()));
        cfg_.transitions.push_back(Transition::det(at, then_entry, st.pred));
        size_t then_exit = lower_seq(st.then_branch, then_entry, scope);
        cfg_.transitions.push_back(Transition::det(then_exit, join));
        for (auto& neg : negate_pred(st.pred, st.line)) {
          size_t else_entry = new_loc("L" + std::to_string(cfg_.nlocs()));
          cfg_.transitions.push_back(Transition::det(at, else_entry, neg));
          size_t else_exit = lower_seq(st.else_branch, else_entry, scope);
          cfg_.transitions.push_back(Transition::det(else_exit, join));
        }
        return join;
      }
      case StmtKind::IfProb: {
        if (st.arms.size() != 1)
          throw ShapeError("prob chains must be desugared before lowering", st.line);
        size_t join = new_loc("L" + std::to_string(cfg_.nlocs()));
        size_t then_entry = new_loc("L" + std::to_string(cfg_.nlocs()));
        size_t else_entry = new_loc("L" + std::to_string(cfg_.nlocs()));
        Transition t;
        t.kind = Transition::Kind::ProbBranch;
        t.src = at;
        t.dst_true = then_entry;
        t.dst_false = else_entry;
        t.prob = st.arms[0].prob;
        cfg_.transitions.push_back(std::move(t));
        size_t then_exit = lower_seq(st.arms[0].body, then_entry, scope);
        cfg_.transitions.push_back(Transition::det(then_exit, join));
        size_t else_exit = lower_seq(st.else_branch, else_entry, scope);
        cfg_.transitions.push_back(Transition::det(else_exit, join));
        return join;
      }
      case StmtKind::While: {
        size_t exit = new_loc("L" + std::to_string(cfg_.nlocs()));
        size_t body_entry = new_loc("L" + std::to_string(cfg_.nlocs()));
        cfg_.transitions.push_back(Transition::det(at, body_entry, st.pred));
        size_t body_exit = lower_seq(st.then_branch, body_entry, scope);
        cfg_.transitions.push_back(Transition::det(body_exit, at));  // back edge
        for (auto& neg : negate_pred(st.pred, st.line))
          cfg_.transitions.push_back(Transition::det(at, exit, neg));
        return exit;
      }
    }
    throw std::logic_error("unhandled statement kind");
  }

  std::vector<LinearPredicate> negate_pred(const LinearPredicate& p, int line) {
    if (p.conjuncts.empty())
      throw ShapeError("cannot negate the trivial guard 'true'", line);
    return negate_predicate(p);
  }

  // ---- termination bound ---------------------------------------------------

  std::optional<unsigned long> compute_bound(const StmtSeq& seq) {
    bool has_goto = false;
    scan_goto(seq, has_goto);
    if (has_goto) return std::nullopt;
    try {
      unsigned long b = seq_bound(seq) + 2;  // entry/exit slack
      return b;
    } catch (const BoundError&) {
      throw;
    }
  }

  void scan_goto(const StmtSeq& seq, bool& found) {
    for (auto& st : seq) {
      if (st.kind == StmtKind::GoTo) found = true;
      scan_goto(st.then_branch, found);
      scan_goto(st.else_branch, found);
      for (auto& a : st.arms) scan_goto(a.body, found);
    }
  }

  unsigned long seq_bound(const StmtSeq& seq) {
    unsigned long total = 0;
    for (auto& st : seq) total += stmt_bound(st);
    return total;
  }

  unsigned long stmt_bound(const Stmt& st) {
    switch (st.kind) {
      case StmtKind::Assign:
      case StmtKind::SampleAssign:
      case StmtKind::Observe:
      case StmtKind::Score:
        return 2;  // up to one hop into the labeled location plus the step
      case StmtKind::Skip:
        return st.label ? 2 : 0;
      case StmtKind::GoTo:
        return 2;
      case StmtKind::IfGuard:
        return 3 + std::max(seq_bound(st.then_branch), seq_bound(st.else_branch));
      case StmtKind::IfProb: {
        unsigned long m = seq_bound(st.else_branch);
        for (auto& a : st.arms) m = std::max(m, seq_bound(a.body));
        return 3 + m;
      }
      case StmtKind::While: {
        unsigned long iters = loop_iterations(st);
        return iters * (2 + seq_bound(st.then_branch)) + 2;
      }
    }
    return 0;
  }

  unsigned long loop_iterations(const Stmt& st) {
    if (st.bound_annotation) return static_cast<unsigned long>(*st.bound_annotation);
    // counter pattern: guard conjunct  K - k*c >= 0  with an unconditional
    // top-level increment  c := c + step  in the body
    for (auto& c : st.pred.conjuncts) {
      if (c.sense == CmpSense::Eq) continue;
      int idx = -1;
      bool single = true;
      for (size_t v = 0; v < c.coeffs.size(); ++v) {
        if (c.coeffs[v] == 0) continue;
        if (idx >= 0) single = false;
        idx = static_cast<int>(v);
      }
      if (!single || idx < 0 || c.coeffs[idx] >= 0) continue;  // need K - k*c form
      size_t counter = static_cast<size_t>(idx);
      Rational limit = c.constant / (-c.coeffs[counter]);  // c <= limit (or <)
      std::optional<Rational> step = find_increment(st.then_branch, counter);
      if (!step) continue;
      std::optional<Rational> lo = counter_entry_lower_bound(counter, st);
      if (!lo) continue;
      Rational span = limit - *lo;
      if (span < 0) return 0;
      Rational iters = span / *step;
      mpz_class fl = iters.get_num() / iters.get_den();
      return fl.get_ui() + 1;
    }
    throw BoundError("while loop has no recognizable counter bound; add @bound K");
  }

  std::optional<Rational> find_increment(const StmtSeq& body, size_t counter) {
    for (auto& st : body) {
      if (st.kind != StmtKind::Assign || st.var != counter) continue;
      PolyExpr diff = st.rhs - PolyExpr::variable(cfg_.nvars(), counter);
      if (diff.is_constant() && diff.constant_value() > 0) return diff.constant_value();
      return std::nullopt;
    }
    return std::nullopt;
  }

  // Entry lower bound of the counter: valid if every assignment to it, apart
  // from the increments, is a constant.
  std::optional<Rational> counter_entry_lower_bound(size_t counter, const Stmt& loop) {
    Rational lo = ast_.init_values[counter];
    bool ok = true;
    scan_counter(ast_.body, counter, &loop, lo, ok);
    if (!ok) return std::nullopt;
    return lo;
  }

  void scan_counter(const StmtSeq& seq, size_t counter, const Stmt* loop, Rational& lo,
                    bool& ok) {
    for (auto& st : seq) {
      if (&st == loop) continue;  // increments inside the loop body are fine
      if ((st.kind == StmtKind::Assign || st.kind == StmtKind::SampleAssign) &&
          st.var == counter) {
        if (st.kind == StmtKind::Assign && st.rhs.is_constant())
          lo = std::min(lo, st.rhs.constant_value());
        else
          ok = false;
      }
      if (&st != loop) {
        scan_counter(st.then_branch, counter, loop, lo, ok);
        scan_counter(st.else_branch, counter, loop, lo, ok);
        for (auto& a : st.arms) scan_counter(a.body, counter, loop, lo, ok);
      }
    }
  }
};

// Contracts auto-named locations whose only exit is an unconditional identity
// step, and drops unreachable locations. User-labeled locations survive, so
// the compact graph matches the paper-style one-location-per-instruction view.
inline void compact_pcfg(Pcfg& cfg) {
  auto auto_name = [&](size_t l) {
    const std::string& n = cfg.loc_names[l];
    return n.size() > 0 && (n[0] == 'L' || n.rfind("dead", 0) == 0);
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t l = 0; l < cfg.nlocs(); ++l) {
      if (l == cfg.init_loc || l == cfg.out_loc || !auto_name(l)) continue;
      auto out = cfg.outgoing(l);
      if (out.size() != 1) continue;
      const Transition& t = cfg.transitions[out[0]];
      if (t.kind != Transition::Kind::Det || !t.guard.is_true() || !t.updates.empty() ||
          t.weight.kind != WeightSpec::Kind::One || t.dst == l)
        continue;
      size_t dst = t.dst;
      size_t dead = out[0];
      for (auto& tr : cfg.transitions) {
        if (&tr == &cfg.transitions[dead]) continue;
        if (tr.dst == l) tr.dst = dst;
        if (tr.dst_true == l) tr.dst_true = dst;
        if (tr.dst_false == l) tr.dst_false = dst;
      }
      cfg.transitions.erase(cfg.transitions.begin() + static_cast<long>(dead));
      changed = true;
    }
  }
  // reachability sweep
  std::vector<bool> reach(cfg.nlocs(), false);
  std::vector<size_t> stack{cfg.init_loc};
  reach[cfg.init_loc] = true;
  while (!stack.empty()) {
    size_t l = stack.back();
    stack.pop_back();
    for (size_t i : cfg.outgoing(l)) {
      const Transition& t = cfg.transitions[i];
      for (size_t d : t.kind == Transition::Kind::Det
                          ? std::vector<size_t>{t.dst}
                          : std::vector<size_t>{t.dst_true, t.dst_false}) {
        if (!reach[d]) {
          reach[d] = true;
          stack.push_back(d);
        }
      }
    }
  }
  reach[cfg.out_loc] = true;
  std::vector<size_t> remap(cfg.nlocs(), SIZE_MAX);
  std::vector<std::string> names;
  for (size_t l = 0; l < cfg.nlocs(); ++l) {
    if (!reach[l]) continue;
    remap[l] = names.size();
    names.push_back(cfg.loc_names[l]);
  }
  std::vector<Transition> kept;
  for (auto& t : cfg.transitions) {
    if (!reach[t.src]) continue;
    Transition nt = t;
    nt.src = remap[t.src];
    if (t.kind == Transition::Kind::Det) {
      nt.dst = remap[t.dst];
    } else {
      nt.dst_true = remap[t.dst_true];
      nt.dst_false = remap[t.dst_false];
    }
    kept.push_back(std::move(nt));
  }
  cfg.loc_names = std::move(names);
  cfg.transitions = std::move(kept);
  cfg.init_loc = remap[cfg.init_loc];
  cfg.out_loc = remap[cfg.out_loc];
}

}  // namespace detail

/// Lowers a desugared AST into its probabilistic control-flow graph.
inline Pcfg build_pcfg(const ProgramAst& ast) {
  Pcfg cfg = detail::PcfgBuilder(ast).build();
  detail::compact_pcfg(cfg);
  return cfg;
}

}  // namespace ppeq
