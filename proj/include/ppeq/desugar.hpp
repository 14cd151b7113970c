#pragma once

#include "ppeq/ast.hpp"

namespace ppeq {

namespace detail {

inline void desugar_seq(StmtSeq& seq);

inline void desugar_stmt(Stmt& st) {
  switch (st.kind) {
    case StmtKind::While:
    case StmtKind::IfGuard:
      desugar_seq(st.then_branch);
      desugar_seq(st.else_branch);
      break;
    case StmtKind::IfProb: {
      for (auto& arm : st.arms) desugar_seq(arm.body);
      desugar_seq(st.else_branch);
      if (st.arms.size() <= 1) break;
      // Chain probabilities are marginal; rebuild as nested binary branches
      // with conditional residual probabilities.
      size_t nv = st.arms[0].prob.nvars();
      StmtSeq else_acc = std::move(st.else_branch);
      // innermost-first construction
      for (size_t i = st.arms.size(); i-- > 1;) {
        Rational mass_before = 1;
        for (size_t j = 0; j < i; ++j) mass_before -= st.arms[j].prob.constant_value();
        Stmt node;
        node.kind = StmtKind::IfProb;
        node.line = st.line;
        ProbArm a;
        // conditional probability of this arm given no earlier arm fired;
        // a zero residual leaves an unreachable zero-probability branch
        Rational cond = mass_before == 0 ? Rational(0)
                                         : st.arms[i].prob.constant_value() / mass_before;
        a.prob = PolyExpr::constant(nv, cond);
        a.body = std::move(st.arms[i].body);
        node.arms.push_back(std::move(a));
        node.else_branch = std::move(else_acc);
        else_acc.clear();
        else_acc.push_back(std::move(node));
      }
      st.arms.resize(1);
      st.else_branch = std::move(else_acc);
      break;
    }
    default:
      break;
  }
}

inline void desugar_seq(StmtSeq& seq) {
  for (auto& st : seq) desugar_stmt(st);
}

}  // namespace detail

/// Normalizes nested elif-prob chains into binary prob branches. Guarded
/// if/else and everything else pass through unchanged.
inline ProgramAst desugar_prob_branch(ProgramAst ast) {
  detail::desugar_seq(ast.body);
  return ast;
}

}  // namespace ppeq
