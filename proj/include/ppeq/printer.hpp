#pragma once

#include <sstream>
#include <string>

#include "ppeq/ast.hpp"

namespace ppeq {

namespace detail {

inline void print_pred(std::ostream& os, const LinearPredicate& p,
                       const std::vector<std::string>& names) {
  if (p.conjuncts.empty()) {
    os << "true";
    return;
  }
  for (size_t i = 0; i < p.conjuncts.size(); ++i) {
    if (i) os << " and ";
    const auto& c = p.conjuncts[i];
    os << c.to_poly().str(names);
    os << (c.sense == CmpSense::Geq ? " >= 0" : c.sense == CmpSense::Gt ? " > 0" : " == 0");
  }
}

inline void print_seq(std::ostream& os, const StmtSeq& seq, const ProgramAst& ast, int indent);

inline void print_stmt(std::ostream& os, const Stmt& st, const ProgramAst& ast, int indent) {
  std::string pad(indent, ' ');
  os << pad;
  if (st.label) os << *st.label << ": ";
  switch (st.kind) {
    case StmtKind::Assign:
      os << ast.vars[st.var] << " := " << st.rhs.str(ast.vars) << "\n";
      break;
    case StmtKind::SampleAssign:
      os << ast.vars[st.var] << " := sample(" << st.dist->str() << ")\n";
      break;
    case StmtKind::Observe:
      os << "observe(";
      print_pred(os, st.pred, ast.vars);
      os << ")\n";
      break;
    case StmtKind::Score:
      os << "score(" << st.score_expr.str(ast.vars) << ")\n";
      break;
    case StmtKind::Skip:
      os << "skip\n";
      break;
    case StmtKind::GoTo:
      os << "go-to " << st.target << "\n";
      break;
    case StmtKind::While:
      os << "while ";
      print_pred(os, st.pred, ast.vars);
      os << ":";
      if (st.bound_annotation) os << " @bound " << *st.bound_annotation;
      os << "\n";
      print_seq(os, st.then_branch, ast, indent + 4);
      break;
    case StmtKind::IfGuard:
      os << "if ";
      print_pred(os, st.pred, ast.vars);
      os << ":\n";
      print_seq(os, st.then_branch, ast, indent + 4);
      if (!st.else_branch.empty()) {
        os << pad << "else:\n";
        print_seq(os, st.else_branch, ast, indent + 4);
      }
      break;
    case StmtKind::IfProb:
      for (size_t i = 0; i < st.arms.size(); ++i) {
        if (i) os << pad;
        os << (i == 0 ? "if" : "elif") << " prob(" << st.arms[i].prob.str(ast.vars) << "):\n";
        print_seq(os, st.arms[i].body, ast, indent + 4);
      }
      if (!st.else_branch.empty()) {
        os << pad << "else:\n";
        print_seq(os, st.else_branch, ast, indent + 4);
      }
      break;
  }
}

inline void print_seq(std::ostream& os, const StmtSeq& seq, const ProgramAst& ast, int indent) {
  if (seq.empty()) {
    os << std::string(indent, ' ') << "skip\n";
    return;
  }
  for (auto& st : seq) print_stmt(os, st, ast, indent);
}

}  // namespace detail

/// Renders an AST back to parseable DSL text.
inline std::string print_program(const ProgramAst& ast) {
  std::ostringstream os;
  for (size_t i = 0; i < ast.vars.size(); ++i)
    os << ast.vars[i] << " := " << rat_str(ast.init_values[i]) << "\n";
  detail::print_seq(os, ast.body, ast, 0);
  os << "return(";
  for (size_t i = 0; i < ast.outputs.size(); ++i)
    os << (i ? ", " : "") << ast.vars[ast.outputs[i]];
  os << ")\n";
  return os.str();
}

// Structural equality, used by the parse/print round-trip property.

inline bool ast_equal(const StmtSeq& a, const StmtSeq& b);

inline bool ast_equal(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.label != b.label) return false;
  switch (a.kind) {
    case StmtKind::Assign: return a.var == b.var && a.rhs == b.rhs;
    case StmtKind::SampleAssign: return a.var == b.var && *a.dist == *b.dist;
    case StmtKind::Observe:
    case StmtKind::While:
    case StmtKind::IfGuard: {
      if (a.pred.conjuncts.size() != b.pred.conjuncts.size()) return false;
      for (size_t i = 0; i < a.pred.conjuncts.size(); ++i) {
        const auto &x = a.pred.conjuncts[i], &y = b.pred.conjuncts[i];
        if (x.sense != y.sense || x.constant != y.constant || x.coeffs != y.coeffs) return false;
      }
      if (a.kind == StmtKind::While && a.bound_annotation != b.bound_annotation) return false;
      return ast_equal(a.then_branch, b.then_branch) && ast_equal(a.else_branch, b.else_branch);
    }
    case StmtKind::Score: return a.score_expr == b.score_expr;
    case StmtKind::Skip: return true;
    case StmtKind::GoTo: return a.target == b.target;
    case StmtKind::IfProb: {
      if (a.arms.size() != b.arms.size()) return false;
      for (size_t i = 0; i < a.arms.size(); ++i) {
        if (a.arms[i].prob != b.arms[i].prob) return false;
        if (!ast_equal(a.arms[i].body, b.arms[i].body)) return false;
      }
      return ast_equal(a.else_branch, b.else_branch);
    }
  }
  return false;
}

inline bool ast_equal(const StmtSeq& a, const StmtSeq& b) {
  auto is_skip = [](const Stmt& s) { return s.kind == StmtKind::Skip && !s.label; };
  size_t i = 0, j = 0;
  while (true) {
    while (i < a.size() && is_skip(a[i])) ++i;
    while (j < b.size() && is_skip(b[j])) ++j;
    if (i == a.size() || j == b.size()) return i == a.size() && j == b.size();
    if (!ast_equal(a[i], b[j])) return false;
    ++i;
    ++j;
  }
}

inline bool ast_equal(const ProgramAst& a, const ProgramAst& b) {
  return a.vars == b.vars && a.init_values == b.init_values && a.outputs == b.outputs &&
         ast_equal(a.body, b.body);
}

}  // namespace ppeq
