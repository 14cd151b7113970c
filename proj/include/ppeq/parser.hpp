#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "ppeq/ast.hpp"

namespace ppeq {

namespace detail {

enum class Tok { Ident, Number, Op, End };

struct Token {
  Tok kind;
  std::string text;
  int col;
};

struct Line {
  int indent;
  int number;
  std::vector<Token> toks;
};

inline bool ident_start(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum((unsigned char)c) || c == '_'; }

inline std::vector<Line> tokenize(const std::string& source) {
  std::vector<Line> lines;
  size_t pos = 0;
  int line_no = 0;
  while (pos <= source.size()) {
    size_t eol = source.find('\n', pos);
    std::string raw = source.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? source.size() + 1 : eol + 1;
    ++line_no;
    if (auto h = raw.find('#'); h != std::string::npos) raw = raw.substr(0, h);
    size_t i = 0;
    int indent = 0;
    while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t')) {
      indent += raw[i] == '\t' ? 4 : 1;
      ++i;
    }
    Line line{indent, line_no, {}};
    while (i < raw.size()) {
      char c = raw[i];
      int col = static_cast<int>(i) + 1;
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
        continue;
      }
      if (ident_start(c)) {
        size_t j = i;
        while (j < raw.size() && ident_char(raw[j])) ++j;
        std::string name = raw.substr(i, j - i);
        // "go-to" reads as one keyword
        if (name == "go" && raw.compare(j, 3, "-to") == 0 &&
            (j + 3 >= raw.size() || !ident_char(raw[j + 3]))) {
          name = "goto";
          j += 3;
        }
        line.toks.push_back({Tok::Ident, name, col});
        i = j;
        continue;
      }
      if (std::isdigit((unsigned char)c) || (c == '.' && i + 1 < raw.size() &&
                                             std::isdigit((unsigned char)raw[i + 1]))) {
        size_t j = i;
        while (j < raw.size() &&
               (std::isdigit((unsigned char)raw[j]) || raw[j] == '.' || raw[j] == 'e' ||
                raw[j] == 'E' ||
                ((raw[j] == '+' || raw[j] == '-') && j > i &&
                 (raw[j - 1] == 'e' || raw[j - 1] == 'E'))))
          ++j;
        line.toks.push_back({Tok::Number, raw.substr(i, j - i), col});
        i = j;
        continue;
      }
      auto two = raw.substr(i, 2);
      if (two == ":=" || two == "<=" || two == ">=" || two == "==" || two == "&&" ||
          two == "!=") {
        line.toks.push_back({Tok::Op, two, col});
        i += 2;
        continue;
      }
      std::string one(1, c);
      if (std::string("+-*/^()<>=:,@").find(c) != std::string::npos) {
        line.toks.push_back({Tok::Op, one, col});
        ++i;
        continue;
      }
      throw SyntaxError("unexpected character '" + one + "'", line_no, col);
    }
    if (!line.toks.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

class Parser {
 public:
  explicit Parser(const std::string& source) : lines_(tokenize(source)) {}

  ProgramAst parse() {
    ProgramAst ast;
    parse_decls(ast);
    ast.body = parse_block(ast, 0);
    if (!saw_return_) throw ShapeError("program has no return(...) statement");
    if (cursor_ < lines_.size())
      throw SyntaxError("statements after return(...)", lines_[cursor_].number, 1);
    check_labels(ast.body);
    return ast;
  }

  /// Entry point for parsing a standalone expression against a variable set.
  PolyExpr expression(const ProgramAst& ast, const Line& line, size_t& t) {
    return parse_expr(ast, line, t);
  }

 private:
  std::vector<Line> lines_;
  size_t cursor_ = 0;
  bool saw_return_ = false;
  ProgramAst* ast_ = nullptr;
  std::vector<std::string> labels_seen_;
  std::vector<std::pair<std::string, int>> goto_targets_;

  [[noreturn]] void err(const Line& line, const Token* tok, const std::string& msg) const {
    throw SyntaxError(msg, line.number, tok ? tok->col : 1);
  }

  // ---- declarations -------------------------------------------------------

  // Leading constant (multi-)assignments to fresh names declare variables.
  void parse_decls(ProgramAst& ast) {
    while (cursor_ < lines_.size()) {
      const Line& line = lines_[cursor_];
      if (line.indent != 0) break;
      std::vector<std::string> names;
      std::vector<Rational> values;
      if (!try_parse_const_decl(ast, line, names, values)) break;
      for (size_t i = 0; i < names.size(); ++i) {
        if (ast.var_index(names[i]))
          throw ShapeError("variable " + names[i] + " declared twice", line.number);
        ast.vars.push_back(names[i]);
        ast.init_values.push_back(values[i]);
      }
      ++cursor_;
    }
    if (ast.vars.empty()) throw ShapeError("program declares no variables");
  }

  bool try_parse_const_decl(const ProgramAst& ast, const Line& line,
                            std::vector<std::string>& names, std::vector<Rational>& values) {
    size_t t = 0;
    auto& toks = line.toks;
    while (t < toks.size() && toks[t].kind == Tok::Ident) {
      if (is_keyword(toks[t].text)) return false;
      names.push_back(toks[t].text);
      ++t;
      if (t < toks.size() && toks[t].kind == Tok::Op && toks[t].text == ",") {
        ++t;
        continue;
      }
      break;
    }
    if (names.empty() || t >= toks.size() || toks[t].kind != Tok::Op ||
        (toks[t].text != ":=" && toks[t].text != "="))
      return false;
    if (ast.var_index(names[0])) return false;  // re-assignment: body begins
    ++t;
    // constant expressions, one shared or one per name
    try {
      while (t < toks.size()) {
        values.push_back(parse_const_expr(line, t));
        if (t < toks.size() && toks[t].kind == Tok::Op && toks[t].text == ",") {
          ++t;
          continue;
        }
        break;
      }
    } catch (const ShapeError&) {
      return false;  // not a constant initializer; body begins here
    }
    if (t != toks.size()) err(line, &toks[t], "trailing tokens in declaration");
    if (values.size() == 1 && names.size() > 1) values.assign(names.size(), values[0]);
    if (values.size() != names.size())
      throw ShapeError("declaration arity mismatch", line.number);
    return true;
  }

  Rational parse_const_expr(const Line& line, size_t& t) {
    PolyExpr p = parse_expr_named(line, t, nullptr);
    if (!p.is_constant()) err(line, nullptr, "expected a constant expression");
    return p.constant_value();
  }

  static bool is_keyword(const std::string& s) {
    static const char* kws[] = {"if",    "elif",  "else",   "while", "prob", "observe",
                                "score", "sample", "return", "skip",  "goto", "and",
                                "true",  "false"};
    for (auto* k : kws)
      if (s == k) return true;
    return false;
  }

  // ---- statements ---------------------------------------------------------

  StmtSeq parse_block(ProgramAst& ast, int indent) {
    StmtSeq seq;
    while (cursor_ < lines_.size()) {
      const Line& line = lines_[cursor_];
      if (line.indent < indent) break;
      if (line.indent > indent)
        err(line, &line.toks[0], "unexpected indentation");
      if (saw_return_) err(line, &line.toks[0], "statements after return(...)");
      bool had_return = saw_return_;
      seq.push_back(parse_stmt(ast, indent));
      if (!had_return && saw_return_) seq.pop_back();  // return is not a body statement
      if (!pending_.empty()) {
        for (auto& extra : pending_) seq.push_back(std::move(extra));
        pending_.clear();
      }
      if (saw_return_) break;
    }
    return seq;
  }

  Stmt parse_stmt(ProgramAst& ast, int indent) {
    const Line line = lines_[cursor_];
    size_t t = 0;
    Stmt st;
    st.line = line.number;
    // optional label prefix: ident ':' stmt...
    if (line.toks.size() >= 2 && line.toks[0].kind == Tok::Ident &&
        !is_keyword(line.toks[0].text) && line.toks[1].kind == Tok::Op &&
        line.toks[1].text == ":" && line.toks.size() > 2) {
      st.label = line.toks[0].text;
      labels_seen_.push_back(*st.label);
      t = 2;
    }
    auto& toks = line.toks;
    if (t >= toks.size()) err(line, nullptr, "empty statement");
    const Token& head = toks[t];

    if (head.kind == Tok::Ident && head.text == "return") {
      ++cursor_;
      parse_return(ast, line, t + 1);
      st.kind = StmtKind::Skip;
      saw_return_ = true;
      return st;
    }
    if (head.kind == Tok::Ident && head.text == "skip") {
      ++cursor_;
      st.kind = StmtKind::Skip;
      return st;
    }
    if (head.kind == Tok::Ident && head.text == "goto") {
      ++cursor_;
      if (t + 1 >= toks.size() || toks[t + 1].kind != Tok::Ident)
        err(line, &head, "goto needs a label");
      st.kind = StmtKind::GoTo;
      st.target = toks[t + 1].text;
      goto_targets_.emplace_back(st.target, line.number);
      return st;
    }
    if (head.kind == Tok::Ident && head.text == "observe") {
      ++cursor_;
      size_t u = t + 1;
      expect_op(line, u, "(");
      st.kind = StmtKind::Observe;
      st.pred = parse_pred(ast, line, u);
      expect_op(line, u, ")");
      expect_end(line, u);
      return st;
    }
    if (head.kind == Tok::Ident && head.text == "score") {
      ++cursor_;
      size_t u = t + 1;
      expect_op(line, u, "(");
      st.kind = StmtKind::Score;
      st.score_expr = parse_expr(ast, line, u);
      expect_op(line, u, ")");
      expect_end(line, u);
      return st;
    }
    if (head.kind == Tok::Ident && head.text == "while") {
      ++cursor_;
      size_t u = t + 1;
      st.kind = StmtKind::While;
      st.pred = parse_pred(ast, line, u);
      expect_op(line, u, ":");
      if (u + 1 < toks.size() && toks[u].kind == Tok::Op && toks[u].text == "@") {
        if (toks[u + 1].kind != Tok::Ident || toks[u + 1].text != "bound")
          err(line, &toks[u], "expected @bound");
        u += 2;
        Rational b = parse_const_expr(line, u);
        if (!is_integer(b) || b < 1) err(line, nullptr, "@bound must be a positive integer");
        st.bound_annotation = to_long(b);
      }
      expect_end(line, u);
      st.then_branch = parse_block(ast, body_indent(indent, line));
      return st;
    }
    if (head.kind == Tok::Ident && head.text == "if") {
      Stmt chain = parse_if_chain(ast, line, t, indent);
      chain.label = st.label;
      return chain;
    }
    if (head.kind == Tok::Ident && (head.text == "else" || head.text == "elif"))
      err(line, &head, head.text + " without a matching if");

    // assignment: ident [, ident]* (:=|=) rhs
    if (head.kind == Tok::Ident) {
      Stmt a = parse_assign(ast, line, t);
      a.label = st.label;
      return a;
    }
    err(line, &head, "cannot parse statement");
  }

  int body_indent(int header_indent, const Line& header) {
    if (cursor_ >= lines_.size() || lines_[cursor_].indent <= header_indent)
      err(header, nullptr, "expected an indented block");
    return lines_[cursor_].indent;
  }

  Stmt parse_if_chain(ProgramAst& ast, const Line& first, size_t t, int indent) {
    Stmt st;
    st.line = first.number;
    // retain any label already recorded by caller
    bool prob_chain = first.toks.size() > t + 1 && first.toks[t + 1].kind == Tok::Ident &&
                      first.toks[t + 1].text == "prob";
    if (prob_chain) {
      st.kind = StmtKind::IfProb;
      bool done = false;
      bool expect_if = true;
      while (!done && cursor_ < lines_.size()) {
        const Line line = lines_[cursor_];
        if (line.indent != indent) break;
        size_t u = expect_if ? t : 0;  // first header may carry a label prefix
        const std::string& kw = line.toks[u].text;
        if (expect_if ? kw != "if" : kw != "elif") break;
        expect_if = false;
        ++u;
        if (u >= line.toks.size() || line.toks[u].text != "prob")
          err(line, nullptr, "mixed prob / guard chain");
        ++u;
        expect_op(line, u, "(");
        PolyExpr p = parse_expr(ast, line, u);
        if (p.is_constant() && (p.constant_value() < 0 || p.constant_value() > 1))
          err(line, nullptr, "prob(...) must lie in [0,1]");
        expect_op(line, u, ")");
        expect_op(line, u, ":");
        expect_end(line, u);
        ++cursor_;
        ProbArm arm;
        arm.prob = p;
        arm.body = parse_block(ast, body_indent(indent, line));
        st.arms.push_back(std::move(arm));
        done = cursor_ >= lines_.size() || lines_[cursor_].indent != indent ||
               lines_[cursor_].toks[0].text != "elif";
      }
      if (st.arms.size() > 1) {
        Rational total = 0;
        for (auto& a : st.arms) {
          if (!a.prob.is_constant())
            throw ShapeError("prob chains require constant probabilities", first.number);
          total += a.prob.constant_value();
        }
        if (total > 1) throw ShapeError("prob chain probabilities exceed 1", first.number);
      }
      if (cursor_ < lines_.size() && lines_[cursor_].indent == indent &&
          lines_[cursor_].toks[0].text == "else") {
        const Line line = lines_[cursor_];
        size_t u = 1;
        expect_op(line, u, ":");
        expect_end(line, u);
        ++cursor_;
        st.else_branch = parse_block(ast, body_indent(indent, line));
      }
      return st;
    }
    // guarded if
    st.kind = StmtKind::IfGuard;
    const Line line = lines_[cursor_];
    size_t u = t + 1;
    st.pred = parse_pred(ast, line, u);
    expect_op(line, u, ":");
    expect_end(line, u);
    ++cursor_;
    st.then_branch = parse_block(ast, body_indent(indent, line));
    if (cursor_ < lines_.size() && lines_[cursor_].indent == indent) {
      const std::string& kw = lines_[cursor_].toks[0].text;
      if (kw == "else") {
        const Line el = lines_[cursor_];
        size_t v = 1;
        expect_op(el, v, ":");
        expect_end(el, v);
        ++cursor_;
        st.else_branch = parse_block(ast, body_indent(indent, el));
      } else if (kw == "elif") {
        // rewrite "elif" into a nested if in the else branch
        Line& mut = lines_[cursor_];
        mut.toks[0].text = "if";
        st.else_branch.push_back(parse_stmt(ast, indent));
      }
    }
    return st;
  }

  Stmt parse_assign(ProgramAst& ast, const Line& line, size_t t) {
    auto& toks = line.toks;
    std::vector<size_t> targets;
    while (t < toks.size() && toks[t].kind == Tok::Ident) {
      targets.push_back(require_var(ast, line, toks[t]));
      ++t;
      if (t < toks.size() && toks[t].kind == Tok::Op && toks[t].text == ",") {
        ++t;
        continue;
      }
      break;
    }
    if (t >= toks.size() || toks[t].kind != Tok::Op || (toks[t].text != ":=" && toks[t].text != "="))
      err(line, t < toks.size() ? &toks[t] : nullptr, "expected := in assignment");
    ++t;
    ++cursor_;
    // sample assignment
    if (t < toks.size() && toks[t].kind == Tok::Ident && toks[t].text == "sample") {
      if (targets.size() != 1) err(line, &toks[t], "sample assigns a single variable");
      size_t u = t + 1;
      expect_op(line, u, "(");
      DistributionSpec d = parse_dist(line, u);
      expect_op(line, u, ")");
      expect_end(line, u);
      Stmt st;
      st.kind = StmtKind::SampleAssign;
      st.line = line.number;
      st.var = targets[0];
      st.dist = d;
      return st;
    }
    std::vector<PolyExpr> values;
    while (t < toks.size()) {
      values.push_back(parse_expr(ast, line, t));
      if (t < toks.size() && toks[t].kind == Tok::Op && toks[t].text == ",") {
        ++t;
        continue;
      }
      break;
    }
    if (t != toks.size()) err(line, &toks[t], "trailing tokens in assignment");
    if (values.size() == 1 && targets.size() > 1) values.assign(targets.size(), values[0]);
    if (values.size() != targets.size()) throw ShapeError("assignment arity mismatch", line.number);
    if (targets.size() == 1) {
      Stmt st;
      st.kind = StmtKind::Assign;
      st.line = line.number;
      st.var = targets[0];
      st.rhs = values[0];
      return st;
    }
    // multi-assign of constants only (simultaneous general assignment is not needed)
    for (auto& v : values)
      if (!v.is_constant())
        throw ShapeError("multi-assignment requires constant right-hand sides", line.number);
    Stmt st;
    st.kind = StmtKind::Assign;
    st.line = line.number;
    st.var = targets[0];
    st.rhs = values[0];
    // chain the remaining ones as immediately-following statements
    pending_.clear();
    for (size_t i = 1; i < targets.size(); ++i) {
      Stmt extra;
      extra.kind = StmtKind::Assign;
      extra.line = line.number;
      extra.var = targets[i];
      extra.rhs = values[i];
      pending_.push_back(std::move(extra));
    }
    return st;
  }

  void parse_return(ProgramAst& ast, const Line& line, size_t t) {
    auto& toks = line.toks;
    expect_op(line, t, "(");
    while (t < toks.size() && toks[t].kind == Tok::Ident) {
      ast.outputs.push_back(require_var(ast, line, toks[t]));
      ++t;
      if (t < toks.size() && toks[t].kind == Tok::Op && toks[t].text == ",") {
        ++t;
        continue;
      }
      break;
    }
    expect_op(line, t, ")");
    expect_end(line, t);
    if (ast.outputs.empty()) throw ShapeError("return(...) lists no variables", line.number);
  }

  DistributionSpec parse_dist(const Line& line, size_t& t) {
    auto& toks = line.toks;
    if (t >= toks.size() || toks[t].kind != Tok::Ident)
      err(line, nullptr, "expected a distribution");
    std::string name = toks[t].text;
    ++t;
    expect_op(line, t, "(");
    std::vector<Rational> params;
    while (t < toks.size() && !(toks[t].kind == Tok::Op && toks[t].text == ")")) {
      params.push_back(parse_const_expr(line, t));
      if (t < toks.size() && toks[t].kind == Tok::Op && toks[t].text == ",") ++t;
    }
    expect_op(line, t, ")");
    if (name == "bernoulli")
      return DistributionSpec::validated(DistKind::Bernoulli, params, line.number);
    if (name == "uniform")
      return DistributionSpec::validated(DistKind::Uniform, params, line.number);
    if (name == "duniform")
      return DistributionSpec::validated(DistKind::DiscreteUniform, params, line.number);
    if (name == "beta") return DistributionSpec::validated(DistKind::Beta, params, line.number);
    if (name == "point" || name == "delta")
      return DistributionSpec::validated(DistKind::PointMass, params, line.number);
    if (name == "normal" || name == "gaussian" || name == "exponential" || name == "geometric" ||
        name == "poisson")
      throw UnsupportedDistribution("distribution " + name +
                                    " has unbounded support and is not supported");
    throw SyntaxError("unknown distribution " + name, line.number, 1);
  }

  // ---- expressions --------------------------------------------------------

  size_t require_var(const ProgramAst& ast, const Line& line, const Token& tok) {
    auto idx = ast.var_index(tok.text);
    if (!idx) throw ShapeError("undeclared variable " + tok.text, line.number);
    return *idx;
  }

  PolyExpr parse_expr(const ProgramAst& ast, const Line& line, size_t& t) {
    return parse_expr_named(line, t, &ast);
  }

  PolyExpr parse_expr_named(const Line& line, size_t& t, const ProgramAst* ast) {
    size_t n = ast ? ast->nvars() : 0;
    PolyExpr acc = parse_term(line, t, ast);
    auto& toks = line.toks;
    while (t < toks.size() && toks[t].kind == Tok::Op &&
           (toks[t].text == "+" || toks[t].text == "-")) {
      bool plus = toks[t].text == "+";
      ++t;
      PolyExpr rhs = parse_term(line, t, ast);
      acc = plus ? acc + rhs : acc - rhs;
    }
    (void)n;
    return acc;
  }

  PolyExpr parse_term(const Line& line, size_t& t, const ProgramAst* ast) {
    PolyExpr acc = parse_factor(line, t, ast);
    auto& toks = line.toks;
    while (t < toks.size() && toks[t].kind == Tok::Op &&
           (toks[t].text == "*" || toks[t].text == "/")) {
      bool mul = toks[t].text == "*";
      const Token& op = toks[t];
      ++t;
      PolyExpr rhs = parse_factor(line, t, ast);
      if (mul) {
        acc = acc * rhs;
      } else {
        if (!rhs.is_constant() || rhs.constant_value() == 0)
          throw ShapeError("non-polynomial expression: division by a non-constant", line.number);
        (void)op;
        acc = acc.scaled(Rational(1) / rhs.constant_value());
      }
    }
    return acc;
  }

  PolyExpr parse_factor(const Line& line, size_t& t, const ProgramAst* ast) {
    auto& toks = line.toks;
    bool neg = false;
    while (t < toks.size() && toks[t].kind == Tok::Op && toks[t].text == "-") {
      neg = !neg;
      ++t;
    }
    PolyExpr base = parse_atom(line, t, ast);
    if (t < toks.size() && toks[t].kind == Tok::Op && toks[t].text == "^") {
      ++t;
      PolyExpr e = parse_atom(line, t, ast);
      if (!e.is_constant() || !is_integer(e.constant_value()) || e.constant_value() < 0)
        throw ShapeError("exponent must be a non-negative integer", line.number);
      base = base.pow(static_cast<uint32_t>(to_long(e.constant_value())));
    }
    return neg ? -base : base;
  }

  PolyExpr parse_atom(const Line& line, size_t& t, const ProgramAst* ast) {
    auto& toks = line.toks;
    if (t >= toks.size()) err(line, nullptr, "unexpected end of expression");
    const Token& tok = toks[t];
    if (tok.kind == Tok::Number) {
      auto q = parse_rational(tok.text);
      if (!q) err(line, &tok, "bad numeric literal " + tok.text);
      ++t;
      size_t n = ast ? ast->nvars() : 0;
      return PolyExpr::constant(n, *q);
    }
    if (tok.kind == Tok::Ident && !is_keyword(tok.text)) {
      if (!ast) throw ShapeError("expected a constant, found variable " + tok.text, line.number);
      size_t v = require_var(*ast, line, tok);
      ++t;
      return PolyExpr::variable(ast->nvars(), v);
    }
    if (tok.kind == Tok::Op && tok.text == "(") {
      ++t;
      PolyExpr inner = parse_expr_named(line, t, ast);
      expect_op(line, t, ")");
      return inner;
    }
    err(line, &tok, "cannot parse expression at '" + tok.text + "'");
  }

  LinearPredicate parse_pred(const ProgramAst& ast, const Line& line, size_t& t) {
    LinearPredicate pred;
    auto& toks = line.toks;
    while (true) {
      if (t < toks.size() && toks[t].kind == Tok::Ident && toks[t].text == "true") {
        ++t;
      } else {
        pred.conjuncts.push_back(parse_cmp(ast, line, t));
      }
      if (t < toks.size() &&
          ((toks[t].kind == Tok::Ident && toks[t].text == "and") ||
           (toks[t].kind == Tok::Op && toks[t].text == "&&"))) {
        ++t;
        continue;
      }
      break;
    }
    return pred;
  }

  AffineConstraint parse_cmp(const ProgramAst& ast, const Line& line, size_t& t) {
    auto& toks = line.toks;
    PolyExpr lhs = parse_expr(ast, line, t);
    if (t >= toks.size() || toks[t].kind != Tok::Op) err(line, nullptr, "expected a comparison");
    std::string op = toks[t].text;
    if (op != "<=" && op != "<" && op != ">=" && op != ">" && op != "==" && op != "=")
      err(line, &toks[t], "unsupported comparison " + op);
    ++t;
    PolyExpr rhs = parse_expr(ast, line, t);
    PolyExpr diff = (op == "<=" || op == "<") ? rhs - lhs : lhs - rhs;
    if (diff.degree() > 1)
      throw ShapeError("guards must be conjunctions of linear inequalities", line.number);
    AffineConstraint c;
    c.coeffs.assign(ast.nvars(), Rational(0));
    for (auto& [m, k] : diff.terms()) {
      if (mono_degree(m) == 0) {
        c.constant = k;
        continue;
      }
      for (size_t v = 0; v < ast.nvars(); ++v)
        if (m[v]) c.coeffs[v] = k;
    }
    c.sense = (op == "==" || op == "=") ? CmpSense::Eq
                                        : ((op == "<" || op == ">") ? CmpSense::Gt : CmpSense::Geq);
    return c;
  }

  // ---- helpers ------------------------------------------------------------

  void expect_op(const Line& line, size_t& t, const std::string& op) {
    if (t >= line.toks.size() || line.toks[t].kind != Tok::Op || line.toks[t].text != op)
      err(line, t < line.toks.size() ? &line.toks[t] : nullptr, "expected '" + op + "'");
    ++t;
  }

  void expect_end(const Line& line, size_t t) {
    if (t != line.toks.size()) err(line, &line.toks[t], "trailing tokens");
  }

  void check_labels(const StmtSeq&) {
    for (auto& [target, ln] : goto_targets_) {
      bool found = false;
      for (auto& l : labels_seen_)
        if (l == target) found = true;
      if (!found) throw ShapeError("goto target " + target + " is not a declared label", ln);
    }
  }

 public:
  std::vector<Stmt> pending_;  // extra statements from multi-assignment
};

}  // namespace detail

/// Parses DSL text into a typed AST. Throws SyntaxError / ShapeError /
/// UnsupportedDistribution with positions for diagnostics.
inline ProgramAst parse_program(const std::string& source) {
  detail::Parser p(source);
  return p.parse();
}

/// Parses one polynomial expression over a given variable list.
inline PolyExpr parse_expression_text(const std::string& text,
                                      const std::vector<std::string>& vars) {
  ProgramAst tiny;
  tiny.vars = vars;
  tiny.init_values.assign(vars.size(), Rational(0));
  auto lines = detail::tokenize(text);
  if (lines.size() != 1) throw ShapeError("expected a single expression: '" + text + "'");
  detail::Parser p("");
  size_t t = 0;
  PolyExpr e = p.expression(tiny, lines[0], t);
  if (t != lines[0].toks.size()) throw ShapeError("trailing tokens in expression: '" + text + "'");
  return e;
}

}  // namespace ppeq
