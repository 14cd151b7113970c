#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ppeq/desugar.hpp"
#include "ppeq/parser.hpp"
#include "ppeq/pcfg.hpp"
#include "ppeq/printer.hpp"

using namespace ppeq;

TEST(Parser, RunningExampleShape) {
  ProgramAst ast = parse_program(fixtures::running_example(1000, 2, 2));
  EXPECT_EQ(ast.vars, (std::vector<std::string>{"x", "y", "c", "r"}));
  EXPECT_EQ(ast.outputs.size(), 2u);
  EXPECT_EQ(ast.vars[ast.outputs[0]], "x");
  EXPECT_EQ(ast.vars[ast.outputs[1]], "y");
  ASSERT_EQ(ast.body.size(), 2u);  // while, score
  EXPECT_EQ(ast.body[0].kind, StmtKind::While);
  EXPECT_EQ(*ast.body[0].label, "l1");
  EXPECT_EQ(ast.body[1].kind, StmtKind::Score);
  // one prob branch inside the loop
  const Stmt& loop = ast.body[0];
  bool saw_prob = false, saw_score = false;
  for (auto& st : loop.then_branch)
    if (st.kind == StmtKind::IfProb) saw_prob = true;
  for (auto& st : ast.body)
    if (st.kind == StmtKind::Score) saw_score = true;
  EXPECT_TRUE(saw_prob);
  EXPECT_TRUE(saw_score);
}

TEST(Parser, MinimalProgram) {
  ProgramAst ast = parse_program("x := 0\nreturn(x)\n");
  EXPECT_EQ(ast.vars.size(), 1u);
  EXPECT_TRUE(ast.body.empty() ||
              (ast.body.size() == 1 && ast.body[0].kind == StmtKind::Skip));
  EXPECT_EQ(ast.outputs, (std::vector<size_t>{0}));
}

TEST(Parser, UndeclaredVariable) {
  try {
    parse_program("x := 0\ny := x * x * x\nreturn(x)\n");
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("y"), std::string::npos);
  }
}

TEST(Parser, RationalLiteralsStayExact) {
  ProgramAst ast = parse_program("x := 0\nx := 0.1 + 1/3\nreturn(x)\n");
  ASSERT_EQ(ast.body.size(), 1u);
  EXPECT_EQ(ast.body[0].rhs.constant_value(), rat(1, 10) + rat(1, 3));
}

TEST(Parser, RejectsUnboundedDistributions) {
  EXPECT_THROW(parse_program("x := 0\nx := sample(normal(0, 1))\nreturn(x)\n"),
               UnsupportedDistribution);
}

TEST(Parser, RejectsNonlinearGuards) {
  EXPECT_THROW(parse_program("x := 0\nif x * x <= 1:\n    x := 1\nreturn(x)\n"), ShapeError);
}

TEST(Parser, RejectsNonPolynomialExpressions) {
  EXPECT_THROW(parse_program("x := 1\ny := 0\ny := 1 / x\nreturn(y)\n"), ShapeError);
}

TEST(Parser, GotoResolution) {
  EXPECT_THROW(parse_program("x := 0\ngo-to nowhere\nreturn(x)\n"), ShapeError);
  ProgramAst ok = parse_program("x := 0\nhead: x := x + 1\nif x <= 0:\n    go-to head\nreturn(x)\n");
  EXPECT_EQ(ok.body.size(), 2u);
}

TEST(Printer, RoundTripIdentity) {
  for (const std::string& src : {
           fixtures::running_example(1000, 2, 2),
           fixtures::running_example_discrete(10, 0, 2),
           fixtures::observe_example(),
           fixtures::score_example(),
           std::string("x := 0\nreturn(x)\n"),
           std::string("a, b := 1/2, -3\nif a <= b and a >= 0:\n    a := a * b + b ^ 2\nelse:\n"
                       "    skip\nreturn(a, b)\n"),
       }) {
    ProgramAst ast = parse_program(src);
    std::string printed = print_program(ast);
    ProgramAst reparsed = parse_program(printed);
    EXPECT_TRUE(ast_equal(ast, reparsed)) << "round trip failed for:\n"
                                          << src << "\nprinted:\n"
                                          << printed;
    EXPECT_EQ(printed, print_program(reparsed));
  }
}

TEST(Desugar, BinaryChainsUnchanged) {
  ProgramAst ast = parse_program(fixtures::running_example(1000, 2, 2));
  ProgramAst d = desugar_prob_branch(ast);
  EXPECT_TRUE(ast_equal(ast, d));
}

TEST(Desugar, NoProbBranchIdentity) {
  ProgramAst ast = parse_program("x := 0\nx := x + 1\nreturn(x)\n");
  EXPECT_TRUE(ast_equal(ast, desugar_prob_branch(ast)));
}

TEST(Desugar, ChainResiduals) {
  // if prob(1/4) A elif prob(1/4) B else C: conditional residual 1/3
  std::string src =
      "a := 0\n"
      "if prob(1/4):\n"
      "    a := 1\n"
      "elif prob(1/4):\n"
      "    a := 2\n"
      "else:\n"
      "    a := 3\n"
      "return(a)\n";
  ProgramAst d = desugar_prob_branch(parse_program(src));
  ASSERT_EQ(d.body.size(), 1u);
  const Stmt& outer = d.body[0];
  ASSERT_EQ(outer.arms.size(), 1u);
  EXPECT_EQ(outer.arms[0].prob.constant_value(), rat(1, 4));
  ASSERT_EQ(outer.else_branch.size(), 1u);
  const Stmt& inner = outer.else_branch[0];
  ASSERT_EQ(inner.kind, StmtKind::IfProb);
  ASSERT_EQ(inner.arms.size(), 1u);
  EXPECT_EQ(inner.arms[0].prob.constant_value(), rat(1, 3));
}

TEST(Pcfg, RunningExampleStructure) {
  ProgramAst ast = desugar_prob_branch(parse_program(fixtures::running_example(1000, 2, 2)));
  Pcfg cfg = build_pcfg(ast);
  // user-labeled locations survive compaction
  for (const char* name : {"in", "l1", "l2", "l3", "l4", "l5", "l6", "l7", "out"})
    EXPECT_TRUE(cfg.loc_index(name)) << name;
  // a probabilistic branch leaves l2
  auto l2 = *cfg.loc_index("l2");
  bool prob_at_l2 = false;
  for (size_t ti : cfg.outgoing(l2))
    if (cfg.transitions[ti].kind == Transition::Kind::ProbBranch) prob_at_l2 = true;
  EXPECT_TRUE(prob_at_l2);
  // the score weight sits on the transition out of l7
  auto l7 = *cfg.loc_index("l7");
  bool score_at_l7 = false;
  for (size_t ti : cfg.outgoing(l7))
    if (cfg.transitions[ti].weight.kind == WeightSpec::Kind::Score) score_at_l7 = true;
  EXPECT_TRUE(score_at_l7);
  EXPECT_FALSE(cfg.conditioning_free);
  // termination bound covers 1000 iterations of the loop body
  ASSERT_TRUE(cfg.termination_bound);
  EXPECT_GE(*cfg.termination_bound, 1000u * 4u);
  EXPECT_LE(*cfg.termination_bound, 1000u * 12u + 16u);
}

TEST(Pcfg, StraightLineProgram) {
  ProgramAst ast = parse_program("x := 0\nreturn(x)\n");
  Pcfg cfg = build_pcfg(ast);
  EXPECT_EQ(cfg.nlocs(), 2u);  // in, out
  // one transition in->out plus the terminal self-loop
  ASSERT_EQ(cfg.transitions.size(), 2u);
  EXPECT_TRUE(cfg.conditioning_free);
  for (auto& t : cfg.transitions) EXPECT_EQ(t.weight.kind, WeightSpec::Kind::One);
}

TEST(Pcfg, TerminalSelfLoop) {
  Pcfg cfg = build_pcfg(parse_program("x := 0\nreturn(x)\n"));
  bool self_loop = false;
  for (size_t ti : cfg.outgoing(cfg.out_loc)) {
    const Transition& t = cfg.transitions[ti];
    if (t.kind == Transition::Kind::Det && t.dst == cfg.out_loc && t.updates.empty() &&
        t.weight.kind == WeightSpec::Kind::One)
      self_loop = true;
  }
  EXPECT_TRUE(self_loop);
}

TEST(Pcfg, MissingLoopBound) {
  // no counter pattern and no annotation
  std::string src = "x := 1\nwhile x >= 1:\n    x := x + 1\nreturn(x)\n";
  EXPECT_THROW(build_pcfg(parse_program(src)), BoundError);
}

TEST(Pcfg, BoundAnnotation) {
  std::string src = "x := 1\nwhile x >= 1: @bound 5\n    x := x - 1\nreturn(x)\n";
  Pcfg cfg = build_pcfg(parse_program(src));
  ASSERT_TRUE(cfg.termination_bound);
  EXPECT_LE(*cfg.termination_bound, 5u * 4u + 8u);
}

TEST(Pcfg, DotDump) {
  Pcfg cfg = build_pcfg(parse_program(fixtures::observe_example()));
  std::string dot = cfg.dot();
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("w=["), std::string::npos);  // observe weight rendered
}
