#pragma once

#include <string>

namespace fixtures {

/// The running-example pair: a bounded loop that either decrements x by a
/// beta-distributed value or increments y, then scores by y.
inline std::string running_example(int bound, int beta_a, int beta_b) {
  std::string k = std::to_string(bound - 1);
  return "x, y, c, r := 0\n"
         "l1: while c <= " + k + ":\n"
         "    l2: if prob(1/2):\n"
         "        l3: r := sample(beta(" + std::to_string(beta_a) + ", " +
         std::to_string(beta_b) + "))\n"
         "        l4: x := x - r\n"
         "    else:\n"
         "        l5: y := y + 1\n"
         "    l6: c := c + 1\n"
         "l7: score(y)\n"
         "return(x, y)\n";
}

/// Discrete variant of the running example (duniform instead of beta), fully
/// enumerable for exact-oracle cross-checks.
inline std::string running_example_discrete(int bound, int lo, int hi) {
  std::string k = std::to_string(bound - 1);
  return "x, y, c, r := 0\n"
         "l1: while c <= " + k + ":\n"
         "    l2: if prob(1/2):\n"
         "        l3: r := sample(duniform(" + std::to_string(lo) + ", " +
         std::to_string(hi) + "))\n"
         "        l4: x := x - r\n"
         "    else:\n"
         "        l5: y := y + 1\n"
         "    l6: c := c + 1\n"
         "l7: score(y)\n"
         "return(x, y)\n";
}

inline std::string bernoulli_program(const std::string& p) {
  return "x := 0\nx := sample(bernoulli(" + p + "))\nreturn(x)\n";
}

inline std::string observe_example() {
  return "x := 0\n"
         "x := sample(bernoulli(1/2))\n"
         "observe(x == 1)\n"
         "return(x)\n";
}

inline std::string score_example() {
  return "x := 0\n"
         "x := sample(bernoulli(1/2))\n"
         "score(1 + x)\n"
         "return(x)\n";
}

}  // namespace fixtures
