#pragma once

// Test-only reference enumerator: walks every run of a finite discrete pCFG
// and yields each visited state. Written independently of the library's
// exact_enumerate so the two can cross-check each other.

#include <functional>
#include <set>
#include <stdexcept>
#include <vector>

#include "ppeq/oracle.hpp"
#include "ppeq/pcfg.hpp"

namespace testenum {

struct StateVisit {
  size_t loc;
  std::vector<ppeq::Rational> x;
  unsigned long step;
};

/// Calls visit for every reachable state of every run (finite programs only).
/// Verifies the exactly-one-enabled-transition property along the way.
inline void enumerate_states(const ppeq::Pcfg& cfg,
                             const std::function<void(const StateVisit&)>& visit,
                             size_t node_cap = 2000000) {
  struct Node {
    size_t loc;
    std::vector<ppeq::Rational> x;
    unsigned long step;
  };
  std::vector<Node> stack{{cfg.init_loc, cfg.init_valuation, 0}};
  size_t count = 0;
  while (!stack.empty()) {
    Node n = std::move(stack.back());
    stack.pop_back();
    if (++count > node_cap) throw std::runtime_error("state enumeration cap exceeded");
    visit({n.loc, n.x, n.step});
    if (n.loc == cfg.out_loc) continue;
    const ppeq::Transition* enabled = nullptr;
    int enabled_count = 0;
    for (size_t ti : cfg.outgoing(n.loc)) {
      const ppeq::Transition& t = cfg.transitions[ti];
      if (t.kind == ppeq::Transition::Kind::ProbBranch || t.guard.holds_at(n.x)) {
        ++enabled_count;
        enabled = &t;
      }
    }
    if (enabled_count != 1)
      throw std::runtime_error("expected exactly one enabled transition, got " +
                               std::to_string(enabled_count) + " at " + cfg.loc_names[n.loc]);
    const ppeq::Transition& t = *enabled;
    auto push = [&](size_t dst, const ppeq::UpdateMap& updates) {
      // sampled update: branch over the support
      const ppeq::DistributionSpec* sampled = nullptr;
      size_t sampled_var = 0;
      for (auto& [v, up] : updates)
        if (up.kind == ppeq::Update::Kind::Sample) {
          sampled = &*up.dist;
          sampled_var = v;
        }
      Node next{dst, n.x, n.step + 1};
      for (auto& [v, up] : updates)
        if (up.kind == ppeq::Update::Kind::Poly) next.x[v] = up.poly.eval(n.x);
      if (!sampled) {
        stack.push_back(std::move(next));
        return;
      }
      for (auto& [value, prob] : ppeq::detail::discrete_support(*sampled)) {
        Node branch = next;
        branch.x[sampled_var] = value;
        stack.push_back(std::move(branch));
      }
    };
    if (t.kind == ppeq::Transition::Kind::ProbBranch) {
      ppeq::Rational p = t.prob.eval(n.x);
      if (t.is_restart) {
        // one attempt only: take the terminal arm when possible
        if (p != 0) push(t.dst_true, t.updates_true);
        continue;
      }
      if (p != 0) push(t.dst_true, t.updates_true);
      if (p != 1) push(t.dst_false, t.updates_false);
      continue;
    }
    push(t.dst, t.updates);
  }
}

}  // namespace testenum
