#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppeq/absint.hpp"
#include "ppeq/handelman.hpp"
#include "ppeq/parser.hpp"
#include "ppeq/pcfg.hpp"

namespace ppeq {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsoundInvariant : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-location linear invariant, plus a record of which locations span a
/// bounded polytope (the Handelman completeness precondition).
struct Invariant {
  std::vector<LinearPredicate> at;  // indexed by location
  std::vector<bool> bounded;        // all variables boxed at this location
  std::vector<bool> reachable;

  const LinearPredicate& of(size_t loc) const { return at[loc]; }
};

/// Per-(location, variable) interval bounds.
struct VarBounds {
  std::vector<std::vector<Interval>> at;  // [loc][var]

  const Interval& of(size_t loc, size_t var) const { return at[loc][var]; }
};

namespace detail {

/// Keeps only facts that are strictly tighter than what simpler dims imply.
inline LinearPredicate facts_from_state(const Pcfg& cfg, const absint::Analyzer& an,
                                        const absint::State& st) {
  LinearPredicate pred;
  size_t n = cfg.nvars();
  auto add_fact = [&](const absint::DimSpec& dim, const Rational& bound, bool is_lower) {
    AffineConstraint c;
    c.coeffs.assign(n, Rational(0));
    for (auto& [v, s] : dim.parts) c.coeffs[v] = is_lower ? Rational(s) : Rational(-s);
    c.constant = is_lower ? -bound : bound;
    c.sense = CmpSense::Geq;
    pred.conjuncts.push_back(std::move(c));
  };
  const auto& dims = an.dims();
  for (size_t d = 0; d < dims.size(); ++d) {
    const Interval& iv = st[d];
    if (iv.empty) continue;
    if (dims[d].parts.size() == 1) {
      if (iv.lo && iv.hi && *iv.lo == *iv.hi) {
        AffineConstraint c;
        c.coeffs.assign(n, Rational(0));
        c.coeffs[dims[d].parts[0].first] = 1;
        c.constant = -*iv.lo;
        c.sense = CmpSense::Eq;
        pred.conjuncts.push_back(std::move(c));
        continue;
      }
      if (iv.lo) add_fact(dims[d], *iv.lo, true);
      if (iv.hi) add_fact(dims[d], *iv.hi, false);
      continue;
    }
    // implied bounds from simpler dimensions: singles, and for triples also
    // every pair+single decomposition
    Interval implied = Interval::point(Rational(0));
    for (auto& [v, s] : dims[d].parts)
      implied = implied + st[an.base_dim(v)].scaled(Rational(s));
    if (dims[d].parts.size() == 3) {
      auto pair_interval = [&](std::pair<size_t, int> a,
                               std::pair<size_t, int> b) -> std::optional<Interval> {
        std::vector<std::pair<size_t, int>> want{a, b};
        std::sort(want.begin(), want.end());
        std::vector<std::pair<size_t, int>> neg{{a.first, -a.second}, {b.first, -b.second}};
        std::sort(neg.begin(), neg.end());
        for (size_t k = 0; k < dims.size(); ++k) {
          if (dims[k].parts == want) return st[k];
          if (dims[k].parts == neg) return -st[k];
        }
        return std::nullopt;
      };
      for (int leave = 0; leave < 3; ++leave) {
        auto [lv, ls] = dims[d].parts[static_cast<size_t>(leave)];
        std::vector<std::pair<size_t, int>> rest;
        for (int k = 0; k < 3; ++k)
          if (k != leave) rest.push_back(dims[d].parts[static_cast<size_t>(k)]);
        auto piv = pair_interval(rest[0], rest[1]);
        if (!piv) continue;
        implied = implied.meet(*piv + st[an.base_dim(lv)].scaled(Rational(ls)));
      }
    }
    bool tighter_lo = iv.lo && (!implied.lo || *iv.lo > *implied.lo);
    bool tighter_hi = iv.hi && (!implied.hi || *iv.hi < *implied.hi);
    if (tighter_lo && tighter_hi && *iv.lo == *iv.hi) {
      AffineConstraint c;
      c.coeffs.assign(n, Rational(0));
      for (auto& [v, s] : dims[d].parts) c.coeffs[v] = s;
      c.constant = -*iv.lo;
      c.sense = CmpSense::Eq;
      pred.conjuncts.push_back(std::move(c));
      continue;
    }
    if (tighter_lo) add_fact(dims[d], *iv.lo, true);
    if (tighter_hi) add_fact(dims[d], *iv.hi, false);
  }
  return pred;
}

}  // namespace detail

/// Sound per-location linear invariants from the interval/difference-bound
/// fixpoint. Unreachable locations get the empty (false-like) marker via
/// reachable=false and an unconstrained predicate.
inline Invariant generate_invariant(const Pcfg& cfg, absint::Options opts = {}) {
  absint::Analyzer an(cfg, opts);
  auto states = an.run();
  Invariant inv;
  inv.at.resize(cfg.nlocs());
  inv.bounded.assign(cfg.nlocs(), false);
  inv.reachable.assign(cfg.nlocs(), false);
  for (size_t l = 0; l < cfg.nlocs(); ++l) {
    if (!states[l]) continue;
    inv.reachable[l] = true;
    inv.at[l] = detail::facts_from_state(cfg, an, *states[l]);
    bool boxed = true;
    for (size_t v = 0; v < cfg.nvars(); ++v)
      if (!(*states[l])[an.base_dim(v)].bounded()) boxed = false;
    inv.bounded[l] = boxed;
  }
  return inv;
}

/// Per-location interval box for every variable; requires a termination
/// bound and bounded sampling so the fixpoint exists (Divergence otherwise).
inline VarBounds propagate_bounds(const Pcfg& cfg, absint::Options opts = {}) {
  absint::Analyzer an(cfg, opts);
  auto states = an.run();
  VarBounds vb;
  vb.at.assign(cfg.nlocs(), std::vector<Interval>(cfg.nvars()));
  for (size_t l = 0; l < cfg.nlocs(); ++l) {
    for (size_t v = 0; v < cfg.nvars(); ++v) {
      if (!states[l]) {
        vb.at[l][v] = Interval::bottom();
        continue;
      }
      vb.at[l][v] = (*states[l])[an.base_dim(v)];
    }
  }
  return vb;
}

/// Seed predicates per location: initial-valuation facts and quickly
/// propagated interval facts (no relational dimensions).
inline std::vector<std::pair<size_t, LinearPredicate>> location_invariant_obligations(
    const Pcfg& cfg) {
  absint::Options opts;
  opts.track_triples = false;
  absint::Analyzer an(cfg, opts);
  auto states = an.run();
  std::vector<std::pair<size_t, LinearPredicate>> out;
  for (size_t l = 0; l < cfg.nlocs(); ++l) {
    if (l == cfg.out_loc || !states[l]) {
      out.emplace_back(l, LinearPredicate{});
      continue;
    }
    LinearPredicate pred;
    size_t n = cfg.nvars();
    for (size_t v = 0; v < n; ++v) {
      const Interval& iv = (*states[l])[an.base_dim(v)];
      if (iv.empty) continue;
      if (iv.lo) {
        AffineConstraint c;
        c.coeffs.assign(n, Rational(0));
        c.coeffs[v] = 1;
        c.constant = -*iv.lo;
        c.sense = iv.hi && *iv.lo == *iv.hi ? CmpSense::Eq : CmpSense::Geq;
        if (c.sense == CmpSense::Eq) {
          pred.conjuncts.push_back(std::move(c));
          continue;
        }
        pred.conjuncts.push_back(std::move(c));
      }
      if (iv.hi) {
        AffineConstraint c;
        c.coeffs.assign(n, Rational(0));
        c.coeffs[v] = -1;
        c.constant = *iv.hi;
        c.sense = CmpSense::Geq;
        pred.conjuncts.push_back(std::move(c));
      }
    }
    out.emplace_back(l, std::move(pred));
  }
  return out;
}

// ---------------------------------------------------------------------------
// User-supplied invariants: text format, one line per location:
//   loc <name>: <affine ineq>; <affine ineq>; ...
// Soundness is re-established by a one-step inductiveness check before use.
// ---------------------------------------------------------------------------

namespace detail {

inline AffineConstraint parse_affine_ineq(const std::string& text, const Pcfg& cfg, int line_no) {
  // grammar:  poly (<=|<|>=|>|=|==) poly  with linear polys
  static const char* ops[] = {"<=", ">=", "==", "<", ">", "="};
  size_t op_pos = std::string::npos;
  std::string op;
  int depth = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '(') ++depth;
    if (text[i] == ')') --depth;
    if (depth != 0) continue;
    for (auto* o : ops) {
      size_t len = std::strlen(o);
      if (text.compare(i, len, o) == 0) {
        // avoid matching '<' inside '<='
        if ((o[1] == '\0') && i + 1 < text.size() && text[i + 1] == '=') continue;
        op_pos = i;
        op = o;
        break;
      }
    }
    if (op_pos != std::string::npos) break;
  }
  if (op_pos == std::string::npos)
    throw FormatError("line " + std::to_string(line_no) + ": expected a comparison");
  auto parse_side = [&](const std::string& s) {
    try {
      return parse_expression_text(s, cfg.vars);
    } catch (const std::runtime_error& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  };
  PolyExpr lhs = parse_side(text.substr(0, op_pos));
  PolyExpr rhs = parse_side(text.substr(op_pos + op.size()));
  PolyExpr diff = (op == "<=" || op == "<") ? rhs - lhs : lhs - rhs;
  if (diff.degree() > 1)
    throw FormatError("line " + std::to_string(line_no) + ": invariants must be linear");
  AffineConstraint c;
  c.coeffs.assign(cfg.nvars(), Rational(0));
  for (auto& [m, k] : diff.terms()) {
    if (mono_degree(m) == 0) {
      c.constant = k;
      continue;
    }
    for (size_t v = 0; v < cfg.nvars(); ++v)
      if (m[v]) c.coeffs[v] = k;
  }
  c.sense = (op == "=" || op == "==") ? CmpSense::Eq
                                      : ((op == "<" || op == ">") ? CmpSense::Gt : CmpSense::Geq);
  return c;
}

}  // namespace detail

inline Invariant parse_invariant_text(const std::string& text, const Pcfg& cfg) {
  Invariant inv;
  inv.at.resize(cfg.nlocs());
  inv.bounded.assign(cfg.nlocs(), false);
  inv.reachable.assign(cfg.nlocs(), true);
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
    std::string trimmed;
    for (char c : line)
      if (!std::isspace((unsigned char)c) || !trimmed.empty()) trimmed.push_back(c);
    while (!trimmed.empty() && std::isspace((unsigned char)trimmed.back())) trimmed.pop_back();
    if (trimmed.empty()) continue;
    if (trimmed.rfind("loc ", 0) != 0)
      throw FormatError("line " + std::to_string(line_no) + ": expected 'loc <name>: ...'");
    size_t colon = trimmed.find(':');
    if (colon == std::string::npos)
      throw FormatError("line " + std::to_string(line_no) + ": missing ':'");
    std::string name = trimmed.substr(4, colon - 4);
    while (!name.empty() && std::isspace((unsigned char)name.back())) name.pop_back();
    auto loc = cfg.loc_index(name);
    if (!loc) throw FormatError("line " + std::to_string(line_no) + ": unknown location " + name);
    std::string rest = trimmed.substr(colon + 1);
    std::istringstream parts(rest);
    std::string item;
    while (std::getline(parts, item, ';')) {
      bool blank = true;
      for (char c : item)
        if (!std::isspace((unsigned char)c)) blank = false;
      if (blank) continue;
      inv.at[*loc].conjuncts.push_back(detail::parse_affine_ineq(item, cfg, line_no));
    }
  }
  return inv;
}

/// One-step inductiveness: every conjunct at a transition target must follow
/// from the source predicate plus the guard, after applying the update.
/// Sampled values are over-approximated by their support box. Throws
/// UnsoundInvariant naming the first violated (location, transition).
inline void check_inductive(const Pcfg& cfg, const Invariant& inv, int d_h_extra = 1) {
  size_t n = cfg.nvars();
  // initial state must satisfy the initial location's predicate
  for (auto& c : inv.at[cfg.init_loc].conjuncts)
    if (!c.holds_at(cfg.init_valuation))
      throw UnsoundInvariant("initial valuation violates the invariant at location " +
                             cfg.loc_names[cfg.init_loc]);
  auto init_facts = [&]() {
    // the initial location is only ever visited at exactly the initial
    // valuation (restarts reset to it), so pin it in the hypothesis
    std::vector<AffineConstraint> facts;
    for (size_t v = 0; v < n; ++v) {
      AffineConstraint c;
      c.coeffs.assign(n, Rational(0));
      c.coeffs[v] = 1;
      c.constant = -cfg.init_valuation[v];
      c.sense = CmpSense::Eq;
      facts.push_back(std::move(c));
    }
    return facts;
  };
  auto check_edge = [&](size_t src, const LinearPredicate& guard, const UpdateMap& updates,
                        size_t dst, const std::string& what) {
    std::vector<AffineConstraint> hyps = inv.at[src].conjuncts;
    if (src == cfg.init_loc)
      for (auto& c : init_facts()) hyps.push_back(c);
    for (auto& g : guard.conjuncts) hyps.push_back(g);
    // sampled variables become fresh symbols constrained to their support;
    // reuse the variable slot since the pre-value is integrated out
    UpdateMap det = updates;
    for (auto& [v, up] : updates) {
      if (up.kind != Update::Kind::Sample) continue;
      Interval sup = up.dist->support();
      AffineConstraint lo, hi;
      lo.coeffs.assign(n, Rational(0));
      hi.coeffs.assign(n, Rational(0));
      lo.coeffs[v] = 1;
      lo.constant = -*sup.lo;
      hi.coeffs[v] = -1;
      hi.constant = *sup.hi;
      // the pre-state knowledge about v no longer applies
      for (auto& h : hyps)
        if (h.coeffs[v] != 0) h = AffineConstraint{std::vector<Rational>(n, Rational(0)),
                                                   Rational(0), CmpSense::Geq};
      hyps.push_back(lo);
      hyps.push_back(hi);
      det.erase(v);
    }
    for (auto& c : inv.at[dst].conjuncts) {
      // post-composition: conjunct over post-vars, substitute updates
      PolyExpr post = c.to_poly();
      PolyExpr composed(n);
      for (auto& [m, k] : post.terms()) {
        PolyExpr term = PolyExpr::constant(n, k);
        for (size_t v = 0; v < n; ++v) {
          if (!m[v]) continue;
          auto it = det.find(v);
          if (it != det.end() && it->second.kind == Update::Kind::Poly)
            term = term * it->second.poly.pow(m[v]);
          else
            term = term * PolyExpr::variable(n, v).pow(m[v]);
        }
        composed += term;
      }
      // Farkas level first (complete for linear claims over polytopes), then
      // escalate the product degree only when needed
      int base = std::max(1, static_cast<int>(composed.degree()));
      bool ok = false;
      for (int d_h = base; d_h <= base + d_h_extra && !ok; ++d_h)
        if (handelman::entails(hyps, composed, d_h)) ok = true;
      if (!ok)
        throw UnsoundInvariant("invariant conjunct at " + cfg.loc_names[dst] +
                               " is not inductive across " + what);
    }
  };
  for (size_t i = 0; i < cfg.transitions.size(); ++i) {
    const Transition& t = cfg.transitions[i];
    std::string what = "transition " + std::to_string(i) + " from " + cfg.loc_names[t.src];
    if (!inv.reachable.empty() && !inv.reachable[t.src]) continue;
    if (t.kind == Transition::Kind::Det) {
      check_edge(t.src, t.guard, t.updates, t.dst, what);
    } else {
      check_edge(t.src, {}, t.updates_true, t.dst_true, what + " (true arm)");
      check_edge(t.src, {}, t.updates_false, t.dst_false, what + " (false arm)");
    }
  }
}

/// One-step inductiveness of the `user` conjuncts relative to the conjunction
/// of `user` and `generated` facts (the generated invariant is sound by
/// construction and supplies the supporting context).
inline void check_inductive_extra(const Pcfg& cfg, const Invariant& user,
                                  const Invariant& generated, int d_h_extra = 1) {
  size_t n = cfg.nvars();
  for (auto& c : user.at[cfg.init_loc].conjuncts)
    if (!c.holds_at(cfg.init_valuation))
      throw UnsoundInvariant("initial valuation violates the user invariant at " +
                             cfg.loc_names[cfg.init_loc]);
  auto hyps_at = [&](size_t src) {
    std::vector<AffineConstraint> hyps = generated.at[src].conjuncts;
    for (auto& c : user.at[src].conjuncts) hyps.push_back(c);
    if (src == cfg.init_loc) {
      for (size_t v = 0; v < n; ++v) {
        AffineConstraint c;
        c.coeffs.assign(n, Rational(0));
        c.coeffs[v] = 1;
        c.constant = -cfg.init_valuation[v];
        c.sense = CmpSense::Eq;
        hyps.push_back(std::move(c));
      }
    }
    return hyps;
  };
  for (size_t ti = 0; ti < cfg.transitions.size(); ++ti) {
    const Transition& t = cfg.transitions[ti];
    if (!generated.reachable.empty() && !generated.reachable[t.src]) continue;
    auto check_edge = [&](const LinearPredicate& guard, const UpdateMap& updates, size_t src,
                          size_t dst, const std::string& what) {
      std::vector<AffineConstraint> hyps = hyps_at(src);
      for (auto& g : guard.conjuncts) hyps.push_back(g);
      UpdateMap det = updates;
      for (auto& [v, up] : updates) {
        if (up.kind != Update::Kind::Sample) continue;
        Interval sup = up.dist->support();
        for (auto& h : hyps)
          if (h.coeffs.size() > v && h.coeffs[v] != 0)
            h = AffineConstraint{std::vector<Rational>(n, Rational(0)), Rational(0),
                                 CmpSense::Geq};
        AffineConstraint lo, hi;
        lo.coeffs.assign(n, Rational(0));
        hi.coeffs.assign(n, Rational(0));
        lo.coeffs[v] = 1;
        lo.constant = -*sup.lo;
        hi.coeffs[v] = -1;
        hi.constant = *sup.hi;
        hyps.push_back(lo);
        hyps.push_back(hi);
        det.erase(v);
      }
      for (auto& c : user.at[dst].conjuncts) {
        PolyExpr post = c.to_poly();
        PolyExpr composed(n);
        for (auto& [m, k] : post.terms()) {
          PolyExpr term = PolyExpr::constant(n, k);
          for (size_t v = 0; v < n; ++v) {
            if (!m[v]) continue;
            auto it = det.find(v);
            if (it != det.end() && it->second.kind == Update::Kind::Poly)
              term = term * it->second.poly.pow(m[v]);
            else
              term = term * PolyExpr::variable(n, v).pow(m[v]);
          }
          composed += term;
        }
        int base = std::max(1, static_cast<int>(composed.degree()));
        bool ok = false;
        for (int d_h = base; d_h <= base + d_h_extra && !ok; ++d_h)
          if (handelman::entails(hyps, composed, d_h)) ok = true;
        if (!ok)
          throw UnsoundInvariant("user invariant conjunct at " + cfg.loc_names[dst] +
                                 " is not inductive across " + what);
      }
    };
    std::string what = "transition " + std::to_string(ti) + " from " + cfg.loc_names[t.src];
    if (t.kind == Transition::Kind::Det)
      check_edge(t.guard, t.updates, t.src, t.dst, what);
    else {
      check_edge({}, t.updates_true, t.src, t.dst_true, what + " (true arm)");
      check_edge({}, t.updates_false, t.src, t.dst_false, what + " (false arm)");
    }
  }
}

/// Loads a user invariant file and verifies each conjunct by one-step
/// inductiveness against the built-in generator's supporting facts. The
/// empty file yields the all-true invariant.
inline Invariant load_user_invariant(const std::string& path, const Pcfg& cfg) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open invariant file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Invariant inv = parse_invariant_text(buf.str(), cfg);
  Invariant generated = generate_invariant(cfg);
  check_inductive_extra(cfg, inv, generated);
  return inv;
}

/// Conjoins two invariants location-wise.
inline Invariant merge_invariants(const Invariant& a, const Invariant& b) {
  Invariant r = a;
  for (size_t l = 0; l < r.at.size() && l < b.at.size(); ++l) {
    r.at[l] = r.at[l].conjoin(b.at[l]);
    if (l < b.bounded.size()) r.bounded[l] = r.bounded[l] || b.bounded[l];
  }
  return r;
}

}  // namespace ppeq
