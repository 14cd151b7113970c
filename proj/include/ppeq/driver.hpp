#pragma once

#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppeq/desugar.hpp"
#include "ppeq/oracle.hpp"
#include "ppeq/parser.hpp"
#include "ppeq/synth.hpp"

namespace ppeq {

inline const char* kToolVersion = "0.2.0";
inline constexpr int kReportSchemaVersion = 1;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string program1_path, program2_path;
  std::string program1_text, program2_text;  // used when paths are empty
  Mode mode = Mode::Refute;
  uint32_t degree_min = 1;
  uint32_t degree_max = 5;
  int handelman_extra = 0;
  double epsilon = 1e-6;
  double gap_cap = 1000.0;
  std::string inv1_path, inv2_path;
  size_t mc_samples = 100000;
  uint64_t seed = 1;
  double timeout_seconds = 600.0;
  bool run_mc_advisory = true;
  bool dump_pcfg = false;
  bool dump_lp = false;
  bool dump_restarted = false;
};

enum class Verdict { Refuted, Unknown, Error };

struct StageTiming {
  std::string name;
  double seconds = 0;
};

struct RefutationReport {
  Verdict verdict = Verdict::Unknown;
  std::string error;
  std::optional<CertificateTriple> certificate;
  std::vector<std::pair<std::string, std::string>> certificate_rows;  // name -> polynomial
  VerificationReport verification;
  bool have_distance = false;
  Rational kantorovich_lower_bound = 0;
  uint32_t refuted_at_degree = 0;
  bool orientation_swapped = false;
  Rational weight_bound_1 = 0, weight_bound_2 = 0;
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  std::string dump_pcfg_1, dump_pcfg_2, dump_restarted_1, dump_restarted_2, lp_dump;
  std::string tool_version = kToolVersion;
  int schema_version = kReportSchemaVersion;
};

namespace detail {

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

struct PreparedProgram {
  ProgramAst ast;
  Pcfg pcfg;
  RestartedProgram restarted;
  Invariant invariant;  // of the restarted program
  Rational weight_bound;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline PreparedProgram prepare(const std::string& source, const std::string& inv_path) {
  PreparedProgram p;
  p.ast = desugar_prob_branch(parse_program(source));
  p.pcfg = build_pcfg(p.ast);
  p.weight_bound = infer_weight_bound(p.pcfg);
  p.restarted = weighted_restart(p.pcfg, p.weight_bound);
  p.invariant = generate_invariant(p.restarted.pcfg);
  if (!inv_path.empty()) {
    Invariant user = parse_invariant_text(read_file(inv_path), p.restarted.pcfg);
    check_inductive_extra(p.restarted.pcfg, user, p.invariant);
    p.invariant = merge_invariants(p.invariant, user);
  }
  return p;
}

}  // namespace detail

namespace detail {

inline void describe_certificate(const CertificateTriple& cert, const Pcfg& up, const Pcfg& low,
                                 RefutationReport& rep) {
  std::vector<std::string> out_names;
  for (size_t v : up.out_vars) out_names.push_back(up.vars[v]);
  rep.certificate_rows.emplace_back("f", cert.f.str(out_names));
  for (size_t l = 0; l < up.nlocs(); ++l)
    rep.certificate_rows.emplace_back("U@" + up.loc_names[l], cert.upper[l].str(up.vars));
  for (size_t l = 0; l < low.nlocs(); ++l)
    rep.certificate_rows.emplace_back("L@" + low.loc_names[l], cert.lower[l].str(low.vars));
}

inline void mc_advisory(const RunConfig& cfg, const CertificateTriple& cert,
                        const PreparedProgram& up, const PreparedProgram& low,
                        RefutationReport& rep) {
  if (!cfg.run_mc_advisory || cfg.mc_samples == 0) return;
  std::vector<PolyExpr> yu = concrete_y(cert.upper, cert.f, up.restarted.pcfg);
  std::vector<PolyExpr> yl = concrete_y(cert.lower, cert.f, low.restarted.pcfg);
  Rational u0 = yu[up.restarted.pcfg.init_loc].eval(up.restarted.pcfg.init_valuation);
  Rational l0 = yl[low.restarted.pcfg.init_loc].eval(low.restarted.pcfg.init_valuation);
  auto check_side = [&](const PreparedProgram& prog, const Rational& bound, bool is_upper) {
    OutputDistribution dist = simulate(prog.restarted, cfg.mc_samples, cfg.seed);
    if (dist.samples.empty()) {
      rep.warnings.push_back("MC advisory produced no samples");
      return;
    }
    Expectation e = expected_value(dist, cert.f);
    double b = to_double(bound);
    double slack = 5.0 * e.stderr_est;
    bool ok = is_upper ? e.value <= b + slack : e.value >= b - slack;
    if (!ok) {
      std::ostringstream os;
      os << "MC estimate " << e.value << " (se " << e.stderr_est << ") violates the "
         << (is_upper ? "upper" : "lower") << " certified bound " << b
         << " by more than 5 standard errors";
      rep.warnings.push_back(os.str());
    }
    if (dist.discarded)
      rep.warnings.push_back("MC advisory discarded " + std::to_string(dist.discarded) +
                             " traces (step budget)");
  };
  check_side(up, u0, true);
  check_side(low, l0, false);
}

}  // namespace detail

/// End-to-end pipeline: parse both programs, apply weighted restarting,
/// generate invariants, then walk the degree schedule trying both
/// orientations until a certificate passes exact verification. Refute mode
/// stops at the first verified certificate; distance mode keeps the largest
/// verified gap across the whole schedule.
inline RefutationReport run(const RunConfig& cfg) {
  RefutationReport rep;
  detail::Stopwatch total;
  auto stage = [&](const std::string& name, auto&& fn) {
    detail::Stopwatch sw;
    fn();
    rep.timings.push_back({name, sw.elapsed()});
  };
  try {
    std::string src1 =
        cfg.program1_path.empty() ? cfg.program1_text : detail::read_file(cfg.program1_path);
    std::string src2 =
        cfg.program2_path.empty() ? cfg.program2_text : detail::read_file(cfg.program2_path);
    detail::PreparedProgram p1, p2;
    stage("prepare-1", [&] { p1 = detail::prepare(src1, cfg.inv1_path); });
    stage("prepare-2", [&] { p2 = detail::prepare(src2, cfg.inv2_path); });
    rep.weight_bound_1 = p1.weight_bound;
    rep.weight_bound_2 = p2.weight_bound;

    // shared output space
    std::vector<std::string> out1, out2;
    for (size_t v : p1.pcfg.out_vars) out1.push_back(p1.pcfg.vars[v]);
    for (size_t v : p2.pcfg.out_vars) out2.push_back(p2.pcfg.vars[v]);
    if (out1 != out2)
      throw InputError("programs do not share the same ordered output variables");

    if (cfg.dump_pcfg) {
      rep.dump_pcfg_1 = p1.restarted.pcfg.dot();
      rep.dump_pcfg_2 = p2.restarted.pcfg.dot();
    }
    if (cfg.dump_restarted) {
      rep.dump_restarted_1 = dump_restarted_dsl(p1.ast, p1.weight_bound);
      rep.dump_restarted_2 = dump_restarted_dsl(p2.ast, p2.weight_bound);
    }

    MomentTable mt;
    SynthOptions sopts;
    sopts.handelman_extra = cfg.handelman_extra;
    sopts.epsilon = cfg.epsilon;
    sopts.gap_cap = cfg.gap_cap;
    sopts.collect_lp_dump = cfg.dump_lp;

    bool budget_hit = false;
    for (uint32_t d = cfg.degree_min; d <= cfg.degree_max && !budget_hit; ++d) {
      for (int orient = 0; orient < 2 && !budget_hit; ++orient) {
        if (total.elapsed() > cfg.timeout_seconds) {
          rep.notes.push_back("timeout reached during the degree schedule");
          budget_hit = true;
          break;
        }
        const detail::PreparedProgram& up = orient == 0 ? p1 : p2;
        const detail::PreparedProgram& low = orient == 0 ? p2 : p1;
        detail::Stopwatch sw;
        SynthResult sr = synthesize(up.restarted, low.restarted, up.invariant, low.invariant, d,
                                    cfg.mode, mt, sopts, orient == 1);
        rep.timings.push_back({"synthesis d=" + std::to_string(d) +
                                   (orient ? " (swapped)" : ""),
                               sw.elapsed()});
        if (cfg.dump_lp && rep.lp_dump.empty()) rep.lp_dump = sr.lp_dump;
        if (sr.semi_completeness_forfeited)
          rep.notes.push_back("unbounded hypothesis polytope at degree " + std::to_string(d) +
                              "; semi-completeness not guaranteed");
        if (sr.outcome != SynthResult::Outcome::Verified) {
          if (sr.outcome == SynthResult::Outcome::SolverFailure ||
              sr.outcome == SynthResult::Outcome::LiftFailure)
            rep.notes.push_back("degree " + std::to_string(d) + (orient ? " swapped: " : ": ") +
                                sr.detail);
          continue;
        }
        // verified certificate in hand
        if (cfg.mode == Mode::Refute) {
          rep.verdict = Verdict::Refuted;
          rep.certificate = sr.cert;
          rep.verification = sr.report;
          rep.refuted_at_degree = d;
          rep.orientation_swapped = orient == 1;
          detail::describe_certificate(*sr.cert, up.restarted.pcfg, low.restarted.pcfg, rep);
          detail::mc_advisory(cfg, *sr.cert, up, low, rep);
          return rep;
        }
        if (!rep.have_distance || sr.cert->gap > rep.kantorovich_lower_bound) {
          rep.have_distance = true;
          rep.kantorovich_lower_bound = sr.cert->gap;
          rep.certificate = sr.cert;
          rep.verification = sr.report;
          rep.refuted_at_degree = d;
          rep.orientation_swapped = orient == 1;
        }
      }
    }
    if (cfg.mode == Mode::Distance && rep.have_distance) {
      rep.verdict = Verdict::Refuted;
      const detail::PreparedProgram& up = rep.orientation_swapped ? p2 : p1;
      const detail::PreparedProgram& low = rep.orientation_swapped ? p1 : p2;
      detail::describe_certificate(*rep.certificate, up.restarted.pcfg, low.restarted.pcfg, rep);
      detail::mc_advisory(cfg, *rep.certificate, up, low, rep);
      return rep;
    }
    rep.verdict = Verdict::Unknown;
    return rep;
  } catch (const std::exception& e) {
    rep.verdict = Verdict::Error;
    rep.error = e.what();
    return rep;
  }
}

}  // namespace ppeq
