#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "ppeq/bench.hpp"
#include "ppeq/report_json.hpp"

namespace {

int exit_code(ppeq::Verdict v) {
  switch (v) {
    case ppeq::Verdict::Refuted: return 0;
    case ppeq::Verdict::Unknown: return 2;
    case ppeq::Verdict::Error: return 1;
  }
  return 1;
}

void print_report(const ppeq::RefutationReport& rep) {
  using ppeq::Verdict;
  if (rep.verdict == Verdict::Error) {
    std::cerr << "error: " << rep.error << "\n";
    return;
  }
  if (rep.verdict == Verdict::Unknown) {
    std::cout << "Unknown: no certificate found within the degree schedule\n";
    for (auto& n : rep.notes) std::cout << "  note: " << n << "\n";
    return;
  }
  std::cout << "Refuted: the programs are not output equivalent\n";
  std::cout << "  degree:      " << rep.refuted_at_degree << "\n";
  std::cout << "  orientation: " << (rep.orientation_swapped ? "swapped" : "direct") << "\n";
  if (rep.certificate) std::cout << "  gap:         " << ppeq::rat_str(rep.certificate->gap) << "\n";
  if (rep.have_distance)
    std::cout << "  Kantorovich distance >= " << ppeq::rat_str(rep.kantorovich_lower_bound)
              << "  (L1 ground metric)\n";
  std::cout << "  weight bounds: M1 = " << ppeq::rat_str(rep.weight_bound_1)
            << ", M2 = " << ppeq::rat_str(rep.weight_bound_2) << "\n";
  std::cout << "  exact verification: "
            << (rep.verification.all_pass() ? "all obligations pass" : "FAILED") << "\n";
  for (auto& [name, poly] : rep.certificate_rows)
    if (name == "f") std::cout << "  f = " << poly << "\n";
  for (auto& w : rep.warnings) std::cout << "  warning: " << w << "\n";
  for (auto& n : rep.notes) std::cout << "  note: " << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ppeq: refutes output equivalence of probabilistic programs with conditioning"};
  app.require_subcommand(1);

  // ---- refute ----
  auto* refute = app.add_subcommand("refute", "refute equivalence of two programs");
  ppeq::RunConfig cfg;
  std::string mode_str = "refute";
  std::string json_out;
  int degree_max = 5;
  int handelman_extra = 0;
  double epsilon = 1e-6;
  refute->add_option("a", cfg.program1_path, "first program (.pp)")->required();
  refute->add_option("b", cfg.program2_path, "second program (.pp)")->required();
  refute->add_option("--degree-max", degree_max, "largest template degree to try (default 5)");
  refute->add_option("--handelman-degree", handelman_extra,
                     "raise the Handelman budget above deg(claim)");
  refute->add_option("--epsilon", epsilon, "strictness floor for the certified gap");
  refute->add_option("--mode", mode_str, "refute | distance")
      ->check(CLI::IsMember({"refute", "distance"}));
  refute->add_option("--inv1", cfg.inv1_path, "invariant file for program 1 (restarted form)");
  refute->add_option("--inv2", cfg.inv2_path, "invariant file for program 2 (restarted form)");
  refute->add_option("--mc-samples", cfg.mc_samples, "samples for the advisory MC cross-check");
  refute->add_option("--seed", cfg.seed, "random seed for the MC cross-check");
  refute->add_option("--timeout", cfg.timeout_seconds, "wall-clock budget in seconds");
  refute->add_flag("--dump-pcfg", cfg.dump_pcfg, "print the restarted pCFGs as DOT");
  refute->add_flag("--dump-lp", cfg.dump_lp, "keep the first LP in the report (LP format)");
  refute->add_flag("--dump-restarted", cfg.dump_restarted,
                   "print the weighted-restarted programs as DSL text");
  refute->add_option("--json", json_out, "write the full report as JSON");

  // ---- bench ----
  auto* benchcmd = app.add_subcommand("bench", "run a directory of paired benchmarks");
  std::string suite_dir;
  std::string bench_json;
  int jobs = 1;
  double pair_timeout = 600.0;
  benchcmd->add_option("dir", suite_dir, "suite directory with manifest.json")->required();
  benchcmd->add_option("--json", bench_json, "write the summary as JSON");
  benchcmd->add_option("--jobs", jobs, "parallel workers");
  benchcmd->add_option("--timeout", pair_timeout, "per-pair wall-clock budget (default 600 s)");

  // ---- sample ----
  auto* sample = app.add_subcommand("sample", "weighted Monte-Carlo sampling of one program");
  std::string prog_path, csv_out;
  size_t nsamples = 10000;
  uint64_t sseed = 1;
  bool sample_restarted = false;
  sample->add_option("program", prog_path, "program (.pp)")->required();
  sample->add_option("--n", nsamples, "number of traces");
  sample->add_option("--seed", sseed, "seed");
  sample->add_option("--csv", csv_out, "write samples as CSV");
  sample->add_flag("--restarted", sample_restarted, "sample the weighted-restarted form");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(refute)) {
      cfg.mode = mode_str == "distance" ? ppeq::Mode::Distance : ppeq::Mode::Refute;
      cfg.degree_max = static_cast<uint32_t>(degree_max);
      cfg.handelman_extra = handelman_extra;
      cfg.epsilon = epsilon;
      ppeq::RefutationReport rep = ppeq::run(cfg);
      print_report(rep);
      if (cfg.dump_pcfg) {
        std::cout << rep.dump_pcfg_1 << "\n" << rep.dump_pcfg_2 << "\n";
      }
      if (cfg.dump_restarted) {
        std::cout << "# restarted form of " << cfg.program1_path << "\n"
                  << rep.dump_restarted_1 << "\n# restarted form of " << cfg.program2_path
                  << "\n" << rep.dump_restarted_2 << "\n";
      }
      if (cfg.dump_lp && !rep.lp_dump.empty()) std::cout << rep.lp_dump;
      if (!json_out.empty()) {
        std::ofstream out(json_out);
        out << ppeq::report_json(rep, cfg).dump(2) << "\n";
      }
      return exit_code(rep.verdict);
    }
    if (app.got_subcommand(benchcmd)) {
      ppeq::RunConfig base;
      base.timeout_seconds = pair_timeout;
      ppeq::BenchSummary summary = ppeq::bench(suite_dir, base, jobs);
      std::cout << summary.table();
      if (!bench_json.empty()) {
        std::ofstream out(bench_json);
        out << summary.json().dump(2) << "\n";
      }
      return 0;
    }
    if (app.got_subcommand(sample)) {
      std::ifstream in(prog_path);
      if (!in) {
        std::cerr << "error: cannot open " << prog_path << "\n";
        return 1;
      }
      std::stringstream buf;
      buf << in.rdbuf();
      auto ast = ppeq::desugar_prob_branch(ppeq::parse_program(buf.str()));
      auto cfg2 = ppeq::build_pcfg(ast);
      ppeq::OutputDistribution dist;
      std::vector<std::string> out_names;
      for (size_t v : cfg2.out_vars) out_names.push_back(cfg2.vars[v]);
      if (sample_restarted) {
        auto m = ppeq::infer_weight_bound(cfg2);
        auto rp = ppeq::weighted_restart(cfg2, m);
        dist = ppeq::simulate(rp, nsamples, sseed);
      } else {
        dist = ppeq::simulate(cfg2, nsamples, sseed);
      }
      std::string csv = dist.csv(out_names);
      if (csv_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(csv_out);
        out << csv;
      }
      if (dist.discarded)
        std::cerr << "discarded " << dist.discarded << " traces (step budget)\n";
      return 0;
    }
  } catch (const ppeq::SyntaxError& e) {
    std::cerr << "syntax error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
