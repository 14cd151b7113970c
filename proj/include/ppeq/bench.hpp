#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include "ppeq/report_json.hpp"

namespace ppeq {

struct BenchPair {
  std::string name;
  std::string a, b;  // paths relative to the suite directory
  Mode mode = Mode::Refute;
};

struct BenchRow {
  std::string name;
  std::string verdict;  // Refuted | Unknown | InputError | Error
  std::string gap;      // or distance
  uint32_t degree = 0;
  double seconds = 0;
  bool verified = false;
  std::string error;
};

struct BenchSummary {
  std::vector<BenchRow> rows;
  size_t refuted = 0;

  std::string table() const {
    std::ostringstream os;
    os << std::left << std::setw(28) << "name" << std::setw(12) << "verdict" << std::setw(8)
       << "deg" << std::setw(20) << "gap/distance" << std::setw(10) << "time(s)" << "verified\n";
    os << std::string(84, '-') << "\n";
    for (auto& r : rows) {
      os << std::left << std::setw(28) << r.name << std::setw(12) << r.verdict << std::setw(8)
         << (r.degree ? std::to_string(r.degree) : "-") << std::setw(20)
         << (r.gap.empty() ? "-" : r.gap) << std::setw(10) << std::fixed
         << std::setprecision(2) << r.seconds << (r.verified ? "yes" : "-") << "\n";
    }
    os << std::string(84, '-') << "\n";
    os << "refuted " << refuted << "/" << rows.size() << "\n";
    return os.str();
  }

  nlohmann::json json() const {
    nlohmann::json j;
    j["refuted"] = refuted;
    j["total"] = rows.size();
    nlohmann::json arr = nlohmann::json::array();
    for (auto& r : rows)
      arr.push_back({{"name", r.name},
                     {"verdict", r.verdict},
                     {"gap", r.gap},
                     {"degree", r.degree},
                     {"seconds", r.seconds},
                     {"verified", r.verified},
                     {"error", r.error}});
    j["pairs"] = arr;
    return j;
  }
};

inline std::vector<BenchPair> load_manifest(const std::string& dir) {
  std::filesystem::path mp = std::filesystem::path(dir) / "manifest.json";
  std::vector<BenchPair> pairs;
  if (!std::filesystem::exists(mp)) return pairs;
  std::ifstream in(mp);
  nlohmann::json j;
  in >> j;
  for (auto& e : j["pairs"]) {
    BenchPair p;
    p.name = e.value("name", "");
    p.a = e.value("a", "");
    p.b = e.value("b", "");
    p.mode = e.value("mode", "refute") == "distance" ? Mode::Distance : Mode::Refute;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

/// Per-pair failures stay isolated; the summary counts verified refutations.
inline BenchSummary bench(const std::string& dir, RunConfig base, int jobs = 1) {
  BenchSummary summary;
  auto pairs = load_manifest(dir);
  auto run_one = [&](const BenchPair& p) {
    BenchRow row;
    row.name = p.name;
    detail::Stopwatch sw;
    try {
      RunConfig cfg = base;
      cfg.program1_path = (std::filesystem::path(dir) / p.a).string();
      cfg.program2_path = (std::filesystem::path(dir) / p.b).string();
      cfg.mode = p.mode;
      RefutationReport rep = run(cfg);
      row.seconds = sw.elapsed();
      switch (rep.verdict) {
        case Verdict::Refuted:
          row.verdict = "Refuted";
          row.degree = rep.refuted_at_degree;
          row.verified = rep.verification.all_pass();
          if (rep.certificate) row.gap = rat_str(rep.certificate->gap);
          if (rep.have_distance) row.gap = rat_str(rep.kantorovich_lower_bound);
          break;
        case Verdict::Unknown:
          row.verdict = "Unknown";
          break;
        case Verdict::Error:
          row.verdict = rep.error.find("output variables") != std::string::npos ? "InputError"
                                                                                 : "Error";
          row.error = rep.error;
          break;
      }
    } catch (const std::exception& e) {
      row.seconds = sw.elapsed();
      row.verdict = "Error";
      row.error = e.what();
    }
    return row;
  };
  if (jobs <= 1) {
    for (auto& p : pairs) summary.rows.push_back(run_one(p));
  } else {
    std::vector<std::future<BenchRow>> futs;
    size_t next = 0;
    summary.rows.resize(pairs.size());
    std::vector<size_t> idx;
    while (next < pairs.size() || !futs.empty()) {
      while (next < pairs.size() && futs.size() < static_cast<size_t>(jobs)) {
        futs.push_back(std::async(std::launch::async, run_one, pairs[next]));
        idx.push_back(next);
        ++next;
      }
      summary.rows[idx.front()] = futs.front().get();
      futs.erase(futs.begin());
      idx.erase(idx.begin());
    }
  }
  for (auto& r : summary.rows)
    if (r.verdict == "Refuted" && r.verified) ++summary.refuted;
  return summary;
}

}  // namespace ppeq
