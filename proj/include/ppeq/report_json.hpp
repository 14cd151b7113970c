#pragma once

#include <json.hpp>

#include "ppeq/driver.hpp"

namespace ppeq {

inline nlohmann::json poly_json(const PolyExpr& p, const std::vector<std::string>& names) {
  return p.str(names);
}

inline nlohmann::json certificate_json(const CertificateTriple& cert,
                                       const std::vector<std::string>& out_names,
                                       const std::vector<std::string>& up_locs,
                                       const std::vector<std::string>& up_vars,
                                       const std::vector<std::string>& low_locs,
                                       const std::vector<std::string>& low_vars) {
  nlohmann::json j;
  j["degree"] = cert.degree;
  j["mode"] = cert.mode == Mode::Refute ? "refute" : "distance";
  j["orientation_swapped"] = cert.swapped;
  j["f"] = poly_json(cert.f, out_names);
  j["gap"] = rat_str(cert.gap);
  nlohmann::json uj = nlohmann::json::object(), lj = nlohmann::json::object();
  for (size_t l = 0; l < cert.upper.size(); ++l)
    if (!cert.upper[l].is_zero() || l < up_locs.size())
      uj[up_locs[l]] = poly_json(cert.upper[l], up_vars);
  for (size_t l = 0; l < cert.lower.size(); ++l)
    if (!cert.lower[l].is_zero() || l < low_locs.size())
      lj[low_locs[l]] = poly_json(cert.lower[l], low_vars);
  j["uesm"] = uj;
  j["lesm"] = lj;
  j["handelman_witness_count"] = cert.witnesses.size();
  size_t lambdas = 0;
  for (auto& w : cert.witnesses) lambdas += w.lambdas.size();
  j["handelman_nonzero_lambdas"] = lambdas;
  return j;
}

inline nlohmann::json report_json(const RefutationReport& rep, const RunConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = rep.schema_version;
  j["tool_version"] = rep.tool_version;
  j["program1"] = cfg.program1_path;
  j["program2"] = cfg.program2_path;
  j["mode"] = cfg.mode == Mode::Refute ? "refute" : "distance";
  j["seed"] = cfg.seed;
  j["verdict"] = rep.verdict == Verdict::Refuted
                     ? "Refuted"
                     : (rep.verdict == Verdict::Unknown ? "Unknown" : "Error");
  if (!rep.error.empty()) j["error"] = rep.error;
  j["weight_bound_1"] = rat_str(rep.weight_bound_1);
  j["weight_bound_2"] = rat_str(rep.weight_bound_2);
  if (rep.verdict == Verdict::Refuted) {
    j["refuted_at_degree"] = rep.refuted_at_degree;
    j["orientation_swapped"] = rep.orientation_swapped;
    nlohmann::json v = nlohmann::json::array();
    for (auto& o : rep.verification.items)
      v.push_back({{"name", o.name}, {"pass", o.pass}, {"detail", o.detail}});
    j["verification"] = v;
    j["verification_all_pass"] = rep.verification.all_pass();
    if (rep.certificate) j["gap"] = rat_str(rep.certificate->gap);
    nlohmann::json c = nlohmann::json::object();
    for (auto& [name, poly] : rep.certificate_rows) c[name] = poly;
    j["certificate"] = c;
  }
  if (rep.have_distance) j["kantorovich_lower_bound"] = rat_str(rep.kantorovich_lower_bound);
  nlohmann::json t = nlohmann::json::array();
  for (auto& s : rep.timings) t.push_back({{"stage", s.name}, {"seconds", s.seconds}});
  j["timings"] = t;
  j["warnings"] = rep.warnings;
  j["notes"] = rep.notes;
  return j;
}

}  // namespace ppeq
