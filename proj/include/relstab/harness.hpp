#pragma once

// Experiment harness: seeded sample -> perturb -> correct trials over a
// dim x eps grid, with JSON-lines records and a CSV summary of the empirical
// stability curve (median distance moved per eps).

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "relstab/presentation.hpp"
#include "relstab/stabilize.hpp"

namespace relstab {

struct ExperimentConfig {
  std::string preset = "chain:2,5:3,7";
  std::vector<Eigen::Index> dims{30};
  std::vector<double> epss{1e-3};
  int trials = 1;
  std::uint64_t seed = 1;
  StabilizeOptions options;
  std::string out_path;      // JSON-lines records; empty = caller handles
  std::string summary_path;  // CSV summary; empty = skip
  bool strict = false;

  void validate() const {
    if (dims.empty() || epss.empty()) throw error("config", "empty grid");
    if (trials < 1) throw error("config", "trials must be positive");
    for (auto d : dims)
      if (d < 1) throw error("config", "dims must be positive");
    for (auto e : epss)
      if (e < 0) throw error("config", "eps must be >= 0");
  }
};

inline std::vector<long long> parse_int_list(const std::string& s) {
  std::vector<long long> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoll(item));
  }
  return out;
}

/// Parses preset strings: "chain:2,5:3,7", "case2:2,3:3,2" (alias "hnn"),
/// or "heisenberg".
inline GroupPresentation preset_from_string(const std::string& s) {
  if (s == "heisenberg") return preset_heisenberg();
  const auto c1 = s.find(':');
  const auto c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw error("preset", "expected kind:a1,a2:b1,b2 or heisenberg, got " + s);
  const std::string kind = s.substr(0, c1);
  const auto a = parse_int_list(s.substr(c1 + 1, c2 - c1 - 1));
  const auto b = parse_int_list(s.substr(c2 + 1));
  if (kind == "chain") return preset_chain(a, b);
  if (kind == "case2" || kind == "hnn" || kind == "hnn-chain")
    return preset_case2(a, b);
  throw error("preset", "unknown preset kind: " + kind);
}

/// One grid cell: sample an exact representation, perturb it, correct it.
/// Failures are captured in the record, never thrown.
inline StabilityRecord run_trial(const GroupPresentation& p, Eigen::Index dim,
                                 double eps, std::uint64_t cell_seed,
                                 StabilizeOptions opts) {
  opts.seed = cell_seed;
  StabilityRecord rec;
  rec.dim = dim;
  rec.preset = p.describe();
  rec.seed = cell_seed;
  try {
    const UnitaryTuple exact =
        sample_exact_rep(p, dim, mix_seed(cell_seed, 0x5a));
    const UnitaryTuple noisy = perturb(exact, eps, mix_seed(cell_seed, 0x9e));
    auto [corrected, inner] = stabilize(p, noisy, opts);
    (void)corrected;
    inner.seed = cell_seed;
    return inner;
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure_reason = e.what();
    return rec;
  }
}

struct SweepSummaryRow {
  double eps = 0.0;
  double median_distance = 0.0;
  int trials = 0;
  int failures = 0;
};

struct SweepResult {
  std::vector<StabilityRecord> records;  // in deterministic grid order
  std::vector<SweepSummaryRow> summary;  // one row per eps
  bool all_ok = true;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return (v.size() % 2) ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Cartesian grid over dim x eps x trials. Records are emitted in grid order
/// with per-cell seeds derived from the base seed, so a sweep is reproducible
/// from (config, seed).
inline SweepResult sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const GroupPresentation p = preset_from_string(cfg.preset);
  SweepResult result;
  for (std::size_t ei = 0; ei < cfg.epss.size(); ++ei) {
    std::vector<double> distances;
    int failures = 0, count = 0;
    for (std::size_t di = 0; di < cfg.dims.size(); ++di)
      for (int trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t cell_seed = mix_seed(cfg.seed, di, ei,
                                                 static_cast<std::uint64_t>(trial));
        StabilityRecord rec =
            run_trial(p, cfg.dims[di], cfg.epss[ei], cell_seed, cfg.options);
        ++count;
        if (rec.failed) {
          ++failures;
          result.all_ok = false;
        } else {
          for (double d : rec.generator_distances) distances.push_back(d);
        }
        result.records.push_back(std::move(rec));
      }
    result.summary.push_back(
        {cfg.epss[ei], median(distances), count, failures});
  }
  return result;
}

inline std::string records_to_jsonl(const std::vector<StabilityRecord>& recs) {
  std::string out;
  for (const auto& r : recs) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

inline std::string summary_to_csv(const std::vector<SweepSummaryRow>& rows) {
  std::string out = "eps,median_distance,trials,failures\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%d\n", r.eps,
                  r.median_distance, r.trials, r.failures);
    out += buf;
  }
  return out;
}

inline json config_to_json(const ExperimentConfig& c) {
  return json{{"preset", c.preset},
              {"dims", c.dims},
              {"eps", c.epss},
              {"trials", c.trials},
              {"seed", c.seed},
              {"max_clusters", c.options.max_clusters},
              {"gap_tol", c.options.gap_tol},
              {"input_unitarity_tol", c.options.input_unitarity_tol},
              {"output_defect_tol", c.options.output_defect_tol},
              {"out", c.out_path},
              {"summary", c.summary_path},
              {"strict", c.strict}};
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.preset = j.value("preset", c.preset);
  if (j.contains("dims")) c.dims = j.at("dims").get<std::vector<Eigen::Index>>();
  if (j.contains("eps")) c.epss = j.at("eps").get<std::vector<double>>();
  c.trials = j.value("trials", c.trials);
  c.seed = j.value("seed", c.seed);
  c.options.max_clusters = j.value("max_clusters", c.options.max_clusters);
  c.options.gap_tol = j.value("gap_tol", c.options.gap_tol);
  c.options.input_unitarity_tol =
      j.value("input_unitarity_tol", c.options.input_unitarity_tol);
  c.options.output_defect_tol =
      j.value("output_defect_tol", c.options.output_defect_tol);
  c.out_path = j.value("out", c.out_path);
  c.summary_path = j.value("summary", c.summary_path);
  c.strict = j.value("strict", c.strict);
  return c;
}

}  // namespace relstab
