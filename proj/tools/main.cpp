// Command-line surface: sample, perturb and correct unitary tuples, sweep
// stability experiments, evaluate character constructions, and verify the
// library invariants. Exit codes: 0 success, 2 invariant failure, 3 I/O or
// configuration error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relstab/characters.hpp"
#include "relstab/harness.hpp"
#include "relstab/selfcheck.hpp"
#include "relstab/stabilize.hpp"

using namespace relstab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 2;
constexpr int kExitConfig = 3;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RELSTAB_SEED"))
    return std::strtoull(env, nullptr, 10);
  return 1;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("io", "cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw error("io", "cannot write " + path);
  out << content;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

GroupPresentation load_presentation(const std::string& preset,
                                    const std::string& file) {
  if (!file.empty()) return presentation_from_json(read_json_file(file));
  return preset_from_string(preset);
}

int cmd_sample(const std::string& preset, Eigen::Index dim, std::uint64_t seed,
               const std::string& out) {
  const auto p = preset_from_string(preset);
  const auto t = sample_exact_rep(p, dim, seed);
  const std::string payload = tuple_to_json(t, &p).dump(2) + "\n";
  if (out.empty())
    std::cout << payload;
  else
    write_file(out, payload);
  std::fprintf(stderr, "sampled dim %lld, defect %.3e\n",
               static_cast<long long>(dim),
               relation_defect(p, t));
  return kExitOk;
}

int cmd_perturb(const std::string& in, double eps, std::uint64_t seed,
                const std::string& out) {
  const json j = read_json_file(in);
  const auto t = tuple_from_json(j);
  const auto moved = perturb(t, eps, seed);
  json payload = tuple_to_json(moved);
  if (j.contains("presentation")) payload["presentation"] = j["presentation"];
  if (out.empty())
    std::cout << payload.dump(2) << "\n";
  else
    write_file(out, payload.dump(2) + "\n");
  return kExitOk;
}

int cmd_stabilize(const std::string& preset, const std::string& pres_file,
                  const std::string& tuple_file, const std::string& out,
                  StabilizeOptions opts, bool strict) {
  const json j = read_json_file(tuple_file);
  GroupPresentation p;
  if (!preset.empty() || !pres_file.empty()) {
    p = load_presentation(preset, pres_file);
  } else if (j.contains("presentation")) {
    p = presentation_from_json(j.at("presentation"));
  } else {
    throw error("config", "no presentation given (flag or embedded)");
  }
  const auto t = tuple_from_json(j);
  StabilityRecord rec;
  try {
    auto [corrected, record] = stabilize(p, t, opts);
    rec = record;
    if (!out.empty()) write_file(out, tuple_to_json(corrected, &p).dump(2) + "\n");
  } catch (const error& e) {
    rec.dim = t.dim;
    rec.preset = p.describe();
    rec.seed = opts.seed;
    rec.failed = true;
    rec.failure_reason = e.what();
  }
  std::cout << rec.to_json().dump() << "\n";
  if (rec.failed) return strict ? kExitInvariant : kExitOk;
  return kExitOk;
}

int cmd_sweep(ExperimentConfig cfg) {
  cfg.validate();
  const auto result = sweep(cfg);
  const std::string lines = records_to_jsonl(result.records);
  if (cfg.out_path.empty())
    std::cout << lines;
  else
    write_file(cfg.out_path, lines);
  const std::string csv = summary_to_csv(result.summary);
  if (!cfg.summary_path.empty())
    write_file(cfg.summary_path, csv);
  else
    std::cerr << csv;
  if (!result.all_ok && cfg.strict) return kExitInvariant;
  return kExitOk;
}

int cmd_verify(Eigen::Index dim_cap, std::uint64_t seed) {
  const auto results = run_selfchecks(dim_cap, seed);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("[%s] %-42s residual %.3e  (threshold %.1e)\n",
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.residual,
                r.threshold);
    ok = ok && r.pass;
  }
  std::printf("%zu checks, %s\n", results.size(), ok ? "all passed" : "FAILED");
  return ok ? kExitOk : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correct almost-representations of one-relator groups with "
               "center, and evaluate finite-dimensional character "
               "constructions"};
  app.require_subcommand(1);

  std::string preset = "chain:2,5:3,7", pres_file, tuple_file, in_file, out,
              summary, config_file, dim_list = "30", eps_list = "1e-3",
              values, word;
  Eigen::Index dim = 30, dim_cap = 64;
  double eps = 1e-3;
  int trials = 1;
  long long pp = 1, qq = 2, center_gen = -1, root = 1;
  std::uint64_t seed = default_seed();
  bool strict = false, verify_mode = false;
  StabilizeOptions opts;

  auto* sample = app.add_subcommand("sample", "sample an exact representation");
  sample->add_option("--preset", preset, "chain:a:b | case2:a:b | heisenberg");
  sample->add_option("--dim", dim, "matrix dimension")->required();
  sample->add_option("--seed", seed, "rng seed");
  sample->add_option("--out", out, "output tuple file (default stdout)");

  auto* pert = app.add_subcommand("perturb", "perturb a tuple of unitaries");
  pert->add_option("--in", in_file, "input tuple file")->required();
  pert->add_option("--eps", eps, "perturbation size")->required();
  pert->add_option("--seed", seed, "rng seed");
  pert->add_option("--out", out, "output tuple file (default stdout)");

  auto* stab = app.add_subcommand("stabilize",
                                  "correct a tuple into an exact representation");
  // No preset default here: an embedded presentation must win when neither
  // --preset nor --presentation is given.
  std::string stab_preset;
  stab->add_option("--preset", stab_preset, "presentation preset");
  stab->add_option("--presentation", pres_file, "presentation JSON file");
  stab->add_option("--tuple", tuple_file, "input tuple file")->required();
  stab->add_option("--out", out, "corrected tuple file");
  stab->add_option("--max-clusters", opts.max_clusters, "spectral cluster cap");
  stab->add_option("--gap-tol", opts.gap_tol, "cluster gap tolerance");
  stab->add_option("--unitarity-tol", opts.input_unitarity_tol,
                   "input unitarity tolerance");
  stab->add_option("--seed", opts.seed, "seed recorded in the report");
  stab->add_flag("--strict", strict, "exit 2 when the correction fails");

  auto* sw = app.add_subcommand("sweep", "grid of sample-perturb-correct trials");
  sw->add_option("--preset", preset, "presentation preset");
  sw->add_option("--dim", dim_list, "comma-separated dimensions");
  sw->add_option("--eps", eps_list, "comma-separated perturbation sizes");
  sw->add_option("--trials", trials, "trials per grid cell");
  sw->add_option("--seed", seed, "base seed");
  sw->add_option("--out", out, "records file (JSON lines)");
  sw->add_option("--summary", summary, "summary CSV file");
  sw->add_option("--config", config_file, "JSON config (overrides flags)");
  sw->add_option("--max-clusters", opts.max_clusters, "spectral cluster cap");
  sw->add_option("--gap-tol", opts.gap_tol, "cluster gap tolerance");
  sw->add_flag("--strict", strict, "exit 2 on any failed record");

  auto* ch = app.add_subcommand("char", "character constructions");
  ch->require_subcommand(1);
  auto* clock = ch->add_subcommand("clock-shift",
                                   "q-dimensional clock and shift pair");
  clock->add_option("--p", pp, "rotation numerator")->required();
  clock->add_option("--q", qq, "dimension / denominator")->required();
  clock->add_option("--word", word, "a,b,c: print trace of U^a V^b Z^c");
  clock->add_option("--out", out, "write the pair as a tuple JSON");

  auto* delta = ch->add_subcommand("delta-e", "minimal tensor power for delta_e");
  delta->add_option("--values", values, "comma-separated |trace| inputs")
      ->required();
  delta->add_option("--eps", eps, "target accuracy")->required();

  auto* induce = ch->add_subcommand("induce",
                                    "induced central character table (CSV)");
  induce->add_option("--group", in_file, "group JSON (permutation generators)")
      ->required();
  induce->add_option("--center-gen", center_gen,
                     "central element generating H0 (default: whole center)");
  induce->add_option("--root", root, "character sends the generator to "
                                     "e^{2 pi i root / ord}");
  induce->add_option("--seed", seed, "seed for the random character");
  induce->add_flag("--verify", verify_mode,
                   "check against explicit monomial matrices");
  induce->add_option("--out", out, "CSV output file (default stdout)");

  auto* mix = ch->add_subcommand("mix", "exact convex mixture of traces");
  mix->add_option("--config", config_file,
                  "JSON {dims:[...], weights:[...], traces:[[re,im]...]}")
      ->required();

  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  verify->add_option("--dim-cap", dim_cap, "largest dimension exercised");
  verify->add_option("--seed", seed, "rng seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) return cmd_sample(preset, dim, seed, out);
    if (pert->parsed()) return cmd_perturb(in_file, eps, seed, out);
    if (stab->parsed())
      return cmd_stabilize(stab_preset, pres_file, tuple_file, out, opts,
                           strict);
    if (sw->parsed()) {
      ExperimentConfig cfg;
      if (!config_file.empty()) {
        cfg = config_from_json(read_json_file(config_file));
      } else {
        cfg.preset = preset;
        cfg.dims.clear();
        for (long long d : parse_int_list(dim_list))
          cfg.dims.push_back(static_cast<Eigen::Index>(d));
        cfg.epss = parse_double_list(eps_list);
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.options = opts;
        cfg.out_path = out;
        cfg.summary_path = summary;
        cfg.strict = strict;
      }
      return cmd_sweep(cfg);
    }
    if (clock->parsed()) {
      const auto cs = clock_shift_rep(pp, qq);
      if (!word.empty()) {
        const auto abc = parse_int_list(word);
        if (abc.size() != 3) throw error("config", "--word needs a,b,c");
        const cplx tr = heisenberg_word_trace(abc[0], abc[1], abc[2], pp, qq);
        std::printf("%.17g %+.17gi\n", tr.real(), tr.imag());
      }
      if (!out.empty()) {
        UnitaryTuple t;
        t.dim = qq;
        t.matrices = {cs.u, cs.v};
        write_file(out, tuple_to_json(t).dump(2) + "\n");
      }
      if (word.empty() && out.empty())
        std::printf("omega = %.17g %+.17gi\n", cs.omega.real(),
                    cs.omega.imag());
      return kExitOk;
    }
    if (delta->parsed()) {
      std::vector<cplx> vals;
      for (double v : parse_double_list(values)) vals.push_back(cplx(v, 0));
      const auto d = tensor_power_delta(vals, eps);
      std::printf("N = %lld\n", d.power);
      for (const auto& t : d.traces)
        std::printf("%.17g %+.17gi\n", t.real(), t.imag());
      return kExitOk;
    }
    if (induce->parsed()) {
      const auto g = group_from_json(read_json_file(in_file));
      CentralCharacterSpec spec;
      if (center_gen >= 0) {
        spec = cyclic_central_character(g, static_cast<int>(center_gen), root);
      } else {
        Rng rng(seed);
        spec = random_character_on(g, g.center(), rng);
      }
      if (verify_mode) {
        const double res = induced_trace_verification_residual(g, spec);
        std::fprintf(stderr, "monomial verification residual %.3e\n", res);
        if (res > 1e-12) return kExitInvariant;
      }
      const std::string csv = induced_character_csv(g, spec);
      if (out.empty())
        std::cout << csv;
      else
        write_file(out, csv);
      return kExitOk;
    }
    if (mix->parsed()) {
      const json j = read_json_file(config_file);
      const auto dims = j.at("dims").get<std::vector<long long>>();
      const auto weights = j.at("weights").get<std::vector<long long>>();
      std::vector<std::vector<cplx>> traces;
      for (const auto& row : j.at("traces")) {
        std::vector<cplx> tr;
        for (const auto& e : row)
          tr.push_back(cplx(e.at(0).get<double>(), e.at(1).get<double>()));
        traces.push_back(std::move(tr));
      }
      const auto mixed = mix_traces(dims, weights, traces);
      json outj{{"total_dim", mixed.total_dim},
                {"multiplicities", mixed.multiplicities}};
      json tr = json::array();
      for (const auto& v : mixed.mixed) tr.push_back({v.real(), v.imag()});
      outj["mixed"] = tr;
      std::cout << outj.dump(2) << "\n";
      return kExitOk;
    }
    if (verify->parsed()) return cmd_verify(dim_cap, seed);
  } catch (const error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    const std::string stage = e.stage();
    if (stage == "io" || stage == "config" || stage == "preset" ||
        stage == "matrix_from_json" || stage == "tuple_from_json")
      return kExitConfig;
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
