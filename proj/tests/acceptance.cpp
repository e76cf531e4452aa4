// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "relstab/characters.hpp"
#include "relstab/harness.hpp"
#include "relstab/projection_system.hpp"
#include "relstab/stabilize.hpp"

using namespace relstab;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", number,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// --- 1: soundness ------------------------------------------------------------

void criterion1_soundness() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> presets = {"chain:2,5:3,7", "chain:2:2",
                                            "case2:2,3:3,2"};
  const std::vector<Eigen::Index> dims = {8, 30, 60, 120};
  const std::vector<double> epss = {1e-2, 1e-3};
  double worst = 0.0;
  int trials = 0, bad = 0;
  for (const auto& preset : presets) {
    const auto p = preset_from_string(preset);
    for (std::size_t di = 0; di < dims.size(); ++di)
      for (std::size_t ei = 0; ei < epss.size(); ++ei)
        for (int trial = 0; trial < 20; ++trial) {
          const auto rec = run_trial(
              p, dims[di], epss[ei],
              mix_seed(0xACC1, di, ei, static_cast<std::uint64_t>(trial)),
              {});
          ++trials;
          if (rec.failed || rec.defect_after > 1e-9) ++bad;
          if (!rec.failed) worst = std::max(worst, rec.defect_after);
        }
  }
  const double elapsed = seconds_since(t0);
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d trials, %d above 1e-9, worst defect %.2e, %.1f s (budget "
                "60 s)",
                trials, bad, worst, elapsed);
  report(1, "corrector soundness", bad == 0 && elapsed <= 60.0, detail);
}

// --- 2: idempotence ----------------------------------------------------------

void criterion2_idempotence() {
  double worst = 0.0;
  int bad = 0;
  const auto chain = preset_from_string("chain:2,5:3,7");
  const auto hnn = preset_from_string("case2:2,3:3,2");
  const std::vector<Eigen::Index> dims = {4, 9, 21, 33, 60};
  for (int s = 0; s < 50; ++s) {
    const auto& p = (s % 2 == 0) ? chain : hnn;
    const Eigen::Index dim = dims[static_cast<std::size_t>(s) % dims.size()];
    try {
      const auto exact =
          sample_exact_rep(p, dim, mix_seed(0xACC2, static_cast<std::uint64_t>(s)));
      auto [out, rec] = stabilize(p, exact, {});
      worst = std::max(worst, rec.max_distance());
      if (rec.max_distance() > 1e-8) ++bad;
    } catch (const std::exception&) {
      ++bad;
    }
  }
  char detail[120];
  std::snprintf(detail, sizeof detail, "50 seeds, worst movement %.2e", worst);
  report(2, "idempotence on exact representations", bad == 0, detail);
}

// --- 3: stability curve -------------------------------------------------------

void criterion3_stability_curve() {
  const std::vector<double> epss = {1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<double> medians;
  bool sound = true;
  for (std::size_t ei = 0; ei < epss.size(); ++ei) {
    std::vector<double> distances;
    for (const auto& [preset, dim, trials] :
         {std::tuple<std::string, Eigen::Index, int>{"chain:2,5:3,7", 30, 20},
          std::tuple<std::string, Eigen::Index, int>{"case2:2,3:3,2", 24,
                                                     10}}) {
      const auto p = preset_from_string(preset);
      for (int trial = 0; trial < trials; ++trial) {
        const auto rec = run_trial(
            p, dim, epss[ei],
            mix_seed(0xACC3, ei, static_cast<std::uint64_t>(trial),
                     static_cast<std::uint64_t>(dim)),
            {});
        if (rec.failed) {
          sound = false;
          continue;
        }
        for (double d : rec.generator_distances) distances.push_back(d);
      }
    }
    medians.push_back(median(distances));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < medians.size(); ++i)
    if (!(medians[i] < medians[i - 1])) decreasing = false;
  const bool small_tail = medians.back() <= 1e-2;
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "medians %.3e / %.3e / %.3e / %.3e (eps 1e-1..1e-4)",
                medians[0], medians[1], medians[2], medians[3]);
  report(3, "stability curve strictly decreasing, tail below 1e-2",
         sound && decreasing && small_tail, detail);
}

// --- 4: rank-solver oracle equivalence ------------------------------------------

void criterion4_rank_oracle() {
  Rng rng(0xACC4);
  const std::vector<std::pair<std::vector<long long>, std::vector<long long>>>
      cases = {{{2}, {2}}, {{2}, {3}}, {{3}, {2}}, {{2, 2}, {2, 2}},
               {{3, 2}, {2, 3}}};
  int checked = 0, bad = 0;
  double worst_gap = 0.0;
  while (checked < 100) {
    const auto& [a, b] = cases[checked % cases.size()];
    const auto sys = chain_system(a, b);
    const long long dim = 1 + static_cast<long long>(rng.below(6));
    const auto targets = testing::random_targets(sys, rng);
    ++checked;
    try {
      const auto ranks = nearest_feasible_ranks(sys, targets, dim);
      ranks.validate(sys, dim);
      const double got = ranks.l1_deviation(targets, dim);
      const double best = testing::brute_force_best_deviation(sys, targets, dim);
      if (best < 0) {
        ++bad;  // solver found a vector where brute force says none exists
        continue;
      }
      worst_gap = std::max(worst_gap, std::abs(got - best));
      if (std::abs(got - best) > 1e-9) ++bad;
    } catch (const error&) {
      const double best = testing::brute_force_best_deviation(sys, targets, dim);
      if (best >= 0) ++bad;  // solver infeasible but brute force disagrees
    }
  }
  char detail[120];
  std::snprintf(detail, sizeof detail,
                "100 random targets, worst optimality gap %.2e", worst_gap);
  report(4, "rank solver matches exhaustive search", bad == 0, detail);
}

// --- 5: conjugator ---------------------------------------------------------------

void criterion5_conjugator() {
  Rng rng(0xACC5);
  double worst_conj = 0.0, worst_ratio = 0.0;
  int bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = 6 + static_cast<Eigen::Index>(rng.below(35));
    // Random ranks over a random number of slots (zeros allowed).
    const int slots = 2 + static_cast<int>(rng.below(5));
    std::vector<long long> ranks(slots, 0);
    for (Eigen::Index u = 0; u < dim; ++u)
      ranks[static_cast<std::size_t>(rng.below(slots))] += 1;
    const auto p = synthesize_family(ranks, rng.haar_unitary(dim));
    const cmat v0 = rng.haar_unitary(dim);
    ProjectionFamily q;
    q.dim = dim;
    for (const auto& proj : p.projections)
      q.projections.push_back(v0 * proj * v0.adjoint());

    const cmat hint = rng.haar_unitary(dim);
    const cmat v = conjugating_unitary(p, q, hint);
    double res = assert_unitary(v, 1.0).residual;
    for (std::size_t k = 0; k < ranks.size(); ++k)
      res = std::max(
          res, (v * p.projections[k] * v.adjoint() - q.projections[k]).norm());
    worst_conj = std::max(worst_conj, res);
    if (res > 1e-11) ++bad;

    // Hint that almost intertwines at level delta.
    const double delta = (trial % 2 == 0) ? 1e-2 : 1e-3;
    cmat h = rng.gue(dim);
    h /= op_norm(h);
    Eigen::SelfAdjointEigenSolver<cmat> es(h);
    cvec ph(dim);
    for (Eigen::Index j = 0; j < dim; ++j)
      ph(j) = std::polar(1.0, 0.4 * delta * es.eigenvalues()(j));
    const cmat near_hint = es.eigenvectors() * ph.asDiagonal() *
                           es.eigenvectors().adjoint() * v0;
    double level = 0.0;
    for (std::size_t k = 0; k < ranks.size(); ++k)
      level = std::max(level, hs_norm(q.projections[k] * near_hint -
                                      near_hint * p.projections[k]));
    if (level > delta) {
      ++bad;  // generator failed to produce the requested level
      continue;
    }
    const cmat v2 = conjugating_unitary(p, q, near_hint);
    const double moved = hs_dist(v2, near_hint);
    worst_ratio = std::max(worst_ratio, moved / delta);
    if (moved > 10.0 * delta) ++bad;
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "worst conjugation residual %.2e, worst |V-X|/delta %.2f",
                worst_conj, worst_ratio);
  report(5, "block polar conjugator", bad == 0, detail);
}

// --- 6: Heisenberg traces ----------------------------------------------------------

void criterion6_heisenberg() {
  std::vector<std::pair<long long, long long>> convergents;
  long long fp = 1, fq = 1;
  while (fq <= 233) {
    convergents.push_back({fp, fq});
    const long long next = fp + fq;
    fp = fq;
    fq = next;
  }
  bool all_zero = true;
  double worst_comm = 0.0;
  for (const auto& [p, q] : convergents) {
    for (long long a = -(q - 1); a < q && all_zero; ++a)
      for (long long b = -(q - 1); b < q; ++b) {
        if (a == 0 && b == 0) continue;
        if (heisenberg_word_trace(a, b, 0, p, q) != cplx(0, 0)) {
          all_zero = false;
          break;
        }
      }
    const auto cs = clock_shift_rep(p, q);
    const cmat comm = cs.u * cs.v * cs.u.adjoint() * cs.v.adjoint() -
                      cs.omega * identity(q);
    worst_comm = std::max(worst_comm, hs_norm(comm));
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "convergents up to q=233, commutator residual %.2e",
                worst_comm);
  report(6, "Heisenberg traces match the unique trace",
         all_zero && worst_comm <= 1e-14 && convergents.back().second == 233,
         detail);
}

// --- 7: delta_e tensor powers ----------------------------------------------------------

void criterion7_delta_e() {
  bool ok = true;
  // Worked example: |(omega + 1)/2| = 1/2, eps = 0.01 forces N = 7.
  const cplx omega = std::polar(1.0, 2.0 * M_PI / 3.0);
  const auto worked = tensor_power_delta({(omega + 1.0) / 2.0}, 0.01);
  ok = ok && worked.power == 7;

  Rng rng(0xACC7);
  int checked = 0;
  while (checked < 20) {
    // Random finite abelian group Z_{n1} x ... x Z_{nk}.
    const int k = 1 + static_cast<int>(rng.below(3));
    std::vector<long long> moduli;
    long long order = 1;
    for (int i = 0; i < k; ++i) {
      moduli.push_back(2 + static_cast<long long>(rng.below(7)));
      order *= moduli.back();
    }
    if (order > 200) continue;
    // pi = a few random characters, pi~ = pi + trivial; elements to separate.
    const int nchars = 1 + static_cast<int>(rng.below(4));
    std::vector<std::vector<long long>> chars(nchars,
                                              std::vector<long long>(k));
    for (auto& c : chars)
      for (int i = 0; i < k; ++i)
        c[i] = static_cast<long long>(rng.below(moduli[i]));
    std::vector<std::vector<long long>> elems;
    for (int e = 0; e < 4; ++e) {
      std::vector<long long> g(k, 0);
      bool identity = true;
      for (int i = 0; i < k; ++i) {
        g[i] = static_cast<long long>(rng.below(moduli[i]));
        identity = identity && g[i] == 0;
      }
      if (!identity) elems.push_back(std::move(g));
    }
    if (elems.empty()) continue;
    std::vector<cplx> values;
    bool separated = true;
    for (const auto& g : elems) {
      cplx sum = 1.0;  // the appended trivial character
      for (const auto& c : chars) {
        double phase = 0.0;
        for (int i = 0; i < k; ++i)
          phase += 2.0 * M_PI * static_cast<double>(c[i] * g[i]) /
                   static_cast<double>(moduli[i]);
        sum += std::polar(1.0, phase);
      }
      const cplx v = sum / static_cast<double>(nchars + 1);
      if (std::abs(v) >= 1.0 - 1e-12) separated = false;
      values.push_back(v);
    }
    if (!separated) continue;
    ++checked;
    const double eps = 0.005 + 0.05 * rng.uniform();
    const auto d = tensor_power_delta(values, eps);
    // Independent minimality scan.
    double worst = 0.0;
    for (const cplx& v : values) worst = std::max(worst, std::abs(v));
    long long n_scan = 1;
    while (std::pow(worst, static_cast<double>(n_scan)) >= eps) ++n_scan;
    if (d.power != n_scan) ok = false;
  }
  report(7, "delta_e tensor powers minimal", ok,
         "Z3 example N=7 plus 20 random abelian groups");
}

// --- 8: Frobenius induced traces -----------------------------------------------------

void criterion8_frobenius() {
  Rng rng(0xACC8);
  double worst = 0.0;
  int checked = 0, bad = 0;
  while (checked < 20) {
    FiniteGroup g = [&]() {
      switch (rng.below(6)) {
        case 0: return FiniteGroup::cyclic(2 + static_cast<int>(rng.below(30)));
        case 1: return FiniteGroup::dihedral(2 * (2 + static_cast<int>(rng.below(14))));
        case 2: return FiniteGroup::quaternion8();
        case 3: return FiniteGroup::heisenberg_mod(rng.below(2) ? 2 : 3);
        case 4:
          return FiniteGroup::direct_product(
              FiniteGroup::cyclic(2 + static_cast<int>(rng.below(5))),
              FiniteGroup::dihedral(2 * (2 + static_cast<int>(rng.below(6)))));
        default:
          return FiniteGroup::direct_product(
              FiniteGroup::cyclic(2 + static_cast<int>(rng.below(4))),
              FiniteGroup::quaternion8());
      }
    }();
    if (g.order() > 256) continue;
    const auto center = g.center();
    if (center.size() < 2) continue;
    ++checked;
    // Random central subgroup: generated by one or two central elements.
    std::vector<int> gens{center[rng.below(center.size())]};
    if (rng.below(2)) gens.push_back(center[rng.below(center.size())]);
    const auto h = g.subgroup_generated(gens);
    const auto spec = random_character_on(g, h, rng);
    const double res = induced_trace_verification_residual(g, spec);
    worst = std::max(worst, res);
    if (res > 1e-12) ++bad;
  }
  char detail[120];
  std::snprintf(detail, sizeof detail,
                "20 groups (order <= 256), worst residual %.2e", worst);
  report(8, "Frobenius induced trace closed form", bad == 0, detail);
}

// --- 9: exact mixing ------------------------------------------------------------------

void criterion9_mixing() {
  Rng rng(0xACC9);
  int bad = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int l = 1 + static_cast<int>(rng.below(5));
    const std::size_t len = 1 + rng.below(4);
    std::vector<long long> dims, weights;
    std::vector<std::vector<cplx>> traces;
    long long m = 0;
    for (int i = 0; i < l; ++i) {
      dims.push_back(1 + static_cast<long long>(rng.below(8)));
      weights.push_back(1 + static_cast<long long>(rng.below(6)));
      m += weights.back();
      std::vector<cplx> tr(len);
      for (auto& v : tr)
        v = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)) *
            static_cast<double>(dims.back());
      traces.push_back(std::move(tr));
    }
    const auto mix = mix_traces(dims, weights, traces);
    // Exact rational identity: multiplicity_i * n_i / total == s_i / m.
    for (int i = 0; i < l; ++i)
      if (mix.multiplicities[i] * dims[i] * m != weights[i] * mix.total_dim)
        ++bad;
    // The stacked-representation trace recomputed through the multiplicities
    // must agree bit-for-bit with the weighted mix.
    for (std::size_t kk = 0; kk < len; ++kk) {
      cplx stacked = 0.0;
      for (int i = 0; i < l; ++i)
        stacked += (static_cast<double>(mix.multiplicities[i] * dims[i]) /
                    static_cast<double>(mix.total_dim)) *
                   traces[i][kk];
      cplx weighted = 0.0;
      for (int i = 0; i < l; ++i)
        weighted += (static_cast<double>(weights[i]) / static_cast<double>(m)) *
                    traces[i][kk];
      if (stacked != weighted || mix.mixed[kk] != weighted) ++bad;
    }
  }
  report(9, "trace mixing exact in rational arithmetic", bad == 0,
         "50 random instances, zero error required");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion1_soundness();
  criterion2_idempotence();
  criterion3_stability_curve();
  criterion4_rank_oracle();
  criterion5_conjugator();
  criterion6_heisenberg();
  criterion7_delta_e();
  criterion8_frobenius();
  criterion9_mixing();
  std::printf("%d of 9 criteria passed in %.1f s\n", 9 - failures,
              seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
