#pragma once

// End-to-end correctors for chain and hnn-chain presentations. The pipeline
// extracts the common central power W, clusters its spectrum into a finite
// approximant Omega, divides each generator by the matching branch power,
// rounds the quotients to finite order inside each cluster block, solves the
// projection-equation system with exact integer ranks, and reassembles
// unitaries that satisfy every relator identically. Also provides the
// exact-representation sampler and seeded perturbation used by experiments.

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "relstab/matrix.hpp"
#include "relstab/presentation.hpp"
#include "relstab/projection_system.hpp"
#include "relstab/rng.hpp"
#include "relstab/spectral.hpp"

namespace relstab {

struct StabilizeOptions {
  int max_clusters = 0;    // <= 0 means min(dim, 16)
  double gap_tol = 0.0;    // <= 0 means 10 * median phase gap, clamped
  double input_unitarity_tol = kInputUnitarityTol;
  double output_defect_tol = 1e-9;
  std::uint64_t seed = 0;  // carried into the record; the corrector itself
                           // is deterministic and does not draw randomness
};

/// One corrector trial's measurements.
struct StabilityRecord {
  Eigen::Index dim = 0;
  std::string preset;
  double defect_before = 0.0;
  double defect_after = 0.0;
  std::vector<double> generator_distances;  // ||U_i - U_i'||_2 per generator
  int cluster_count = 0;
  std::uint64_t seed = 0;
  double wall_time_seconds = 0.0;
  bool failed = false;
  std::string failure_reason;

  double max_distance() const {
    double d = 0.0;
    for (double g : generator_distances) d = std::max(d, g);
    return d;
  }

  json to_json() const {
    return json{{"dim", dim},
                {"preset", preset},
                {"defect_before", defect_before},
                {"defect_after", defect_after},
                {"generator_distances", generator_distances},
                {"cluster_count", cluster_count},
                {"seed", seed},
                {"wall_time_seconds", wall_time_seconds},
                {"failed", failed},
                {"failure_reason", failure_reason}};
  }
};

namespace detail {

inline cplx unit_branch_pow(cplx lambda, double t) {
  return std::polar(1.0, t * principal_arg(lambda));
}

struct ClusterBlocks {
  std::vector<cmat> bases;  // orthonormal columns per cluster
  std::vector<cplx> lambdas;
};

/// Clusters the spectrum of the central unitary W. The default gap tolerance
/// is 10x the median circular gap between consecutive eigenphases (counted
/// with multiplicity), clamped to [1e-12, 0.2] so that degenerate and
/// uniformly spread spectra stay well-posed.
inline ClusterBlocks cluster_central(const cmat& w,
                                     const StabilizeOptions& opts) {
  const auto sys = unitary_eigensystem(w);
  const Eigen::Index n = w.rows();
  const int max_clusters =
      opts.max_clusters > 0 ? opts.max_clusters
                            : static_cast<int>(std::min<Eigen::Index>(n, 16));
  double gap_tol = opts.gap_tol;
  if (gap_tol <= 0) {
    std::vector<double> gaps(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double next =
          (j + 1 < n) ? sys.phases[j + 1] : sys.phases[0] + 2.0 * M_PI;
      gaps[j] = next - sys.phases[j];
    }
    std::sort(gaps.begin(), gaps.end());
    const double median = gaps[gaps.size() / 2];
    gap_tol = std::clamp(10.0 * median, 1e-12, 0.2);
  }
  const auto groups = cluster_phases(sys.phases, max_clusters, gap_tol);
  ClusterBlocks out;
  for (const auto& g : groups) {
    cmat basis(n, static_cast<Eigen::Index>(g.size()));
    for (std::size_t c = 0; c < g.size(); ++c)
      basis.col(c) = sys.vectors.col(g[c]);
    out.bases.push_back(std::move(basis));
    out.lambdas.push_back(circular_mean_phase(sys.phases, g));
  }
  return out;
}

struct ChainCorrection {
  std::vector<cmat> corrected;  // chain generators, in chain order
  ClusterBlocks blocks;
  // Slot bases of the first and last family per block (for the conjugator).
  std::vector<std::vector<cmat>> first_family, last_family;
};

/// STEP-1 machinery shared by both correctors: per cluster block, compress
/// each chain generator, strip the branch power of Omega, round to finite
/// order, solve the rank system (optionally with first=last rank ties) and
/// align the approximate slot projections into exact families.
inline ChainCorrection correct_chain_part(const GroupPresentation& p,
                                          const UnitaryTuple& t,
                                          const StabilizeOptions& opts,
                                          bool tie_first_last) {
  const auto orders = p.orders();
  const int m = p.chain_length();
  const Eigen::Index n = t.dim;

  // W := polar unitary of the average of the X_i^{N_i}. On an exact
  // representation all the powers agree and W is that common value.
  cmat avg = cmat::Zero(n, n);
  for (int i = 1; i <= m; ++i)
    avg += matpow(t.matrices[p.chain_generator(i)], orders[i - 1]);
  avg /= static_cast<double>(m);
  cmat w;
  try {
    w = polar_unitary(avg);
  } catch (const error& e) {
    throw error("stabilize/central-power", e.what());
  }

  ChainCorrection out;
  out.blocks = cluster_central(w, opts);
  const auto sys = chain_system(p.a, p.b);

  out.corrected.assign(m, cmat::Zero(n, n));
  const std::size_t nblocks = out.blocks.bases.size();
  out.first_family.resize(nblocks);
  out.last_family.resize(nblocks);

  for (std::size_t k = 0; k < nblocks; ++k) {
    const cmat& basis = out.blocks.bases[k];
    const cplx lambda = out.blocks.lambdas[k];
    const Eigen::Index nk = basis.cols();

    std::vector<std::vector<cmat>> approx(m);
    std::vector<std::vector<double>> targets(m);
    std::vector<cmat> first_candidates;
    for (int i = 1; i <= m; ++i) {
      const long long order = orders[i - 1];
      const cmat& x = t.matrices[p.chain_generator(i)];
      const cmat compressed =
          (basis.adjoint() * x * basis).eval() *
          unit_branch_pow(lambda, -1.0 / static_cast<double>(order));
      cmat rounded;
      try {
        rounded = polar_unitary(compressed);
      } catch (const error& e) {
        throw error("stabilize/block-compression", e.what());
      }
      const auto eig = unitary_eigensystem(rounded);
      std::vector<std::vector<Eigen::Index>> members(
          static_cast<std::size_t>(order));
      for (Eigen::Index c = 0; c < nk; ++c)
        members[nearest_root_slot(eig.phases[c], order)].push_back(c);
      auto& fam = approx[i - 1];
      fam.assign(static_cast<std::size_t>(order), cmat::Zero(nk, nk));
      targets[i - 1].resize(fam.size());
      for (std::size_t j = 0; j < fam.size(); ++j) {
        cmat cols(nk, static_cast<Eigen::Index>(members[j].size()));
        for (std::size_t c = 0; c < members[j].size(); ++c)
          cols.col(static_cast<Eigen::Index>(c)) =
              eig.vectors.col(members[j][c]);
        fam[j] = cols * cols.adjoint();
        targets[i - 1][j] = static_cast<double>(members[j].size()) /
                            static_cast<double>(nk);
        if (i == 1) first_candidates.push_back(std::move(cols));
      }
    }

    RankVector ranks;
    try {
      ranks = nearest_feasible_ranks(sys, targets, nk, tie_first_last);
    } catch (const error& e) {
      throw error("stabilize/rank-assignment", e.what());
    }
    std::vector<std::vector<cmat>> slot_bases;
    try {
      slot_bases = align_system_bases(sys, approx, ranks, &first_candidates);
    } catch (const error& e) {
      throw error("stabilize/alignment", e.what());
    }

    for (int i = 1; i <= m; ++i) {
      const long long order = orders[i - 1];
      cmat finite = cmat::Zero(nk, nk);
      for (long long j = 0; j < order; ++j) {
        const cmat& cols = slot_bases[i - 1][static_cast<std::size_t>(j)];
        if (cols.cols() == 0) continue;
        finite += std::polar(1.0, 2.0 * M_PI * static_cast<double>(j) /
                                      static_cast<double>(order)) *
                  (cols * cols.adjoint());
      }
      finite *= unit_branch_pow(lambda, 1.0 / static_cast<double>(order));
      out.corrected[i - 1] += basis * finite * basis.adjoint();
    }
    out.first_family[k] = slot_bases.front();
    out.last_family[k] = slot_bases.back();
  }
  return out;
}

inline StabilityRecord finish_record(const GroupPresentation& p,
                                     const UnitaryTuple& before,
                                     const UnitaryTuple& after,
                                     const StabilizeOptions& opts,
                                     int cluster_count, double defect_before,
                                     std::chrono::steady_clock::time_point t0) {
  StabilityRecord rec;
  rec.dim = before.dim;
  rec.preset = p.describe();
  rec.defect_before = defect_before;
  rec.defect_after = relation_defect(p, after);
  for (int i = 0; i < before.size(); ++i)
    rec.generator_distances.push_back(
        hs_dist(before.matrices[i], after.matrices[i]));
  rec.cluster_count = cluster_count;
  rec.seed = opts.seed;
  rec.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (rec.defect_after > opts.output_defect_tol)
    throw error("stabilize/final-check",
                "corrected tuple has defect " +
                    std::to_string(rec.defect_after) + " above " +
                    std::to_string(opts.output_defect_tol));
  return rec;
}

}  // namespace detail

/// Corrects a tuple almost satisfying a chain presentation into one
/// satisfying every relator to the output tolerance. The corrected tuple is
/// X_i'' * Omega^{1/N_i} with the X_i'' finite-order parts solving the
/// projection system exactly inside every spectral block of W.
inline std::pair<UnitaryTuple, StabilityRecord> stabilize_chain(
    const GroupPresentation& p, const UnitaryTuple& t,
    const StabilizeOptions& opts = {}) {
  if (p.kind != PresentationKind::chain)
    throw error("stabilize_chain", "presentation is not a chain preset");
  if (t.size() != p.num_generators)
    throw error("stabilize_chain", "tuple does not match presentation");
  t.check(opts.input_unitarity_tol);
  const auto t0 = std::chrono::steady_clock::now();
  const double defect_before = relation_defect(p, t);

  auto core = detail::correct_chain_part(p, t, opts, false);
  UnitaryTuple out;
  out.dim = t.dim;
  out.matrices = std::move(core.corrected);
  auto rec = detail::finish_record(p, t, out, opts,
                                   static_cast<int>(core.blocks.bases.size()),
                                   defect_before, t0);
  return {std::move(out), std::move(rec)};
}

/// Corrects a tuple (U, X_1, ..., X_m) almost satisfying an hnn-chain
/// presentation. STEP 1 runs the chain machinery with the extra per-slot
/// rank equalities between the first and last family; STEP 2 replaces U by
/// the block polar conjugator carrying the first family onto the last.
inline std::pair<UnitaryTuple, StabilityRecord> stabilize_case2(
    const GroupPresentation& p, const UnitaryTuple& t,
    const StabilizeOptions& opts = {}) {
  if (p.kind != PresentationKind::hnn_chain)
    throw error("stabilize_case2", "presentation is not an hnn-chain preset");
  if (t.size() != p.num_generators)
    throw error("stabilize_case2", "tuple does not match presentation");
  t.check(opts.input_unitarity_tol);
  const auto t0 = std::chrono::steady_clock::now();
  const double defect_before = relation_defect(p, t);

  auto core = detail::correct_chain_part(p, t, opts, true);

  const cmat& u_hint = t.matrices[0];
  const Eigen::Index n = t.dim;
  cmat u_out = cmat::Zero(n, n);
  for (std::size_t k = 0; k < core.blocks.bases.size(); ++k) {
    const cmat& basis = core.blocks.bases[k];
    const cmat hint = basis.adjoint() * u_hint * basis;
    cmat v;
    try {
      v = conjugating_unitary_bases(core.first_family[k], core.last_family[k],
                                    hint);
    } catch (const error& e) {
      throw error("stabilize/conjugator", e.what());
    }
    u_out += basis * v * basis.adjoint();
  }

  UnitaryTuple out;
  out.dim = n;
  out.matrices.push_back(std::move(u_out));
  for (auto& x : core.corrected) out.matrices.push_back(std::move(x));
  auto rec = detail::finish_record(p, t, out, opts,
                                   static_cast<int>(core.blocks.bases.size()),
                                   defect_before, t0);
  return {std::move(out), std::move(rec)};
}

inline std::pair<UnitaryTuple, StabilityRecord> stabilize(
    const GroupPresentation& p, const UnitaryTuple& t,
    const StabilizeOptions& opts = {}) {
  switch (p.kind) {
    case PresentationKind::chain: return stabilize_chain(p, t, opts);
    case PresentationKind::hnn_chain: return stabilize_case2(p, t, opts);
    default:
      throw error("stabilize", "no corrector for generic presentations");
  }
}

/// Samples an exact representation of a chain or hnn-chain presentation:
/// random cluster phases (minimum circular separation 0.5), a random feasible
/// rank vector per cluster obtained by solving the rank system against
/// uniform random targets, and a Haar-random frame. For hnn-chain input the
/// intertwiner U is assembled slot by slot with independent Haar twists.
inline UnitaryTuple sample_exact_rep(const GroupPresentation& p,
                                     Eigen::Index dim, std::uint64_t seed) {
  if (p.kind == PresentationKind::generic)
    throw error("sample_exact_rep", "need a chain or hnn-chain preset");
  if (dim < 1) throw error("sample_exact_rep", "dim must be positive");
  Rng rng(seed);
  const auto orders = p.orders();
  const int m = p.chain_length();
  const bool hnn = p.kind == PresentationKind::hnn_chain;

  const int s0 = 1 + static_cast<int>(rng.below(
                         std::min<std::uint64_t>(dim, 4)));
  std::vector<double> phases(s0);
  for (bool ok = false; !ok;) {
    for (auto& ph : phases) ph = rng.uniform(-M_PI, M_PI);
    std::sort(phases.begin(), phases.end());
    ok = true;
    for (int k = 0; k < s0 && ok && s0 > 1; ++k) {
      const double next =
          (k + 1 < s0) ? phases[k + 1] : phases[0] + 2.0 * M_PI;
      if (next - phases[k] < 0.5) ok = false;
    }
  }
  // Random composition of dim into s0 positive block sizes.
  std::vector<Eigen::Index> sizes;
  {
    std::vector<Eigen::Index> cuts;
    while (static_cast<int>(cuts.size()) < s0 - 1) {
      const auto c = static_cast<Eigen::Index>(1 + rng.below(dim - 1));
      if (std::find(cuts.begin(), cuts.end(), c) == cuts.end())
        cuts.push_back(c);
    }
    cuts.push_back(0);
    cuts.push_back(dim);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      sizes.push_back(cuts[i + 1] - cuts[i]);
  }

  const cmat frame = rng.haar_unitary(dim);
  const auto sys = chain_system(p.a, p.b);

  UnitaryTuple t;
  t.dim = dim;
  t.matrices.assign(p.num_generators, cmat::Zero(dim, dim));

  Eigen::Index block_off = 0;
  for (int k = 0; k < s0; ++k) {
    const Eigen::Index nk = sizes[k];
    std::vector<std::vector<double>> targets(m);
    for (int f = 0; f < m; ++f) {
      targets[f].resize(sys.family_sizes[f]);
      double sum = 0.0;
      for (auto& v : targets[f]) {
        v = rng.uniform() + 1e-3;
        sum += v;
      }
      for (auto& v : targets[f]) v /= sum;
    }
    const RankVector ranks = nearest_feasible_ranks(sys, targets, nk, hnn);

    // Coordinates follow the unit paths of the rank flow, so every relator
    // holds coordinate-wise.
    const auto slot_of = decompose_rank_paths(sys, ranks, nk);

    const cmat block_frame = frame.middleCols(block_off, nk);
    for (int i = 1; i <= m; ++i) {
      const long long order = orders[i - 1];
      const cplx root_of_omega = detail::unit_branch_pow(
          std::polar(1.0, phases[k]), 1.0 / static_cast<double>(order));
      cvec diag(nk);
      for (Eigen::Index c = 0; c < nk; ++c)
        diag(c) = std::polar(1.0, 2.0 * M_PI *
                                      static_cast<double>(slot_of[c][i - 1]) /
                                      static_cast<double>(order)) *
                  root_of_omega;
      t.matrices[p.chain_generator(i)] +=
          block_frame * diag.asDiagonal() * block_frame.adjoint();
    }
    if (hnn) {
      // U maps the coordinates starting at slot j onto those ending at slot
      // j, with an independent Haar twist per slot.
      cmat ublock = cmat::Zero(nk, nk);
      for (int j = 0; j < sys.family_sizes[0]; ++j) {
        std::vector<Eigen::Index> first_c, last_c;
        for (Eigen::Index c = 0; c < nk; ++c) {
          if (slot_of[c][0] == j) first_c.push_back(c);
          if (slot_of[c][m - 1] == j) last_c.push_back(c);
        }
        if (first_c.size() != last_c.size())
          throw error("sample_exact_rep", "tied slot counts differ");
        if (first_c.empty()) continue;
        const cmat twist =
            rng.haar_unitary(static_cast<Eigen::Index>(first_c.size()));
        for (std::size_t s = 0; s < first_c.size(); ++s)
          for (std::size_t r = 0; r < last_c.size(); ++r)
            ublock(last_c[r], first_c[s]) = twist(r, s);
      }
      t.matrices[0] += block_frame * ublock * block_frame.adjoint();
    }
    block_off += nk;
  }

  const double defect = relation_defect(p, t);
  if (defect > 1e-10)
    throw error("sample_exact_rep",
                "sampler produced defect " + std::to_string(defect));
  return t;
}

/// Multiplies each generator by exp(i * eps * H_i) with independent
/// GUE-style Hermitian directions normalized to ||H||_2 = 1. eps = 0 returns
/// the input unchanged.
inline UnitaryTuple perturb(const UnitaryTuple& t, double eps,
                            std::uint64_t seed) {
  if (eps < 0) throw error("perturb", "eps must be >= 0");
  if (eps == 0.0) return t;
  Rng rng(seed);
  UnitaryTuple out;
  out.dim = t.dim;
  for (const auto& u : t.matrices) {
    cmat h = rng.gue(t.dim);
    const double norm = hs_norm(h);
    if (norm > 0) h /= norm;
    Eigen::SelfAdjointEigenSolver<cmat> es(h);
    if (es.info() != Eigen::Success)
      throw error("perturb", "eigensolver failed");
    cvec phase(t.dim);
    for (Eigen::Index j = 0; j < t.dim; ++j)
      phase(j) = std::polar(1.0, eps * es.eigenvalues()(j));
    out.matrices.push_back(u * es.eigenvectors() * phase.asDiagonal() *
                           es.eigenvectors().adjoint());
  }
  return out;
}

}  // namespace relstab
