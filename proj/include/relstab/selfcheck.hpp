#pragma once

// Invariant suite behind the `verify` command: every module's documented
// invariants exercised at small dimensions, reporting measured residuals.

#include <string>
#include <vector>

#include "relstab/characters.hpp"
#include "relstab/harness.hpp"
#include "relstab/matrix.hpp"
#include "relstab/presentation.hpp"
#include "relstab/projection_system.hpp"
#include "relstab/rng.hpp"
#include "relstab/spectral.hpp"
#include "relstab/stabilize.hpp"

namespace relstab {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

inline std::vector<CheckResult> run_selfchecks(Eigen::Index dim_cap = 64,
                                               std::uint64_t seed = 20240901) {
  std::vector<CheckResult> out;
  auto check = [&](const std::string& name, double residual, double threshold) {
    out.push_back({name, residual, threshold, residual <= threshold});
  };
  Rng rng(seed);
  const Eigen::Index n = std::min<Eigen::Index>(dim_cap, 48);

  {  // ||u a v||_2 = ||a||_2 for unitaries u, v.
    const cmat a = rng.ginibre(n);
    const cmat u = rng.haar_unitary(n), v = rng.haar_unitary(n);
    check("hs_norm.unitary_invariance",
          std::abs(hs_norm(u * a * v) - hs_norm(a)), 1e-10);
    check("hs_norm.below_operator_norm",
          std::max(0.0, hs_norm(a) - op_norm(a)), 1e-12);
    check("hs_norm.identity", std::abs(hs_norm(identity(n)) - 1.0), 1e-14);
  }
  {  // branch_power(u, 1/m)^m = u.
    const cmat u = rng.haar_unitary(n);
    const cmat r = branch_power(u, 1.0 / 7.0);
    check("branch_power.seventh_root", hs_dist(matpow(r, 7), u), 1e-10);
  }
  {  // project_to_order: order and idempotence.
    const cmat u = rng.haar_unitary(n);
    const cmat v = project_to_order(u, 6);
    check("project_to_order.order", hs_dist(matpow(v, 6), identity(n)), 1e-12);
    check("project_to_order.idempotent", hs_dist(project_to_order(v, 6), v),
          1e-10);
  }
  {  // unitary_eig reassembly, including a degenerate spectrum.
    const cmat basis = rng.haar_unitary(n);
    cvec d(n);
    for (Eigen::Index j = 0; j < n; ++j)
      d(j) = std::polar(1.0, 2.0 * M_PI * static_cast<double>(j % 5) / 5.0);
    const cmat u = basis * d.asDiagonal() * basis.adjoint();
    const auto dec = unitary_eig(u);
    check("unitary_eig.reassembly", hs_dist(dec.reassemble(), u), 1e-9);
    double fam = 0.0;
    cmat sum = cmat::Zero(n, n);
    for (const auto& p : dec.projections) {
      fam = std::max(fam, (p * p - p).norm());
      sum += p;
    }
    fam = std::max(fam, (sum - identity(n)).norm());
    check("unitary_eig.projections", fam, 1e-10);
  }
  {  // polar decomposition.
    const cmat a = rng.ginibre(n);
    const auto pd = polar_decompose(a);
    check("polar.unitary", assert_unitary(pd.unitary, 1.0).residual, 1e-10);
    check("polar.reconstruction",
          (pd.unitary * pd.positive - a).norm() / std::max(1.0, a.norm()),
          1e-12);
  }
  {  // relation_defect: conjugation invariance and exactness.
    const auto p = preset_chain({2, 5}, {3, 7});
    const auto t = sample_exact_rep(p, 12, rng.raw());
    check("relation_defect.exact_rep", relation_defect(p, t), 1e-10);
    const auto noisy = perturb(t, 1e-3, rng.raw());
    const cmat q = rng.haar_unitary(12);
    UnitaryTuple conj;
    conj.dim = 12;
    for (const auto& m : noisy.matrices)
      conj.matrices.push_back(q * m * q.adjoint());
    check("relation_defect.conjugation_invariance",
          std::abs(relation_defect(p, noisy) - relation_defect(p, conj)),
          1e-10);
    const auto h = preset_case2({2, 3}, {3, 2});
    const auto orders = h.orders();
    check("preset_case2.orders_match",
          static_cast<double>(std::abs(orders.front() - orders.back())), 0.0);
  }
  {  // align_system exactness and idempotence on an exact family.
    const auto sys = chain_system({2, 3}, {3, 2});
    const Eigen::Index d = 12;
    std::vector<std::vector<double>> targets(3);
    for (int f = 0; f < 3; ++f) {
      targets[f].assign(sys.family_sizes[f], 0.0);
      double sum = 0;
      for (auto& v : targets[f]) sum += (v = rng.uniform() + 0.05);
      for (auto& v : targets[f]) v /= sum;
    }
    const auto ranks = nearest_feasible_ranks(sys, targets, d);
    const cmat frame = rng.haar_unitary(d);
    const auto fams = synthesize_aligned_families(sys, ranks, frame);
    const auto aligned = align_system(sys, fams, ranks);
    double eqres = 0.0, move = 0.0;
    for (const auto& b : sys.blocks)
      for (const auto& e : b.equations) {
        cmat lhs = cmat::Zero(d, d), rhs = cmat::Zero(d, d);
        for (int j : e.left) lhs += aligned[b.left_family].projections[j];
        for (int j : e.right) rhs += aligned[b.left_family + 1].projections[j];
        eqres = std::max(eqres, (lhs - rhs).norm());
      }
    for (int f = 0; f < 3; ++f)
      for (std::size_t j = 0; j < fams[f].projections.size(); ++j)
        move = std::max(move, (aligned[f].projections[j] -
                               fams[f].projections[j]).norm());
    check("align_system.equations_exact", eqres, 1e-12);
    check("align_system.idempotent_on_exact", move, 1e-10);
    const auto again = nearest_feasible_ranks(sys, targets, d);
    double rankdiff = 0.0;
    for (int f = 0; f < 3; ++f)
      for (std::size_t j = 0; j < again.ranks[f].size(); ++j)
        rankdiff += std::abs(static_cast<double>(again.ranks[f][j] -
                                                 ranks.ranks[f][j]));
    check("nearest_feasible_ranks.deterministic", rankdiff, 0.0);
  }
  {  // conjugating unitary.
    const Eigen::Index d = 16;
    std::vector<long long> ranks{5, 7, 4};
    const auto pfam = synthesize_family(ranks, rng.haar_unitary(d));
    const cmat v0 = rng.haar_unitary(d);
    ProjectionFamily qfam;
    qfam.dim = d;
    for (const auto& p : pfam.projections)
      qfam.projections.push_back(v0 * p * v0.adjoint());
    const cmat v = conjugating_unitary(pfam, qfam, v0);
    double res = assert_unitary(v, 1.0).residual;
    for (std::size_t k = 0; k < ranks.size(); ++k)
      res = std::max(res, (v * pfam.projections[k] * v.adjoint() -
                           qfam.projections[k]).norm());
    check("conjugating_unitary.intertwines", res, 1e-11);
  }
  {  // stabilize: soundness, idempotence, equivariance.
    const auto p = preset_chain({2, 5}, {3, 7});
    const Eigen::Index d = std::min<Eigen::Index>(dim_cap, 24);
    const auto exact = sample_exact_rep(p, d, rng.raw());
    StabilizeOptions opts;
    auto [fixed, rec0] = stabilize_chain(p, exact, opts);
    check("stabilize.idempotent_on_exact", rec0.max_distance(), 1e-8);
    const auto noisy = perturb(exact, 1e-3, rng.raw());
    auto [corrected, rec1] = stabilize_chain(p, noisy, opts);
    check("stabilize.sound", rec1.defect_after, 1e-9);
    const cmat q = rng.haar_unitary(d);
    UnitaryTuple conj;
    conj.dim = d;
    for (const auto& m : noisy.matrices)
      conj.matrices.push_back(q * m * q.adjoint());
    auto [corrected2, rec2] = stabilize_chain(p, conj, opts);
    double eq = 0.0;
    for (int i = 0; i < conj.size(); ++i)
      eq = std::max(eq, hs_dist(corrected2.matrices[i],
                                q * corrected.matrices[i] * q.adjoint()));
    check("stabilize.conjugation_equivariant", eq, 1e-8);
    const auto h = preset_case2({2, 3}, {3, 2});
    const auto hx = perturb(sample_exact_rep(h, d, rng.raw()), 1e-3, rng.raw());
    auto [hcor, hrec] = stabilize_case2(h, hx, opts);
    check("stabilize.case2_sound", hrec.defect_after, 1e-9);
  }
  {  // perturbation model.
    const auto p = preset_chain({2}, {2});
    const auto t = sample_exact_rep(p, 10, rng.raw());
    const double eps = 1e-2;
    const auto moved = perturb(t, eps, rng.raw());
    double d = 0.0;
    for (int i = 0; i < t.size(); ++i)
      d = std::max(d, hs_dist(t.matrices[i], moved.matrices[i]));
    check("perturb.bounded_by_eps", std::max(0.0, d - eps * (1 + 1e-10)), 0.0);
    const auto same = perturb(t, 0.0, rng.raw());
    double z = 0.0;
    for (int i = 0; i < t.size(); ++i)
      z = std::max(z, hs_dist(t.matrices[i], same.matrices[i]));
    check("perturb.zero_eps_identity", z, 0.0);
  }
  {  // clock-shift commutator is exactly scalar.
    const auto cs = clock_shift_rep(1, 13);
    const cmat comm =
        cs.u * cs.v * cs.u.adjoint() * cs.v.adjoint() - cs.omega * identity(13);
    check("clock_shift.central_commutator", hs_norm(comm), 1e-14);
    check("heisenberg_trace.vanishing",
          std::abs(heisenberg_word_trace(5, 8, 0, 8, 13)), 0.0);
  }
  {  // delta_e tensor power: worked example and minimality.
    const auto d = tensor_power_delta({cplx(0.5, 0)}, 0.01);
    check("tensor_power_delta.z3_example",
          static_cast<double>(std::abs(d.power - 7)), 0.0);
  }
  {  // exact trace mixing.
    const auto mix = mix_traces({1, 1}, {1, 1}, {{cplx(1, 0), cplx(1, 0)},
                                                 {cplx(1, 0), cplx(-1, 0)}});
    check("mix_traces.z2_example",
          std::abs(mix.mixed[1]) +
              std::abs(static_cast<double>(mix.total_dim - 2)),
          0.0);
  }
  {  // induced trace closed form vs explicit monomial matrices.
    const auto g = FiniteGroup::dihedral(4);
    const auto z = g.center();
    int nontrivial = z[0] == g.identity() ? z[1] : z[0];
    const auto spec = cyclic_central_character(g, nontrivial, 1);
    check("induced_trace.monomial_verification",
          induced_trace_verification_residual(g, spec), 1e-12);
  }
  {  // root-of-unity net.
    double worst = 0.0;
    for (int k : {1, 2, 7, 24}) {
      for (int trial = 0; trial < 32; ++trial) {
        const double theta = rng.uniform(-2.0, 2.0);
        const auto rp = nearest_root_phase(theta, k);
        worst = std::max(worst,
                         rp.error - 2.0 * std::sin(M_PI / (2.0 * k)) - 1e-12);
      }
    }
    check("nearest_root_phase.chord_bound", std::max(0.0, worst), 0.0);
  }
  return out;
}

}  // namespace relstab
