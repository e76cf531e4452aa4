#pragma once

// Spectral calculus on unitary and normal matrices: orthonormal
// eigendecomposition, Borel-branch fractional powers, greedy phase
// clustering, rounding of eigenphases to roots of unity, and the polar
// decomposition with a deterministic kernel completion.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "relstab/matrix.hpp"

namespace relstab {

/// Principal argument in (-pi, pi]. std::arg returns -pi for negative reals
/// with a negative-zero imaginary part; that case is folded back to +pi so
/// the branch is a function of the value, not of its bit pattern.
inline double principal_arg(cplx z) {
  double a = std::arg(z);
  if (a <= -M_PI) a = M_PI;
  return a;
}

inline double wrap_phase(double phi) {
  phi = std::remainder(phi, 2.0 * M_PI);
  if (phi <= -M_PI) phi = M_PI;
  return phi;
}

/// Distance between two phases along the circle, in [0, pi].
inline double circular_gap(double a, double b) {
  return std::abs(std::remainder(a - b, 2.0 * M_PI));
}

// --- orthonormal eigensystem of a unitary ----------------------------------

/// Eigenvectors (orthonormal columns) and eigenphases of a unitary matrix,
/// sorted by phase ascending in (-pi, pi].
struct UnitaryEigenSystem {
  std::vector<double> phases;  // one per column of `vectors`
  cmat vectors;
};

/// Diagonalizes a unitary through its Hermitian part, refining within
/// near-degenerate cosine eigenspaces using the skew part. This keeps the
/// eigenvector basis orthonormal even for tightly clustered spectra, which a
/// general non-symmetric solver does not guarantee.
inline UnitaryEigenSystem unitary_eigensystem(const cmat& u,
                                              double cos_group_tol = 1e-7) {
  require_square(u, "unitary_eigensystem");
  const Eigen::Index n = u.rows();
  const cmat h = 0.5 * (u + u.adjoint());
  const cmat k = cplx(0, -0.5) * (u - u.adjoint());

  Eigen::SelfAdjointEigenSolver<cmat> es(h);
  if (es.info() != Eigen::Success)
    throw error("unitary_eigensystem", "Hermitian eigensolver failed");
  cmat vectors = es.eigenvectors();
  const Eigen::VectorXd cosines = es.eigenvalues();

  std::vector<double> phases(n);
  Eigen::Index lo = 0;
  while (lo < n) {
    Eigen::Index hi = lo + 1;
    while (hi < n && cosines(hi) - cosines(hi - 1) <= cos_group_tol) ++hi;
    const Eigen::Index g = hi - lo;
    if (g > 1) {
      // Split the cos-degenerate group by the skew part restricted to it.
      const cmat block = vectors.middleCols(lo, g);
      Eigen::SelfAdjointEigenSolver<cmat> ek(
          (block.adjoint() * k * block).eval());
      if (ek.info() != Eigen::Success)
        throw error("unitary_eigensystem", "skew refinement failed");
      vectors.middleCols(lo, g) = block * ek.eigenvectors();
    }
    for (Eigen::Index j = lo; j < hi; ++j) {
      const cvec v = vectors.col(j);
      const cplx c = v.dot(h * v);  // Rayleigh quotients of the two parts
      const cplx s = v.dot(k * v);
      phases[j] = std::atan2(s.real(), c.real());
      if (phases[j] <= -M_PI) phases[j] = M_PI;
    }
    lo = hi;
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return phases[a] < phases[b];
                   });
  UnitaryEigenSystem out;
  out.phases.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.phases[j] = phases[order[j]];
    out.vectors.col(j) = vectors.col(order[j]);
  }
  return out;
}

// --- spectral decompositions and approximants -------------------------------

/// Unit-circle phases with the corresponding orthogonal projection family.
/// Invariants: projections are pairwise orthogonal, idempotent, self-adjoint
/// and sum to the identity; phases ascend in (-pi, pi].
struct SpectralDecomposition {
  std::vector<double> phases;
  std::vector<cmat> projections;
  Eigen::Index dim = 0;

  std::size_t size() const { return phases.size(); }

  cmat reassemble() const {
    cmat u = cmat::Zero(dim, dim);
    for (std::size_t k = 0; k < phases.size(); ++k)
      u += std::polar(1.0, phases[k]) * projections[k];
    return u;
  }
};

/// Finite spectral form Omega = sum_k lambda_k P_k with |lambda_k| = 1.
struct SpectralApproximant {
  std::vector<cplx> lambdas;
  std::vector<cmat> projections;
  Eigen::Index dim = 0;
  double max_radius = 0.0;  // max chordal distance from a merged eigenvalue

  cmat omega() const {
    cmat u = cmat::Zero(dim, dim);
    for (std::size_t k = 0; k < lambdas.size(); ++k)
      u += lambdas[k] * projections[k];
    return u;
  }

  /// Borel branch power applied cluster-wise: lambda^t = e^{i t Arg lambda}.
  cmat power(double t) const {
    cmat u = cmat::Zero(dim, dim);
    for (std::size_t k = 0; k < lambdas.size(); ++k)
      u += std::polar(1.0, t * principal_arg(lambdas[k])) * projections[k];
    return u;
  }
};

/// Groups sorted phases into circular clusters. A gap strictly larger than
/// gap_tol (with a 1e-15 floor) is a candidate boundary; if that yields more
/// than max_clusters clusters, only the max_clusters largest gaps remain
/// boundaries (ties resolved toward the smaller gap index). Returns groups of
/// indices in circular order.
inline std::vector<std::vector<int>> cluster_phases(
    const std::vector<double>& phases, int max_clusters, double gap_tol) {
  if (max_clusters < 1) throw error("cluster_phases", "max_clusters < 1");
  const int s = static_cast<int>(phases.size());
  if (s == 0) return {};
  if (s == 1) return {{0}};
  const double eff = std::max(gap_tol, 1e-15);

  std::vector<double> gap(s);
  for (int j = 0; j < s; ++j) {
    const double next = (j + 1 < s) ? phases[j + 1] : phases[0] + 2.0 * M_PI;
    gap[j] = next - phases[j];
  }
  std::vector<int> boundaries;
  for (int j = 0; j < s; ++j)
    if (gap[j] >= eff) boundaries.push_back(j);
  if (boundaries.empty()) {
    std::vector<int> all(s);
    std::iota(all.begin(), all.end(), 0);
    return {all};
  }
  if (static_cast<int>(boundaries.size()) > max_clusters) {
    std::stable_sort(boundaries.begin(), boundaries.end(),
                     [&](int a, int b) { return gap[a] > gap[b]; });
    boundaries.resize(max_clusters);
    std::sort(boundaries.begin(), boundaries.end());
  }
  std::vector<std::vector<int>> groups;
  const int nb = static_cast<int>(boundaries.size());
  for (int c = 0; c < nb; ++c) {
    const int start = (boundaries[(c + nb - 1) % nb] + 1) % s;
    const int stop = boundaries[c];  // inclusive
    std::vector<int> g;
    for (int j = start; ; j = (j + 1) % s) {
      g.push_back(j);
      if (j == stop) break;
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

inline cplx circular_mean_phase(const std::vector<double>& phases,
                                const std::vector<int>& group) {
  cplx z = 0;
  for (int j : group) z += std::polar(1.0, phases[j]);
  const double m = std::abs(z);
  return (m > 1e-12) ? z / m : std::polar(1.0, phases[group.front()]);
}

/// Spectral decomposition of a unitary. Eigenvalues within circular distance
/// tol of each other (chained transitively along the sorted order) are merged
/// into a single projection; the reported phase of a merged group is its
/// circular mean. `tol` is also the unitarity acceptance threshold.
inline SpectralDecomposition unitary_eig(const cmat& u,
                                         double tol = kInputUnitarityTol) {
  require_unitary(u, tol, "unitary_eig");
  const auto sys = unitary_eigensystem(u);
  const Eigen::Index n = u.rows();

  // Transitive adjacent merge along the circle.
  std::vector<std::vector<int>> groups;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!groups.empty() &&
        sys.phases[j] - sys.phases[groups.back().back()] <= tol)
      groups.back().push_back(static_cast<int>(j));
    else
      groups.push_back({static_cast<int>(j)});
  }
  if (groups.size() > 1 &&
      circular_gap(sys.phases[groups.front().front()],
                   sys.phases[groups.back().back()]) <= tol) {
    auto& first = groups.front();
    first.insert(first.begin(), groups.back().begin(), groups.back().end());
    groups.pop_back();
  }

  SpectralDecomposition d;
  d.dim = n;
  std::vector<std::pair<double, cmat>> parts;
  for (const auto& g : groups) {
    cmat p = cmat::Zero(n, n);
    for (int j : g)
      p += sys.vectors.col(j) * sys.vectors.col(j).adjoint();
    parts.emplace_back(principal_arg(circular_mean_phase(sys.phases, g)),
                       std::move(p));
  }
  std::stable_sort(parts.begin(), parts.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [phi, p] : parts) {
    d.phases.push_back(phi);
    d.projections.push_back(std::move(p));
  }
  return d;
}

/// Merges a spectral decomposition into at most max_clusters clusters (see
/// cluster_phases for the boundary rule). Cluster weights are the circular
/// means of the merged phases, normalized to modulus one, so
/// ||omega() - u||_2 <= max_radius.
inline SpectralApproximant spectral_cluster(const SpectralDecomposition& d,
                                            int max_clusters, double gap_tol) {
  if (max_clusters < 1) throw error("spectral_cluster", "max_clusters < 1");
  const auto groups = cluster_phases(d.phases, max_clusters, gap_tol);
  SpectralApproximant a;
  a.dim = d.dim;
  for (const auto& g : groups) {
    const cplx lambda = circular_mean_phase(d.phases, g);
    cmat p = cmat::Zero(d.dim, d.dim);
    double radius = 0.0;
    for (int j : g) {
      p += d.projections[j];
      radius = std::max(radius,
                        std::abs(std::polar(1.0, d.phases[j]) - lambda));
    }
    a.lambdas.push_back(lambda);
    a.projections.push_back(std::move(p));
    a.max_radius = std::max(a.max_radius, radius);
  }
  return a;
}

// --- Borel branch power -----------------------------------------------------

/// z^t = |z|^t e^{i t Arg z} with Arg in (-pi, pi], applied spectrally to a
/// normal matrix via its Schur form. Normality is required within normal_tol
/// (commutator residual, relative to the mean-square scale of x).
inline cmat branch_power(const cmat& x, double t, double normal_tol = 1e-8) {
  require_square(x, "branch_power");
  const Eigen::Index n = x.rows();
  const double scale =
      std::max(1.0, x.squaredNorm() / static_cast<double>(n));
  const double comm = (x * x.adjoint() - x.adjoint() * x).norm();
  if (comm > normal_tol * scale * std::sqrt(static_cast<double>(n)))
    throw error("branch_power", "matrix is not normal within tolerance");

  Eigen::ComplexSchur<cmat> schur(x);
  if (schur.info() != Eigen::Success)
    throw error("branch_power", "Schur decomposition failed");
  const cmat& q = schur.matrixU();
  cvec f(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx z = schur.matrixT()(j, j);
    const double m = std::abs(z);
    if (m < 1e-300) {
      if (t <= 0)
        throw error("branch_power", "nonpositive power of a singular value");
      f(j) = 0;
    } else {
      f(j) = std::polar(std::pow(m, t), t * principal_arg(z));
    }
  }
  return q * f.asDiagonal() * q.adjoint();
}

// --- rounding to finite order ------------------------------------------------

/// Nearest m-th root of unity to a phase, as a 0-based slot j (root
/// e^{2 pi i j / m}). Exact midpoints resolve to the root with the smaller
/// 1-based index in {1, ..., m}, where slot 0 carries index m.
inline int nearest_root_slot(double phase, long long m) {
  if (m < 1) throw error("nearest_root_slot", "order must be positive");
  const double t = phase * static_cast<double>(m) / (2.0 * M_PI);
  const double fl = std::floor(t);
  const double d_lo = t - fl;
  const double d_hi = 1.0 - d_lo;
  auto to_slot = [m](long long k) {
    long long s = k % m;
    if (s < 0) s += m;
    return static_cast<int>(s);
  };
  const int lo = to_slot(static_cast<long long>(fl));
  const int hi = to_slot(static_cast<long long>(fl) + 1);
  if (d_lo < d_hi) return lo;
  if (d_hi < d_lo) return hi;
  auto label = [m](int slot) { return slot == 0 ? m : slot; };
  return label(lo) <= label(hi) ? lo : hi;
}

/// The m slot projections of a unitary after rounding each eigenphase to the
/// nearest m-th root of unity. Slots may be zero matrices.
inline std::vector<cmat> finite_order_family(const cmat& u, long long m,
                                             double tol = kInputUnitarityTol) {
  require_unitary(u, tol, "finite_order_family");
  const auto sys = unitary_eigensystem(u);
  const Eigen::Index n = u.rows();
  std::vector<cmat> fam(static_cast<std::size_t>(m), cmat::Zero(n, n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const int slot = nearest_root_slot(sys.phases[j], m);
    fam[slot] += sys.vectors.col(j) * sys.vectors.col(j).adjoint();
  }
  return fam;
}

/// Rounds a unitary to the nearest one of order dividing m, keeping its
/// eigenvectors. The result v satisfies v^m = 1 up to roundoff.
inline cmat project_to_order(const cmat& u, long long m,
                             double tol = kInputUnitarityTol) {
  const auto fam = finite_order_family(u, m, tol);
  cmat v = cmat::Zero(u.rows(), u.cols());
  for (long long j = 0; j < m; ++j)
    v += std::polar(1.0, 2.0 * M_PI * static_cast<double>(j) /
                             static_cast<double>(m)) *
         fam[static_cast<std::size_t>(j)];
  return v;
}

// --- polar decomposition ------------------------------------------------------

struct PolarDecomposition {
  cmat unitary;            // V with a = V |a|
  cmat positive;           // |a| = (a* a)^{1/2}
  bool kernel_completed = false;
};

namespace detail {

/// Extends an orthonormal set (columns of `have`, possibly zero columns) to a
/// full basis by projecting standard basis vectors in index order.
inline cmat complete_orthonormal(const cmat& have, Eigen::Index n,
                                 Eigen::Index want) {
  cmat out(n, want);
  Eigen::Index got = 0;
  for (Eigen::Index i = 0; i < n && got < want; ++i) {
    cvec w = cvec::Zero(n);
    w(i) = 1.0;
    w -= have * (have.adjoint() * w).eval();
    for (Eigen::Index j = 0; j < got; ++j)
      w -= out.col(j) * out.col(j).dot(w);
    const double norm = w.norm();
    if (norm > 1e-3) {
      out.col(got++) = w / norm;
    }
  }
  if (got != want)
    throw error("complete_orthonormal", "failed to complete a basis");
  return out;
}

}  // namespace detail

/// Polar decomposition a = V |a| with V unitary. On the kernel of |a| the
/// partial isometry is completed by pairing the right- and left-kernel bases
/// obtained from the standard basis in index order, so the output is
/// deterministic; `kernel_completed` flags when that rule fired.
inline PolarDecomposition polar_decompose(const cmat& a) {
  require_square(a, "polar_decompose");
  const Eigen::Index n = a.rows();
  Eigen::SelfAdjointEigenSolver<cmat> es(a.adjoint() * a);
  if (es.info() != Eigen::Success)
    throw error("polar_decompose", "eigensolver failed");
  Eigen::VectorXd sig = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const cmat& v = es.eigenvectors();
  const double cut =
      std::max(sig.maxCoeff() * static_cast<double>(n) * 1e-14, 1e-300);

  std::vector<Eigen::Index> range, kernel;
  for (Eigen::Index j = 0; j < n; ++j)
    (sig(j) > cut ? range : kernel).push_back(j);

  PolarDecomposition out;
  out.positive = v * sig.asDiagonal() * v.adjoint();
  cmat right(n, static_cast<Eigen::Index>(range.size()));
  cmat left(n, static_cast<Eigen::Index>(range.size()));
  for (std::size_t c = 0; c < range.size(); ++c) {
    right.col(c) = v.col(range[c]);
    left.col(c) = a * v.col(range[c]) / sig(range[c]);
  }
  out.unitary = left * right.adjoint();
  if (!kernel.empty()) {
    out.kernel_completed = true;
    const Eigen::Index k = static_cast<Eigen::Index>(kernel.size());
    const cmat right_ker = detail::complete_orthonormal(right, n, k);
    const cmat left_ker = detail::complete_orthonormal(left, n, k);
    out.unitary += left_ker * right_ker.adjoint();
  }
  return out;
}

/// The unitary factor of the polar decomposition (the nearest unitary for
/// invertible input).
inline cmat polar_unitary(const cmat& a) { return polar_decompose(a).unitary; }

}  // namespace relstab
