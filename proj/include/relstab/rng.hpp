#pragma once

// Seeded randomness for reproducible experiments. All distributions are
// implemented on top of the raw mt19937_64 stream so that identical seeds
// give bit-identical results regardless of the standard library in use.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace relstab {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combine a base seed with stream coordinates (dim index, eps index, trial...)
/// into an independent per-cell seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(base ^ 0x5bf03635a1ce4e5bULL);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ (b + 0x9e3779b97f4a7c15ULL));
  s = splitmix64(s ^ (c + 0x2545f4914f6cdd1dULL));
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = raw();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (no cached spare, keeps the stream simple).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * M_PI * u2);
  }

  cplx complex_normal() {
    return {normal() * M_SQRT1_2, normal() * M_SQRT1_2};
  }

  /// Complex Ginibre matrix with iid standard complex normal entries.
  cmat ginibre(Eigen::Index n) {
    cmat a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = complex_normal();
    return a;
  }

  /// GUE-style Hermitian matrix (A + A*)/2 with A Ginibre.
  cmat gue(Eigen::Index n) {
    cmat a = ginibre(n);
    return 0.5 * (a + a.adjoint()).eval();
  }

  /// Haar-distributed unitary: QR of a Ginibre matrix with the R diagonal
  /// phases absorbed into Q.
  cmat haar_unitary(Eigen::Index n) {
    cmat z = ginibre(n);
    Eigen::HouseholderQR<cmat> qr(z);
    cmat q = qr.householderQ();
    cmat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j) {
      const cplx d = r(j, j);
      const double m = std::abs(d);
      q.col(j) *= (m > 0) ? d / m : cplx(1, 0);
    }
    return q;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace relstab
