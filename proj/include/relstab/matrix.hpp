#pragma once

// Dense complex matrix kernel: tracial norms, unitarity checks and the JSON
// exchange format. The normalized Hilbert-Schmidt norm ||a||_2 defined here is
// the metric every other module measures "almost" and "close" in.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace relstab {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using json = nlohmann::json;

// Default tolerances. Inputs are accepted at 1e-8, everything this library
// synthesizes is held to 1e-12. Both are overridable at each call site.
inline constexpr double kInputUnitarityTol = 1e-8;
inline constexpr double kSynthesisTol = 1e-12;

class error : public std::runtime_error {
 public:
  error(const std::string& stage, const std::string& message)
      : std::runtime_error("[" + stage + "] " + message), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline cmat identity(Eigen::Index n) { return cmat::Identity(n, n); }

inline void require_square(const cmat& a, const char* where) {
  if (a.rows() != a.cols() || a.rows() < 1)
    throw error(where, "matrix must be square and nonempty");
  if (!a.allFinite()) throw error(where, "matrix has non-finite entries");
}

/// Normalized trace tr_n(a) = (1/n) sum_i a_ii, the unique tracial state on
/// n x n matrices.
inline cplx normalized_trace(const cmat& a) {
  require_square(a, "normalized_trace");
  return a.trace() / static_cast<double>(a.rows());
}

/// Normalized Hilbert-Schmidt norm ||a||_2 = tr_n(a* a)^{1/2}. Equals the
/// Frobenius norm divided by sqrt(n).
inline double hs_norm(const cmat& a) {
  require_square(a, "hs_norm");
  return a.norm() / std::sqrt(static_cast<double>(a.rows()));
}

inline double hs_dist(const cmat& a, const cmat& b) { return hs_norm(a - b); }

/// Operator norm (largest singular value), computed from the top eigenvalue
/// of a* a.
inline double op_norm(const cmat& a) {
  require_square(a, "op_norm");
  Eigen::SelfAdjointEigenSolver<cmat> es(a.adjoint() * a,
                                         Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  return std::sqrt(std::max(0.0, top));
}

struct UnitarityCheck {
  bool pass = false;
  double residual = 0.0;  // Frobenius norm of a* a - 1
};

/// Unitarity test. The residual is the Frobenius norm of a* a - 1 (documented
/// choice; it dominates the per-column defect).
inline UnitarityCheck assert_unitary(const cmat& a, double tol) {
  require_square(a, "assert_unitary");
  if (!(tol > 0)) throw error("assert_unitary", "tol must be positive");
  const double r = (a.adjoint() * a - identity(a.rows())).norm();
  return {r <= tol, r};
}

inline void require_unitary(const cmat& a, double tol, const char* where) {
  const auto chk = assert_unitary(a, tol);
  if (!chk.pass) {
    char msg[96];
    std::snprintf(msg, sizeof msg,
                  "matrix is not unitary within %.3e (residual %.3e)", tol,
                  chk.residual);
    throw error(where, msg);
  }
}

/// a^k for integer k; negative exponents use the adjoint, so the input must
/// be unitary for k < 0 to mean the inverse.
inline cmat matpow(const cmat& a, long long k) {
  require_square(a, "matpow");
  cmat base = (k < 0) ? cmat(a.adjoint()) : a;
  unsigned long long e =
      (k < 0) ? static_cast<unsigned long long>(-(k + 1)) + 1ULL
              : static_cast<unsigned long long>(k);
  cmat acc = identity(a.rows());
  while (e > 0) {
    if (e & 1ULL) acc = (acc * base).eval();
    base = (base * base).eval();
    e >>= 1;
  }
  return acc;
}

// --- JSON exchange format -------------------------------------------------
//
// {"dim": n, "entries": [[re, im], ...]} with entries row-major. The writer
// emits value-preserving doubles (round-trip exact).

inline json matrix_to_json(const cmat& a) {
  require_square(a, "matrix_to_json");
  json entries = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      entries.push_back({a(i, j).real(), a(i, j).imag()});
  return json{{"dim", a.rows()}, {"entries", std::move(entries)}};
}

inline cmat matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries"))
    throw error("matrix_from_json", "expected {dim, entries}");
  const auto n = j.at("dim").get<Eigen::Index>();
  const auto& entries = j.at("entries");
  if (n < 1 || !entries.is_array() ||
      entries.size() != static_cast<std::size_t>(n * n))
    throw error("matrix_from_json", "entry count does not match dim");
  cmat a(n, n);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index jj = 0; jj < n; ++jj, ++k) {
      const auto& e = entries[k];
      a(i, jj) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
    }
  if (!a.allFinite()) throw error("matrix_from_json", "non-finite entries");
  return a;
}

}  // namespace relstab
