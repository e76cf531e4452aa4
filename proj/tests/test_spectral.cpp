#include <catch2/catch_amalgamated.hpp>

#include "relstab/rng.hpp"
#include "relstab/spectral.hpp"

using namespace relstab;

namespace {
cmat diag2(cplx a, cplx b) {
  cmat d = cmat::Zero(2, 2);
  d(0, 0) = a;
  d(1, 1) = b;
  return d;
}
}  // namespace

TEST_CASE("unitary_eig on diagonal and degenerate inputs") {
  const auto id = unitary_eig(identity(5));
  REQUIRE(id.size() == 1);
  CHECK(id.phases[0] == 0.0);
  CHECK((id.projections[0] - identity(5)).norm() < 1e-12);

  const auto d = unitary_eig(diag2(1.0, -1.0));
  REQUIRE(d.size() == 2);
  CHECK_THAT(d.phases[0], Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(d.phases[1], Catch::Matchers::WithinAbs(M_PI, 1e-12));
  CHECK((d.projections[0] - diag2(1.0, 0.0)).norm() < 1e-10);
  CHECK((d.projections[1] - diag2(0.0, 1.0)).norm() < 1e-10);
}

TEST_CASE("unitary_eig on a real rotation finds conjugate phases") {
  // Oracle: eigenvectors of a 2x2 rotation by 2 pi / 3 are (1, -i)/sqrt(2)
  // and (1, i)/sqrt(2) with eigenvalues e^{+- 2 pi i/3}.
  const double th = 2.0 * M_PI / 3.0;
  cmat rot(2, 2);
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const auto d = unitary_eig(rot);
  REQUIRE(d.size() == 2);
  CHECK_THAT(d.phases[0], Catch::Matchers::WithinAbs(-th, 1e-10));
  CHECK_THAT(d.phases[1], Catch::Matchers::WithinAbs(th, 1e-10));
  cmat p_minus(2, 2);
  p_minus << 0.5, cplx(0, -0.5), cplx(0, 0.5), 0.5;
  // e^{-i th} belongs to the eigenvector (1, i)/sqrt 2.
  CHECK((d.projections[0] - p_minus).norm() < 1e-10);
  CHECK(hs_dist(d.reassemble(), rot) < 1e-12);
}

TEST_CASE("unitary_eig reassembles random unitaries") {
  Rng rng(17);
  for (Eigen::Index n : {3, 20, 60}) {
    const cmat u = rng.haar_unitary(n);
    const auto d = unitary_eig(u);
    CHECK(hs_dist(d.reassemble(), u) < 1e-9);
    cmat sum = cmat::Zero(n, n);
    for (std::size_t k = 0; k < d.size(); ++k) {
      const cmat& p = d.projections[k];
      CHECK((p * p - p).norm() < 1e-10);
      CHECK((p - p.adjoint()).norm() < 1e-10);
      sum += p;
    }
    CHECK((sum - identity(n)).norm() < 1e-10);
    CHECK(std::is_sorted(d.phases.begin(), d.phases.end()));
  }
}

TEST_CASE("unitary_eig merges eigenvalues within tol") {
  const cmat u = diag2(std::polar(1.0, 1e-9), std::polar(1.0, -1e-9));
  const auto d = unitary_eig(u, 1e-6);
  REQUIRE(d.size() == 1);
  CHECK((d.projections[0] - identity(2)).norm() < 1e-12);
}

TEST_CASE("branch_power") {
  // Scalar: (e^{i pi})^{1/10} = e^{i pi/10} on the principal branch.
  const cmat s = branch_power(cmat::Constant(1, 1, cplx(-1, 0)), 0.1);
  CHECK(std::abs(s(0, 0) - std::polar(1.0, M_PI / 10)) < 1e-14);

  CHECK(hs_dist(branch_power(identity(6), 0.37), identity(6)) < 1e-14);

  Rng rng(23);
  const cmat u = rng.haar_unitary(40);
  const cmat r = branch_power(u, 1.0 / 7.0);
  CHECK(hs_dist(matpow(r, 7), u) < 1e-10);  // direct multiplication oracle

  cmat notnormal = cmat::Zero(2, 2);
  notnormal(0, 1) = 1.0;
  CHECK_THROWS_AS(branch_power(notnormal, 0.5), error);
}

TEST_CASE("branch powers cancel exactly across the same spectrum") {
  Rng rng(29);
  const cmat u = rng.haar_unitary(12);
  const cmat a = branch_power(u, 1.0 / 10.0);
  const cmat b = branch_power(u, -1.0 / 10.0);
  CHECK(hs_dist(a * b, identity(12)) < 1e-12);
}

TEST_CASE("spectral_cluster") {
  SECTION("single phase collapses to one cluster") {
    const auto d = unitary_eig(identity(4));
    const auto a = spectral_cluster(d, 3, 1e-6);
    REQUIRE(a.lambdas.size() == 1);
    CHECK(std::abs(a.lambdas[0] - cplx(1, 0)) < 1e-12);
  }
  SECTION("gap inspection: {0, 1e-9, pi} with gap_tol 1e-6 gives 2 clusters") {
    SpectralDecomposition d;
    d.dim = 3;
    d.phases = {0.0, 1e-9, M_PI};
    for (int j = 0; j < 3; ++j) {
      cmat p = cmat::Zero(3, 3);
      p(j, j) = 1;
      d.projections.push_back(p);
    }
    const auto a = spectral_cluster(d, 8, 1e-6);
    REQUIRE(a.lambdas.size() == 2);
    CHECK(std::abs(a.lambdas[0] - cplx(1, 0)) < 1e-8);
    CHECK(std::abs(a.lambdas[1] + cplx(1, 0)) < 1e-8);
    CHECK(std::real(a.projections[0].trace()) == 2.0);
  }
  SECTION("equally spaced roots below tol stay singletons") {
    const int m = 6;
    SpectralDecomposition d;
    d.dim = m;
    for (int j = 0; j < m; ++j) {
      d.phases.push_back(wrap_phase(2.0 * M_PI * j / m));
      cmat p = cmat::Zero(m, m);
      p(j, j) = 1;
      d.projections.push_back(p);
    }
    std::sort(d.phases.begin(), d.phases.end());
    const auto a = spectral_cluster(d, m, 2.0 * M_PI / m - 0.01);
    CHECK(a.lambdas.size() == static_cast<std::size_t>(m));
  }
  SECTION("omega stays within the cluster radius") {
    Rng rng(31);
    const cmat u = rng.haar_unitary(24);
    const auto d = unitary_eig(u);
    const auto a = spectral_cluster(d, 4, 10.0);
    CHECK(hs_dist(a.omega(), u) <= a.max_radius + 1e-10);
  }
  SECTION("max_clusters below 1 is an error") {
    const auto d = unitary_eig(identity(2));
    CHECK_THROWS_AS(spectral_cluster(d, 0, 1e-3), error);
  }
}

TEST_CASE("nearest_root_slot tie-breaking follows the 1-based indexing") {
  // Midpoint between slot 0 (index m) and slot 1 (index 1) goes to slot 1.
  CHECK(nearest_root_slot(M_PI / 4.0, 4) == 1);
  // Midpoint between slot 3 (index 3) and slot 0 (index 4) goes to slot 3.
  CHECK(nearest_root_slot(-M_PI / 4.0, 4) == 3);
  CHECK(nearest_root_slot(0.0, 4) == 0);
}

TEST_CASE("project_to_order") {
  // 0.26 turns rounds to 0.25 for m = 4 and to 0.5 for m = 2.
  const cmat u = cmat::Constant(1, 1, std::polar(1.0, 2.0 * M_PI * 0.26));
  CHECK(std::abs(project_to_order(u, 4)(0, 0) - cplx(0, 1)) < 1e-12);
  CHECK(std::abs(project_to_order(u, 2)(0, 0) - cplx(-1, 0)) < 1e-12);

  Rng rng(37);
  const cmat w = rng.haar_unitary(30);
  const cmat v = project_to_order(w, 9);
  CHECK(hs_dist(matpow(v, 9), identity(30)) < 1e-12);
  CHECK(hs_dist(project_to_order(v, 9), v) < 1e-10);

  // Already of finite order: idempotence up to reconstruction error.
  const cmat v2 = project_to_order(v, 9);
  CHECK(hs_dist(v2, v) < 1e-8);
}

TEST_CASE("polar decomposition") {
  SECTION("unitary input is a fixed point") {
    Rng rng(41);
    const cmat u = rng.haar_unitary(14);
    CHECK(hs_dist(polar_unitary(u), u) < 1e-12);
  }
  SECTION("positive diagonal gives the identity") {
    cmat d = cmat::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 3;
    CHECK((polar_unitary(d) - identity(2)).norm() < 1e-13);
  }
  SECTION("kernel completion on diag(0, 5)") {
    cmat d = cmat::Zero(2, 2);
    d(1, 1) = 5;
    const auto pd = polar_decompose(d);
    CHECK(pd.kernel_completed);
    CHECK(std::abs(pd.unitary(1, 1) - cplx(1, 0)) < 1e-14);
    CHECK(assert_unitary(pd.unitary, 1e-10).pass);
  }
  SECTION("V |a| reconstructs a and V is unitary") {
    Rng rng(43);
    const cmat a = rng.ginibre(20);
    const auto pd = polar_decompose(a);
    CHECK(assert_unitary(pd.unitary, 1e-10).pass);
    CHECK((pd.unitary * pd.positive - a).norm() / a.norm() < 1e-12);
  }
  SECTION("zero matrix completes to the identity") {
    const auto pd = polar_decompose(cmat::Zero(3, 3));
    CHECK(pd.kernel_completed);
    CHECK((pd.unitary - identity(3)).norm() == 0.0);
  }
}

TEST_CASE("principal argument convention") {
  CHECK(principal_arg(cplx(-1.0, 0.0)) == M_PI);
  CHECK(principal_arg(cplx(-1.0, -0.0)) == M_PI);
  CHECK_THAT(principal_arg(cplx(0.0, -1.0)),
             Catch::Matchers::WithinAbs(-M_PI / 2, 1e-15));
}

TEST_CASE("a wrong branch convention is detected by the scalar values") {
  // Mutation check: any branch of z^{1/m} passes the m-th power test, so the
  // fault must be caught by the documented value z^t = |z|^t e^{i t Arg z}
  // with Arg in (-pi, pi]. At z = e^{-i pi/2} the wrong branch [0, 2 pi)
  // lands on the opposite quarter.
  const cplx z = std::polar(1.0, -M_PI / 2.0);
  const cplx correct = branch_power(cmat::Constant(1, 1, z), 0.5)(0, 0);
  CHECK(std::abs(correct - std::polar(1.0, -M_PI / 4.0)) < 1e-14);

  double wrong_arg = std::arg(z);
  if (wrong_arg < 0) wrong_arg += 2.0 * M_PI;  // the wrong branch
  const cplx mutated = std::polar(1.0, 0.5 * wrong_arg);
  CHECK(std::abs(mutated - correct) > 1.0);  // the check detects the fault
}
