#include <lnared/lna.hpp>
#include <lnared/lyapunov.hpp>

#include <doctest.h>

#include "test_util.hpp"

#include <random>

using namespace lnared;
using namespace lnared::testutil;

TEST_CASE("A = -I with Q = 2I gives P = I") {
  const Matrix A = -Matrix::Identity(3, 3);
  const Matrix P = solve_lyapunov(A, 2.0 * Matrix::Identity(3, 3));
  CHECK((P - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("triangular example matches the Kronecker oracle") {
  Matrix A(2, 2);
  A << -1, 0, 1, -2;
  const Matrix Q = Matrix::Identity(2, 2);
  const Matrix P = solve_lyapunov(A, Q);
  const Matrix P_oracle = kron_lyapunov_solve(A, Q);
  CHECK((P - P_oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("random stable systems solve to tight residuals") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 10;
    const Matrix A = random_hurwitz(rng, n);
    Matrix Q = random_matrix(rng, n, n);
    Q = (Q + Q.transpose()).eval();
    const Matrix P = solve_lyapunov(A, Q);
    const double residual = (A * P + P * A.transpose() + Q).norm();
    CHECK(residual <= 1e-10 * std::max(1.0, Q.norm()));
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("eigenvalue pairs summing to zero are rejected") {
  Matrix A(2, 2);
  A << 1, 0, 0, -1;
  CHECK_THROWS_WITH_AS(solve_lyapunov(A, Matrix::Identity(2, 2)),
                       doctest::Contains("sum to ~0"), NumericalError);
}

TEST_CASE("metzler recognition") {
  CHECK(is_metzler(-Matrix::Identity(3, 3)).metzler);

  Matrix A(2, 2);
  A << -1, -0.5, 0, -1;
  const MetzlerReport rep = is_metzler(A);
  CHECK_FALSE(rep.metzler);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].row == 0);
  CHECK(rep.violations[0].col == 1);
  CHECK(rep.violations[0].value == doctest::Approx(-0.5));
}

TEST_CASE("toy model drift is not Metzler: two Hill repression entries") {
  const ReactionNetwork net = toy_model();
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  const MetzlerReport rep = is_metzler(drift_jacobian(net, ss.x_ss));
  CHECK_FALSE(rep.metzler);
  CHECK(rep.violations.size() == 2);
  for (const auto& v : rep.violations) CHECK(v.value < 0.0);
}

TEST_CASE("tiny negative off-diagonals count as Metzler") {
  Matrix A(2, 2);
  A << -1, -1e-16, 0.5, -1;
  CHECK(is_metzler(A).metzler);
}

TEST_CASE("max real eigenvalue agrees with known spectra") {
  Matrix A(2, 2);
  A << 0, 1, -1, 0;  // eigenvalues +-i
  CHECK(max_real_eigenvalue(A) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(max_real_eigenvalue(-2.0 * Matrix::Identity(3, 3)) ==
        doctest::Approx(-2.0));
}
