#include <lnared/lna.hpp>
#include <lnared/lyapunov.hpp>

#include <doctest.h>

#include "test_util.hpp"

#include <random>

using namespace lnared;
using namespace lnared::testutil;

TEST_CASE("macroscopic rhs of pure degradation") {
  const ReactionNetwork net = decay_model();
  Vector x(1);
  x[0] = 1.0;
  CHECK(macroscopic_rhs(net, x)[0] == doctest::Approx(-1.0));
  CHECK(drift_jacobian(net, x)(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("toy model at the zero state produces only the Hill influx") {
  const ReactionNetwork net = toy_model();
  const Vector rhs = macroscopic_rhs(net, Vector::Zero(4));
  Vector expected(4);
  expected << 3.0, 0.0, 3.0, 0.0;  // order m1, p1, m2, p2
  CHECK((rhs - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rate jacobian matches central finite differences") {
  const ReactionNetwork net = toy_model();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dist(0.05, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(4);
    for (Index i = 0; i < 4; ++i) x[i] = dist(rng);
    const Matrix J_sym = net.rate_jacobian_at(x);
    const Matrix J_fd = finite_difference_jacobian(
        [&](const Vector& y) { return net.eval_rates(y); }, x);
    for (Index r = 0; r < J_sym.rows(); ++r) {
      for (Index c = 0; c < J_sym.cols(); ++c) {
        const double scale = std::max(1.0, std::abs(J_fd(r, c)));
        CHECK(std::abs(J_sym(r, c) - J_fd(r, c)) <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("drift jacobian matches finite differences of the rhs") {
  const ReactionNetwork net = toy_model();
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> dist(0.05, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(4);
    for (Index i = 0; i < 4; ++i) x[i] = dist(rng);
    const Matrix J = drift_jacobian(net, x);
    const Matrix J_fd = finite_difference_jacobian(
        [&](const Vector& y) { return macroscopic_rhs(net, y); }, x);
    CHECK((J - J_fd).cwiseAbs().maxCoeff() <=
          1e-6 * std::max(1.0, J_fd.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("hill repression enters the drift with a negative sign") {
  const ReactionNetwork net = toy_model();
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  const Matrix J = drift_jacobian(net, ss.x_ss);
  // d(m1 production)/d(p2): order is (m1, p1, m2, p2).
  CHECK(J(0, 3) < 0.0);
  CHECK(J(2, 1) < 0.0);
}

TEST_CASE("noise amplitude is the square root of the rates") {
  const ReactionNetwork net = parse_network(
      "species a = 1\nspecies b = 1\n"
      "reaction r1: a -> b @ 4\n"
      "reaction r2: b -> a @ 9\n");
  Vector x(2);
  x << 1.0, 1.0;
  const Matrix F = noise_amplitude(net, x);
  CHECK(F(0, 0) == doctest::Approx(2.0));
  CHECK(F(1, 1) == doctest::Approx(3.0));
  CHECK(F(0, 1) == 0.0);
}

TEST_CASE("zero rates give zero noise entries") {
  const ReactionNetwork net = decay_model();
  Vector x(1);
  x[0] = 0.0;
  CHECK(noise_amplitude(net, x)(0, 0) == 0.0);
}

TEST_CASE("noise amplitude squared recovers the rates at steady state") {
  const ReactionNetwork net = toy_model();
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  const Matrix F = noise_amplitude(net, ss.x_ss);
  const Vector f = net.eval_rates(ss.x_ss);
  for (Index j = 0; j < f.size(); ++j)
    CHECK(F(j, j) * F(j, j) == doctest::Approx(f[j]).epsilon(1e-14));
}

TEST_CASE("negative rate names the offending reaction") {
  const ReactionNetwork net = parse_network(
      "species a = 1\n"
      "reaction weird: a -> @ 1 - a\n");  // negative for a > 1
  Vector x(1);
  x[0] = 2.0;
  CHECK_THROWS_WITH_AS(noise_amplitude(net, x), doctest::Contains("weird"),
                       DomainError);
}

TEST_CASE("steady state of a linear production-degradation network") {
  const ReactionNetwork net = decay_with_source_model();
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  CHECK(ss.x_ss[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ss.residual <= 1e-10 * 2.0);
  CHECK(ss.hurwitz);
}

TEST_CASE("toy steady state from a symmetric guess stays symmetric") {
  // The perfectly symmetric start converges to the symmetric equilibrium,
  // which is a saddle for these parameters; the Hurwitz flag reports that.
  const ReactionNetwork net = toy_model();
  Vector guess(4);
  guess << 1.0, 1.0, 1.0, 1.0;
  const SteadyStateResult ss = steady_state(net, guess);
  CHECK(std::abs(ss.x_ss[0] - ss.x_ss[2]) <= 1e-8);  // m1 = m2
  CHECK(std::abs(ss.x_ss[1] - ss.x_ss[3]) <= 1e-8);  // p1 = p2
  CHECK(ss.residual <= 1e-10 * (1.0 + 10.0));
  CHECK((ss.x_ss.array() > 0.0).all());
  CHECK_FALSE(ss.hurwitz);
}

TEST_CASE("toy steady state from the model start is stable and asymmetric") {
  const ReactionNetwork net = toy_model();
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  CHECK(ss.hurwitz);
  CHECK(ss.x_ss[0] > ss.x_ss[2]);  // m1-high branch
  CHECK((ss.x_ss.array() > 0.0).all());
  CHECK(ss.residual <= 1e-10 * (1.0 + 10.0));

  // Cross-check by long integration from nearby starts.
  for (double scale : {0.9, 1.1}) {
    const Trajectory traj = integrate_ode(
        [&](double, const Vector& x) { return macroscopic_rhs(net, x); },
        scale * net.initial_state(), linspace(0.0, 400.0, 5));
    CHECK((traj.states.row(4).transpose() - ss.x_ss).cwiseAbs().maxCoeff() <
          1e-6);
  }
}

TEST_CASE("newton failure falls back to long integration") {
  const ReactionNetwork net = toy_model();
  SteadyStateOptions opts;
  opts.max_iterations = 0;  // force the fallback path
  const SteadyStateResult ss =
      steady_state(net, net.initial_state(), opts);
  CHECK(ss.used_fallback);
  CHECK(ss.residual <= 1e-10 * (1.0 + 10.0));
}

TEST_CASE("scalar covariance equation has the analytic solution") {
  // Unit birth-death at steady state: J = -1 and diffusion
  // S F^2 S^T / volume = (1 + 1) / 1 = 2, so dX/dt = -2X + 2.
  const ReactionNetwork net = parse_network(
      "species a = 1\n"
      "param b = 1\n"
      "volume = 1\n"
      "output a\n"
      "reaction prod: -> a @ b\n"
      "reaction deg: a -> @ a\n");
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  REQUIRE(ss.x_ss[0] == doctest::Approx(1.0));
  Trajectory pinned;
  pinned.times = linspace(0.0, 1.0, 11);
  pinned.states = ss.x_ss.transpose().replicate(11, 1);
  pinned.derivs = Matrix::Zero(11, 1);

  const CovTrajectory cov = integrate_lyapunov_cov(
      net, pinned, Matrix::Zero(1, 1));
  // X(t) = 1 - exp(-2t); X(1) = 0.864665.
  CHECK(cov.covariances.back()(0, 0) ==
        doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-6));
  cov.validate();
}

TEST_CASE("covariance trajectory approaches the algebraic solution") {
  const ReactionNetwork net = toy_model();
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  const Matrix A = drift_jacobian(net, ss.x_ss);
  const Matrix F = noise_amplitude(net, ss.x_ss);
  const Matrix D = net.stoichiometry() * F * F *
                   net.stoichiometry().transpose() / net.volume();
  const Matrix X_inf = solve_lyapunov(A, D);

  const double gap = std::abs(ss.max_real_eig);
  const double t_end = 20.0 / gap;
  const Trajectory traj = integrate_ode(
      [&](double, const Vector& x) { return macroscopic_rhs(net, x); },
      ss.x_ss, linspace(0.0, t_end, 201));
  const CovTrajectory cov =
      integrate_lyapunov_cov(net, traj, Matrix::Zero(4, 4));
  CHECK((cov.covariances.back() - X_inf).norm() <= 1e-6 * X_inf.norm());

  double worst_asym = 0.0;
  for (const Matrix& X : cov.covariances)
    worst_asym = std::max(worst_asym,
                          (X - X.transpose()).cwiseAbs().maxCoeff());
  CHECK(worst_asym <= 1e-12);
}

TEST_CASE("cointegration agrees with interpolated covariance integration") {
  const ReactionNetwork net = toy_model();
  const Trajectory traj = integrate_ode(
      [&](double, const Vector& x) { return macroscopic_rhs(net, x); },
      net.initial_state(), linspace(0.0, 20.0, 201));
  const CovTrajectory a = integrate_lyapunov_cov(
      net, traj, Matrix::Zero(4, 4), {},
      CovIntegration::interpolate_macroscopic);
  const CovTrajectory b = integrate_lyapunov_cov(
      net, traj, Matrix::Zero(4, 4), {}, CovIntegration::cointegrate);
  double worst = 0.0;
  for (size_t i = 0; i < a.covariances.size(); ++i)
    worst = std::max(
        worst, (a.covariances[i] - b.covariances[i]).cwiseAbs().maxCoeff());
  const double scale = a.covariances.back().cwiseAbs().maxCoeff();
  CHECK(worst <= 1e-4 * scale);
}

TEST_CASE("linearize_at partitions the toy model") {
  const ReactionNetwork net = toy_model();
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  const std::vector<Index> retained{net.species_index("m1"),
                                    net.species_index("m2")};
  const LinearFluctuationSystem sys = linearize_at(net, ss.x_ss, retained);
  CHECK(sys.l == 2);
  CHECK(sys.k == 2);
  CHECK(sys.A.rows() == 4);
  CHECK(sys.B.rows() == 4);
  CHECK(sys.B.cols() == 8);
  CHECK(sys.C.rows() == 2);
  CHECK(sys.labels[0] == "m1");
  CHECK(sys.labels[1] == "m2");
  CHECK(max_real_eigenvalue(sys.A) < 0.0);

  // All-species retention leaves nothing to reduce.
  const std::vector<Index> all{0, 1, 2, 3};
  const LinearFluctuationSystem sys_all = linearize_at(net, ss.x_ss, all);
  CHECK(sys_all.k == 0);

  CHECK_THROWS_AS(linearize_at(net, ss.x_ss, std::vector<Index>{}),
                  DomainError);
}

TEST_CASE("linearize_at rejects unstable points") {
  const ReactionNetwork net = toy_model();
  Vector guess(4);
  guess << 1.0, 1.0, 1.0, 1.0;
  const SteadyStateResult saddle = steady_state(net, guess);
  REQUIRE_FALSE(saddle.hurwitz);
  const std::vector<Index> retained{0, 2};
  CHECK_THROWS_AS(linearize_at(net, saddle.x_ss, retained), NumericalError);
}

TEST_CASE("fluctuation ensemble: zero noise gives identically zero paths") {
  Matrix A(2, 2);
  A << -1, 0, 0, -2;
  const Matrix B = Matrix::Zero(2, 3);
  const EnsembleSummary ens =
      simulate_fluctuation_paths(A, B, 0.01, 1.0, 50, 7);
  CHECK(ens.mean.cwiseAbs().maxCoeff() == 0.0);
  for (const Matrix& X : ens.covariance)
    CHECK(X.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fluctuation ensemble mean stays near zero") {
  Matrix A(1, 1), B(1, 1);
  A << -1.0;
  B << 1.0;
  const long n_paths = 2000;
  const EnsembleSummary ens =
      simulate_fluctuation_paths(A, B, 0.01, 2.0, n_paths, 3, 20);
  for (size_t s = 1; s < ens.times.size(); ++s) {
    const double stddev = std::sqrt(ens.covariance[s](0, 0));
    const double bound = 4.0 * stddev / std::sqrt(double(n_paths));
    CHECK(std::abs(ens.mean(static_cast<Index>(s), 0)) <= bound);
  }
}

TEST_CASE("identical seeds reproduce the ensemble bitwise") {
  Matrix A(1, 1), B(1, 1);
  A << -1.0;
  B << 0.5;
  const EnsembleSummary a = simulate_fluctuation_paths(A, B, 0.01, 1.0, 100, 9);
  const EnsembleSummary b = simulate_fluctuation_paths(A, B, 0.01, 1.0, 100, 9);
  CHECK(a.mean == b.mean);
  REQUIRE(a.covariance.size() == b.covariance.size());
  for (size_t i = 0; i < a.covariance.size(); ++i)
    CHECK(a.covariance[i] == b.covariance[i]);
}
