#include <lnared/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace lnared {

SignalNorms signal_norms(const Trajectory& error_signal) {
  if (error_signal.size() < 2)
    throw DomainError("signal needs at least two samples");
  const CubicHermite interp(error_signal);
  const double t0 = interp.t_begin();
  const double t1 = interp.t_end();

  auto norms_on_grid = [&](Index n_samples) {
    SignalNorms norms;
    double l2sq = 0.0;
    const std::vector<double> ts = linspace(t0, t1, n_samples);
    double prev_abs1 = 0.0, prev_abs2sq = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
      const Vector u = interp(ts[i]);
      const double a1 = u.cwiseAbs().sum();
      const double a2sq = u.squaredNorm();
      const double ainf = u.cwiseAbs().maxCoeff();
      norms.linf = std::max(norms.linf, ainf);
      if (i > 0) {
        const double h = ts[i] - ts[i - 1];
        norms.l1 += 0.5 * h * (prev_abs1 + a1);
        l2sq += 0.5 * h * (prev_abs2sq + a2sq);
      }
      prev_abs1 = a1;
      prev_abs2sq = a2sq;
    }
    norms.l2 = std::sqrt(l2sq);
    return norms;
  };

  Index n = std::max<Index>(257, 2 * error_signal.size());
  SignalNorms prev = norms_on_grid(n);
  for (int pass = 0; pass < 14; ++pass) {
    n = 2 * (n - 1) + 1;
    const SignalNorms cur = norms_on_grid(n);
    auto stable = [](double a, double b) {
      return std::abs(a - b) <= 1e-3 * std::max({std::abs(a), std::abs(b),
                                                 1e-300});
    };
    if (stable(prev.l1, cur.l1) && stable(prev.l2, cur.l2) &&
        stable(prev.linf, cur.linf))
      return cur;
    prev = cur;
  }
  return prev;
}

CovarianceError covariance_error(const CovTrajectory& full_cov,
                                 const CovTrajectory& reduced_cov) {
  if (full_cov.size() != reduced_cov.size())
    throw DomainError("covariance trajectories have different lengths");
  CovarianceError err;
  err.times = full_cov.times;
  err.frobenius.resize(full_cov.covariances.size());
  for (size_t i = 0; i < full_cov.covariances.size(); ++i) {
    if (std::abs(full_cov.times[i] - reduced_cov.times[i]) >
        1e-9 * (1.0 + std::abs(full_cov.times[i])))
      throw DomainError("covariance trajectories are not on a common grid");
    const Matrix& Xf = full_cov.covariances[i];
    const Matrix& Xr = reduced_cov.covariances[i];
    if (Xf.rows() != Xr.rows() || Xf.cols() != Xr.cols())
      throw DomainError("covariance dimension mismatch");
    err.frobenius[i] = (Xf - Xr).norm();
  }
  err.steady_state = err.frobenius.empty() ? 0.0 : err.frobenius.back();
  return err;
}

ErrorReport compare_models(const ReactionNetwork& net, const ReducedModel& rm,
                           const std::map<std::string, double>& perturbation,
                           double t_end, const OdeOptions& opts) {
  const Index n = net.species_count();
  if (rm.full_dim() != n) throw DomainError("model dimension mismatch");

  // The reduced model's steady state, mapped back to the original ordering.
  Vector x_ss(n);
  for (Index i = 0; i < n; ++i)
    x_ss[rm.perm[static_cast<size_t>(i)]] = rm.x_ss[i];

  Vector x0 = x_ss;
  for (const auto& [name, delta] : perturbation)
    x0[net.species_index(name)] += delta;

  // Horizon: user t_end extended to the covariance convergence scale.
  const Matrix J_ss = drift_jacobian(net, x_ss);
  const double max_re = max_real_eigenvalue(J_ss);
  if (!(max_re < 0.0))
    throw NumericalError("comparison point is not asymptotically stable");
  const double t_cov = 20.0 / std::abs(max_re);
  const double t_sim = std::max(t_end, 1.05 * t_cov);

  // Sample grid: a uniform grid over the full span refined near t = 0 where
  // the fast transient lives.
  Eigen::EigenSolver<Matrix> es(J_ss, false);
  const double fastest = es.eigenvalues().real().minCoeff();
  const double t_fast = std::min(t_sim, 10.0 / std::abs(fastest));
  std::set<double> grid_set;
  for (double t : linspace(0.0, t_sim, 481)) grid_set.insert(t);
  for (double t : linspace(0.0, t_fast, 321)) grid_set.insert(t);
  const std::vector<double> grid(grid_set.begin(), grid_set.end());

  // Full model: macroscopic trajectory and output covariance.
  const Trajectory x_traj = integrate_ode(
      [&](double, const Vector& x) { return macroscopic_rhs(net, x); }, x0,
      grid, opts);
  const CovTrajectory x_cov = integrate_lyapunov_cov(
      net, x_traj, Matrix::Zero(n, n), opts);

  const Matrix C_full = rm.output_matrix_original_order(n);
  CovTrajectory full_out_cov;
  full_out_cov.times = x_cov.times;
  full_out_cov.covariances.reserve(x_cov.covariances.size());
  for (const Matrix& X : x_cov.covariances)
    full_out_cov.covariances.push_back(C_full * X * C_full.transpose());

  // Reduced model from the matching initial state.
  const ReducedSimResult red = simulate_reduced(rm, x0, grid, opts);

  // Output error signal on the common grid.
  Trajectory err_traj;
  err_traj.times = x_traj.times;
  err_traj.states.resize(x_traj.size(), rm.proj.l);
  for (Index s = 0; s < x_traj.size(); ++s) {
    const Vector y_full =
        C_full * x_traj.states.row(s).transpose();
    err_traj.states.row(s) =
        (y_full - red.outputs.states.row(s).transpose()).transpose();
  }

  ErrorReport report;
  report.norms = signal_norms(err_traj);
  const CovarianceError cov_err = covariance_error(full_out_cov,
                                                   red.output_cov);
  report.cov_err_ss = cov_err.steady_state;
  report.cov_err_times = cov_err.times;
  report.cov_err_traj = cov_err.frobenius;

  report.metadata = rm.metadata;
  report.metadata["omega"] = format_double(net.volume());
  report.metadata["t_end"] = format_double(t_sim);
  report.metadata["rtol"] = format_double(opts.rtol);
  report.metadata["atol"] = format_double(opts.atol);
  {
    std::string p;
    for (const auto& [name, delta] : perturbation) {
      if (!p.empty()) p += ",";
      p += name + "=" + (delta >= 0 ? "+" : "") + format_double(delta);
    }
    report.metadata["perturbation"] = p.empty() ? "none" : p;
  }
  report.metadata["max_algebraic_residual"] =
      format_double(red.max_algebraic_residual);
  return report;
}

}  // namespace lnared
