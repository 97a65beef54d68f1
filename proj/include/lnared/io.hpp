#pragma once

#include <lnared/lna.hpp>
#include <lnared/metrics.hpp>

#include <string>

namespace lnared {

/// Trajectory CSV: header `t,<state1>,...`, full double precision.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Covariance CSV: header `t,cov_<i>_<j>` for upper-triangle pairs in
/// row-major order, indices 1-based.
void write_cov_csv(const std::string& path, const CovTrajectory& cov);

/// Ensemble CSV: header `t,mean_<label>...,var_<label>...`.
void write_ensemble_csv(const std::string& path, const EnsembleSummary& ens,
                        const std::vector<std::string>& labels);

/// Matrix dump: first line `rows cols`, then one row per line, row-major.
void write_matrix_dump(const std::string& path, const Matrix& M);
Matrix read_matrix_dump(const std::string& path);

/// Comparison report as aligned text and as `metric,value` CSV rows; the two
/// files carry identical content.
void write_report_text(const std::string& path, const ErrorReport& report);
void write_report_csv(const std::string& path, const ErrorReport& report);

}  // namespace lnared
