#include <lnared/io.hpp>

#include <fstream>
#include <sstream>

namespace lnared {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot open '" + path + "' for writing");
  return out;
}

// Fixed key order so report files diff cleanly across runs.
const char* const kReportKeys[] = {
    "omega",  "method", "partition", "block_mode",
    "r",      "t_end",  "rtol",      "atol",
    "perturbation", "max_algebraic_residual",
};

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out = open_out(path);
  out << "t";
  for (Index j = 0; j < traj.dim(); ++j) {
    out << ","
        << (j < static_cast<Index>(traj.labels.size())
                ? traj.labels[static_cast<size_t>(j)]
                : "x" + std::to_string(j + 1));
  }
  out << "\n";
  for (Index i = 0; i < traj.size(); ++i) {
    out << format_double(traj.times[static_cast<size_t>(i)]);
    for (Index j = 0; j < traj.dim(); ++j)
      out << "," << format_double(traj.states(i, j));
    out << "\n";
  }
}

void write_cov_csv(const std::string& path, const CovTrajectory& cov) {
  std::ofstream out = open_out(path);
  const Index n = cov.covariances.empty() ? 0 : cov.covariances[0].rows();
  out << "t";
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j)
      out << ",cov_" << (i + 1) << "_" << (j + 1);
  out << "\n";
  for (Index s = 0; s < cov.size(); ++s) {
    out << format_double(cov.times[static_cast<size_t>(s)]);
    const Matrix& X = cov.covariances[static_cast<size_t>(s)];
    for (Index i = 0; i < n; ++i)
      for (Index j = i; j < n; ++j) out << "," << format_double(X(i, j));
    out << "\n";
  }
}

void write_ensemble_csv(const std::string& path, const EnsembleSummary& ens,
                        const std::vector<std::string>& labels) {
  std::ofstream out = open_out(path);
  const Index dim = ens.mean.cols();
  auto label = [&](Index j) {
    return j < static_cast<Index>(labels.size())
               ? labels[static_cast<size_t>(j)]
               : "x" + std::to_string(j + 1);
  };
  out << "t";
  for (Index j = 0; j < dim; ++j) out << ",mean_" << label(j);
  for (Index j = 0; j < dim; ++j) out << ",var_" << label(j);
  out << "\n";
  for (size_t s = 0; s < ens.times.size(); ++s) {
    out << format_double(ens.times[s]);
    for (Index j = 0; j < dim; ++j)
      out << "," << format_double(ens.mean(static_cast<Index>(s), j));
    for (Index j = 0; j < dim; ++j)
      out << "," << format_double(ens.covariance[s](j, j));
    out << "\n";
  }
}

void write_matrix_dump(const std::string& path, const Matrix& M) {
  std::ofstream out = open_out(path);
  out << M.rows() << " " << M.cols() << "\n";
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out << " ";
      out << format_double(M(i, j));
    }
    out << "\n";
  }
}

Matrix read_matrix_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  Index rows, cols;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0)
    throw ParseError("matrix dump: bad header in '" + path + "'");
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (!(in >> M(i, j)))
        throw ParseError("matrix dump: truncated data in '" + path + "'");
  return M;
}

namespace {

std::vector<std::pair<std::string, std::string>> report_rows(
    const ErrorReport& report) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (const char* key : kReportKeys) {
    auto it = report.metadata.find(key);
    if (it != report.metadata.end()) rows.emplace_back(key, it->second);
  }
  for (const auto& [key, value] : report.metadata) {
    bool fixed = false;
    for (const char* k : kReportKeys)
      if (key == k) fixed = true;
    if (!fixed) rows.emplace_back(key, value);
  }
  rows.emplace_back("L1", format_double(report.norms.l1));
  rows.emplace_back("L2", format_double(report.norms.l2));
  rows.emplace_back("Linf", format_double(report.norms.linf));
  rows.emplace_back("cov_err_ss", format_double(report.cov_err_ss));
  return rows;
}

}  // namespace

void write_report_text(const std::string& path, const ErrorReport& report) {
  std::ofstream out = open_out(path);
  out << "# model comparison report\n";
  for (const auto& [key, value] : report_rows(report)) {
    out << key;
    for (size_t i = key.size(); i < 24; ++i) out << ' ';
    out << value << "\n";
  }
}

void write_report_csv(const std::string& path, const ErrorReport& report) {
  std::ofstream out = open_out(path);
  out << "metric,value\n";
  for (const auto& [key, value] : report_rows(report))
    out << key << "," << value << "\n";
}

}  // namespace lnared
