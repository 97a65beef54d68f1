#include <lnared/reduce.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace lnared {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_names(std::string_view s) {
  std::vector<std::string> names;
  size_t start = 0;
  while (start <= s.size()) {
    size_t comma = s.find(',', start);
    std::string name = trim(s.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start));
    if (!name.empty()) names.push_back(name);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return names;
}

}  // namespace

ReductionConfig ReductionConfig::parse(std::string_view text) {
  ReductionConfig cfg;
  bool method_seen = false;
  size_t start = 0;
  while (start <= text.size()) {
    size_t semi = text.find(';', start);
    std::string stmt = trim(text.substr(
        start, semi == std::string_view::npos ? std::string_view::npos
                                              : semi - start));
    start = semi == std::string_view::npos ? text.size() + 1 : semi + 1;
    if (stmt.empty()) continue;

    const size_t eq = stmt.find('=');
    if (eq == std::string::npos)
      throw ParseError("reduction config: expected key = value in '" + stmt +
                       "'");
    const std::string key = trim(stmt.substr(0, eq));
    const std::string value = trim(stmt.substr(eq + 1));

    if (key == "retain") {
      cfg.retain = split_names(value);
    } else if (key == "fast") {
      cfg.fast = split_names(value);
    } else if (key == "method") {
      if (value == "structured") {
        cfg.method = ReductionMethod::structured;
      } else if (value == "averaging") {
        cfg.method = ReductionMethod::averaging;
      } else {
        throw ParseError("reduction config: unknown method '" + value + "'");
      }
      method_seen = true;
    } else if (key == "lump") {
      size_t pos = 0;
      while (pos < value.size()) {
        size_t open = value.find('{', pos);
        if (open == std::string::npos) {
          if (!trim(value.substr(pos)).empty() &&
              trim(value.substr(pos)) != ",")
            throw ParseError("reduction config: malformed lump list");
          break;
        }
        size_t close = value.find('}', open);
        if (close == std::string::npos)
          throw ParseError("reduction config: unterminated '{' in lump list");
        std::vector<std::string> names =
            split_names(value.substr(open + 1, close - open - 1));
        if (names.empty())
          throw ParseError("reduction config: empty lump group");
        size_t colon = value.find(':', close);
        if (colon == std::string::npos)
          throw ParseError("reduction config: lump group needs ':<r>'");
        size_t after = colon + 1;
        while (after < value.size() &&
               std::isspace(static_cast<unsigned char>(value[after])))
          ++after;
        size_t num_end = after;
        while (num_end < value.size() &&
               std::isdigit(static_cast<unsigned char>(value[num_end])))
          ++num_end;
        if (num_end == after)
          throw ParseError("reduction config: lump group needs an integer r");
        const Index r = std::stoll(value.substr(after, num_end - after));
        cfg.lumps.emplace_back(std::move(names), r);
        pos = num_end;
      }
    } else {
      throw ParseError("reduction config: unknown key '" + key + "'");
    }
  }
  if (!method_seen) cfg.method = cfg.fast.empty()
                                     ? ReductionMethod::structured
                                     : ReductionMethod::averaging;
  if (cfg.method == ReductionMethod::averaging && cfg.fast.empty())
    throw ParseError("reduction config: averaging needs fast = <species>");
  if (cfg.method == ReductionMethod::structured && !cfg.fast.empty())
    throw ParseError("reduction config: fast = ... requires method = "
                     "averaging");
  return cfg;
}

std::string ReductionConfig::str() const {
  std::ostringstream out;
  auto join = [](const std::vector<std::string>& names) {
    std::string s;
    for (size_t i = 0; i < names.size(); ++i) {
      if (i) s += ", ";
      s += names[i];
    }
    return s;
  };
  if (!retain.empty()) out << "retain = " << join(retain) << "; ";
  if (!lumps.empty()) {
    out << "lump = ";
    for (size_t i = 0; i < lumps.size(); ++i) {
      if (i) out << ", ";
      out << "{" << join(lumps[i].first) << "}:" << lumps[i].second;
    }
    out << "; ";
  }
  if (!fast.empty()) out << "fast = " << join(fast) << "; ";
  out << "method = "
      << (method == ReductionMethod::structured ? "structured" : "averaging");
  return out.str();
}

// ---------------------------------------------------------------------------

Vector ReducedModel::reconstruct(const Vector& z_m, const Vector& z_r) const {
  if (proj.r == 0) return proj.W * z_m;
  return proj.W * z_m + proj.W_r * z_r;
}

double ReducedModel::algebraic_residual(const Vector& z_m,
                                        const Vector& z_r) const {
  if (proj.r == 0) return 0.0;
  const Vector x_hat = reconstruct(z_m, z_r);
  return (proj.V_r.transpose() * macroscopic_rhs(net, x_hat))
      .cwiseAbs()
      .maxCoeff();
}

Vector ReducedModel::solve_algebraic(const Vector& z_m,
                                     Vector z_r_guess) const {
  if (proj.r == 0) return Vector(0);
  Vector z_r = std::move(z_r_guess);
  const double tol = 1e-12;
  for (int it = 0; it < 50; ++it) {
    const Vector x_hat = reconstruct(z_m, z_r);
    const Vector g = proj.V_r.transpose() * macroscopic_rhs(net, x_hat);
    const double res = g.cwiseAbs().maxCoeff();
    if (!std::isfinite(res))
      throw NumericalError("algebraic constraint Newton diverged");
    const double scale = 1.0 + net.eval_rates(x_hat).cwiseAbs().maxCoeff();
    if (res <= tol * scale) return z_r;
    const Matrix J = drift_jacobian(net, x_hat);
    const Matrix J_alg = proj.V_r.transpose() * J * proj.W_r;
    Eigen::FullPivLU<Matrix> lu(J_alg);
    if (!lu.isInvertible())
      throw NumericalError(
          "algebraic constraint Jacobian V_r^T J W_r is singular; the "
          "reduced model is not index-1 at this state");
    z_r += lu.solve(-g);
  }
  const double final_res = algebraic_residual(z_m, z_r);
  if (final_res > 1e-9)
    throw NumericalError("algebraic constraint Newton did not converge "
                         "(residual " +
                         format_double(final_res) + ")");
  return z_r;
}

Vector ReducedModel::reduced_macro_rhs(const Vector& z_m,
                                       const Vector& z_r) const {
  return proj.V.transpose() * macroscopic_rhs(net, reconstruct(z_m, z_r));
}

Matrix ReducedModel::reduced_drift(const Vector& x_hat) const {
  const Matrix J = drift_jacobian(net, x_hat);
  if (proj.r == 0) return proj.V.transpose() * J * proj.W;
  if (method == ReductionMethod::averaging) {
    // Direct Schur complement of the fast block (slow = leading states).
    const Index m = reduced_dim();
    const Index r = proj.r;
    const Matrix J_ss = J.topLeftCorner(m, m);
    const Matrix J_sf = J.topRightCorner(m, r);
    const Matrix J_fs = J.bottomLeftCorner(r, m);
    const Matrix J_ff = J.bottomRightCorner(r, r);
    Eigen::PartialPivLU<Matrix> lu(J_ff);
    return J_ss - J_sf * lu.solve(J_fs);
  }
  const Matrix VtJWr = proj.V.transpose() * J * proj.W_r;
  const Matrix VrtJWr = proj.V_r.transpose() * J * proj.W_r;
  Eigen::PartialPivLU<Matrix> lu(VrtJWr);
  return proj.V.transpose() * J * proj.W -
         VtJWr * lu.solve(proj.V_r.transpose() * J * proj.W);
}

Matrix ReducedModel::reduced_noise_input(const Vector& x_hat) const {
  const Matrix SF = net.stoichiometry() * noise_amplitude(net, x_hat);
  const double scale = 1.0 / std::sqrt(net.volume());
  if (proj.r == 0) return scale * (proj.V.transpose() * SF);
  if (method == ReductionMethod::averaging) {
    const Index m = reduced_dim();
    const Index r = proj.r;
    const Matrix J = drift_jacobian(net, x_hat);
    const Matrix J_sf = J.topRightCorner(m, r);
    const Matrix J_ff = J.bottomRightCorner(r, r);
    const Matrix S_s = SF.topRows(m);
    const Matrix S_f = SF.bottomRows(r);
    Eigen::PartialPivLU<Matrix> lu(J_ff);
    return scale * (S_s - J_sf * lu.solve(S_f));
  }
  const Matrix J = drift_jacobian(net, x_hat);
  const Matrix VtJWr = proj.V.transpose() * J * proj.W_r;
  const Matrix VrtJWr = proj.V_r.transpose() * J * proj.W_r;
  Eigen::PartialPivLU<Matrix> lu(VrtJWr);
  return scale *
         (proj.V.transpose() * SF - VtJWr * lu.solve(proj.V_r.transpose() * SF));
}

Matrix ReducedModel::output_matrix_original_order(Index n_original) const {
  if (n_original != full_dim())
    throw DomainError("output matrix dimension mismatch");
  Matrix Co = Matrix::Zero(proj.l, n_original);
  for (Index i = 0; i < proj.l; ++i) Co(i, perm[static_cast<size_t>(i)]) = 1.0;
  return Co;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Index> names_to_indices(const ReactionNetwork& net,
                                    const std::vector<std::string>& names) {
  std::vector<Index> idx;
  idx.reserve(names.size());
  for (const auto& n : names) idx.push_back(net.species_index(n));
  return idx;
}

struct Ordering {
  std::vector<Index> perm;  // new -> old
  Index l = 0;
  std::vector<std::vector<Index>> groups;  // reducible indices, 0-based in block
  std::vector<Index> r_per_group;
};

// Builds the internal ordering: retained first, then each lumped group.
// Species not mentioned become single-species groups with r = 0.
Ordering build_ordering(
    const ReactionNetwork& net, std::vector<std::string> retain,
    const std::vector<std::pair<std::vector<std::string>, Index>>& lumps) {
  if (retain.empty()) {
    for (Index o : net.outputs()) retain.push_back(net.species()[o].name);
  }
  if (retain.empty())
    throw DomainError(
        "no retained species: give retain = ... or declare outputs");

  Ordering ord;
  std::vector<bool> used(static_cast<size_t>(net.species_count()), false);
  for (const auto& name : retain) {
    const Index idx = net.species_index(name);
    if (used[static_cast<size_t>(idx)])
      throw DomainError("species '" + name + "' listed twice");
    used[static_cast<size_t>(idx)] = true;
    ord.perm.push_back(idx);
  }
  ord.l = static_cast<Index>(ord.perm.size());

  Index block_pos = 0;
  for (const auto& [names, r] : lumps) {
    std::vector<Index> group;
    for (const auto& name : names) {
      const Index idx = net.species_index(name);
      if (used[static_cast<size_t>(idx)])
        throw DomainError("species '" + name +
                          "' appears in more than one place");
      used[static_cast<size_t>(idx)] = true;
      ord.perm.push_back(idx);
      group.push_back(block_pos++);
    }
    if (r < 0 || r > static_cast<Index>(group.size()))
      throw DomainError("lump truncation count out of range");
    ord.groups.push_back(std::move(group));
    ord.r_per_group.push_back(r);
  }
  for (Index i = 0; i < net.species_count(); ++i) {
    if (!used[static_cast<size_t>(i)]) {
      ord.perm.push_back(i);
      ord.groups.push_back({block_pos++});
      ord.r_per_group.push_back(0);
    }
  }
  return ord;
}

std::vector<Index> identity_indices(Index n) {
  std::vector<Index> idx(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  return idx;
}

}  // namespace

ReducedModel reduce_structured(
    const ReactionNetwork& net, const std::vector<std::string>& retain,
    const std::vector<std::pair<std::vector<std::string>, Index>>& lumps,
    const ReduceOptions& opts) {
  const Ordering ord = build_ordering(net, retain, lumps);

  ReducedModel rm(permute_species(net, ord.perm));
  rm.method = ReductionMethod::structured;
  rm.perm = ord.perm;

  rm.ss_info = steady_state(rm.net, rm.net.initial_state(), opts.steady_state);
  rm.x_ss = rm.ss_info.x_ss;

  const std::vector<Index> retained_idx = identity_indices(ord.l);
  const LinearFluctuationSystem sys =
      linearize_at(rm.net, rm.x_ss, retained_idx);

  PartitionSpec part;
  part.l = ord.l;
  part.groups = ord.groups;
  part.r_per_group = ord.r_per_group;
  part.validate();

  rm.gramians = solve_structured_gramians(sys, part, opts.block_mode,
                                          opts.gramians);

  const Index k = sys.k;
  Matrix T22 = Matrix::Zero(k, k);
  Matrix T22_inv = Matrix::Zero(k, k);
  std::vector<Index> kept, dropped;
  Vector sigma_all(k);

  auto balance_range = [&](const std::vector<Index>& block_indices, Index r) {
    const Index sz = static_cast<Index>(block_indices.size());
    Matrix P22(sz, sz), Q22(sz, sz);
    for (Index a = 0; a < sz; ++a) {
      for (Index b = 0; b < sz; ++b) {
        P22(a, b) = rm.gramians->P(ord.l + block_indices[static_cast<size_t>(a)],
                                   ord.l + block_indices[static_cast<size_t>(b)]);
        Q22(a, b) = rm.gramians->Q(ord.l + block_indices[static_cast<size_t>(a)],
                                   ord.l + block_indices[static_cast<size_t>(b)]);
      }
    }
    BalancedBlock bb = balance_block(P22, Q22);
    check_balanced(bb, P22, Q22);
    for (Index a = 0; a < sz; ++a) {
      for (Index b = 0; b < sz; ++b) {
        T22(block_indices[static_cast<size_t>(a)],
            block_indices[static_cast<size_t>(b)]) = bb.T22(a, b);
        T22_inv(block_indices[static_cast<size_t>(a)],
                block_indices[static_cast<size_t>(b)]) = bb.T22_inverse(a, b);
      }
    }
    for (Index a = 0; a < sz; ++a)
      sigma_all[block_indices[static_cast<size_t>(a)]] = bb.sigma[a];
    for (Index a = 0; a < sz - r; ++a)
      kept.push_back(block_indices[static_cast<size_t>(a)]);
    for (Index a = sz - r; a < sz; ++a)
      dropped.push_back(block_indices[static_cast<size_t>(a)]);
    rm.group_P22.push_back(std::move(P22));
    rm.group_Q22.push_back(std::move(Q22));
    rm.balanced_blocks.push_back(std::move(bb));
  };

  if (opts.block_mode == BlockMode::per_group) {
    for (size_t g = 0; g < ord.groups.size(); ++g)
      balance_range(ord.groups[g], ord.r_per_group[g]);
  } else {
    // One balanced block across the whole reducible set; truncation count is
    // the configured total, applied to the globally smallest values.
    std::vector<Index> all;
    for (const auto& g : ord.groups) all.insert(all.end(), g.begin(), g.end());
    std::sort(all.begin(), all.end());
    balance_range(all, part.total_r());
  }

  rm.proj = assemble_projectors(T22, T22_inv, ord.l, kept, dropped);
  rm.sigma = sigma_all;
  if (k > 0) {
    const TruncationOrder ord_sigma = truncation_order(
        sigma_all, opts.sigma_threshold_absolute
                       ? opts.sigma_threshold / sigma_all.maxCoeff()
                       : opts.sigma_threshold);
    rm.suggested_r = ord_sigma.suggested_r;
  }

  rm.C = Matrix::Zero(ord.l, ord.l + k);
  rm.C.leftCols(ord.l).setIdentity();
  rm.C_r = rm.C * rm.proj.W;

  ReductionConfig desc;
  desc.method = ReductionMethod::structured;
  for (Index i = 0; i < ord.l; ++i)
    desc.retain.push_back(rm.net.species()[i].name);
  for (size_t g = 0; g < ord.groups.size(); ++g) {
    std::vector<std::string> names;
    for (Index idx : ord.groups[g])
      names.push_back(rm.net.species()[ord.l + idx].name);
    desc.lumps.emplace_back(std::move(names), ord.r_per_group[g]);
  }
  rm.metadata["method"] = "structured";
  rm.metadata["partition"] = desc.str();
  rm.metadata["r"] = std::to_string(rm.r());
  rm.metadata["block_mode"] =
      opts.block_mode == BlockMode::per_group ? "per-group" : "two";
  return rm;
}

ReducedModel reduce_structured_with_transform(
    const ReactionNetwork& net, const std::vector<std::string>& retain,
    const std::vector<std::string>& reducible_order, const Matrix& T22,
    Index r, const ReduceOptions& opts) {
  std::vector<std::pair<std::vector<std::string>, Index>> lumps;
  if (!reducible_order.empty()) lumps.emplace_back(reducible_order, r);
  const Ordering ord = build_ordering(net, retain, lumps);

  ReducedModel rm(permute_species(net, ord.perm));
  rm.method = ReductionMethod::structured;
  rm.perm = ord.perm;
  rm.ss_info = steady_state(rm.net, rm.net.initial_state(), opts.steady_state);
  rm.x_ss = rm.ss_info.x_ss;

  const Index k = rm.net.species_count() - ord.l;
  if (T22.rows() != k || T22.cols() != k)
    throw DomainError("T22 dimension mismatch");
  if (r < 0 || r > k) throw DomainError("truncation count out of range");

  // Stability check mirrors the balanced pipeline.
  (void)linearize_at(rm.net, rm.x_ss, identity_indices(ord.l));

  Eigen::FullPivLU<Matrix> lu(T22);
  if (!lu.isInvertible()) throw DomainError("T22 is singular");
  const Matrix T22_inv = lu.inverse();

  std::vector<Index> kept, dropped;
  for (Index i = 0; i < k - r; ++i) kept.push_back(i);
  for (Index i = k - r; i < k; ++i) dropped.push_back(i);
  rm.proj = assemble_projectors(T22, T22_inv, ord.l, kept, dropped);

  rm.C = Matrix::Zero(ord.l, ord.l + k);
  rm.C.leftCols(ord.l).setIdentity();
  rm.C_r = rm.C * rm.proj.W;
  rm.metadata["method"] = "structured";
  rm.metadata["partition"] = "fixed transform";
  rm.metadata["r"] = std::to_string(r);
  return rm;
}

ReducedModel reduce_averaging(const ReactionNetwork& net,
                              const std::vector<std::string>& fast,
                              const ReduceOptions& opts) {
  if (fast.empty()) throw DomainError("averaging needs at least one fast "
                                      "species");
  (void)names_to_indices(net, fast);  // existence check

  std::vector<std::string> retain;
  for (Index o : net.outputs()) {
    const std::string& name = net.species()[o].name;
    if (std::find(fast.begin(), fast.end(), name) != fast.end())
      throw DomainError("output species '" + name +
                        "' cannot be eliminated as fast");
    retain.push_back(name);
  }
  if (retain.empty())
    throw DomainError("averaging needs declared outputs to retain");

  // Ordering: outputs, then other slow species, then the fast block last.
  std::vector<std::string> other_slow;
  for (Index i = 0; i < net.species_count(); ++i) {
    const std::string& name = net.species()[i].name;
    if (std::find(retain.begin(), retain.end(), name) != retain.end())
      continue;
    if (std::find(fast.begin(), fast.end(), name) != fast.end()) continue;
    other_slow.push_back(name);
  }

  std::vector<std::pair<std::vector<std::string>, Index>> lumps;
  std::vector<std::string> reducible = other_slow;
  reducible.insert(reducible.end(), fast.begin(), fast.end());
  lumps.emplace_back(reducible, static_cast<Index>(fast.size()));
  const Ordering ord = build_ordering(net, retain, lumps);

  ReducedModel rm(permute_species(net, ord.perm));
  rm.method = ReductionMethod::averaging;
  rm.perm = ord.perm;
  rm.ss_info = steady_state(rm.net, rm.net.initial_state(), opts.steady_state);
  rm.x_ss = rm.ss_info.x_ss;

  const Index n = rm.net.species_count();
  const Index k = n - ord.l;
  const Index r = static_cast<Index>(fast.size());

  // Fast-fast block must be invertible and Hurwitz for the quasi-steady-state
  // elimination to be well posed.
  const Matrix J = drift_jacobian(rm.net, rm.x_ss);
  const Matrix J_ff = J.bottomRightCorner(r, r);
  Eigen::FullPivLU<Matrix> lu(J_ff);
  if (!lu.isInvertible())
    throw NumericalError("fast-fast Jacobian block is singular");
  const double ff_max_re = max_real_eigenvalue(J_ff);
  if (!(ff_max_re < 0.0))
    throw NumericalError("fast-fast Jacobian block is not Hurwitz (max Re "
                         "eigenvalue " +
                         format_double(ff_max_re) +
                         "); fast fluctuations have no stationary limit");

  const Matrix T22 = Matrix::Identity(k, k);
  std::vector<Index> kept, dropped;
  for (Index i = 0; i < k - r; ++i) kept.push_back(i);
  for (Index i = k - r; i < k; ++i) dropped.push_back(i);
  rm.proj = assemble_projectors(T22, T22, ord.l, kept, dropped);

  rm.C = Matrix::Zero(ord.l, n);
  rm.C.leftCols(ord.l).setIdentity();
  rm.C_r = rm.C * rm.proj.W;

  ReductionConfig desc;
  desc.method = ReductionMethod::averaging;
  desc.retain = retain;
  desc.fast = fast;
  rm.metadata["method"] = "averaging";
  rm.metadata["partition"] = desc.str();
  rm.metadata["r"] = std::to_string(r);
  return rm;
}

ReducedModel reduce_with_config(const ReactionNetwork& net,
                                const ReductionConfig& config,
                                const ReduceOptions& opts) {
  if (config.method == ReductionMethod::averaging)
    return reduce_averaging(net, config.fast, opts);
  return reduce_structured(net, config.retain, config.lumps, opts);
}

// ---------------------------------------------------------------------------

ReducedSimResult simulate_reduced(const ReducedModel& rm, const Vector& x0,
                                  std::span<const double> sample_times,
                                  const OdeOptions& opts) {
  const Index n = rm.full_dim();
  if (x0.size() != n) throw DomainError("initial state dimension mismatch");

  Vector x0_perm(n);
  for (Index i = 0; i < n; ++i) x0_perm[i] = x0[rm.perm[static_cast<size_t>(i)]];

  const Vector z_m0 = rm.proj.V.transpose() * x0_perm;
  Vector z_r_warm(rm.r());
  if (rm.r() > 0) {
    z_r_warm = rm.proj.V_r.transpose() * x0_perm;
    z_r_warm = rm.solve_algebraic(z_m0, z_r_warm);
  }

  ReducedSimResult result;

  // Macroscopic DAE: the warm start carries the algebraic solution across
  // right-hand-side evaluations.
  Vector z_r_state = z_r_warm;
  OdeRhs rhs = [&](double, const Vector& z_m) {
    if (rm.r() > 0) z_r_state = rm.solve_algebraic(z_m, z_r_state);
    return rm.reduced_macro_rhs(z_m, z_r_state);
  };
  result.reduced_states = integrate_ode(rhs, z_m0, sample_times, opts);
  for (Index i = 0; i < rm.reduced_dim(); ++i)
    result.reduced_states.labels.push_back("z" + std::to_string(i + 1));

  // Per-sample algebraic states, outputs and reconstruction.
  const Index n_samples = result.reduced_states.size();
  result.algebraic_states.resize(n_samples, rm.r());
  result.outputs.times = result.reduced_states.times;
  result.outputs.states.resize(n_samples, rm.proj.l);
  result.reconstructed.times = result.reduced_states.times;
  result.reconstructed.states.resize(n_samples, n);
  result.reconstructed.labels = rm.net.species_names();
  for (Index i = 0; i < rm.proj.l; ++i)
    result.outputs.labels.push_back(rm.net.species()[i].name);

  Vector z_r_scan = z_r_warm;
  for (Index s = 0; s < n_samples; ++s) {
    const Vector z_m = result.reduced_states.states.row(s).transpose();
    if (rm.r() > 0) {
      z_r_scan = rm.solve_algebraic(z_m, z_r_scan);
      result.algebraic_states.row(s) = z_r_scan.transpose();
      result.max_algebraic_residual =
          std::max(result.max_algebraic_residual,
                   rm.algebraic_residual(z_m, z_r_scan));
    }
    const Vector x_hat = rm.reconstruct(z_m, z_r_scan);
    result.reconstructed.states.row(s) = x_hat.transpose();
    result.outputs.states.row(s) = (rm.C * x_hat).transpose();
  }

  // Output covariance: reduced Lyapunov equation along z_m(t).
  const Index m = rm.reduced_dim();
  const CubicHermite z_interp(result.reduced_states);
  Vector z_r_cov = z_r_warm;
  auto cov_rhs = [&](double t, const Vector& v) {
    const Eigen::Map<const Matrix> Xmap(v.data(), m, m);
    const Matrix X = 0.5 * (Xmap + Xmap.transpose());
    const Vector z_m = z_interp(t);
    if (rm.r() > 0) z_r_cov = rm.solve_algebraic(z_m, z_r_cov);
    const Vector x_hat = rm.reconstruct(z_m, z_r_cov);
    const Matrix J_r = rm.reduced_drift(x_hat);
    const Matrix B_r = rm.reduced_noise_input(x_hat);
    Matrix dX = J_r * X + X * J_r.transpose() + B_r * B_r.transpose();
    dX = 0.5 * (dX + dX.transpose()).eval();
    return Vector(Eigen::Map<const Vector>(dX.data(), m * m));
  };
  const Vector X0 = Vector::Zero(m * m);
  const Trajectory cov_traj = integrate_ode(cov_rhs, X0, sample_times, opts);
  result.output_cov.times = cov_traj.times;
  result.output_cov.covariances.reserve(static_cast<size_t>(cov_traj.size()));
  for (Index s = 0; s < cov_traj.size(); ++s) {
    const Vector row = cov_traj.states.row(s).transpose();
    const Eigen::Map<const Matrix> Xmap(row.data(), m, m);
    const Matrix X = 0.5 * (Xmap + Xmap.transpose());
    result.output_cov.covariances.push_back(rm.C_r * X * rm.C_r.transpose());
  }
  return result;
}

}  // namespace lnared
