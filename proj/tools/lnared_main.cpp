// Command-line front end: steady states, LNA simulation, structured and
// averaging reduction, model comparison, monotonicity checks.

#include <lnared/io.hpp>
#include <lnared/lyapunov.hpp>
#include <lnared/metrics.hpp>
#include <lnared/parser.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace lnared;

namespace {

struct CommonArgs {
  std::string model_path;
  std::string out_dir = ".";
  double omega = 0.0;  // 0 = keep the model file's volume
  double t_end = 50.0;
  double rtol = 1e-8;
  double atol = 1e-10;
  Index samples = 401;
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("model", args.model_path, "model file (network DSL)")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--omega", args.omega,
                  "compartment volume override (model default otherwise)");
  cmd->add_option("--t-end", args.t_end, "integration horizon")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rtol", args.rtol, "relative tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--atol", args.atol, "absolute tolerance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--samples", args.samples, "output sample count")
      ->check(CLI::Range(Index{2}, Index{2000000}));
  cmd->add_option("--seed", args.seed, "random seed for path sampling");
}

ReactionNetwork load_model(const CommonArgs& args) {
  ReactionNetwork net = parse_network_file(args.model_path);
  if (args.omega != 0.0) net = net.with_volume(args.omega);
  return net;
}

OdeOptions ode_options(const CommonArgs& args) {
  OdeOptions opts;
  opts.rtol = args.rtol;
  opts.atol = args.atol;
  return opts;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  fs::create_directories(args.out_dir);
  return (fs::path(args.out_dir) / name).string();
}

std::map<std::string, double> parse_perturbation(const std::string& spec) {
  std::map<std::string, double> p;
  size_t start = 0;
  while (start < spec.size()) {
    size_t comma = spec.find(',', start);
    const std::string item = spec.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    start = comma == std::string::npos ? spec.size() : comma + 1;
    if (item.empty()) continue;
    const size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw DomainError("perturbation must be species=+delta, got '" + item +
                        "'");
    const std::string name = item.substr(0, eq);
    size_t pos = 0;
    const double delta = std::stod(item.substr(eq + 1), &pos);
    if (pos != item.size() - eq - 1)
      throw DomainError("bad perturbation value in '" + item + "'");
    p[name] = delta;
  }
  return p;
}

int cmd_steady_state(const CommonArgs& args) {
  const ReactionNetwork net = load_model(args);
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  for (Index i = 0; i < net.species_count(); ++i)
    std::cout << "x_ss[" << net.species()[i].name
              << "] = " << format_double(ss.x_ss[i]) << "\n";
  std::cout << "residual = " << format_double(ss.residual) << "\n";
  if (ss.hurwitz) {
    std::cout << "hurwitz = yes (max Re eigenvalue "
              << format_double(ss.max_real_eig) << ")\n";
  } else {
    std::cout << "hurwitz = no (max Re eigenvalue "
              << format_double(ss.max_real_eig) << ")\n";
    std::cerr << "warning: J(x_ss) is not Hurwitz; the equilibrium is "
                 "unstable\n";
  }
  std::ofstream out(out_path(args, "steady_state.csv"));
  out << "species,concentration\n";
  for (Index i = 0; i < net.species_count(); ++i)
    out << net.species()[i].name << "," << format_double(ss.x_ss[i]) << "\n";
  return 0;
}

int cmd_simulate(const CommonArgs& args, long paths, double dt,
                 const std::string& perturb, const std::string& cov_mode) {
  ReactionNetwork net = load_model(args);
  if (!perturb.empty()) {
    Vector x0 = net.initial_state();
    for (const auto& [name, delta] : parse_perturbation(perturb))
      x0[net.species_index(name)] += delta;
    net = net.with_initial_state(x0);
  }
  const std::vector<double> grid = linspace(0.0, args.t_end, args.samples);
  const OdeOptions opts = ode_options(args);

  Trajectory traj = integrate_ode(
      [&](double, const Vector& x) { return macroscopic_rhs(net, x); },
      net.initial_state(), grid, opts);
  traj.labels = net.species_names();
  write_trajectory_csv(out_path(args, "trajectory.csv"), traj);

  const CovIntegration mode = cov_mode == "cointegrate"
                                  ? CovIntegration::cointegrate
                                  : CovIntegration::interpolate_macroscopic;
  const Index n = net.species_count();
  const CovTrajectory cov =
      integrate_lyapunov_cov(net, traj, Matrix::Zero(n, n), opts, mode);
  write_cov_csv(out_path(args, "covariance.csv"), cov);

  if (paths > 0) {
    const Index stride =
        std::max<Index>(1, static_cast<Index>(args.t_end / dt) / 200);
    const EnsembleSummary ens =
        simulate_fluctuation_paths(net, traj, dt, paths, args.seed, stride);
    write_ensemble_csv(out_path(args, "ensemble.csv"), ens,
                       net.species_names());
    std::cout << "ensemble: " << paths << " paths, dt = " << dt
              << ", seed = " << args.seed << "\n";
  }
  std::cout << "wrote trajectory.csv, covariance.csv ("
            << net.species_count() << " states, t_end = " << args.t_end
            << ", omega = " << net.volume() << ")\n";
  return 0;
}

ReduceOptions reduce_options(const std::string& block_mode,
                             double sigma_threshold, bool sigma_absolute) {
  ReduceOptions ropts;
  ropts.block_mode =
      block_mode == "two" ? BlockMode::two_block : BlockMode::per_group;
  ropts.sigma_threshold = sigma_threshold;
  ropts.sigma_threshold_absolute = sigma_absolute;
  return ropts;
}

int cmd_reduce(const CommonArgs& args, const std::string& config_str,
               const std::string& block_mode, bool dump_gramians,
               double sigma_threshold, bool sigma_absolute) {
  const ReactionNetwork net = load_model(args);
  const ReductionConfig config = ReductionConfig::parse(config_str);
  const ReduceOptions ropts =
      reduce_options(block_mode, sigma_threshold, sigma_absolute);
  const ReducedModel rm = reduce_with_config(net, config, ropts);

  std::ofstream desc(out_path(args, "reduced_model.txt"));
  desc << "# reduced-order model\n";
  desc << "omega                   " << format_double(rm.net.volume()) << "\n";
  for (const auto& [key, value] : rm.metadata) {
    desc << key;
    for (size_t i = key.size(); i < 24; ++i) desc << ' ';
    desc << value << "\n";
  }
  desc << "full_dim                " << rm.full_dim() << "\n";
  desc << "reduced_dim             " << rm.reduced_dim() << "\n";
  desc << "state_order             ";
  for (Index i = 0; i < rm.full_dim(); ++i) {
    if (i) desc << " ";
    desc << rm.net.species()[i].name;
  }
  desc << "\n";
  if (rm.sigma.size() > 0) {
    desc << "sigma22                 ";
    for (Index i = 0; i < rm.sigma.size(); ++i) {
      if (i) desc << " ";
      desc << format_double(rm.sigma[i]);
    }
    desc << "\nsuggested_r             " << rm.suggested_r << "\n";
  }
  desc << "steady_state            ";
  for (Index i = 0; i < rm.full_dim(); ++i) {
    if (i) desc << " ";
    desc << format_double(rm.x_ss[i]);
  }
  desc << "\n";
  desc.close();

  write_matrix_dump(out_path(args, "W.txt"), rm.proj.W);
  write_matrix_dump(out_path(args, "V.txt"), rm.proj.V);
  write_matrix_dump(out_path(args, "W_r.txt"), rm.proj.W_r);
  write_matrix_dump(out_path(args, "V_r.txt"), rm.proj.V_r);
  if (dump_gramians && rm.gramians.has_value()) {
    write_matrix_dump(out_path(args, "P.txt"), rm.gramians->P);
    write_matrix_dump(out_path(args, "Q.txt"), rm.gramians->Q);
  }

  // Simulate the reduced model from the (permuted back) file initial state.
  Vector x0(net.species_count());
  x0 = net.initial_state();
  const std::vector<double> grid = linspace(0.0, args.t_end, args.samples);
  const ReducedSimResult sim =
      simulate_reduced(rm, x0, grid, ode_options(args));
  write_trajectory_csv(out_path(args, "reduced_trajectory.csv"),
                       sim.reduced_states);
  write_trajectory_csv(out_path(args, "reduced_outputs.csv"), sim.outputs);
  write_trajectory_csv(out_path(args, "reduced_reconstructed.csv"),
                       sim.reconstructed);
  write_cov_csv(out_path(args, "reduced_covariance.csv"), sim.output_cov);

  std::cout << "reduced " << rm.full_dim() << " -> " << rm.reduced_dim()
            << " states (method " << rm.metadata.at("method")
            << ", r = " << rm.r() << ")\n";
  if (rm.r() > 0)
    std::cout << "max algebraic residual = "
              << format_double(sim.max_algebraic_residual) << "\n";
  return 0;
}

int cmd_compare(const CommonArgs& args,
                const std::vector<std::string>& config_strs,
                const std::string& sweep_path, const std::string& perturb,
                const std::string& block_mode, double sigma_threshold,
                bool sigma_absolute) {
  const ReactionNetwork net = load_model(args);
  std::vector<std::string> configs = config_strs;
  if (!sweep_path.empty()) {
    std::ifstream sweep(sweep_path);
    if (!sweep) throw DomainError("cannot open sweep file '" + sweep_path + "'");
    std::string line;
    while (std::getline(sweep, line)) {
      std::string trimmed = line;
      const size_t hash = trimmed.find('#');
      if (hash != std::string::npos) trimmed = trimmed.substr(0, hash);
      bool blank = true;
      for (char c : trimmed)
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
      if (!blank) configs.push_back(trimmed);
    }
  }
  if (configs.empty())
    throw DomainError("compare needs --config or --sweep");

  const auto perturbation = parse_perturbation(perturb);
  const ReduceOptions ropts =
      reduce_options(block_mode, sigma_threshold, sigma_absolute);

  std::ofstream summary(out_path(args, "summary.csv"));
  summary << "config,method,r,L1,L2,Linf,cov_err_ss\n";

  for (size_t i = 0; i < configs.size(); ++i) {
    const ReductionConfig config = ReductionConfig::parse(configs[i]);
    const ReducedModel rm = reduce_with_config(net, config, ropts);
    const ErrorReport report =
        compare_models(net, rm, perturbation, args.t_end, ode_options(args));

    const std::string suffix =
        configs.size() == 1 ? "" : "_" + std::to_string(i + 1);
    write_report_text(out_path(args, "report" + suffix + ".txt"), report);
    write_report_csv(out_path(args, "report" + suffix + ".csv"), report);
    {
      std::ofstream cov_out(out_path(args, "cov_error" + suffix + ".csv"));
      cov_out << "t,frobenius_error\n";
      for (size_t s = 0; s < report.cov_err_times.size(); ++s)
        cov_out << format_double(report.cov_err_times[s]) << ","
                << format_double(report.cov_err_traj[s]) << "\n";
    }
    summary << "\"" << configs[i] << "\"," << report.metadata.at("method")
            << "," << report.metadata.at("r") << ","
            << format_double(report.norms.l1) << ","
            << format_double(report.norms.l2) << ","
            << format_double(report.norms.linf) << ","
            << format_double(report.cov_err_ss) << "\n";
    std::cout << "config " << (i + 1) << ": L1 = "
              << format_double(report.norms.l1)
              << ", L2 = " << format_double(report.norms.l2)
              << ", Linf = " << format_double(report.norms.linf)
              << ", cov_err_ss = " << format_double(report.cov_err_ss) << "\n";
  }
  return 0;
}

int cmd_check_monotone(const CommonArgs& args) {
  const ReactionNetwork net = load_model(args);
  const SteadyStateResult ss = steady_state(net, net.initial_state());
  if (!ss.hurwitz)
    std::cerr << "warning: steady-state verification failed; J(x_ss) is not "
                 "Hurwitz (max Re eigenvalue "
              << format_double(ss.max_real_eig) << ")\n";
  const Matrix J = drift_jacobian(net, ss.x_ss);
  const MetzlerReport report = is_metzler(J);
  if (report.metzler) {
    std::cout << "Metzler: yes\n";
  } else {
    std::cout << "Metzler: no (" << report.violations.size()
              << " violating entries)\n";
    for (const auto& v : report.violations)
      std::cout << "  J(" << net.species()[v.row].name << ", "
                << net.species()[v.col].name
                << ") = " << format_double(v.value) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model order reduction for the linear noise approximation of "
               "reaction networks"};
  app.require_subcommand(1);

  CommonArgs ss_args, sim_args, red_args, cmp_args, mon_args;
  long sim_paths = 0;
  double sim_dt = 0.01;
  std::string sim_perturb, sim_cov_mode = "interpolate";
  std::string red_config, red_block_mode = "per-group";
  bool red_dump_gramians = false;
  double red_sigma_threshold = 0.01;
  bool red_sigma_absolute = false;
  std::vector<std::string> cmp_configs;
  std::string cmp_sweep, cmp_perturb, cmp_block_mode = "per-group";
  double cmp_sigma_threshold = 0.01;
  bool cmp_sigma_absolute = false;

  CLI::App* c_ss = app.add_subcommand("steady-state",
                                      "solve S f(x) = 0 and report x_ss");
  add_common(c_ss, ss_args);

  CLI::App* c_sim = app.add_subcommand(
      "simulate", "macroscopic trajectory, fluctuation covariance, optional "
                  "path ensemble");
  add_common(c_sim, sim_args);
  c_sim->add_option("--paths", sim_paths, "number of Euler-Maruyama paths");
  c_sim->add_option("--dt", sim_dt, "Euler-Maruyama step size")
      ->check(CLI::PositiveNumber);
  c_sim->add_option("--perturb", sim_perturb,
                    "initial-state perturbation, species=+delta,...");
  c_sim->add_option("--cov-mode", sim_cov_mode,
                    "covariance integration: interpolate|cointegrate")
      ->check(CLI::IsMember({"interpolate", "cointegrate"}));

  CLI::App* c_red = app.add_subcommand("reduce",
                                       "build and simulate a reduced model");
  add_common(c_red, red_args);
  c_red->add_option("--config", red_config,
                    "reduction config, e.g. \"retain = m1, m2; "
                    "lump = {p1, p2}:1; method = structured\"")
      ->required();
  c_red->add_option("--block-mode", red_block_mode,
                    "Gramian structure: two|per-group")
      ->check(CLI::IsMember({"two", "per-group"}));
  c_red->add_flag("--dump-gramians", red_dump_gramians,
                  "write P.txt and Q.txt");
  c_red->add_option("--sigma-threshold", red_sigma_threshold,
                    "advisory truncation threshold on sigma");
  c_red->add_flag("--sigma-absolute", red_sigma_absolute,
                  "treat the threshold as absolute instead of relative");

  CLI::App* c_cmp = app.add_subcommand(
      "compare", "error norms and covariance error of reduced models");
  add_common(c_cmp, cmp_args);
  c_cmp->add_option("--config", cmp_configs, "reduction config (repeatable)");
  c_cmp->add_option("--sweep", cmp_sweep,
                    "file with one reduction config per line");
  c_cmp->add_option("--perturb", cmp_perturb,
                    "perturbation of x_ss, species=+delta,...");
  c_cmp->add_option("--block-mode", cmp_block_mode,
                    "Gramian structure: two|per-group")
      ->check(CLI::IsMember({"two", "per-group"}));
  c_cmp->add_option("--sigma-threshold", cmp_sigma_threshold,
                    "advisory truncation threshold on sigma");
  c_cmp->add_flag("--sigma-absolute", cmp_sigma_absolute,
                  "treat the threshold as absolute instead of relative");

  CLI::App* c_mon = app.add_subcommand(
      "check-monotone", "report whether J(x_ss) is Metzler");
  add_common(c_mon, mon_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_ss->parsed()) return cmd_steady_state(ss_args);
    if (c_sim->parsed())
      return cmd_simulate(sim_args, sim_paths, sim_dt, sim_perturb,
                          sim_cov_mode);
    if (c_red->parsed())
      return cmd_reduce(red_args, red_config, red_block_mode,
                        red_dump_gramians, red_sigma_threshold,
                        red_sigma_absolute);
    if (c_cmp->parsed())
      return cmd_compare(cmp_args, cmp_configs, cmp_sweep, cmp_perturb,
                         cmp_block_mode, cmp_sigma_threshold,
                         cmp_sigma_absolute);
    if (c_mon->parsed()) return cmd_check_monotone(mon_args);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
