// qp-tongues: instability-zone analysis of the quasi-periodically driven
// parametric oscillator (mean and variance dynamics, slow flows, stability
// charts, closed-form boundaries, continued-fraction drive approximants).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qpt/qpt.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBelowThreshold = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonFinite = 3;

struct TimeseriesArgs {
  std::string model;
  double omega_drive = 2.0 * M_PI;
  double epsilon = 0.0;
  double mu = 0.0;
  double delta_cap = 0.0;
  double delta = 0.0;  // detuning coefficient delta1
  std::optional<double> alpha;
  std::optional<double> omega;  // explicit natural frequency (full models)
  std::optional<double> h;
  std::optional<double> horizon;
  double bailout = 1e6;
  std::optional<std::size_t> stride;
  std::string out;
};

void print_verdict(const qpt::StabilityVerdict& v) {
  std::string line = "verdict=" + std::string(qpt::verdict_name(v.kind)) +
                     " max_abs=" + qpt::format_double(v.max_abs);
  if (v.growth_rate) {
    line += " growth_rate=" + qpt::format_double(*v.growth_rate);
  }
  if (!v.note.empty()) {
    line += " note=\"" + v.note + "\"";
  }
  std::cout << line << "\n";
}

template <class System, std::size_t N = System::dim>
int run_timeseries(const System& sys, const qpt::ClassifierPolicy& policy,
                   const TimeseriesArgs& args, const std::array<const char*, N>& names,
                   std::vector<std::string> comments) {
  qpt::IntegrationPlan plan{.t0 = 0.0, .t_end = policy.horizon, .h = policy.step,
                            .record_stride = 1, .envelope_only = false,
                            .bailout = policy.bailout};
  const auto steps = static_cast<std::size_t>(std::ceil(policy.horizon / policy.step));
  plan.record_stride = args.stride.value_or(std::max<std::size_t>(1, steps / 5000));

  std::array<double, N> y0;
  y0.fill(policy.initial_value);
  const auto traj = qpt::rk4_integrate<N>(sys, y0, plan);
  const auto verdict = qpt::classify(traj, policy);

  comments.push_back("policy=" + qpt::policy_comment(policy));
  comments.push_back("verdict=" + std::string(qpt::verdict_name(verdict.kind)));
  qpt::write_text_atomic(args.out, qpt::timeseries_csv_string(traj, names, comments));
  print_verdict(verdict);
  return traj.status == qpt::TrajectoryStatus::NonFinite ? kExitNonFinite : kExitOk;
}

int cmd_timeseries(const TimeseriesArgs& args) {
  const auto model = qpt::model_from_name(args.model);
  qpt::ClassifierPolicy policy = qpt::ClassifierPolicy::paper_exact(model);
  if (args.h) {
    policy.step = *args.h;
  }
  if (args.horizon) {
    policy.horizon = *args.horizon;
  }
  policy.bailout = std::max(args.bailout, policy.divergence_threshold);
  policy.validate();

  const qpt::ModulationSpec mod =
      args.alpha ? qpt::ModulationSpec::fixed_ratio(args.omega_drive, args.epsilon, args.mu,
                                                    *args.alpha)
                 : qpt::ModulationSpec::epsilon_scaled(args.omega_drive, args.epsilon,
                                                       args.mu, args.delta_cap);

  std::vector<std::string> comments = {
      "model=" + args.model,
      "omega_drive=" + qpt::format_double(args.omega_drive),
      "epsilon=" + qpt::format_double(args.epsilon),
      "mu=" + qpt::format_double(args.mu),
      "delta=" + qpt::format_double(args.delta),
  };
  if (args.alpha) {
    comments.push_back("alpha=" + qpt::format_double(*args.alpha));
  } else {
    comments.push_back("delta_cap=" + qpt::format_double(args.delta_cap));
  }

  switch (model) {
    case qpt::ModelKind::MeanFull:
    case qpt::ModelKind::VarianceFull:
    case qpt::ModelKind::MomentsOracle: {
      const double omega =
          args.omega.value_or(args.omega_drive / 2.0 + args.epsilon * args.delta);
      const auto cfg = qpt::OscillatorConfig::at_frequency(omega, mod);
      comments.push_back("omega=" + qpt::format_double(omega));
      if (model == qpt::ModelKind::MeanFull) {
        return run_timeseries(qpt::MeanSystem{cfg}, policy, args,
                              std::array<const char*, 2>{"x", "v"}, comments);
      }
      if (model == qpt::ModelKind::VarianceFull) {
        return run_timeseries(qpt::VarianceSystem{cfg}, policy, args,
                              std::array<const char*, 3>{"var", "dvar", "ddvar"}, comments);
      }
      return run_timeseries(qpt::MomentsSystem{cfg}, policy, args,
                            std::array<const char*, 3>{"xx", "pp", "xp"}, comments);
    }
    case qpt::ModelKind::SlowFlowMeanHalf:
    case qpt::ModelKind::SlowFlowVarianceHalf: {
      if (args.epsilon == 0.0) {
        throw qpt::DegenerateSlowTime("slow flow: eps = 0 has no slow-flow reduction");
      }
      const double delta_cap_eff =
          args.alpha ? *args.alpha / args.epsilon : args.delta_cap;
      const auto params = qpt::SlowFlowParams::make(args.delta / args.omega_drive, args.mu,
                                                    delta_cap_eff);
      if (model == qpt::ModelKind::SlowFlowMeanHalf) {
        return run_timeseries(qpt::SlowFlowMeanSystem{params}, policy, args,
                              std::array<const char*, 2>{"a", "b"}, comments);
      }
      return run_timeseries(qpt::SlowFlowVarianceSystem{params}, policy, args,
                            std::array<const char*, 3>{"a", "b", "c"}, comments);
    }
    case qpt::ModelKind::SlowFlowQuarterRes: {
      const auto params = qpt::QuarterParams::make(args.delta, args.epsilon);
      return run_timeseries(qpt::SlowFlowQuarterSystem{params}, policy, args,
                            std::array<const char*, 3>{"a0", "a", "b"}, comments);
    }
  }
  throw qpt::ConfigError("model: unknown kind");
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int workers) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    throw qpt::ConfigError("cannot open config: " + config_path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const qpt::RunConfig cfg = qpt::parse_run_config(buf.str());

  auto grid = qpt::sweep(cfg.spec, cfg.policy, workers);
  grid.created_at = qpt::utc_timestamp_now();

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  const auto csv_path = dir / (cfg.basename + ".csv");
  qpt::write_text_atomic(csv_path, qpt::grid_csv_string(grid));
  qpt::write_text_atomic(dir / (cfg.basename + ".json"), qpt::grid_meta_json_string(grid));
  qpt::write_text_atomic(dir / (cfg.basename + ".gp"),
                         qpt::gnuplot_script(cfg.basename + ".csv", grid.spec));

  int stable = 0, divergent = 0, ambiguous = 0;
  for (const auto& v : grid.verdicts) {
    stable += v.kind == qpt::VerdictKind::Stable;
    divergent += v.kind == qpt::VerdictKind::Divergent;
    ambiguous += v.kind == qpt::VerdictKind::Ambiguous;
  }
  std::cout << "sweep " << qpt::model_name(cfg.spec.model) << " " << cfg.spec.nx << "x"
            << cfg.spec.ny << ": stable=" << stable << " divergent=" << divergent
            << " ambiguous=" << ambiguous << " workers=" << grid.workers << "\n"
            << "wrote " << csv_path.string() << "\n";
  return kExitOk;
}

int cmd_compare(const std::string& path_a, const std::string& path_b, double threshold,
                const std::string& out_path) {
  const auto a = qpt::read_grid(path_a);
  const auto b = qpt::read_grid(path_b);
  const auto cmp = qpt::compare_zones(a, b);

  std::string csv;
  csv += "# qp-tongues zone disagreements\n";
  csv += "# a=" + path_a + "\n";
  csv += "# b=" + path_b + "\n";
  csv += "# agreement=" + qpt::format_double(cmp.agreement) + "\n";
  csv += "# compared=" + std::to_string(cmp.compared) + "\n";
  csv += "x,y,verdict_a,verdict_b\n";
  for (const auto& d : cmp.disagreements) {
    csv += qpt::format_double(d.x) + ',' + qpt::format_double(d.y) + ',' +
           std::string(qpt::verdict_name(d.in_a)) + ',' +
           std::string(qpt::verdict_name(d.in_b)) + '\n';
  }
  qpt::write_text_atomic(out_path, csv);

  std::cout << "agreement=" << qpt::format_double(cmp.agreement)
            << " compared=" << cmp.compared << " disagreements=" << cmp.disagreements.size()
            << "\n";
  return cmp.agreement >= threshold ? kExitOk : kExitBelowThreshold;
}

int cmd_boundary(double mu, double delta_min, double delta_max, int samples,
                 const std::string& out) {
  qpt::write_text_atomic(out, qpt::boundary_csv_string(mu, delta_min, delta_max, samples));
  std::cout << "perturbative boundary (valid small mu): wrote " << out << "\n";
  return kExitOk;
}

int cmd_approximants(double alpha, int count) {
  const auto convergents = qpt::cf_approximants(alpha, count);
  for (const auto& r : convergents) {
    std::cout << r.p << "/" << r.q << "  period=" << qpt::approximant_period_pi_over_omega(r)
              << "*pi/Omega\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"instability charts for the quasi-periodically driven parametric oscillator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("qp-tongues ") + qpt::kVersion);
  app.set_help_flag("--help", "print help");

  TimeseriesArgs ts;
  auto* timeseries = app.add_subcommand(
      "timeseries", "integrate one model and write t/state/envelope CSV");
  timeseries->set_help_flag("--help", "print help");  // frees -h for the --h step flag
  timeseries
      ->add_option("--model", ts.model,
                   "mean|variance|moments|slow-mean|slow-variance|slow-quarter")
      ->required();
  timeseries->add_option("--omega-drive", ts.omega_drive, "drive frequency Omega");
  timeseries->add_option("--epsilon", ts.epsilon, "drive amplitude eps");
  timeseries->add_option("--mu", ts.mu, "relative second-drive amplitude");
  timeseries->add_option("--delta-cap", ts.delta_cap, "quasi-periodic detuning Delta");
  timeseries->add_option(
      "--delta", ts.delta,
      "detuning coefficient delta1 (full models: omega = Omega/2 + eps*delta1; "
      "slow-mean/slow-variance use delta1/Omega; slow-quarter uses delta1 directly)");
  timeseries->add_option("--alpha", ts.alpha, "fixed-ratio detuning (overrides --delta-cap)");
  timeseries->add_option("--omega", ts.omega, "explicit natural frequency (full models)");
  timeseries->add_option("--h", ts.h, "step size");
  timeseries->add_option("--horizon", ts.horizon, "integration horizon");
  timeseries->add_option("--bailout", ts.bailout, "early-stop envelope bound");
  timeseries->add_option("--stride", ts.stride, "store every k-th sample");
  timeseries->add_option("--out", ts.out, "output CSV path")->required();

  std::string config_path, out_dir;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep_cmd = app.add_subcommand("sweep", "classify a parameter-plane grid");
  sweep_cmd->add_option("--config", config_path, "JSON sweep configuration")->required();
  sweep_cmd->add_option("--workers", workers, "worker threads");
  sweep_cmd->add_option("--out-dir", out_dir, "output directory")->required();

  std::string cmp_a, cmp_b, cmp_out = "disagreements.csv";
  double cmp_threshold = 0.98;
  auto* compare_cmd = app.add_subcommand("compare", "compare two grid CSVs");
  compare_cmd->add_option("a", cmp_a, "first grid CSV")->required();
  compare_cmd->add_option("b", cmp_b, "second grid CSV")->required();
  compare_cmd->add_option("--threshold", cmp_threshold, "agreement required for exit 0");
  compare_cmd->add_option("--out", cmp_out, "disagreement CSV path");

  double b_mu = 0.0, b_min = 0.0, b_max = 0.0;
  int b_samples = 101;
  std::string b_out;
  auto* boundary_cmd =
      app.add_subcommand("boundary", "closed-form slow-flow boundary branches");
  boundary_cmd->add_option("--mu", b_mu, "relative second-drive amplitude")->required();
  boundary_cmd->add_option("--delta-cap-min", b_min, "Delta range start")->required();
  boundary_cmd->add_option("--delta-cap-max", b_max, "Delta range end")->required();
  boundary_cmd->add_option("--samples", b_samples, "sample count");
  boundary_cmd->add_option("--out", b_out, "output CSV path")->required();

  double a_alpha = 0.0;
  int a_count = 5;
  auto* approx_cmd =
      app.add_subcommand("approximants", "continued-fraction convergents of alpha");
  approx_cmd->add_option("--alpha", a_alpha, "irrational in (0,1)")->required();
  approx_cmd->add_option("--count", a_count, "number of convergents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*timeseries) {
      return cmd_timeseries(ts);
    }
    if (*sweep_cmd) {
      return cmd_sweep(config_path, out_dir, workers);
    }
    if (*compare_cmd) {
      return cmd_compare(cmp_a, cmp_b, cmp_threshold, cmp_out);
    }
    if (*boundary_cmd) {
      return cmd_boundary(b_mu, b_min, b_max, b_samples, b_out);
    }
    if (*approx_cmd) {
      return cmd_approximants(a_alpha, a_count);
    }
  } catch (const qpt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
