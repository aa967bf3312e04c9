#include "lambdapump/cli.hpp"

#include "lambdapump/analytic.hpp"
#include "lambdapump/io.hpp"
#include "lambdapump/model.hpp"
#include "lambdapump/optimizer.hpp"
#include "lambdapump/reduced.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>

namespace lambdapump {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kOutDirEnv = "LAMBDAPUMP_OUT";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  double gamma = 10.0;
  double gamma_diff = 0.0;
  double duration = 100.0;
  std::size_t intervals = 100;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "csv";

  std::string control = "pumping";
  std::string control_file;
  double theta = kHalfPi;
  std::size_t stride = 10;
  std::size_t reduced_samples = 20;

  std::vector<double> thetas;
  std::vector<double> arcs;

  std::size_t starts = 5;
  std::size_t max_iters = 400;
  double grad_tol = 1e-6;
  bool serial = false;

  std::size_t samples = 10000;
  std::size_t max_bangs = 10;
  double tprime = 5.0;

  std::vector<double> gammas{0.1, 2.0, 10.0};
  std::vector<double> gamma_diffs{0.0};
  std::vector<double> durations{10.0, 20.0, 40.0};

  std::string selector;

  SystemParams params() const { return SystemParams::from_ratios(gamma, gamma_diff); }

  OptimizationConfig optimization() const {
    OptimizationConfig c;
    c.n_intervals = intervals;
    c.max_iters = max_iters;
    c.grad_tol = grad_tol;
    c.n_starts = starts;
    c.seed = seed;
    c.parallel = !serial;
    c.validate();
    return c;
  }

  // Only the fields that influence the given command are recorded.
  json to_json() const {
    json j;
    j["command"] = command;
    j["seed"] = seed;
    j["format"] = format;
    if (command == "verify") {
      j["samples"] = samples;
      j["n"] = max_bangs;
      j["tprime"] = tprime;
      return j;
    }
    if (command == "sweep") {
      j["gammas"] = gammas;
      j["gamma_diffs"] = gamma_diffs;
      j["durations"] = durations;
    } else if (command != "figures") {
      j["gamma"] = gamma;
      j["gamma_diff"] = gamma_diff;
      j["duration"] = duration;
    }
    if (command == "simulate" || command == "reduce") {
      j["control"] = control_file.empty() ? control : "file:" + control_file;
      if (control == "constant") j["theta"] = theta;
    }
    if (command == "simulate") j["stride"] = stride;
    if (command == "reduce") j["samples_per_interval"] = reduced_samples;
    if (command == "analytic") {
      j["thetas"] = thetas;
      j["arcs"] = arcs;
    }
    if (command == "optimize" || command == "sweep" || command == "figures" ||
        command == "simulate" || command == "reduce") {
      j["intervals"] = intervals;
    }
    if (command == "optimize" || command == "sweep" || command == "figures") {
      j["starts"] = starts;
      j["max_iters"] = max_iters;
      j["grad_tol"] = grad_tol;
    }
    if (command == "figures") j["selector"] = selector;
    return j;
  }
};

json params_json(const SystemParams& p) {
  return {{"gamma_over_omega0", p.gamma_total / p.omega0},
          {"gamma_diff_over_omega0", p.gamma_diff / p.omega0}};
}

json state_json(const FullState& s) {
  return {{"rho11", s.x1}, {"rho22", s.x2}, {"rho33", s.x3}, {"x4", s.x4}, {"x5", s.x5},
          {"x6", s.x6},    {"y1", s.y1},    {"y2", s.y2},    {"y3", s.y3}};
}

class Output {
 public:
  explicit Output(const RunConfig& cfg)
      : dir_(cfg.out_dir), format_(parse_table_format(cfg.format)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw UsageError("output directory '" + dir_.string() + "' cannot be created");
    }
  }

  std::string table_name(const std::string& stem) const {
    return stem + (format_ == TableFormat::kCsv ? ".csv" : ".json");
  }

  std::string write_table(const std::string& stem, const Table& table) const {
    const std::string name = table_name(stem);
    std::ofstream os = open(name);
    table.write(os, format_);
    return name;
  }

  std::string write_json(const std::string& name, const json& doc) const {
    std::ofstream os = open(name);
    os << doc.dump(2) << '\n';
    return name;
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw UsageError("cannot write '" + (dir_ / name).string() + "'");
    return os;
  }

 private:
  fs::path dir_;
  TableFormat format_;
};

ControlSignal build_control(const RunConfig& cfg) {
  if (!cfg.control_file.empty()) {
    std::ifstream is(cfg.control_file);
    if (!is) throw UsageError("cannot read control file '" + cfg.control_file + "'");
    return read_control(is, cfg.duration);
  }
  const double T = cfg.duration;
  const std::size_t n = std::max<std::size_t>(1, cfg.intervals);
  if (cfg.control == "pumping") return optical_pumping_control(T);
  if (cfg.control == "theta0") return ControlSignal::constant(T, 0.0);
  if (cfg.control == "constant") return ControlSignal::constant(T, cfg.theta);
  if (cfg.control == "counterintuitive" || cfg.control == "intuitive") {
    OptimizationConfig oc;
    oc.n_intervals = n;
    oc.n_starts = 3;
    const auto starts = default_starts(oc);
    return ControlSignal::uniform(T, starts[cfg.control == "counterintuitive" ? 1 : 2].theta);
  }
  throw UsageError("unknown control '" + cfg.control +
                   "' (pumping|theta0|constant|counterintuitive|intuitive)");
}

json cmd_simulate(const RunConfig& cfg, const Output& out) {
  const SystemParams params = cfg.params();
  const ControlSignal control = build_control(cfg);
  IntegrationConfig ic;
  ic.sample_stride = cfg.stride;
  const Trajectory traj = integrate_full(control, params, ic);

  double drift = 0.0;
  double ymax = 0.0;
  for (const auto& s : traj.states) {
    drift = std::max(drift, std::abs(s.trace() - 1.0));
    ymax = std::max(ymax, s.max_abs_y());
  }
  const json meta = cfg.to_json();
  json summary;
  summary["config"] = meta;
  summary["params"] = params_json(params);
  summary["final"] = state_json(traj.final_state());
  summary["final_time"] = traj.time.back();
  summary["samples"] = traj.size();
  summary["max_trace_drift"] = drift;
  summary["max_abs_y"] = ymax;
  summary["trajectory_file"] = out.write_table("trajectory", trajectory_table(traj, params, meta));
  out.write_json("summary.json", summary);
  return summary;
}

json cmd_reduce(const RunConfig& cfg, const Output& out) {
  const SystemParams params = cfg.params();
  const ControlSignal control = build_control(cfg);
  const auto samples = simulate_reduced(control, params, cfg.reduced_samples);
  const json meta = cfg.to_json();
  const ReducedState& last = samples.back().state;
  json summary;
  summary["config"] = meta;
  summary["params"] = params_json(params);
  summary["tprime"] = samples.back().tprime;
  summary["final"] = {{"x", last.x}, {"y", last.y}, {"theta", last.theta}};
  summary["rho33"] = reduced_rho33(last);
  summary["pumping_efficiency"] = pumping_efficiency(cfg.duration, params);
  summary["reduced_file"] = out.write_table("reduced", reduced_table(samples, meta));
  out.write_json("reduce.json", summary);
  return summary;
}

json cmd_analytic(const RunConfig& cfg, const Output& out) {
  const SystemParams params = cfg.params();
  BangSingularSequence seq;
  if (cfg.thetas.empty() && cfg.arcs.empty()) {
    seq = BangSingularSequence::optical_pumping(normalize_time(cfg.duration, params));
  } else {
    seq = {cfg.thetas, cfg.arcs};
  }
  seq.validate();
  const PlanePoint step = propagate_sequence(seq);
  const PlanePoint closed = closed_form_sequence(seq);
  const double tprime = seq.total_duration();
  json summary;
  summary["config"] = cfg.to_json();
  summary["n"] = seq.size();
  summary["thetas"] = seq.jumps;
  summary["arcs"] = seq.arcs;
  summary["tprime"] = tprime;
  summary["xn"] = step.x;
  summary["yn"] = step.y;
  summary["xn_closed_form"] = closed.x;
  summary["yn_closed_form"] = closed.y;
  summary["x1"] = optical_pumping_value(tprime);
  summary["margin"] = step.x - optical_pumping_value(tprime);
  summary["reaches_final_angle"] = seq.reaches_final_angle(1e-9);
  summary["rho33_pumping"] = -std::expm1(-tprime);
  out.write_json("analytic.json", summary);
  return summary;
}

struct VerifyOutcome {
  json report;
  bool passed = false;
};

VerifyOutcome cmd_verify(const RunConfig& cfg, const Output& out) {
  if (cfg.samples == 0) throw UsageError("--samples must be positive");
  if (cfg.max_bangs == 0) throw UsageError("--n must be positive");
  if (!(cfg.tprime >= 0.0)) throw UsageError("--tprime must be non-negative");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_n(1, cfg.max_bangs);
  std::ofstream records = out.open("verify_records.jsonl");

  std::size_t violations = 0;
  std::size_t equality_cases = 0;
  std::size_t equality_not_equivalent = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  double max_closed_form_dev = 0.0;
  json offending = json::array();
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const auto seq = random_sequence(rng, pick_n(rng), cfg.tprime);
    const BoundCheck check = verify_bound(seq);
    const PlanePoint closed = closed_form_sequence(seq);
    const PlanePoint step = propagate_sequence(seq);
    max_closed_form_dev = std::max(
        {max_closed_form_dev, std::abs(closed.x - step.x), std::abs(closed.y - step.y)});
    min_margin = std::min(min_margin, check.margin);
    const json rec = {{"n", seq.size()},   {"thetas", seq.jumps}, {"arcs", seq.arcs},
                      {"xn", check.xn},    {"x1", check.x1},      {"margin", check.margin}};
    records << rec.dump() << '\n';
    if (check.equality) {
      ++equality_cases;
      if (!equivalent_to_pumping(seq)) ++equality_not_equivalent;
    }
    if (!check.satisfied) {
      ++violations;
      if (offending.size() < 20) offending.push_back(rec);
    }
  }

  const PmpReport pmp =
      pmp_residual(BangSingularSequence::optical_pumping(cfg.tprime), cfg.tprime);
  const bool pmp_ok = pmp.has_singular_arc ? (pmp.max_phi <= 1e-10 && pmp.max_lambda_y <= 1e-10)
                                           : true;
  const bool bound_ok = violations == 0 && equality_not_equivalent == 0;
  const bool closed_ok = max_closed_form_dev <= 1e-12;

  VerifyOutcome v;
  v.passed = bound_ok && pmp_ok && closed_ok;
  json& r = v.report;
  r["config"] = cfg.to_json();
  r["bound"] = {{"samples", cfg.samples},
                {"violations", violations},
                {"min_margin", min_margin},
                {"equality_cases", equality_cases},
                {"equality_not_equivalent", equality_not_equivalent},
                {"offending", offending},
                {"passed", bound_ok}};
  r["closed_form"] = {{"max_deviation", max_closed_form_dev}, {"passed", closed_ok}};
  r["pmp"] = {{"max_phi", pmp.max_phi},
              {"max_lambda_y", pmp.max_lambda_y},
              {"mu", pmp.mu},
              {"min_costate_norm", pmp.min_costate_norm},
              {"note", pmp.note},
              {"passed", pmp_ok}};
  r["records_file"] = "verify_records.jsonl";
  r["passed"] = v.passed;
  out.write_json("verify.json", r);
  return v;
}

json result_json(const OptimizationResult& r) {
  json starts = json::array();
  for (const auto& s : r.starts) {
    json j = {{"label", s.label},
              {"initial_objective", s.initial_objective},
              {"objective", s.objective},
              {"iterations", s.iterations},
              {"converged", s.converged}};
    if (!s.error.empty()) j["error"] = s.error;
    starts.push_back(std::move(j));
  }
  return {{"objective", r.objective},
          {"converged", r.converged},
          {"start_label", r.start_label},
          {"iterations", r.iterations},
          {"projected_gradient_norm", r.projected_gradient_norm},
          {"mean_stokes_fraction", mean_stokes_fraction(r.control)},
          {"max_stokes_fraction", max_stokes_fraction(r.control)},
          {"diagnostic", r.diagnostic},
          {"starts", starts}};
}

json cmd_optimize(const RunConfig& cfg, const Output& out) {
  const SystemParams params = cfg.params();
  const OptimizationConfig oc = cfg.optimization();
  const OptimizationResult res = optimize(oc, params, cfg.duration);
  if (res.start_label == "none") throw IntegrationError(res.diagnostic, 0.0);
  const double baseline = objective(optical_pumping_control(cfg.duration), params);

  const json meta = cfg.to_json();
  IntegrationConfig ic;
  ic.sample_stride = 10;
  const Trajectory traj = integrate_full(res.control, params, ic);
  json summary = result_json(res);
  summary["config"] = meta;
  summary["params"] = params_json(params);
  summary["T"] = cfg.duration;
  summary["pumping_baseline"] = baseline;
  summary["seed"] = cfg.seed;
  summary["control_file"] = out.write_table("control", control_table(res.control, params, meta));
  summary["populations_file"] =
      out.write_table("populations", trajectory_table(traj, params, meta));
  out.write_json("optimize.json", summary);
  return summary;
}

json cmd_sweep(const RunConfig& cfg, const Output& out) {
  if (cfg.gammas.empty() || cfg.gamma_diffs.empty() || cfg.durations.empty()) {
    throw UsageError("sweep grids must be non-empty");
  }
  const OptimizationConfig oc = cfg.optimization();
  const auto cells = sweep(cfg.gammas, cfg.gamma_diffs, cfg.durations, oc);
  const json meta = cfg.to_json();
  Table t;
  t.meta = meta;
  t.columns = {"gamma_over_omega0", "gamma_diff_over_omega0", "omega0T",
               "objective",         "pumping_baseline",       "winner_start"};
  json failures = json::array();
  for (const auto& c : cells) {
    const bool ok = c.error.empty() && c.result.has_value();
    t.rows.push_back({c.gamma_over_omega0, c.gamma_diff_over_omega0, c.omega0T,
                      ok ? c.result->objective : std::numeric_limits<double>::quiet_NaN(),
                      c.pumping_baseline, ok ? c.result->start_label : std::string("failed")});
    if (!ok) {
      failures.push_back({{"gamma_over_omega0", c.gamma_over_omega0},
                          {"gamma_diff_over_omega0", c.gamma_diff_over_omega0},
                          {"omega0T", c.omega0T},
                          {"error", c.error}});
    }
  }
  json summary;
  summary["config"] = meta;
  summary["cells"] = cells.size();
  summary["failures"] = failures;
  summary["table_file"] = out.write_table("sweep", t);
  out.write_json("sweep_summary.json", summary);
  return summary;
}

struct Panel {
  double gamma;
  double gamma_diff;
  double duration;
};

std::vector<Panel> figure_panels(const std::string& selector) {
  if (selector == "fig2") return {{0.1, 0, 5}, {0.1, 0, 10}, {0.1, 0, 20}};
  if (selector == "fig3") return {{2, 0, 10}, {2, 0, 20}, {2, 0, 40}};
  if (selector == "fig4") return {{10, 0, 35}, {10, 0, 50}, {10, 0, 100}};
  if (selector == "fig5") return {{10, -8, 100}, {10, -2, 100}, {10, 2, 100}, {10, 8, 100}};
  throw UsageError("unknown figure selector '" + selector + "' (fig2|fig3|fig4|fig5)");
}

json cmd_figures(const RunConfig& cfg, const Output& out) {
  const auto panels = figure_panels(cfg.selector);
  const OptimizationConfig oc = cfg.optimization();
  json index = json::array();
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const Panel& p = panels[i];
    const SystemParams params = SystemParams::from_ratios(p.gamma, p.gamma_diff);
    const OptimizationResult res = optimize(oc, params, p.duration);
    if (res.start_label == "none") throw IntegrationError(res.diagnostic, 0.0);
    IntegrationConfig ic;
    ic.sample_stride = 10;
    const Trajectory traj = integrate_full(res.control, params, ic);

    json meta = cfg.to_json();
    meta["panel"] = i + 1;
    meta["gamma"] = p.gamma;
    meta["gamma_diff"] = p.gamma_diff;
    meta["duration"] = p.duration;
    const std::string stem = cfg.selector + "_panel" + std::to_string(i + 1);
    json entry = meta;
    entry["objective"] = res.objective;
    entry["pumping_baseline"] = objective(optical_pumping_control(p.duration), params);
    entry["start_label"] = res.start_label;
    entry["converged"] = res.converged;
    entry["controls_file"] =
        out.write_table(stem + "_controls", control_table(res.control, params, meta));
    entry["populations_file"] =
        out.write_table(stem + "_populations", trajectory_table(traj, params, meta));
    index.push_back(std::move(entry));
  }
  json summary;
  summary["config"] = cfg.to_json();
  summary["panels"] = index;
  out.write_json(cfg.selector + ".json", summary);
  return summary;
}

json error_record(const std::string& message, int code) {
  return {{"error", message}, {"exit_code", code}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    cfg.out_dir = env;
  } else {
    cfg.out_dir = ".";
  }

  CLI::App app{"Optimal population transfer in a dissipative Lambda system", "lambdapump"};
  app.set_config("--config", "", "Key-value configuration file mirroring the flags");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--gamma", cfg.gamma, "Decay rate Gamma/Omega0")->capture_default_str();
  app.add_option("--gamma-diff", cfg.gamma_diff, "Decay asymmetry gamma/Omega0")
      ->capture_default_str();
  app.add_option("--duration", cfg.duration, "Pulse duration Omega0*T")->capture_default_str();
  app.add_option("--intervals", cfg.intervals, "Control grid size")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_option("--out", cfg.out_dir,
                 std::string("Output directory (default $") + kOutDirEnv + " or .)");
  app.add_option("--format", cfg.format, "Table format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Integrate the full density-matrix model");
  sim->add_option("--control", cfg.control,
                  "pumping|theta0|constant|counterintuitive|intuitive");
  sim->add_option("--control-file", cfg.control_file, "Control table or angle list");
  sim->add_option("--theta", cfg.theta, "Angle for --control constant");
  sim->add_option("--stride", cfg.stride, "Record every n-th integration step");

  auto* red = app.add_subcommand("reduce", "Evaluate the adiabatically eliminated model");
  red->add_option("--control", cfg.control,
                  "pumping|theta0|constant|counterintuitive|intuitive");
  red->add_option("--control-file", cfg.control_file, "Control table or angle list");
  red->add_option("--theta", cfg.theta, "Angle for --control constant");
  red->add_option("--samples", cfg.reduced_samples, "Samples per control interval");

  auto* ana = app.add_subcommand("analytic", "Evaluate a bang-singular sequence");
  ana->add_option("--thetas", cfg.thetas, "Bang angles (comma separated)")->delimiter(',');
  ana->add_option("--arcs", cfg.arcs, "Singular arc durations in normalized time")
      ->delimiter(',');

  auto* opt = app.add_subcommand("optimize", "Optimize the pulse shape for rho33(T)");
  opt->add_option("--starts", cfg.starts, "Number of optimizer starts");
  opt->add_option("--max-iters", cfg.max_iters, "Iteration limit per start");
  opt->add_option("--grad-tol", cfg.grad_tol, "Projected-gradient tolerance");
  opt->add_flag("--serial", cfg.serial, "Run starts sequentially");

  auto* ver = app.add_subcommand("verify", "Check the optical-pumping bound and PMP residuals");
  ver->add_option("--samples", cfg.samples, "Random sequences to test");
  ver->add_option("--n", cfg.max_bangs, "Maximum number of bangs per sequence");
  ver->add_option("--tprime", cfg.tprime, "Normalized duration T'");

  auto* swp = app.add_subcommand("sweep", "Optimize over a parameter grid");
  swp->add_option("--gammas", cfg.gammas, "Gamma/Omega0 values")->delimiter(',');
  swp->add_option("--gamma-diffs", cfg.gamma_diffs, "gamma/Omega0 values")->delimiter(',');
  swp->add_option("--durations", cfg.durations, "Omega0*T values")->delimiter(',');
  swp->add_option("--starts", cfg.starts, "Number of optimizer starts");
  swp->add_option("--max-iters", cfg.max_iters, "Iteration limit per start");
  swp->add_flag("--serial", cfg.serial, "Run starts sequentially");

  auto* fig = app.add_subcommand("figures", "Regenerate control/population panels");
  fig->add_option("selector", cfg.selector, "fig2|fig3|fig4|fig5")->required();
  fig->add_option("--starts", cfg.starts, "Number of optimizer starts");
  fig->add_option("--max-iters", cfg.max_iters, "Iteration limit per start");
  fig->add_flag("--serial", cfg.serial, "Run starts sequentially");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_record(e.what(), kExitUsage).dump() << '\n';
    return kExitUsage;
  }

  int code = kExitOk;
  try {
    cfg.command = app.get_subcommands().front()->get_name();
    const Output output(cfg);
    json summary;
    if (cfg.command == "simulate") {
      summary = cmd_simulate(cfg, output);
    } else if (cfg.command == "reduce") {
      summary = cmd_reduce(cfg, output);
    } else if (cfg.command == "analytic") {
      summary = cmd_analytic(cfg, output);
    } else if (cfg.command == "verify") {
      VerifyOutcome v = cmd_verify(cfg, output);
      summary = std::move(v.report);
      if (!v.passed) {
        code = kExitVerification;
        err << error_record("verification failed", code).dump() << '\n';
        err << summary["bound"]["offending"].dump() << '\n';
      }
    } else if (cfg.command == "optimize") {
      summary = cmd_optimize(cfg, output);
    } else if (cfg.command == "sweep") {
      summary = cmd_sweep(cfg, output);
    } else if (cfg.command == "figures") {
      summary = cmd_figures(cfg, output);
    }
    out << summary.dump(2) << '\n';
  } catch (const UsageError& e) {
    err << error_record(e.what(), kExitUsage).dump() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << error_record(e.what(), kExitUsage).dump() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << error_record(e.what(), kExitNumerical).dump() << '\n';
    return kExitNumerical;
  }
  return code;
}

}  // namespace lambdapump
