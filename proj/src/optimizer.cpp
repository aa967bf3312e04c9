#include "lambdapump/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace lambdapump {

void OptimizationConfig::validate() const {
  if (n_intervals < 2) throw std::invalid_argument("n_intervals must be >= 2");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
  if (n_starts < 1) throw std::invalid_argument("n_starts must be >= 1");
  if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0)) {
    throw std::invalid_argument("line-search shrink factor must lie in (0, 1)");
  }
  if (integration.adaptive) {
    throw std::invalid_argument("the optimizer requires fixed-step integration");
  }
}

double objective(const ControlSignal& control, const SystemParams& params,
                 const IntegrationConfig& config) {
  IntegrationConfig c = config;
  c.sample_stride = std::numeric_limits<std::size_t>::max();
  return integrate_full(control, params, c).final_state().x3;
}

namespace {

struct StepMatrices {
  Matrix9 step;
  Matrix9 d_step;
  std::size_t substeps = 0;
};

// One RK4 step of a constant linear system is the degree-4 Taylor polynomial
// of exp(hA); its theta derivative follows from the product rule.
StepMatrices step_matrices(const GeneratorParts& parts, double theta, double length,
                           const SystemParams& params, const IntegrationConfig& config) {
  StepMatrices out;
  out.substeps = substeps_for(length, params, config);
  const double h = length / static_cast<double>(out.substeps);
  const Matrix9 a = parts.at(theta);
  const Matrix9 b = h * a;
  const Matrix9 db = h * parts.derivative_at(theta);
  const Matrix9 b2 = b * b;
  const Matrix9 b3 = b2 * b;
  // Same matrix the integrator applies, so values agree to the last bit.
  out.step = rk4_step_matrix(a, h);
  const Matrix9 db_b = db * b;
  const Matrix9 b_db = b * db;
  const Matrix9 d2 = db_b + b_db;
  const Matrix9 d3 = db_b * b + b * db_b + b2 * db;
  const Matrix9 d4 = d3 * b + b3 * db;
  out.d_step = db + d2 / 2.0 + d3 / 6.0 + d4 / 24.0;
  return out;
}

}  // namespace

ObjectiveGradient objective_and_gradient(const ControlSignal& control,
                                         const SystemParams& params,
                                         const IntegrationConfig& config) {
  if (config.adaptive) {
    throw std::invalid_argument(
        "adjoint gradients require fixed-step integration on the control grid");
  }
  params.validate();
  const GeneratorParts parts(params);
  const auto& grid = control.grid();
  const std::size_t n = control.intervals();

  std::vector<StepMatrices> mats;
  mats.reserve(n);
  std::vector<Vector9> interval_start(n);
  Vector9 v = FullState::ground().to_vector();
  for (std::size_t k = 0; k < n; ++k) {
    mats.push_back(step_matrices(parts, control.theta()[k], grid[k + 1] - grid[k],
                                 params, config));
    interval_start[k] = v;
    for (std::size_t j = 0; j < mats[k].substeps; ++j) v = mats[k].step * v;
  }
  if (!v.allFinite()) {
    throw IntegrationError("non-finite state in gradient forward pass", 0.0);
  }

  ObjectiveGradient out;
  out.value = v[2];
  out.gradient.assign(n, 0.0);
  Vector9 lambda = Vector9::Zero();
  lambda[2] = 1.0;
  std::vector<Vector9> substates;
  for (std::size_t k = n; k-- > 0;) {
    const StepMatrices& m = mats[k];
    substates.resize(m.substeps);
    substates[0] = interval_start[k];
    for (std::size_t j = 1; j < m.substeps; ++j) substates[j] = m.step * substates[j - 1];
    double g = 0.0;
    for (std::size_t j = m.substeps; j-- > 0;) {
      g += lambda.dot(m.d_step * substates[j]);
      lambda = m.step.transpose() * lambda;
    }
    out.gradient[k] = g;
  }
  return out;
}

std::vector<double> gradient(const ControlSignal& control, const SystemParams& params,
                             const IntegrationConfig& config) {
  return objective_and_gradient(control, params, config).gradient;
}

std::vector<double> projected_gradient(const std::vector<double>& theta,
                                       const std::vector<double>& grad) {
  std::vector<double> pg(grad);
  for (std::size_t k = 0; k < pg.size(); ++k) {
    if ((theta[k] <= 0.0 && pg[k] < 0.0) || (theta[k] >= kHalfPi && pg[k] > 0.0)) {
      pg[k] = 0.0;
    }
  }
  return pg;
}

std::vector<StartPoint> default_starts(const OptimizationConfig& config) {
  const std::size_t n = config.n_intervals;
  std::vector<StartPoint> starts;
  auto ramp = [n](bool up) {
    std::vector<double> th(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      th[k] = kHalfPi * (up ? s : 1.0 - s);
    }
    return th;
  };
  starts.push_back({"pumping", std::vector<double>(n, kHalfPi)});
  starts.push_back({"counterintuitive", ramp(true)});
  starts.push_back({"intuitive", ramp(false)});

  // Random starts are smooth low-mode profiles so that each draw lands in a
  // distinct basin instead of a noisy neighbourhood of pi/4.
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> amp(-0.6, 0.6);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> offset(0.2, kHalfPi - 0.2);
  for (std::size_t r = 0; starts.size() < config.n_starts; ++r) {
    const double base = offset(rng);
    double a[3], p[3];
    for (int j = 0; j < 3; ++j) {
      a[j] = amp(rng);
      p[j] = phase(rng);
    }
    std::vector<double> th(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      double v = base;
      for (int j = 0; j < 3; ++j) v += a[j] * std::sin((j + 1) * std::numbers::pi * s + p[j]);
      th[k] = std::clamp(v, 0.0, kHalfPi);
    }
    starts.push_back({"random" + std::to_string(r), std::move(th)});
  }
  starts.resize(std::min(starts.size(), config.n_starts));
  return starts;
}

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

OptimizationResult optimize_from(const StartPoint& start, double duration,
                                 const SystemParams& params,
                                 const OptimizationConfig& config) {
  config.validate();
  const LineSearchConfig& ls = config.line_search;
  auto eval = [&](const std::vector<double>& th) {
    return objective_and_gradient(ControlSignal::uniform(duration, th), params,
                                  config.integration);
  };

  std::vector<double> theta = start.theta;
  for (double& t : theta) t = std::clamp(t, 0.0, kHalfPi);
  ObjectiveGradient cur = eval(theta);

  OptimizationResult res;
  res.start_label = start.label;
  res.initial_objective = cur.value;
  res.history.push_back(cur.value);

  std::vector<double> prev_theta;
  std::vector<double> prev_grad;
  std::size_t iter = 0;
  for (; iter < config.max_iters; ++iter) {
    const double pgn = inf_norm(projected_gradient(theta, cur.gradient));
    res.projected_gradient_norm = pgn;
    if (pgn <= config.grad_tol) {
      res.converged = true;
      break;
    }

    double alpha = ls.max_initial_move / pgn;
    if (!prev_theta.empty()) {
      double ss = 0.0;
      double sy = 0.0;
      for (std::size_t k = 0; k < theta.size(); ++k) {
        const double s = theta[k] - prev_theta[k];
        const double y = cur.gradient[k] - prev_grad[k];
        ss += s * s;
        sy -= s * y;
      }
      if (sy > 0.0 && ss > 0.0) alpha = std::min(ss / sy, 10.0 * kHalfPi / pgn);
    }

    bool accepted = false;
    std::vector<double> trial(theta.size());
    std::vector<double> step(theta.size());
    for (std::size_t bt = 0; bt <= ls.max_backtracks; ++bt, alpha *= ls.shrink) {
      for (std::size_t k = 0; k < theta.size(); ++k) {
        trial[k] = std::clamp(theta[k] + alpha * cur.gradient[k], 0.0, kHalfPi);
        step[k] = trial[k] - theta[k];
      }
      const double predicted = dot(cur.gradient, step);
      if (predicted <= 0.0) break;
      ObjectiveGradient next = eval(trial);
      if (next.value >= cur.value + ls.armijo * predicted) {
        prev_theta = theta;
        prev_grad = cur.gradient;
        theta = trial;
        cur = std::move(next);
        res.history.push_back(cur.value);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.diagnostic = "line search made no progress";
      break;
    }
  }
  if (iter == config.max_iters) {
    res.projected_gradient_norm = inf_norm(projected_gradient(theta, cur.gradient));
    res.converged = res.projected_gradient_norm <= config.grad_tol;
    if (!res.converged) res.diagnostic = "iteration limit reached";
  }
  res.iterations = res.history.size() - 1;
  res.objective = cur.value;
  res.control = ControlSignal::uniform(duration, theta);
  return res;
}

OptimizationResult optimize(const OptimizationConfig& config, const SystemParams& params,
                            double duration, std::optional<std::vector<StartPoint>> starts) {
  config.validate();
  params.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  const std::vector<StartPoint> points = starts ? *starts : default_starts(config);
  if (points.empty()) throw std::invalid_argument("no optimizer starts");

  std::vector<std::optional<OptimizationResult>> results(points.size());
  std::vector<std::string> errors(points.size());
  auto run = [&](std::size_t i) {
    try {
      results[i] = optimize_from(points[i], duration, params, config);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  if (config.parallel && points.size() > 1) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = 0; i < points.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, run, i));
    }
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) run(i);
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!results[i]) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& a = *results[i];
    const auto& b = *results[*best];
    if (a.objective > b.objective + 1e-6) {
      best = i;
    } else if (std::abs(a.objective - b.objective) <= 1e-6 &&
               a.control.total_variation() < b.control.total_variation() - 1e-12) {
      best = i;
    }
  }

  std::vector<StartOutcome> outcomes;
  for (std::size_t i = 0; i < points.size(); ++i) {
    StartOutcome o;
    o.label = points[i].label;
    if (results[i]) {
      o.initial_objective = results[i]->initial_objective;
      o.objective = results[i]->objective;
      o.iterations = results[i]->iterations;
      o.converged = results[i]->converged;
    } else {
      o.error = errors[i];
    }
    outcomes.push_back(std::move(o));
  }

  if (!best) {
    OptimizationResult failed;
    // The failed starts may not even form a valid control; report pumping.
    failed.control = optical_pumping_control(duration);
    failed.converged = false;
    failed.start_label = "none";
    failed.diagnostic = "all starts failed: " + errors.front();
    failed.starts = std::move(outcomes);
    return failed;
  }
  OptimizationResult out = std::move(*results[*best]);
  out.starts = std::move(outcomes);
  return out;
}

std::vector<SweepCell> sweep(const std::vector<double>& gamma_ratios,
                             const std::vector<double>& gamma_diff_ratios,
                             const std::vector<double>& durations,
                             const OptimizationConfig& config) {
  std::vector<SweepCell> cells;
  for (double g : gamma_ratios) {
    for (double gd : gamma_diff_ratios) {
      for (double t : durations) {
        SweepCell cell;
        cell.gamma_over_omega0 = g;
        cell.gamma_diff_over_omega0 = gd;
        cell.omega0T = t;
        try {
          const SystemParams params = SystemParams::from_ratios(g, gd);
          cell.pumping_baseline =
              objective(optical_pumping_control(t), params, config.integration);
          cell.result = optimize(config, params, t);
          if (cell.result->start_label == "none") cell.error = cell.result->diagnostic;
        } catch (const std::exception& e) {
          cell.error = e.what();
          cell.pumping_baseline = std::numeric_limits<double>::quiet_NaN();
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

double mean_stokes_fraction(const ControlSignal& control) {
  double acc = 0.0;
  for (std::size_t k = 0; k < control.intervals(); ++k) {
    acc += std::cos(control.theta()[k]) * (control.grid()[k + 1] - control.grid()[k]);
  }
  return acc / control.duration();
}

double max_stokes_fraction(const ControlSignal& control) {
  double m = 0.0;
  for (double th : control.theta()) m = std::max(m, std::cos(th));
  return m;
}

}  // namespace lambdapump
