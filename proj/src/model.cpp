#include "lambdapump/model.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lambdapump {

SystemParams SystemParams::from_ratios(double gamma_over_omega0,
                                       double gamma_diff_over_omega0) {
  SystemParams p{1.0, gamma_over_omega0, gamma_diff_over_omega0};
  p.validate();
  return p;
}

void SystemParams::validate() const {
  if (!std::isfinite(omega0) || omega0 <= 0.0) {
    throw std::invalid_argument("omega0 must be positive and finite");
  }
  if (!std::isfinite(gamma_total) || gamma_total <= 0.0) {
    throw std::invalid_argument("gamma_total must be positive and finite");
  }
  if (!std::isfinite(gamma_diff) || std::abs(gamma_diff) > gamma_total) {
    throw std::invalid_argument("|gamma_diff| must not exceed gamma_total");
  }
}

FullState FullState::from_vector(const Vector9& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
}

Vector9 FullState::to_vector() const {
  Vector9 v;
  v << x1, x2, x3, x4, x5, x6, y1, y2, y3;
  return v;
}

double FullState::max_abs_y() const {
  return std::max({std::abs(y1), std::abs(y2), std::abs(y3)});
}

ControlSignal::ControlSignal(std::vector<double> grid, std::vector<double> theta)
    : grid_(std::move(grid)), theta_(std::move(theta)) {
  if (theta_.empty() || grid_.size() != theta_.size() + 1) {
    throw std::invalid_argument(
        "control grid must have exactly one more point than theta values");
  }
  if (grid_.front() != 0.0) {
    throw std::invalid_argument("control grid must start at t = 0");
  }
  for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
    if (!std::isfinite(grid_[k + 1]) || !(grid_[k + 1] > grid_[k])) {
      throw std::invalid_argument("control grid must be strictly increasing");
    }
  }
  for (double& th : theta_) {
    if (!std::isfinite(th)) {
      throw std::invalid_argument("control angle must be finite");
    }
    th = std::clamp(th, 0.0, kHalfPi);
  }
}

ControlSignal ControlSignal::uniform(double duration, std::vector<double> theta) {
  if (!std::isfinite(duration) || duration <= 0.0) {
    throw std::invalid_argument("duration must be positive");
  }
  const std::size_t n = theta.size();
  std::vector<double> grid(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    grid[k] = duration * static_cast<double>(k) / static_cast<double>(n);
  }
  grid[n] = duration;
  return ControlSignal(std::move(grid), std::move(theta));
}

ControlSignal ControlSignal::constant(double duration, double theta) {
  return uniform(duration, {theta});
}

double ControlSignal::theta_at(double t) const {
  auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  if (it == grid_.begin()) return theta_.front();
  auto k = static_cast<std::size_t>(std::distance(grid_.begin(), it)) - 1;
  return theta_[std::min(k, theta_.size() - 1)];
}

double ControlSignal::omega_p(std::size_t k, double omega0) const {
  return omega0 * std::sin(theta_.at(k));
}

double ControlSignal::omega_s(std::size_t k, double omega0) const {
  return omega0 * std::cos(theta_.at(k));
}

double ControlSignal::total_variation() const {
  double tv = 0.0;
  for (std::size_t k = 1; k < theta_.size(); ++k) {
    tv += std::abs(theta_[k] - theta_[k - 1]);
  }
  return tv;
}

ControlSignal optical_pumping_control(double duration) {
  return ControlSignal::constant(duration, kHalfPi);
}

FullState rhs_full_rabi(const FullState& s, double op, double os,
                        const SystemParams& params) {
  const double g = params.gamma_total;
  const double g1 = params.gamma1();
  const double g3 = params.gamma3();
  FullState d;
  d.x1 = -op * s.x4 + g1 * s.x2;
  d.x2 = op * s.x4 - os * s.x5 - g * s.x2;
  d.x3 = os * s.x5 + g3 * s.x2;
  d.x4 = 0.5 * op * (s.x1 - s.x2) + 0.5 * os * s.x6 - 0.5 * g * s.x4;
  d.x5 = 0.5 * os * (s.x2 - s.x3) - 0.5 * op * s.x6 - 0.5 * g * s.x5;
  d.x6 = 0.5 * (op * s.x5 - os * s.x4);
  d.y1 = -0.5 * os * s.y3 - 0.5 * g * s.y1;
  d.y2 = 0.5 * op * s.y3 - 0.5 * g * s.y2;
  d.y3 = 0.5 * (os * s.y1 - op * s.y2);
  return d;
}

FullState rhs_full(const FullState& s, double theta, const SystemParams& params) {
  return rhs_full_rabi(s, params.omega0 * std::sin(theta),
                       params.omega0 * std::cos(theta), params);
}

namespace {

Matrix9 generator_for(double op, double os, const SystemParams& params) {
  Matrix9 a;
  for (int i = 0; i < 9; ++i) {
    Vector9 e = Vector9::Zero();
    e[i] = 1.0;
    a.col(i) = rhs_full_rabi(FullState::from_vector(e), op, os, params).to_vector();
  }
  return a;
}

}  // namespace

GeneratorParts::GeneratorParts(const SystemParams& params)
    : decay(generator_for(0.0, 0.0, params)),
      pump(generator_for(params.omega0, 0.0, params) - decay),
      stokes(generator_for(0.0, params.omega0, params) - decay) {}

Matrix9 GeneratorParts::at(double theta) const {
  return decay + std::sin(theta) * pump + std::cos(theta) * stokes;
}

Matrix9 GeneratorParts::derivative_at(double theta) const {
  return std::cos(theta) * pump - std::sin(theta) * stokes;
}

Matrix9 rk4_step_matrix(const Matrix9& a, double h) {
  const Matrix9 b = h * a;
  const Matrix9 b2 = b * b;
  const Matrix9 b3 = b2 * b;
  return Matrix9::Identity() + b + b2 / 2.0 + b3 / 6.0 + b3 * b / 24.0;
}

std::size_t substeps_for(double length, const SystemParams& params,
                         const IntegrationConfig& config) {
  const double h_max = std::min(config.max_omega_step / params.omega0,
                                config.max_gamma_step / params.gamma_total);
  if (!(h_max > 0.0)) throw std::invalid_argument("invalid step constraints");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / h_max - 1e-9)));
}

namespace {

void check_sample(const FullState& s, double trace0, double t, double last_good,
                  const IntegrationConfig& config) {
  const Vector9 v = s.to_vector();
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "non-finite state at t = " << t;
    throw IntegrationError(os.str(), last_good);
  }
  if (std::abs(s.trace() - trace0) > config.trace_tolerance) {
    std::ostringstream os;
    os << "trace drift " << std::abs(s.trace() - trace0) << " at t = " << t;
    throw IntegrationError(os.str(), last_good);
  }
}

Trajectory integrate_fixed(const ControlSignal& control, const SystemParams& params,
                           const IntegrationConfig& config, const FullState& initial) {
  const GeneratorParts parts(params);
  const auto& grid = control.grid();
  const double trace0 = initial.trace();
  const std::size_t stride = std::max<std::size_t>(1, config.sample_stride);

  Trajectory traj;
  traj.time.push_back(0.0);
  traj.states.push_back(initial);
  traj.theta.push_back(control.theta().front());

  Vector9 v = initial.to_vector();
  double last_good = 0.0;
  std::size_t step = 0;
  for (std::size_t k = 0; k < control.intervals(); ++k) {
    const double th = control.theta()[k];
    const double len = grid[k + 1] - grid[k];
    const std::size_t m = substeps_for(len, params, config);
    const double h = len / static_cast<double>(m);
    const Matrix9 step_matrix = rk4_step_matrix(parts.at(th), h);
    for (std::size_t j = 1; j <= m; ++j) {
      v = step_matrix * v;
      ++step;
      const bool last = (j == m);
      if (last || step % stride == 0) {
        const double t = last ? grid[k + 1] : grid[k] + static_cast<double>(j) * h;
        const FullState s = FullState::from_vector(v);
        check_sample(s, trace0, t, last_good, config);
        last_good = t;
        traj.time.push_back(t);
        traj.states.push_back(s);
        traj.theta.push_back(th);
      }
    }
  }
  return traj;
}

using OdeState = std::array<double, 9>;

Trajectory integrate_adaptive(const ControlSignal& control, const SystemParams& params,
                              const IntegrationConfig& config, const FullState& initial) {
  namespace ode = boost::numeric::odeint;
  const auto& grid = control.grid();
  const double trace0 = initial.trace();

  Trajectory traj;
  traj.time.push_back(0.0);
  traj.states.push_back(initial);
  traj.theta.push_back(control.theta().front());

  const Vector9 v0 = initial.to_vector();
  OdeState x;
  for (int i = 0; i < 9; ++i) x[i] = v0[i];
  double last_good = 0.0;

  for (std::size_t k = 0; k < control.intervals(); ++k) {
    const double th = control.theta()[k];
    const double op = params.omega0 * std::sin(th);
    const double os = params.omega0 * std::cos(th);
    auto system = [&](const OdeState& in, OdeState& out, double) {
      const FullState d = rhs_full_rabi(
          {in[0], in[1], in[2], in[3], in[4], in[5], in[6], in[7], in[8]}, op, os, params);
      out = {d.x1, d.x2, d.x3, d.x4, d.x5, d.x6, d.y1, d.y2, d.y3};
    };
    auto observer = [&](const OdeState& s, double t) {
      if (t <= grid[k]) return;
      const FullState fs{s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7], s[8]};
      check_sample(fs, trace0, t, last_good, config);
      last_good = t;
      traj.time.push_back(t);
      traj.states.push_back(fs);
      traj.theta.push_back(th);
    };
    const double len = grid[k + 1] - grid[k];
    try {
      ode::integrate_adaptive(
          ode::make_controlled(config.abs_tol, config.rel_tol,
                               ode::runge_kutta_dopri5<OdeState>()),
          system, x, grid[k], grid[k + 1], std::min(1e-3, len / 10.0), observer);
    } catch (const IntegrationError&) {
      throw;
    } catch (const std::exception& e) {
      throw IntegrationError(std::string("adaptive step failure: ") + e.what(), last_good);
    }
    // odeint may stop a rounding error short of the interval end.
    traj.time.back() = grid[k + 1];
  }
  return traj;
}

}  // namespace

Trajectory integrate_full(const ControlSignal& control, const SystemParams& params,
                          const IntegrationConfig& config, const FullState& initial) {
  params.validate();
  // Refuse work that could never finish instead of running for days.
  constexpr double kMaxSteps = 1e9;
  const double h_max = std::min(config.max_omega_step / params.omega0,
                                config.max_gamma_step / params.gamma_total);
  if (!(control.duration() / h_max <= kMaxSteps)) {
    throw IntegrationError("step budget exceeded: duration requires more than 1e9 steps", 0.0);
  }
  return config.adaptive ? integrate_adaptive(control, params, config, initial)
                         : integrate_fixed(control, params, config, initial);
}

Eigen::Matrix3cd reconstruct_density(const FullState& s) {
  using C = std::complex<double>;
  const C r12(s.y1, s.x4);
  const C r23(s.y2, s.x5);
  const C r13(s.x6, s.y3);
  Eigen::Matrix3cd rho;
  rho << s.x1, r12, r13,
         std::conj(r12), s.x2, r23,
         std::conj(r13), std::conj(r23), s.x3;
  return rho;
}

}  // namespace lambdapump
