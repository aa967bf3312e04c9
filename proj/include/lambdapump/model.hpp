// Full density-matrix dynamics of a closed three-level Lambda system driven by
// a pump (1<->2) and a Stokes (2<->3) field, with spontaneous decay of the
// excited level |2> into |1> and |3>.
//
// Units: every public quantity is a ratio to the Rabi amplitude bound, i.e.
// omega0 = 1 internally, times are Omega0*t and rates are Gamma/Omega0.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace lambdapump {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

using Vector9 = Eigen::Matrix<double, 9, 1>;
using Matrix9 = Eigen::Matrix<double, 9, 9>;

/// Physical constants of the Lambda system.
///
/// gamma_total is the total decay rate of |2>; gamma_diff = Gamma1 - Gamma3 is
/// the asymmetry between the |2>->|1> and |2>->|3> channels.
struct SystemParams {
  double omega0 = 1.0;
  double gamma_total = 1.0;
  double gamma_diff = 0.0;

  /// Builds parameters from the dimensionless ratios Gamma/Omega0 and
  /// gamma/Omega0 (omega0 is fixed to 1). Throws std::invalid_argument.
  static SystemParams from_ratios(double gamma_over_omega0,
                                  double gamma_diff_over_omega0 = 0.0);

  double gamma1() const { return 0.5 * (gamma_total + gamma_diff); }
  double gamma3() const { return 0.5 * (gamma_total - gamma_diff); }
  bool symmetric() const { return gamma_diff == 0.0; }

  void validate() const;
};

/// Real encoding of the 3x3 density matrix.
///
/// x1..x3 are the populations, x4 = Im rho12, x5 = Im rho23, x6 = Re rho13;
/// y1 = Re rho12, y2 = Re rho23, y3 = Im rho13. Starting from |1><1| the
/// y-block stays identically zero and is kept as a consistency channel.
struct FullState {
  double x1 = 1.0, x2 = 0.0, x3 = 0.0;
  double x4 = 0.0, x5 = 0.0, x6 = 0.0;
  double y1 = 0.0, y2 = 0.0, y3 = 0.0;

  static FullState ground() { return {}; }
  static FullState from_vector(const Vector9& v);
  Vector9 to_vector() const;

  double trace() const { return x1 + x2 + x3; }
  double max_abs_y() const;

  friend bool operator==(const FullState&, const FullState&) = default;
};

/// Piecewise-constant mixing-angle schedule.
///
/// theta[k] holds on [grid[k], grid[k+1]). The pump and Stokes amplitudes are
/// Omega_p = omega0 sin(theta), Omega_s = omega0 cos(theta), so the amplitude
/// constraint holds identically. Angles are clamped into [0, pi/2].
class ControlSignal {
 public:
  ControlSignal(std::vector<double> grid, std::vector<double> theta);

  static ControlSignal uniform(double duration, std::vector<double> theta);
  static ControlSignal constant(double duration, double theta);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& theta() const { return theta_; }
  std::size_t intervals() const { return theta_.size(); }
  double duration() const { return grid_.back(); }

  /// Angle in force at time t (right-continuous; the last interval is closed).
  double theta_at(double t) const;
  double omega_p(std::size_t k, double omega0 = 1.0) const;
  double omega_s(std::size_t k, double omega0 = 1.0) const;
  double total_variation() const;

 private:
  std::vector<double> grid_;
  std::vector<double> theta_;
};

/// Optical pumping: Omega_p = Omega0, Omega_s = 0 on the whole of [0, T].
ControlSignal optical_pumping_control(double duration);

/// Instantaneous derivative of the full state for explicit Rabi frequencies.
FullState rhs_full_rabi(const FullState& s, double omega_p, double omega_s,
                        const SystemParams& params);

/// Instantaneous derivative of the full state at mixing angle theta.
FullState rhs_full(const FullState& s, double theta, const SystemParams& params);

/// The state equation is linear: d/dt v = generator(theta) * v.
/// The generator splits as decay + sin(theta) * pump + cos(theta) * stokes.
struct GeneratorParts {
  Matrix9 decay;
  Matrix9 pump;
  Matrix9 stokes;

  explicit GeneratorParts(const SystemParams& params);
  Matrix9 at(double theta) const;
  Matrix9 derivative_at(double theta) const;
};

struct IntegrationConfig {
  // Fixed-step RK4 constraints: omega0 * h <= max_omega_step and
  // gamma_total * h <= max_gamma_step.
  double max_omega_step = 0.01;
  double max_gamma_step = 0.1;
  // Record every n-th RK4 step (interval ends and t = T are always recorded).
  std::size_t sample_stride = 1;
  double trace_tolerance = 1e-9;

  // Adaptive Dormand-Prince mode for reference integrations.
  bool adaptive = false;
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
};

/// One classical RK4 step of x' = A x with step h, as a matrix:
/// I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24.
Matrix9 rk4_step_matrix(const Matrix9& a, double h);

/// Number of equal RK4 substeps used on an interval of the given length.
std::size_t substeps_for(double length, const SystemParams& params,
                         const IntegrationConfig& config);

/// Raised when the state becomes non-finite, the trace drifts, or the
/// adaptive stepper underflows.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double last_good_time)
      : std::runtime_error(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

struct Trajectory {
  std::vector<double> time;
  std::vector<FullState> states;
  std::vector<double> theta;

  const FullState& final_state() const { return states.back(); }
  std::size_t size() const { return time.size(); }
};

Trajectory integrate_full(const ControlSignal& control,
                          const SystemParams& params,
                          const IntegrationConfig& config = {},
                          const FullState& initial = FullState::ground());

/// Hermitian 3x3 density matrix from the real encoding.
Eigen::Matrix3cd reconstruct_density(const FullState& s);

}  // namespace lambdapump
