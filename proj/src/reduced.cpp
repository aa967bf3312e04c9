#include "lambdapump/reduced.hpp"

#include <cmath>
#include <stdexcept>

namespace lambdapump {

namespace {

void require_symmetric(const SystemParams& params) {
  params.validate();
  if (!params.symmetric()) {
    throw std::invalid_argument(
        "the adiabatically eliminated model requires symmetric decay");
  }
}

}  // namespace

EliminatedCoherences eliminated_coherences(double rho11, double rho33,
                                           double re_rho13, double theta,
                                           const SystemParams& params) {
  require_symmetric(params);
  const double op = params.omega0 * std::sin(theta);
  const double os = params.omega0 * std::cos(theta);
  const double g = params.gamma_total;
  EliminatedCoherences out;
  out.rho22 = (op * op * rho11 + os * os * rho33 + 2.0 * op * os * re_rho13) / (g * g);
  // rho22 terms are dropped from the coherences.
  out.im_rho12 = (op * rho11 + os * re_rho13) / g;
  out.im_rho23 = -(op * re_rho13 + os * rho33) / g;
  return out;
}

AdiabaticState rhs_adiabatic(const AdiabaticState& s, double theta,
                             const SystemParams& params) {
  require_symmetric(params);
  const double rate = params.omega0 * params.omega0 / (2.0 * params.gamma_total);
  const double sn = std::sin(theta);
  const double cs = std::cos(theta);
  AdiabaticState d;
  d.rho11 = rate * (-sn * sn * s.rho11 + cs * cs * s.rho33);
  d.rho33 = rate * (sn * sn * s.rho11 - cs * cs * s.rho33);
  d.rho13 = -rate * (s.rho13 + sn * cs * (s.rho11 + s.rho33));
  return d;
}

DarkBright to_dark_bright(const AdiabaticState& s, double theta) {
  const double c2 = std::cos(2.0 * theta);
  const double s2 = std::sin(2.0 * theta);
  const double diff = s.rho11 - s.rho33;
  const double re = s.rho13.real();
  DarkBright db;
  db.x = -c2 * diff + 2.0 * s2 * re;
  db.y = s2 * diff + 2.0 * c2 * re;
  db.population = s.rho11 + s.rho33;
  db.imag = s.rho13.imag();
  return db;
}

AdiabaticState from_dark_bright(const DarkBright& db, double theta) {
  const double c2 = std::cos(2.0 * theta);
  const double s2 = std::sin(2.0 * theta);
  const double diff = -c2 * db.x + s2 * db.y;
  const double re = 0.5 * (s2 * db.x + c2 * db.y);
  AdiabaticState s;
  s.rho11 = 0.5 * (db.population + diff);
  s.rho33 = 0.5 * (db.population - diff);
  s.rho13 = {re, db.imag};
  return s;
}

ReducedState rhs_reduced(const ReducedState& s, double u) {
  return {-(s.x + 1.0) + 2.0 * u * s.y, -2.0 * u * s.x - s.y, u};
}

double normalize_time(double t, const SystemParams& params) {
  params.validate();
  return params.omega0 * params.omega0 * t / (2.0 * params.gamma_total);
}

double denormalize_time(double tprime, const SystemParams& params) {
  params.validate();
  return 2.0 * params.gamma_total * tprime / (params.omega0 * params.omega0);
}

std::vector<ReducedSample> simulate_reduced(const ControlSignal& control,
                                            const SystemParams& params,
                                            std::size_t samples_per_interval) {
  require_symmetric(params);
  samples_per_interval = std::max<std::size_t>(1, samples_per_interval);
  std::vector<ReducedSample> out;
  ReducedState s;
  out.push_back({0.0, s});
  for (std::size_t k = 0; k < control.intervals(); ++k) {
    const double jump = control.theta()[k] - s.theta;
    const double c = std::cos(2.0 * jump);
    const double sn = std::sin(2.0 * jump);
    const double x0 = c * s.x + sn * s.y;
    const double y0 = -sn * s.x + c * s.y;
    s.theta = control.theta()[k];
    const double t0 = normalize_time(control.grid()[k], params);
    const double t1 = normalize_time(control.grid()[k + 1], params);
    for (std::size_t j = 1; j <= samples_per_interval; ++j) {
      const double tau = (t1 - t0) * static_cast<double>(j) /
                         static_cast<double>(samples_per_interval);
      const double decay = std::exp(-tau);
      s.x = decay * (x0 + 1.0) - 1.0;
      s.y = decay * y0;
      out.push_back({j == samples_per_interval ? t1 : t0 + tau, s});
    }
  }
  return out;
}

double reduced_rho33(const ReducedState& s) {
  return from_dark_bright({s.x, s.y, 1.0, 0.0}, s.theta).rho33;
}

}  // namespace lambdapump
