// Adiabatically eliminated dynamics on the {|1>, |3>} subspace and its
// dark/bright form. Valid for symmetric decay and Gamma >> Omega0.

#pragma once

#include "lambdapump/model.hpp"

#include <complex>
#include <vector>

namespace lambdapump {

/// Point of the normalized control system: x = rho_bb - rho_dd,
/// y = 2 Re rho_db, and the current mixing angle.
struct ReducedState {
  double x = -1.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Excited-state quantities slaved to the lower-level block.
struct EliminatedCoherences {
  double rho22 = 0.0;
  double im_rho12 = 0.0;
  double im_rho23 = 0.0;
};

EliminatedCoherences eliminated_coherences(double rho11, double rho33,
                                           double re_rho13, double theta,
                                           const SystemParams& params);

/// Lower-level block of the density matrix.
struct AdiabaticState {
  double rho11 = 1.0;
  double rho33 = 0.0;
  std::complex<double> rho13{0.0, 0.0};
};

/// Time derivative (physical time) of the adiabatically eliminated model.
AdiabaticState rhs_adiabatic(const AdiabaticState& s, double theta,
                             const SystemParams& params);

/// Lower-level block rotated into the dark/bright basis.
/// population = rho_dd + rho_bb, imag = Im rho_db.
struct DarkBright {
  double x = -1.0;
  double y = 0.0;
  double population = 1.0;
  double imag = 0.0;
};

DarkBright to_dark_bright(const AdiabaticState& s, double theta);
AdiabaticState from_dark_bright(const DarkBright& db, double theta);

/// Derivative in normalized time for control rate u = d theta / dt'.
ReducedState rhs_reduced(const ReducedState& s, double u);

/// t' = Omega0^2 t / (2 Gamma).
double normalize_time(double t, const SystemParams& params);
double denormalize_time(double tprime, const SystemParams& params);

struct ReducedSample {
  double tprime = 0.0;
  ReducedState state;
};

/// Reduced-model evolution under a piecewise-constant control. Each change of
/// angle acts as an instantaneous rotation; in between the state relaxes in
/// closed form. `samples_per_interval` points are emitted inside each interval.
std::vector<ReducedSample> simulate_reduced(const ControlSignal& control,
                                            const SystemParams& params,
                                            std::size_t samples_per_interval = 20);

/// Population of |3> implied by a reduced state (unit lower-level population).
double reduced_rho33(const ReducedState& s);

}  // namespace lambdapump
