// Bang-singular pulse sequences of the normalized control system, their
// closed-form evaluation, the optical-pumping bound, and Pontryagin
// maximum principle residuals.
//
// All durations here are in normalized time t' = Omega0^2 t / (2 Gamma).

#pragma once

#include "lambdapump/model.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lambdapump {

struct PlanePoint {
  double x = -1.0;
  double y = 0.0;
};

/// n instantaneous angle jumps, each followed by a singular (u = 0) arc.
struct BangSingularSequence {
  std::vector<double> jumps;
  std::vector<double> arcs;

  static BangSingularSequence optical_pumping(double tprime);

  std::size_t size() const { return jumps.size(); }
  double total_angle() const;
  double total_duration() const;

  /// Structural checks: equal lengths, n >= 1, finite values, arcs >= 0.
  void validate() const;
  /// Final-angle boundary condition sum(jumps) = pi/2.
  bool reaches_final_angle(double tol = 1e-12) const;
};

/// Draws a sequence with n bangs whose angles are uniform on the simplex
/// scaled to pi/2 and whose arcs are uniform on the simplex scaled to tprime.
BangSingularSequence random_sequence(std::mt19937_64& rng, std::size_t n,
                                     double tprime);

/// Clockwise rotation by 2 theta produced by a delta pulse of strength theta.
PlanePoint apply_bang(PlanePoint p, double theta);

/// Relaxation along a singular arc of duration t. Throws on t < 0.
PlanePoint apply_singular(PlanePoint p, double t);

/// Step-by-step fold of bang and singular maps from (-1, 0).
PlanePoint propagate_sequence(const BangSingularSequence& seq);

/// Explicit exponential-trigonometric sums for (x_n, y_n).
PlanePoint closed_form_sequence(const BangSingularSequence& seq);

/// Final x under optical pumping: 2 exp(-T') - 1.
double optical_pumping_value(double tprime);

/// rho33(T) = 1 - exp(-Omega0^2 T / (2 Gamma)) for physical duration T.
double pumping_efficiency(double duration, const SystemParams& params);

struct BoundCheck {
  double xn = 0.0;
  double x1 = 0.0;
  double margin = 0.0;  // xn - x1
  bool satisfied = false;
  bool equality = false;  // |margin| <= 1e-9
};

/// Compares a sequence against optical pumping of the same total duration.
/// Throws std::invalid_argument if the angles do not sum to pi/2.
BoundCheck verify_bound(const BangSingularSequence& seq);

/// True when the sequence acts like a single pi/2 bang followed by one arc:
/// bangs separated by arcs shorter than arc_tol are merged, and every merged
/// bang after the first must vanish.
bool equivalent_to_pumping(const BangSingularSequence& seq, double angle_tol = 1e-9,
                           double arc_tol = 1e-12);

struct ArcResidual {
  double start = 0.0;
  double end = 0.0;
  double max_phi = 0.0;
  double max_lambda_y = 0.0;
};

struct PmpReport {
  double max_phi = 0.0;
  double max_lambda_y = 0.0;
  double mu = 0.0;
  // Smallest max(|lambda_x|, |lambda_y|, |mu|) seen on the sampled arcs.
  double min_costate_norm = 0.0;
  bool has_singular_arc = false;
  bool transfers = false;
  PlanePoint final_state;
  std::vector<ArcResidual> arcs;
  std::string note;
};

/// Integrates the state forward and the costate backward from
/// lambda_x(T') = -1, lambda_y(T') = 0 along a bang-singular schedule, fixes
/// mu so that the switching function vanishes at T', and reports the
/// residuals of phi = 2 lambda_x y - 2 lambda_y x + mu and lambda_y on the
/// singular arcs. The schedule's arcs must sum to tprime.
PmpReport pmp_residual(const BangSingularSequence& schedule, double tprime,
                       std::size_t samples_per_arc = 64);

}  // namespace lambdapump
