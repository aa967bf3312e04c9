#include "lambdapump/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lambdapump {

BangSingularSequence BangSingularSequence::optical_pumping(double tprime) {
  return {{kHalfPi}, {tprime}};
}

double BangSingularSequence::total_angle() const {
  return std::accumulate(jumps.begin(), jumps.end(), 0.0);
}

double BangSingularSequence::total_duration() const {
  return std::accumulate(arcs.begin(), arcs.end(), 0.0);
}

void BangSingularSequence::validate() const {
  if (jumps.empty() || jumps.size() != arcs.size()) {
    throw std::invalid_argument(
        "a bang-singular sequence needs n >= 1 jumps and as many arcs");
  }
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    if (!std::isfinite(jumps[i]) || !std::isfinite(arcs[i])) {
      throw std::invalid_argument("sequence entries must be finite");
    }
    if (arcs[i] < 0.0) {
      throw std::invalid_argument("singular arc durations must be non-negative");
    }
  }
}

bool BangSingularSequence::reaches_final_angle(double tol) const {
  return std::abs(total_angle() - kHalfPi) <= tol;
}

namespace {

std::vector<double> simplex_point(std::mt19937_64& rng, std::size_t n, double scale) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(n);
  for (double& v : w) v = expo(rng);
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  double used = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    w[i] = scale * w[i] / sum;
    used += w[i];
  }
  w[n - 1] = std::max(0.0, scale - used);
  return w;
}

}  // namespace

BangSingularSequence random_sequence(std::mt19937_64& rng, std::size_t n,
                                     double tprime) {
  if (n == 0) throw std::invalid_argument("sequence length must be positive");
  BangSingularSequence seq;
  seq.jumps = simplex_point(rng, n, kHalfPi);
  seq.arcs = simplex_point(rng, n, tprime);
  return seq;
}

PlanePoint apply_bang(PlanePoint p, double theta) {
  const double c = std::cos(2.0 * theta);
  const double s = std::sin(2.0 * theta);
  return {c * p.x + s * p.y, -s * p.x + c * p.y};
}

PlanePoint apply_singular(PlanePoint p, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("singular arc duration must be >= 0");
  const double e = std::exp(-t);
  return {e * p.x + e - 1.0, e * p.y};
}

PlanePoint propagate_sequence(const BangSingularSequence& seq) {
  seq.validate();
  PlanePoint p;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    p = apply_singular(apply_bang(p, seq.jumps[i]), seq.arcs[i]);
  }
  return p;
}

PlanePoint closed_form_sequence(const BangSingularSequence& seq) {
  seq.validate();
  const std::size_t n = seq.size();
  // Suffix sums: tail_time[k] = t_k + ... + t_n, tail_angle[k] = theta_k + ... + theta_n,
  // with tail_angle[n] = 0.
  std::vector<double> tail_time(n + 1, 0.0);
  std::vector<double> tail_angle(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    tail_time[k] = tail_time[k + 1] + seq.arcs[k];
    tail_angle[k] = tail_angle[k + 1] + seq.jumps[k];
  }
  PlanePoint p{-1.0, 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    const double e = std::exp(-tail_time[k]);
    p.x += e * (std::cos(2.0 * tail_angle[k + 1]) - std::cos(2.0 * tail_angle[k]));
    p.y += e * (std::sin(2.0 * tail_angle[k]) - std::sin(2.0 * tail_angle[k + 1]));
  }
  return p;
}

double optical_pumping_value(double tprime) {
  if (!(tprime >= 0.0)) throw std::invalid_argument("T' must be >= 0");
  return 2.0 * std::exp(-tprime) - 1.0;
}

double pumping_efficiency(double duration, const SystemParams& params) {
  params.validate();
  if (!params.symmetric()) {
    throw std::invalid_argument("pumping efficiency formula assumes symmetric decay");
  }
  if (!(duration >= 0.0)) throw std::invalid_argument("duration must be >= 0");
  return -std::expm1(-params.omega0 * params.omega0 * duration /
                     (2.0 * params.gamma_total));
}

BoundCheck verify_bound(const BangSingularSequence& seq) {
  seq.validate();
  if (!seq.reaches_final_angle(1e-9)) {
    throw std::invalid_argument("bang angles must sum to pi/2");
  }
  BoundCheck out;
  out.xn = propagate_sequence(seq).x;
  out.x1 = optical_pumping_value(seq.total_duration());
  out.margin = out.xn - out.x1;
  out.satisfied = out.xn >= out.x1 - 1e-12;
  out.equality = std::abs(out.margin) <= 1e-9;
  return out;
}

bool equivalent_to_pumping(const BangSingularSequence& seq, double angle_tol,
                           double arc_tol) {
  seq.validate();
  std::vector<double> merged{seq.jumps.front()};
  for (std::size_t i = 1; i < seq.size(); ++i) {
    if (seq.arcs[i - 1] <= arc_tol) {
      merged.back() += seq.jumps[i];
    } else {
      merged.push_back(seq.jumps[i]);
    }
  }
  if (std::abs(std::cos(merged.front())) > angle_tol) return false;
  return std::all_of(merged.begin() + 1, merged.end(),
                     [&](double a) { return std::abs(std::sin(a)) <= angle_tol; });
}

PmpReport pmp_residual(const BangSingularSequence& schedule, double tprime,
                       std::size_t samples_per_arc) {
  schedule.validate();
  if (std::abs(schedule.total_duration() - tprime) > 1e-9 * std::max(1.0, tprime)) {
    throw std::invalid_argument("schedule arcs must cover [0, T']");
  }
  samples_per_arc = std::max<std::size_t>(1, samples_per_arc);
  const std::size_t n = schedule.size();

  // Forward pass: state right after each bang.
  std::vector<PlanePoint> arc_start(n);
  std::vector<double> arc_t0(n);
  PlanePoint p;
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p = apply_bang(p, schedule.jumps[i]);
    arc_start[i] = p;
    arc_t0[i] = t;
    p = apply_singular(p, schedule.arcs[i]);
    t += schedule.arcs[i];
  }

  PmpReport report;
  report.final_state = p;
  report.transfers = std::any_of(schedule.jumps.begin(), schedule.jumps.end(),
                                 [](double a) { return std::abs(std::sin(a)) > 0.0; });
  report.has_singular_arc = std::any_of(schedule.arcs.begin(), schedule.arcs.end(),
                                        [](double a) { return a > 0.0; });
  // Transversality for minimizing x(T'): lambda = (-1, 0); phi(T') = 0 fixes mu.
  report.mu = 2.0 * p.y;
  report.min_costate_norm = std::numeric_limits<double>::infinity();

  // Backward pass: on an arc lambda grows as exp(t - t_end); across a bang it
  // undergoes the inverse of the state rotation.
  double lx = -1.0;
  double ly = 0.0;
  std::vector<ArcResidual> arcs;
  for (std::size_t i = n; i-- > 0;) {
    const double len = schedule.arcs[i];
    if (len > 0.0) {
      ArcResidual arc{arc_t0[i], arc_t0[i] + len, 0.0, 0.0};
      for (std::size_t j = 0; j <= samples_per_arc; ++j) {
        const double tau = len * static_cast<double>(j) / static_cast<double>(samples_per_arc);
        const double decay = std::exp(-tau);
        const double x = decay * (arc_start[i].x + 1.0) - 1.0;
        const double y = decay * arc_start[i].y;
        const double grow = std::exp(tau - len);
        const double lxt = lx * grow;
        const double lyt = ly * grow;
        const double phi = 2.0 * lxt * y - 2.0 * lyt * x + report.mu;
        arc.max_phi = std::max(arc.max_phi, std::abs(phi));
        arc.max_lambda_y = std::max(arc.max_lambda_y, std::abs(lyt));
        report.min_costate_norm = std::min(
            report.min_costate_norm,
            std::max({std::abs(lxt), std::abs(lyt), std::abs(report.mu)}));
      }
      report.max_phi = std::max(report.max_phi, arc.max_phi);
      report.max_lambda_y = std::max(report.max_lambda_y, arc.max_lambda_y);
      arcs.push_back(arc);
    }
    const double shrink = std::exp(-len);
    lx *= shrink;
    ly *= shrink;
    const double c = std::cos(2.0 * schedule.jumps[i]);
    const double s = std::sin(2.0 * schedule.jumps[i]);
    const double plx = c * lx - s * ly;
    const double ply = s * lx + c * ly;
    lx = plx;
    ly = ply;
  }
  std::reverse(arcs.begin(), arcs.end());
  report.arcs = std::move(arcs);
  if (!report.has_singular_arc) {
    report.min_costate_norm = 0.0;
    report.note = "no singular segment";
  } else if (!report.transfers) {
    report.note = "no transfer";
  }
  return report;
}

}  // namespace lambdapump
