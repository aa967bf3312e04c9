#include "lambdapump/reduced.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace lambdapump;

TEST_CASE("eliminated coherences") {
  const auto p = SystemParams::from_ratios(10.0);
  CHECK(eliminated_coherences(1.0, 0.0, 0.0, 0.0, p).rho22 == 0.0);
  CHECK(eliminated_coherences(1.0, 0.0, 0.0, kHalfPi, p).rho22 == doctest::Approx(0.01));
  // Hand evaluation: (1/100)[0.5*0.5 + 0.5*0.5 + 2*0.5*0.5] = 0.01.
  CHECK(eliminated_coherences(0.5, 0.5, 0.5, std::numbers::pi / 4, p).rho22 ==
        doctest::Approx(0.01));
  // Slaved coherences are the steady states of the x4/x5 equations without rho22.
  const auto e = eliminated_coherences(0.7, 0.2, 0.1, 0.6, p);
  const double op = std::sin(0.6), os = std::cos(0.6);
  CHECK(0.5 * op * 0.7 + 0.5 * os * 0.1 - 5.0 * e.im_rho12 == doctest::Approx(0.0));
  CHECK(-0.5 * os * 0.2 - 0.5 * op * 0.1 - 5.0 * e.im_rho23 == doctest::Approx(0.0));
  CHECK_THROWS_AS(eliminated_coherences(1, 0, 0, 0, SystemParams::from_ratios(10, 1)),
                  std::invalid_argument);
}

TEST_CASE("rhs_adiabatic examples") {
  const auto p = SystemParams::from_ratios(10.0);
  const double rate = 1.0 / 20.0;
  auto d = rhs_adiabatic({1.0, 0.0, {0.0, 0.0}}, kHalfPi, p);
  CHECK(d.rho11 == doctest::Approx(-rate));
  CHECK(d.rho33 == doctest::Approx(rate));
  d = rhs_adiabatic({1.0, 0.0, {0.0, 0.0}}, 0.0, p);
  CHECK(d.rho11 == 0.0);
  CHECK(d.rho33 == 0.0);
  CHECK(std::abs(d.rho13) == 0.0);
  const AdiabaticState s{0.3, 0.6, {0.2, -0.1}};
  d = rhs_adiabatic(s, std::numbers::pi / 4, p);
  const std::complex<double> expect = -rate * (s.rho13 + 0.5 * (s.rho11 + s.rho33));
  CHECK(std::abs(d.rho13 - expect) < 1e-15);
  CHECK(d.rho11 + d.rho33 == doctest::Approx(0.0));
}

TEST_CASE("dark/bright transform examples") {
  auto db = to_dark_bright({1.0, 0.0, {}}, 0.0);
  CHECK(db.x == doctest::Approx(-1.0));
  CHECK(db.y == doctest::Approx(0.0));
  db = to_dark_bright({1.0, 0.0, {}}, kHalfPi);
  CHECK(db.x == doctest::Approx(1.0));
  CHECK(std::abs(db.y) < 1e-15);
  // By hand: R = [[c,-c],[c,c]] with c = 1/sqrt2 gives rho_dd = rho_bb = 1/2,
  // rho_db = 1/2.
  db = to_dark_bright({1.0, 0.0, {}}, std::numbers::pi / 4);
  CHECK(std::abs(db.x) < 1e-15);
  CHECK(db.y == doctest::Approx(1.0));
}

TEST_CASE("dark/bright transform matches the rotation R rho R^-1") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const double th = u(rng) * 2.0;
    const AdiabaticState s{std::abs(u(rng)), std::abs(u(rng)), {u(rng), u(rng)}};
    Eigen::Matrix2cd rho;
    rho << s.rho11, s.rho13, std::conj(s.rho13), s.rho33;
    Eigen::Matrix2cd r;
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Eigen::Matrix2cd t = r * rho * r.inverse();
    const auto db = to_dark_bright(s, th);
    CHECK(db.x == doctest::Approx(t(1, 1).real() - t(0, 0).real()));
    CHECK(db.y == doctest::Approx(2.0 * t(0, 1).real()));
    CHECK(db.imag == doctest::Approx(t(0, 1).imag()));
    const auto back = from_dark_bright(db, th);
    CHECK(std::abs(back.rho11 - s.rho11) < 1e-12);
    CHECK(std::abs(back.rho33 - s.rho33) < 1e-12);
    CHECK(std::abs(back.rho13 - s.rho13) < 1e-12);
  }
}

TEST_CASE("rhs_reduced examples") {
  auto d = rhs_reduced({-1.0, 0.0, 0.0}, 0.0);
  CHECK(d.x == 0.0);
  CHECK(d.y == 0.0);
  CHECK(d.theta == 0.0);
  d = rhs_reduced({1.0, 0.0, 0.3}, 0.0);
  CHECK(d.x == -2.0);
  CHECK(d.y == 0.0);
  for (double u : {-3.0, 0.0, 2.5}) {
    d = rhs_reduced({0.0, 0.0, 0.0}, u);
    CHECK(d.x == -1.0);
    CHECK(d.y == 0.0);
    CHECK(d.theta == u);
  }
}

TEST_CASE("time normalization") {
  CHECK(normalize_time(100.0, SystemParams::from_ratios(10.0)) == doctest::Approx(5.0));
  CHECK(denormalize_time(0.0, SystemParams::from_ratios(10.0)) == 0.0);
  CHECK(normalize_time(40.0, SystemParams::from_ratios(2.0)) == doctest::Approx(10.0));
  const auto p = SystemParams::from_ratios(3.7);
  for (double t : {0.0, 0.1, 13.0, 1e4}) {
    CHECK(denormalize_time(normalize_time(t, p), p) == doctest::Approx(t));
  }
}

namespace {

using V4 = Eigen::Vector4d;  // rho11, rho33, Re rho13, Im rho13

V4 adiabatic_field(const V4& v, double theta, const SystemParams& p) {
  const auto d = rhs_adiabatic({v[0], v[1], {v[2], v[3]}}, theta, p);
  return {d.rho11, d.rho33, d.rho13.real(), d.rho13.imag()};
}

}  // namespace

TEST_CASE("reduced-model population is conserved") {
  const auto p = SystemParams::from_ratios(10.0);
  auto theta = [](double t) { return 0.8 + 0.6 * std::sin(0.05 * t); };
  const V4 end = oracle::rk4(V4(0.7, 0.3, 0.1, 0.05), 0.0, 200.0, 4000,
                             [&](double t, const V4& v) { return adiabatic_field(v, theta(t), p); });
  CHECK(std::abs(end[0] + end[1] - 1.0) <= 1e-10);
}

TEST_CASE("adiabatic model in the original basis agrees with the reduced system") {
  // Physical time, Gamma = 10: t' = t / 20. theta(t) smooth with theta(0) = 0.
  const auto p = SystemParams::from_ratios(10.0);
  const double T = 100.0;
  auto theta = [&](double t) { return kHalfPi * std::sin(std::numbers::pi * t / (2 * T)); };
  auto dtheta = [&](double t) {
    return kHalfPi * std::numbers::pi / (2 * T) * std::cos(std::numbers::pi * t / (2 * T));
  };
  const int steps = 20000;
  const V4 full = oracle::rk4(V4(1, 0, 0, 0), 0.0, T, steps,
                              [&](double t, const V4& v) { return adiabatic_field(v, theta(t), p); });
  // Reduced system in normalized time with u = d theta / dt' = 20 d theta / dt.
  using V3 = Eigen::Vector3d;
  const V3 red = oracle::rk4(V3(-1, 0, 0), 0.0, normalize_time(T, p), steps,
                             [&](double tp, const V3& v) {
                               const double u = dtheta(denormalize_time(tp, p)) * 20.0;
                               const auto d = rhs_reduced({v[0], v[1], v[2]}, u);
                               return V3(d.x, d.y, d.theta);
                             });
  const auto db = to_dark_bright({full[0], full[1], {full[2], full[3]}}, theta(T));
  CHECK(std::abs(db.x - red[0]) <= 1e-8);
  CHECK(std::abs(db.y - red[1]) <= 1e-8);
  CHECK(std::abs(red[2] - theta(T)) <= 1e-10);
}

TEST_CASE("unit disk is invariant under arbitrary controls") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  using V2 = Eigen::Vector2d;
  for (int trial = 0; trial < 50; ++trial) {
    const double a = 5.0 * u(rng), b = 3.0 * u(rng), w = 4.0 * u(rng);
    const double r = std::sqrt(std::abs(u(rng)));
    const double phi = 3.2 * u(rng);
    V2 v(r * std::cos(phi), r * std::sin(phi));
    double worst = v.squaredNorm();
    for (int seg = 0; seg < 50; ++seg) {
      v = oracle::rk4(v, seg * 0.1, (seg + 1) * 0.1, 20, [&](double t, const V2& s) {
        const double ctrl = a + b * std::sin(w * t);
        const auto d = rhs_reduced({s[0], s[1], 0.0}, ctrl);
        return V2(d.x, d.y);
      });
      worst = std::max(worst, v.squaredNorm());
    }
    CHECK(worst <= 1.0 + 1e-9);
  }
}

TEST_CASE("simulate_reduced treats angle steps as rotations") {
  const auto p = SystemParams::from_ratios(10.0);
  const auto samples = simulate_reduced(optical_pumping_control(100.0), p, 10);
  CHECK(samples.front().state.x == -1.0);
  CHECK(samples.back().tprime == doctest::Approx(5.0));
  CHECK(samples.back().state.x == doctest::Approx(2 * std::exp(-5.0) - 1));
  CHECK(reduced_rho33(samples.back().state) == doctest::Approx(1 - std::exp(-5.0)));
  CHECK_THROWS_AS(simulate_reduced(optical_pumping_control(1.0), SystemParams::from_ratios(10, 2)),
                  std::invalid_argument);
}

TEST_CASE("reduced model approaches the full model as the decay grows") {
  // Counterintuitive ramp at fixed T' = 2.
  double prev_gap = 1.0;
  for (double g : {10.0, 30.0, 100.0}) {
    const auto p = SystemParams::from_ratios(g);
    const double T = denormalize_time(2.0, p);
    const std::size_t n = 200;
    std::vector<double> th(n);
    for (std::size_t k = 0; k < n; ++k) th[k] = kHalfPi * (k + 0.5) / n;
    const auto c = ControlSignal::uniform(T, th);
    const double full = integrate_full(c, p).final_state().x3;
    const double red = reduced_rho33(simulate_reduced(c, p, 1).back().state);
    const double gap = std::abs(full - red);
    CAPTURE(g);
    CHECK(gap <= 0.02);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
}
