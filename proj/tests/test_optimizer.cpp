#include "lambdapump/analytic.hpp"
#include "lambdapump/optimizer.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lambdapump;

namespace {

OptimizationConfig small_config(std::size_t n = 20) {
  OptimizationConfig c;
  c.n_intervals = n;
  c.max_iters = 60;
  c.n_starts = 3;
  return c;
}

}  // namespace

TEST_CASE("objective examples") {
  const auto p10 = SystemParams::from_ratios(10.0);
  CHECK(objective(optical_pumping_control(100.0), p10) ==
        doctest::Approx(0.99298456109065).epsilon(1e-10));
  CHECK(objective(ControlSignal::constant(50.0, 0.0), p10) == 0.0);
  const double quarter =
      objective(ControlSignal::constant(10.0, kHalfPi / 2), SystemParams::from_ratios(2.0));
  CHECK(quarter == doctest::Approx(0.471381445271128).epsilon(1e-8));
}

TEST_CASE("objective_and_gradient value matches objective") {
  const auto p = SystemParams::from_ratios(2.0, 0.5);
  const auto c = ControlSignal::uniform(7.0, {0.2, 0.9, 1.2, 0.4, 1.5});
  CHECK(objective_and_gradient(c, p).value == objective(c, p));
}

TEST_CASE("adjoint gradient agrees with central differences") {
  const auto p = SystemParams::from_ratios(2.0);
  const double T = 10.0;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, kHalfPi - 0.1);
  std::vector<double> th(20);
  for (double& t : th) t = u(rng);
  const auto g = gradient(ControlSignal::uniform(T, th), p);
  const auto fd = oracle::central_difference(
      [&](const std::vector<double>& x) { return objective(ControlSignal::uniform(T, x), p); },
      th, 1e-5);
  REQUIRE(g.size() == fd.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    CAPTURE(k);
    if (std::abs(g[k]) > 1e-8) CHECK(std::abs(g[k] - fd[k]) <= 1e-4 * std::abs(g[k]));
  }
}

TEST_CASE("gradient with asymmetric decay and a long horizon") {
  const auto p = SystemParams::from_ratios(10.0, 8.0);
  std::vector<double> th(12);
  for (std::size_t k = 0; k < th.size(); ++k) th[k] = 0.2 + 0.1 * static_cast<double>(k);
  const auto g = gradient(ControlSignal::uniform(40.0, th), p);
  const auto fd = oracle::central_difference(
      [&](const std::vector<double>& x) { return objective(ControlSignal::uniform(40.0, x), p); },
      th, 1e-5);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (std::abs(g[k]) > 1e-8) CHECK(std::abs(g[k] - fd[k]) <= 1e-4 * std::abs(g[k]));
  }
}

TEST_CASE("gradient vanishes on the dark control") {
  // rho33 is quadratic in the pump amplitude around the dark state.
  const auto g = gradient(ControlSignal::constant(10.0, 0.0), SystemParams::from_ratios(2.0));
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("gradient at the upper bound matches a one-sided difference") {
  const auto p = SystemParams::from_ratios(2.0);
  std::vector<double> th(6, kHalfPi);
  const auto g = gradient(ControlSignal::uniform(8.0, th), p);
  const double f0 = objective(ControlSignal::uniform(8.0, th), p);
  for (std::size_t k = 0; k < th.size(); ++k) {
    auto x = th;
    x[k] -= 1e-6;
    const double fd = (f0 - objective(ControlSignal::uniform(8.0, x), p)) / 1e-6;
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-3));
  }
}

TEST_CASE("projected gradient") {
  const std::vector<double> th{0.0, 0.5, kHalfPi, 0.0, kHalfPi};
  const std::vector<double> g{-1.0, 2.0, 3.0, 4.0, -5.0};
  const auto pg = projected_gradient(th, g);
  CHECK(pg == std::vector<double>{0.0, 2.0, 0.0, 4.0, -5.0});
}

TEST_CASE("default starts") {
  OptimizationConfig c;
  c.n_intervals = 10;
  c.n_starts = 6;
  const auto s = default_starts(c);
  REQUIRE(s.size() == 6);
  CHECK(s[0].label == "pumping");
  CHECK(s[1].label == "counterintuitive");
  CHECK(s[2].label == "intuitive");
  CHECK(s[3].label == "random0");
  for (double t : s[0].theta) CHECK(t == kHalfPi);
  CHECK(s[1].theta.front() < s[1].theta.back());
  CHECK(s[2].theta.front() > s[2].theta.back());
  for (const auto& sp : s) {
    CHECK(sp.theta.size() == 10);
    for (double t : sp.theta) {
      CHECK(t >= 0.0);
      CHECK(t <= kHalfPi);
    }
  }
  c.n_starts = 2;
  CHECK(default_starts(c).size() == 2);
  // Seeded: the same seed gives the same random starts.
  c.n_starts = 6;
  c.seed = 9;
  CHECK(default_starts(c)[4].theta == default_starts(c)[4].theta);
  auto c2 = c;
  c2.seed = 10;
  CHECK(default_starts(c)[4].theta != default_starts(c2)[4].theta);
}

TEST_CASE("pumping is a fixed point when decay dominates") {
  const auto p = SystemParams::from_ratios(10.0);
  auto c = small_config(50);
  const auto r = optimize_from({"pumping", std::vector<double>(50, kHalfPi)}, 100.0, p, c);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  CHECK(r.objective == doctest::Approx(0.99298456109065).epsilon(1e-10));
}

TEST_CASE("ascent is monotone and respects the bounds") {
  const auto p = SystemParams::from_ratios(0.1);
  auto c = small_config(25);
  const auto r = optimize_from({"ramp", std::vector<double>(25, 0.7)}, 5.0, p, c);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] >= r.history[i - 1]);
  for (double t : r.control.theta()) {
    CHECK(t >= 0.0);
    CHECK(t <= kHalfPi);
  }
  CHECK(r.objective > r.initial_objective);
  CHECK(r.control.duration() == 5.0);
  CHECK(r.control.intervals() == 25);
}

TEST_CASE("optimizer beats pumping when coherence matters") {
  const auto p = SystemParams::from_ratios(0.1);
  auto c = small_config(40);
  c.max_iters = 200;
  const auto r = optimize(c, p, 5.0);
  CHECK(r.objective > objective(optical_pumping_control(5.0), p) + 0.3);
  CHECK(r.starts.size() == 3);
}

TEST_CASE("ties go to the smaller total variation") {
  const auto p = SystemParams::from_ratios(2.0);
  auto c = small_config(10);
  c.max_iters = 0;
  std::vector<double> wiggle(10, 0.0);
  for (std::size_t k = 0; k < wiggle.size(); k += 2) wiggle[k] = 1e-5;
  const std::vector<StartPoint> starts{{"wiggle", wiggle}, {"flat", std::vector<double>(10, 0.0)}};
  const auto r = optimize(c, p, 10.0, starts);
  CHECK(r.start_label == "flat");
  CHECK(r.control.total_variation() == 0.0);
  // Equal candidates keep the earlier one.
  const std::vector<StartPoint> same{{"first", std::vector<double>(10, 0.0)},
                                     {"second", std::vector<double>(10, 0.0)}};
  CHECK(optimize(c, p, 10.0, same).start_label == "first");
}

TEST_CASE("serial and parallel runs agree bit for bit") {
  const auto p = SystemParams::from_ratios(2.0);
  auto c = small_config(15);
  c.max_iters = 30;
  c.n_starts = 4;
  c.parallel = false;
  const auto a = optimize(c, p, 10.0);
  c.parallel = true;
  const auto b = optimize(c, p, 10.0);
  CHECK(a.objective == b.objective);
  CHECK(a.control.theta() == b.control.theta());
  CHECK(a.start_label == b.start_label);
}

TEST_CASE("failed starts are reported") {
  const auto p = SystemParams::from_ratios(2.0);
  auto c = small_config(10);
  const std::vector<StartPoint> bad{{"nan", std::vector<double>(10, NAN)}};
  const auto r = optimize(c, p, 10.0, bad);
  CHECK_FALSE(r.converged);
  CHECK(r.start_label == "none");
  CHECK(r.diagnostic.find("all starts failed") != std::string::npos);
  REQUIRE(r.starts.size() == 1);
  CHECK_FALSE(r.starts[0].error.empty());

  const std::vector<StartPoint> mixed{{"nan", std::vector<double>(10, NAN)},
                                      {"pumping", std::vector<double>(10, kHalfPi)}};
  const auto m = optimize(c, p, 10.0, mixed);
  CHECK(m.start_label == "pumping");
  CHECK_FALSE(m.starts[0].error.empty());
}

TEST_CASE("configuration validation") {
  OptimizationConfig c;
  c.integration.adaptive = true;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(objective_and_gradient(optical_pumping_control(1.0),
                                         SystemParams::from_ratios(1.0), c.integration),
                  std::invalid_argument);
  c = {};
  c.n_intervals = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  CHECK_THROWS_AS(optimize(c, SystemParams::from_ratios(1.0), -1.0), std::invalid_argument);
}

TEST_CASE("sweep records results and failures per cell") {
  auto c = small_config(10);
  c.max_iters = 20;
  c.n_starts = 1;
  const auto cells = sweep({10.0, 2.0}, {0.0, 50.0}, {20.0}, c);
  REQUIRE(cells.size() == 4);
  int ok = 0;
  int failed = 0;
  for (const auto& cell : cells) {
    if (cell.result) {
      ++ok;
      CHECK(cell.error.empty());
      CHECK(cell.result->objective >= cell.pumping_baseline - 1e-12);
    } else {
      ++failed;
      CHECK_FALSE(cell.error.empty());
      CHECK(cell.gamma_diff_over_omega0 == 50.0);
    }
  }
  CHECK(ok == 2);
  CHECK(failed == 2);
}

TEST_CASE("Stokes fractions") {
  const auto pump = optical_pumping_control(10.0);
  CHECK(mean_stokes_fraction(pump) < 1e-15);
  CHECK(max_stokes_fraction(pump) < 1e-15);
  const auto c = ControlSignal({0.0, 1.0, 4.0}, {0.0, kHalfPi});
  CHECK(mean_stokes_fraction(c) == doctest::Approx(0.25));
  CHECK(max_stokes_fraction(c) == 1.0);
}
