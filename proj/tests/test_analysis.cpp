#include <cmath>
#include <random>

#include "doctest.h"
#include "nlif/analysis.hpp"

using namespace nlif;

namespace {

HybridConfig small_pulse(double b, std::int64_t size, double t_end = 0.5) {
  HybridConfig c;
  c.params = NetworkParams::mean_field(b, size);
  c.input = InputCurrent::pulse({16.0, 100.0, 0.2});
  c.grid = VoltageGrid::make(-4.0, 2.0, 1.0, 0.1);
  c.dt = 1e-3;
  c.steps = std::llround(t_end / c.dt);
  return c;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("observables on a constant configuration") {
    const std::vector<double> v(17, 0.3);
    CHECK(observable_on_config(v, Observable::first()) == doctest::Approx(0.3));
    CHECK(observable_on_config(v, Observable::second()) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(observable_on_config(v, Observable::third()) == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("centred second moment of {0, 2} is 1") {
    const std::vector<double> v = {0.0, 2.0};
    CHECK(observable_on_config(v, Observable::second()) == 1.0);
    CHECK(observable_on_config(v, Observable::third()) == 0.0);
    CHECK(observable_on_config(v, Observable::first()) == 1.0);
    Cubic sq;
    sq.c[2] = 1.0;
    CHECK(observable_on_config(v, Observable::custom(sq)) == 2.0);
    CHECK(Observable::third().order() == 3);
    CHECK(Observable::custom(sq).order() == 0);
  }

  TEST_CASE("sample mean of Gaussian voltages lies in the CLT band") {
    const std::int64_t n = 40000;
    const auto v = sample_gaussian_init({}, n, {12, 0});
    CHECK(std::abs(observable_on_config(v, Observable::first()) + 1.0) < 4.0 * std::sqrt(0.5 / n));
    CHECK(std::abs(observable_on_config(v, Observable::second()) - 0.5) <
          4.0 * 0.5 * std::sqrt(2.0 / (n - 1)));
  }

  TEST_CASE("density observables of the uniform density") {
    // Equal weights make the density uniform on [-3.75, 1.75].
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.5);
    const std::vector<double> p(static_cast<std::size_t>(g.cells()), 1.0 / 5.5);
    CHECK(observable_on_density(p, g, Observable::first()) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(observable_on_density(p, g, Observable::second()) == doctest::Approx(5.5 * 5.5 / 12.0).epsilon(1e-13));
    CHECK(observable_on_density(p, g, Observable::third()) == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
  }

  TEST_CASE("distances") {
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.5);
    std::vector<double> p(static_cast<std::size_t>(g.cells()), 0.0), q = p;
    p[0] = 2.0;
    q[1] = 2.0;
    CHECK(l1_distance(p, q, g) == doctest::Approx(2.0));
    CHECK(l1_distance(p, p, g) == 0.0);
    const std::vector<double> a = {10.0, 0.0, 1.0}, b = {0.0, 0.5, 1.5};
    CHECK(sup_distance(a, b) == 10.0);
    CHECK(sup_distance(a, b, 1) == 0.5);
    CHECK(mean_abs_bias(a, b) == doctest::Approx(11.0 / 3.0));
    CHECK(mean_abs_bias(a, a) == 0.0);
  }

  TEST_CASE("the four tests share nothing but the seed") {
    auto c = small_pulse(1.0, 500, 0.2);
    c.steps = 100;
    const auto four = run_four_tests(c, {3, 0});
    const auto again = run_four_tests(c, {3, 0});
    for (int t = 0; t < 4; ++t) {
      CHECK(observable_on_terminal(four.runs[t], Observable::first()) ==
            observable_on_terminal(again.runs[t], Observable::first()));
    }
    CHECK(four.runs[0].final_mode() == Mode::micro);
    CHECK(four.runs[1].final_mode() == Mode::macro);
    CHECK(four.runs[2].final_mode() == Mode::macro);
    CHECK(four.runs[3].final_mode() == Mode::micro);
    // Test 1 is an independent micro run, so pairing it with itself has zero bias.
    const double f1 = observable_on_terminal(four.runs[0], Observable::first());
    CHECK(mean_abs_bias(std::vector<double>{f1}, std::vector<double>{f1}) == 0.0);
  }

  TEST_CASE("scaled configuration follows the mean-field and mesh rules") {
    const auto base = small_pulse(1.0, 500);
    const auto c = scaled_config(base, 10000);
    CHECK(c.params.size == 10000);
    CHECK(c.params.kick == doctest::Approx(1.0 / 10000));
    CHECK(c.grid.dv() == doctest::Approx(0.1));
    CHECK(scaled_config(base, 160000).grid.dv() == doctest::Approx(0.05));
  }

  TEST_CASE("bias rows cover three orders and three comparisons") {
    auto c = small_pulse(1.0, 300, 0.1);
    const auto rows = bias_rows(c, 2, {4, 0});
    CHECK(rows.size() == 9);
    for (const auto& r : rows) {
      CHECK(r.bias >= 0.0);
      CHECK(r.size == 300);
    }
  }

  TEST_CASE("a zero rate threshold is met by the smallest amplitude") {
    const auto c = small_pulse(1.0, 500);
    ThresholdSearch s;
    s.threshold = 0.0;
    const auto res = amplitude_threshold_search(c, s, {1, 0});
    REQUIRE(res.amplitude.has_value());
    CHECK(*res.amplitude == 0.0);
    CHECK(res.evaluations.size() == 1);
  }

  TEST_CASE("the threshold amplitude does not decrease when N_0 doubles") {
    const auto c = small_pulse(1.0, 500);
    ThresholdSearch s;
    s.threshold = 15.0;
    const auto low = amplitude_threshold_search(c, s, {2, 0});
    s.threshold = 30.0;
    const auto high = amplitude_threshold_search(c, s, {2, 0});
    REQUIRE(low.amplitude.has_value());
    REQUIRE(high.amplitude.has_value());
    CHECK(*high.amplitude >= *low.amplitude);
    CHECK(peak_rate(c, *low.amplitude, s.k_rec, {2, 0}) >= 15.0);
  }

  TEST_CASE("threshold search rejects inputs that are not a single pulse") {
    auto c = small_pulse(1.0, 500);
    c.input = InputCurrent::constant(1.0);
    CHECK_THROWS_AS(amplitude_threshold_search(c, {}, {1, 0}), ConfigError);
  }

  TEST_CASE("weak coupling makes the update rules agree") {
    auto c = small_pulse(0.2, 2000);
    c.input = InputCurrent::pulse({0.0, 100.0, 0.2});
    const auto d = refractory_divergence(c, 2, 100, {5, 0});
    CHECK(d.violations == 0);
    CHECK(d.sup_distance < 0.5);
    CHECK(d.refractory.size() == static_cast<std::size_t>(c.steps) + 1);
  }

  TEST_CASE("Monte-Carlo error decays like L^{-1/2}") {
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.05);
    const auto s = discretize_gaussian({}, g, NetworkParams::mean_field(0.0, 10));
    const std::vector<std::int64_t> sizes = {1000, 10000, 100000};
    const auto r = mc_scaling_test({g, s.density}, sizes, 100, Observable::first(), {6, 0});
    CHECK(r.rms_error.size() == 3);
    CHECK(r.slope == doctest::Approx(-0.5).epsilon(0.2));
    // RMS of a sample mean is sd/sqrt(L).
    CHECK(r.rms_error[1] == doctest::Approx(std::sqrt(0.5 / 10000)).epsilon(0.25));
  }

  TEST_CASE("piecewise-linear rate profile") {
    const RateProfile p{{0.0, 1.0, 2.0}, {0.0, 2.0, 2.0}};
    CHECK(p(0.5) == doctest::Approx(1.0));
    CHECK(p(1.5) == doctest::Approx(2.0));
    CHECK(p.integral(1.0) == doctest::Approx(1.0));
    CHECK(p.integral(1.5) == doctest::Approx(2.0));
    CHECK(p.max() == 2.0);
    const auto c = RateProfile::constant(5.0, 1.0);
    CHECK(c.integral(1.0) == doctest::Approx(5.0));
  }

  TEST_CASE("a silent network has a zero aggregate input") {
    const auto d = validate_diffusion_approximation(RateProfile::constant(0.0, 1.0), 1e-4, 10000, 1.0,
                                                    20, {7, 0});
    CHECK(d.mean == 0.0);
    CHECK(d.variance == 0.0);
    CHECK(d.mean_ok);
    CHECK(d.variance_ok);
  }

  TEST_CASE("Poisson aggregate moments at constant rate") {
    const auto d = validate_diffusion_approximation(RateProfile::constant(5.0, 1.0), 1e-4, 10000, 1.0,
                                                    200, {8, 0});
    CHECK(d.expected_mean == doctest::Approx(5.0));
    CHECK(d.expected_variance == doctest::Approx(5e-4));
    CHECK(d.mean_ok);
    CHECK(d.variance_ok);
  }

  TEST_CASE("error budget obeys the triangle inequality") {
    std::mt19937_64 eng(9);
    std::normal_distribution<double> n(-1.0, 0.7);
    const auto g_ref = VoltageGrid::make(-4.0, 2.0, 1.0, 0.025);
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.1);
    const auto params = NetworkParams::mean_field(0.0, 10);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> config(500), resampled(500);
      for (auto& x : config) x = std::clamp(n(eng), -3.5, 1.5);
      for (auto& x : resampled) x = std::clamp(n(eng), -3.5, 1.5);
      const auto ref = discretize_gaussian({-1.0 + 0.01 * trial, 0.5}, g_ref, params);
      const auto den = discretize_gaussian({-1.0, 0.45}, g, params);
      for (const auto& f : {Observable::first(), Observable::second(), Observable::third()}) {
        const auto e = error_budget(config, ref.density, g_ref, den.density, g, resampled, f);
        CHECK(e.total <= e.sampling + e.pde + e.resampling + 1e-12);
      }
    }
  }
}
