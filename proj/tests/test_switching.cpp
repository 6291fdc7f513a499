#include <omp.h>

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nlif/macroscopic.hpp"
#include "nlif/switching.hpp"

using namespace nlif;

TEST_SUITE("switching") {
  TEST_CASE("weights are renormalised to unit mass") {
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.5);
    std::vector<double> w(static_cast<std::size_t>(g.cells()), 3.0);
    w[2] = -1e-16;
    const PiecewiseUniformDensity rho(g, w);
    CHECK(total_mass(rho.weights(), g) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rho.weights()[2] == 0.0);
    w[2] = -0.1;
    CHECK_THROWS_AS(PiecewiseUniformDensity(g, w), ConfigError);
    CHECK_THROWS_AS(PiecewiseUniformDensity(g, std::vector<double>(w.size(), 0.0)), ConfigError);
    CHECK_THROWS_AS(PiecewiseUniformDensity(g, std::vector<double>(3, 1.0)), ConfigError);
  }

  TEST_CASE("samples stay inside the cell range") {
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.1);
    const auto params = NetworkParams::mean_field(1.0, 100);
    const auto s = discretize_gaussian({0.0, 2.0}, g, params);
    const auto v = density_to_samples({g, s.density}, 50000, {1, 0});
    CHECK(*std::min_element(v.begin(), v.end()) >= g.lower_face(1));
    CHECK(*std::max_element(v.begin(), v.end()) < g.upper_face(g.cells()));
  }

  TEST_CASE("a single occupied cell gives uniform samples inside it") {
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.5);
    std::vector<double> w(static_cast<std::size_t>(g.cells()), 0.0);
    w[4] = 1.0;
    const auto v = density_to_samples({g, w}, 20000, {2, 0});
    double mean = 0.0;
    for (const double x : v) {
      REQUIRE(x >= g.lower_face(5));
      REQUIRE(x < g.upper_face(5));
      mean += x;
    }
    mean /= v.size();
    // Uniform on a cell of width 0.5: sd 0.5/sqrt(12).
    CHECK(std::abs(mean - g.node(5)) < 4.0 * 0.5 / std::sqrt(12.0 * 20000));
  }

  TEST_CASE("sampling then binning recovers the density") {
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.1);
    const auto params = NetworkParams::mean_field(1.0, 100);
    const auto s = discretize_gaussian({}, g, params);
    const std::int64_t n = 400000;
    const auto v = density_to_samples({g, s.density}, n, {3, 0});
    const auto h = samples_to_density(v, g);
    CHECK(h.dropped == 0);
    double l1 = 0.0;
    for (std::size_t c = 0; c < s.density.size(); ++c) {
      l1 += std::abs(h.density.weights()[c] - s.density[c]) * g.dv();
    }
    // E|p_hat - p| dv summed is about sum sqrt(2 q_c / (pi n)) over cell masses q_c.
    double expected = 0.0;
    for (const double p : s.density) expected += std::sqrt(2.0 * p * g.dv() / (M_PI * n));
    CHECK(l1 < 2.0 * expected);
  }

  TEST_CASE("histogram bins are half-open with a closed top cell") {
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.5);
    const std::vector<double> v = {g.lower_face(1), g.upper_face(1), g.upper_face(g.cells()),
                                   2.0, -4.0, -3.6};
    const auto h = samples_to_density(v, g);
    CHECK(h.dropped == 2);
    const auto& w = h.density.weights();
    const double unit = 1.0 / (4.0 * g.dv());
    CHECK(w[0] == doctest::Approx(2 * unit));  // lower_face(1) and -3.6
    CHECK(w[1] == doctest::Approx(unit));
    CHECK(w.back() == doctest::Approx(unit));
    CHECK_THROWS_AS(samples_to_density(std::vector<double>{5.0, -5.0}, g), NumericalError);
  }

  TEST_CASE("rate from the spike counter") {
    CHECK(rate_from_counter(130, 100, 1000, 1e-3) == doctest::Approx(30.0));
    CHECK(rate_from_counter(7, 7, 10, 0.1) == 0.0);
    CHECK_THROWS_AS(rate_from_counter(1, 2, 10, 0.1), std::invalid_argument);
  }

  TEST_CASE("serial and threaded sampling are bit-identical") {
    const auto g = VoltageGrid::make(-4.0, 2.0, 1.0, 0.05);
    const auto params = NetworkParams::mean_field(1.0, 100);
    const auto s = discretize_gaussian({}, g, params);
    const PiecewiseUniformDensity rho(g, s.density);
    const auto serial = density_to_samples(rho, 100000, {4, 2}, Exec::serial);
    const int before = omp_get_max_threads();
    for (const int threads : {1, 3, 4}) {
      omp_set_num_threads(threads);
      CHECK(density_to_samples(rho, 100000, {4, 2}, Exec::parallel) == serial);
    }
    omp_set_num_threads(before);
  }
}
