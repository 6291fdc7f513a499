#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "nlif/microscopic.hpp"

using namespace nlif;

namespace {

// Fixed point of the fired count: m <- #{j : v_j + J m >= V_F}, from m = 0.
struct CountOracle {
  std::vector<std::size_t> fired;
  int depth = 0;
};

CountOracle count_oracle(const std::vector<double>& v, double kick, double v_fire) {
  CountOracle o;
  std::size_t m = 0;
  for (;;) {
    std::size_t next = 0;
    for (const double x : v) next += (x + kick * static_cast<double>(m) >= v_fire);
    if (next <= m) break;
    ++o.depth;
    m = next;
  }
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j] + kick * static_cast<double>(m) >= v_fire) o.fired.push_back(j);
  }
  return o;
}

std::vector<double> random_config(std::mt19937_64& eng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 2.6);
  std::vector<double> v(n);
  for (auto& x : v) x = u(eng);
  // Repeated values exercise the tie-breaking of the sorted sweep.
  if (n > 4) v[1] = v[3] = v[0];
  return v;
}

}  // namespace

TEST_SUITE("microscopic") {
  TEST_CASE("three-round cascade") {
    const std::vector<double> v = {2.1, 1.95, 1.9, 1.0};
    for (const auto& c : {cascade_naive(v, 0.06, 2.0), cascade_fast(v, 0.06, 2.0)}) {
      CHECK(c.fired == std::vector<std::size_t>{0, 1, 2});
      CHECK(c.report.depth == 3);
      CHECK(c.report.size == 3);
      CHECK(c.report.proportion == doctest::Approx(0.75));
    }
  }

  TEST_CASE("no tentative crossing means no cascade") {
    const std::vector<double> v = {1.99, 1.5, 0.0};
    CHECK(cascade_fast(v, 0.5, 2.0).fired.empty());
    CHECK(cascade_naive(v, 0.5, 2.0).fired.empty());
    CHECK(cascade_fast(v, 0.5, 2.0).report.depth == 0);
  }

  TEST_CASE("inhibitory or zero kicks fire only the first round") {
    const std::vector<double> v = {2.0, 1.999, 2.5, 0.0};
    for (const double kick : {0.0, -0.1}) {
      CHECK(cascade_fast(v, kick, 2.0).fired == std::vector<std::size_t>{0, 2});
      CHECK(cascade_naive(v, kick, 2.0).fired == std::vector<std::size_t>{0, 2});
    }
  }

  TEST_CASE("both cascade resolvers agree with the fixed-point oracle") {
    std::mt19937_64 eng(11);
    std::uniform_int_distribution<std::size_t> size(1, 200);
    std::uniform_real_distribution<double> kick(0.0, 0.5);
    for (int i = 0; i < 3000; ++i) {
      const auto v = random_config(eng, size(eng));
      const double J = kick(eng);
      const auto oracle = count_oracle(v, J, 2.0);
      const auto naive = cascade_naive(v, J, 2.0);
      const auto fast = cascade_fast(v, J, 2.0);
      REQUIRE(naive.fired == oracle.fired);
      REQUIRE(fast.fired == oracle.fired);
      REQUIRE(naive.report.depth == oracle.depth);
      REQUIRE(fast.report.depth == oracle.depth);
    }
  }

  TEST_CASE("large networks with deep cascades") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u(1.0, 2.001);
    std::vector<double> v(20000);
    for (auto& x : v) x = u(eng);
    const double J = 1.2 / static_cast<double>(v.size());
    const auto fast = cascade_fast(v, J, 2.0);
    const auto oracle = count_oracle(v, J, 2.0);
    CHECK(fast.fired == oracle.fired);
    CHECK(fast.report.depth == oracle.depth);
    CHECK(fast.report.size > 1000);
  }

  TEST_CASE("the cascade grows with the kick") {
    std::mt19937_64 eng(8);
    for (int i = 0; i < 200; ++i) {
      const auto v = random_config(eng, 100);
      std::size_t prev = 0;
      for (double J = 0.0; J < 0.1; J += 0.01) {
        const auto n = cascade_fast(v, J, 2.0).fired.size();
        CHECK(n >= prev);
        prev = n;
      }
    }
  }

  TEST_CASE("refractory rule resets the fired and kicks the rest") {
    NetworkParams p = NetworkParams::mean_field(0.3, 4);
    const std::vector<double> v = {2.1, 1.95, 1.0, 0.5};
    const auto c = cascade_fast(v, p.kick, p.v_fire);
    REQUIRE(c.fired == std::vector<std::size_t>{0, 1});
    const auto out = apply_mfe(v, c.fired, p.kick, UpdateRule::refractory, p);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 1.0);
    CHECK(out[2] == doctest::Approx(1.0 + 2 * 0.075));
    CHECK(out[3] == doctest::Approx(0.5 + 2 * 0.075));
  }

  TEST_CASE("no-refractory rule kicks everyone and drops the fired by V_F - V_R") {
    NetworkParams p = NetworkParams::mean_field(0.3, 4);
    const std::vector<double> v = {2.1, 1.95, 1.0, 0.5};
    const std::vector<std::size_t> fired = {0, 1};
    const auto out = apply_mfe(v, fired, p.kick, UpdateRule::no_refractory, p);
    CHECK(out[0] == doctest::Approx(2.1 + 0.15 - 1.0));
    CHECK(out[1] == doctest::Approx(1.95 + 0.15 - 1.0));
    CHECK(out[2] == doctest::Approx(1.15));
  }

  TEST_CASE("a neuron left above threshold is an error unless diagnostics are on") {
    NetworkParams p = NetworkParams::mean_field(1.2, 2);  // L J = 1.2 >= V_F - V_R
    const std::vector<double> v = {2.5, 2.4};
    const std::vector<std::size_t> fired = {0, 1};
    CHECK_THROWS_AS(apply_mfe(v, fired, p.kick, UpdateRule::no_refractory, p), NumericalError);
    std::vector<double> w = v;
    MfeReport report;
    apply_mfe(w, fired, p.kick, UpdateRule::no_refractory, p, false, report);
    CHECK(report.violations == 2);
  }

  TEST_CASE("noise-free Euler step") {
    NetworkParams p = NetworkParams::mean_field(0.0, 3);
    p.sigma0 = 0.0;
    p.v_leak = 0.2;
    MicroState s{{-1.0, 0.0, 1.5}, 0, 4};
    const auto input = InputCurrent::constant(0.7);
    const auto out = em_substep(s, p, input, 0.01, {1, 0});
    for (std::size_t j = 0; j < 3; ++j) {
      const double v = s.voltages[j];
      CHECK(out[j] == doctest::Approx(v - (v - 0.2) * 0.01 + 0.7 * 0.01).epsilon(1e-15));
    }
  }

  TEST_CASE("noise increments have variance sigma0^2 dt") {
    NetworkParams p = NetworkParams::mean_field(0.0, 40000);
    MicroState s{std::vector<double>(40000, 0.0), 0, 0};
    const double dt = 1e-3;
    const auto out = em_substep(s, p, InputCurrent(), dt, {2, 0});
    double mean = 0.0, var = 0.0;
    for (const double x : out) mean += x;
    mean /= out.size();
    for (const double x : out) var += (x - mean) * (x - mean);
    var /= out.size() - 1;
    const double expected = p.sigma0 * p.sigma0 * dt;
    CHECK(std::abs(mean) < 4.0 * std::sqrt(expected / 40000));
    CHECK(std::abs(var - expected) < 4.0 * expected * std::sqrt(2.0 / 39999));
  }

  TEST_CASE("serial and threaded Euler steps are bit-identical for any thread count") {
    NetworkParams p = NetworkParams::mean_field(1.0, 70000);
    const auto init = sample_gaussian_init({}, 70000, {3, 0});
    MicroState s{init, 0, 17};
    const auto input = InputCurrent::pulse({16.0, 100.0, 0.5});
    const RandomSource rng{5, 2};
    const auto serial = em_substep(s, p, input, 1e-4, rng, Exec::serial);
    const int before = omp_get_max_threads();
    for (const int threads : {1, 2, 4}) {
      omp_set_num_threads(threads);
      CHECK(em_substep(s, p, input, 1e-4, rng, Exec::parallel) == serial);
    }
    omp_set_num_threads(before);
  }

  TEST_CASE("micro step counts spikes and leaves everyone below threshold") {
    NetworkParams p = NetworkParams::mean_field(1.0, 5000);
    MicroState s{sample_gaussian_init({1.5, 0.1}, 5000, {1, 0}), 0, 0};
    const auto input = InputCurrent::constant(20.0);
    std::uint64_t total = 0;
    for (int k = 0; k < 50; ++k) {
      const auto res = micro_step(s, p, input, 1e-3, {}, {4, 0});
      total += static_cast<std::uint64_t>(res.mfe.size);
      CHECK(res.rate == doctest::Approx(res.mfe.size / (5000 * 1e-3)));
      CHECK(*std::max_element(s.voltages.begin(), s.voltages.end()) < p.v_fire);
    }
    CHECK(s.spike_count == total);
    CHECK(s.step == 50);
    CHECK(total > 0);
  }

  TEST_CASE("windowed rate from the spike counter") {
    const std::vector<std::uint64_t> counts = {0, 3, 5, 5, 12};
    CHECK(windowed_rate(counts, 4, 2, 10, 0.5) == doctest::Approx(7.0 / (10 * 2 * 0.5)));
    CHECK(windowed_rate(counts, 1, 1, 10, 0.5) == doctest::Approx(3.0 / 5.0));
    CHECK_THROWS_AS(windowed_rate(counts, 1, 2, 10, 0.5), std::invalid_argument);
  }
}
