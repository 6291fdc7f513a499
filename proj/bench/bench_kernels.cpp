// Serial reference kernels against their OpenMP versions, and the two
// cascade resolvers.
#include <benchmark/benchmark.h>

#include <random>

#include "nlif/microscopic.hpp"
#include "nlif/switching.hpp"

namespace {

nlif::NetworkParams network(std::int64_t size) {
  return nlif::NetworkParams::mean_field(1.0, size);
}

void em(benchmark::State& state, nlif::Exec exec) {
  const auto size = state.range(0);
  const auto params = network(size);
  const auto input = nlif::InputCurrent::constant(0.5);
  const nlif::RandomSource rng{1, 0};
  auto v = nlif::sample_gaussian_init({}, size, rng);
  std::int64_t step = 0;
  for (auto _ : state) {
    nlif::em_advance(v, step++, params, input, 1e-4, rng, exec);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * size);
}

void sampling(benchmark::State& state, nlif::Exec exec) {
  const auto size = state.range(0);
  const auto grid = nlif::VoltageGrid::make(-4.0, 2.0, 1.0, 0.05);
  std::vector<double> w(static_cast<std::size_t>(grid.cells()));
  for (int i = 0; i < grid.cells(); ++i) w[static_cast<std::size_t>(i)] = 1.0 + (i % 7);
  const nlif::PiecewiseUniformDensity rho(grid, w);
  std::uint64_t key = 0;
  for (auto _ : state) {
    auto s = nlif::density_to_samples(rho, size, nlif::RandomSource{1, key++}, exec);
    benchmark::DoNotOptimize(s.data());
  }
  state.SetItemsProcessed(state.iterations() * size);
}

std::vector<double> near_threshold(std::int64_t size) {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u(1.5, 2.05);
  std::vector<double> v(static_cast<std::size_t>(size));
  for (auto& x : v) x = u(eng);
  return v;
}

void cascade(benchmark::State& state, bool fast) {
  const auto size = state.range(0);
  const auto v = near_threshold(size);
  const double kick = 0.4 / static_cast<double>(size);
  for (auto _ : state) {
    auto c = fast ? nlif::cascade_fast(v, kick, 2.0) : nlif::cascade_naive(v, kick, 2.0);
    benchmark::DoNotOptimize(c.fired.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(em, serial, nlif::Exec::serial)->Arg(10000)->Arg(160000);
BENCHMARK_CAPTURE(em, parallel, nlif::Exec::parallel)->Arg(10000)->Arg(160000);
BENCHMARK_CAPTURE(sampling, serial, nlif::Exec::serial)->Arg(10000)->Arg(160000);
BENCHMARK_CAPTURE(sampling, parallel, nlif::Exec::parallel)->Arg(10000)->Arg(160000);
BENCHMARK_CAPTURE(cascade, naive, false)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(cascade, fast, true)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
