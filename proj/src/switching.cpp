#include "nlif/switching.hpp"

#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nlif {

PiecewiseUniformDensity::PiecewiseUniformDensity(VoltageGrid grid, std::vector<double> weights)
    : grid_(grid), weights_(std::move(weights)) {
  if (static_cast<int>(weights_.size()) != grid_.cells()) {
    throw ConfigError("density: weight count does not match the grid");
  }
  double sum = 0.0;
  for (const double w : weights_) {
    if (!(w >= 0.0)) {
      // Round-off from the linear solve may leave values of order -1e-16.
      if (w < -1e-12) throw ConfigError("density: negative weight");
    }
    sum += std::max(w, 0.0);
  }
  if (!(sum > 0.0)) throw ConfigError("density: all weights are zero");
  const double norm = 1.0 / (sum * grid_.dv());
  for (auto& w : weights_) w = std::max(w, 0.0) * norm;
}

std::vector<double> density_to_samples(const PiecewiseUniformDensity& density, std::int64_t size,
                                       const RandomSource& rng, Exec exec) {
  if (size < 1) throw ConfigError("density_to_samples: L must be >= 1");
  const auto& grid = density.grid();
  const auto& w = density.weights();
  std::vector<double> cdf(w.size());
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  const double total = cdf.back();
  const double dv = grid.dv();
  const double base = grid.lower_face(1);
  const auto last = static_cast<std::ptrdiff_t>(w.size()) - 1;

  std::vector<double> out(static_cast<std::size_t>(size));
  for_each_block(exec, out.size(), [&](std::uint64_t b, std::size_t lo, std::size_t hi) {
    auto eng = rng.engine(0, b);
    boost::random::uniform_01<double> unif;
    for (std::size_t j = lo; j < hi; ++j) {
      const double u = unif(eng) * total;
      auto c = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
      c = std::min(c, last);
      out[j] = base + (static_cast<double>(c) + unif(eng)) * dv;
    }
  });
  return out;
}

Histogram samples_to_density(std::span<const double> voltages, const VoltageGrid& grid) {
  const int n = grid.cells();
  const double lo = grid.lower_face(1);
  const double hi = grid.upper_face(n);
  const double dv = grid.dv();
  std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
  std::int64_t dropped = 0;
  for (const double v : voltages) {
    if (!(v >= lo && v <= hi)) {
      ++dropped;
      continue;
    }
    auto c = static_cast<int>(std::floor((v - lo) / dv));
    c = std::clamp(c, 0, n - 1);
    counts[static_cast<std::size_t>(c)] += 1.0;
  }
  if (dropped == static_cast<std::int64_t>(voltages.size())) {
    throw NumericalError("samples_to_density: every voltage lies outside the grid");
  }
  return {PiecewiseUniformDensity(grid, std::move(counts)), dropped};
}

double rate_from_counter(std::uint64_t current, std::uint64_t previous, std::int64_t size,
                         double dt) {
  if (current < previous) throw std::invalid_argument("rate_from_counter: counter decreased");
  return static_cast<double>(current - previous) / (static_cast<double>(size) * dt);
}

}  // namespace nlif
