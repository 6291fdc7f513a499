// Conversions between a macroscopic density and a microscopic voltage
// configuration, used when the hybrid driver changes solver.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlif/core.hpp"
#include "nlif/parallel.hpp"

namespace nlif {

/// rho(v) = sum_i p_i 1[v in cell i] over the interior cells. Weights are
/// renormalised to unit mass on construction.
class PiecewiseUniformDensity {
 public:
  PiecewiseUniformDensity(VoltageGrid grid, std::vector<double> weights);

  const VoltageGrid& grid() const { return grid_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  VoltageGrid grid_;
  std::vector<double> weights_;
};

/// L i.i.d. draws from rho: a cell by inverse CDF on p_i dv, then a uniform
/// position inside it. Always in [v_min + dv/2, V_F - dv/2).
std::vector<double> density_to_samples(const PiecewiseUniformDensity& density, std::int64_t size,
                                       const RandomSource& rng, Exec exec = Exec::parallel);

struct Histogram {
  PiecewiseUniformDensity density;
  std::int64_t dropped = 0;  // voltages outside [v_min + dv/2, V_F - dv/2]
};

/// Cell histogram p_i = L_i / (dv sum L_i). Cells are half-open
/// [v_{i-1/2}, v_{i+1/2}) with the top cell closed.
Histogram samples_to_density(std::span<const double> voltages, const VoltageGrid& grid);

/// (M_k - M_{k-1}) / (L dt).
double rate_from_counter(std::uint64_t current, std::uint64_t previous, std::int64_t size,
                         double dt);

}  // namespace nlif
