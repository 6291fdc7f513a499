// Finite-volume solver for the flux-shift Fokker-Planck equation
//
//   p_t + [(-v + V_L + I_0 + bN) p]_v - a p_vv = 0,   N = -a p_v(V_F),
//
// in Scharfetter-Gummel form p_t = a (M (p/M)_v)_v with the Maxwellian
// M = exp(-(v - V_L - I_0 - bN)^2 / 2a). The outflux at V_F is reinjected at
// V_R through the shift term of every face above V_R.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nlif/core.hpp"

namespace nlif {

/// Interior cell averages p_1..p_{n_v-1} (stored 0-based) and the firing rate.
struct MacroState {
  std::vector<double> density;
  double rate = 0.0;
  std::int64_t step = 0;
};

/// Maxwellian weights at the nodes of the interior cells and their harmonic
/// means at the faces between consecutive cells. `log_node` is kept because
/// the node weights underflow when the drift peak leaves the domain.
struct SgWeights {
  std::vector<double> node;      // M_i, i = 1..n_v-1
  std::vector<double> log_node;  // log M_i
  std::vector<double> face;      // M_{i+1/2}, i = 1..n_v-2
};

SgWeights compute_weights(const VoltageGrid& grid, const NetworkParams& params, double drive,
                          double rate);

enum class ShiftClosure {
  implicit,  // reinjection uses N_{k+1} = a p_{n_v-1,k+1}/dv
  lagged,    // reinjection uses N_k
};

/// N = a p_{n_v-1}/dv, the one-sided difference for -a p_v(V_F) with p(V_F) = 0.
double boundary_rate(std::span<const double> density, const VoltageGrid& grid,
                     const NetworkParams& params);

double total_mass(std::span<const double> density, const VoltageGrid& grid);

/// Cell values p_G(v_i), renormalised to unit mass on the grid.
MacroState discretize_gaussian(const GaussianInit& g, const VoltageGrid& grid,
                               const NetworkParams& params);

/// Weights frozen at (I_0(t_k), N_k); diffusive fluxes at level k+1. The
/// resulting system is tridiagonal plus one entry in the last column (the
/// reinjection at V_R), solved directly. Throws NumericalError when a cell
/// falls below -1e-12.
MacroState macro_step_semi_implicit(const MacroState& state, const VoltageGrid& grid,
                                    const NetworkParams& params, double drive, double dt,
                                    ShiftClosure closure = ShiftClosure::implicit);

/// Fully explicit fluxes; stable only for dt of order dv^2/(2a). Throws
/// NumericalError on negativity or a mass drift above 1e-6.
MacroState macro_step_explicit(const MacroState& state, const VoltageGrid& grid,
                               const NetworkParams& params, double drive, double dt);

enum class MacroScheme { semi_implicit, explicit_euler };

struct MacroOptions {
  MacroScheme scheme = MacroScheme::semi_implicit;
  ShiftClosure closure = ShiftClosure::implicit;
};

MacroState macro_step(const MacroState& state, const VoltageGrid& grid,
                      const NetworkParams& params, const InputCurrent& input, double dt,
                      const MacroOptions& opts);

/// Cubic polynomial c0 + c1 v + c2 v^2 + c3 v^3.
struct Cubic {
  double c[4] = {0.0, 0.0, 0.0, 0.0};

  double operator()(double v) const { return c[0] + v * (c[1] + v * (c[2] + v * c[3])); }
  /// Exact integral over [lo, hi].
  double integral(double lo, double hi) const;
};

/// sum_i p_i * integral of F over cell i, exact for cubics.
double density_moment(std::span<const double> density, const VoltageGrid& grid, const Cubic& f);

/// Same for an arbitrary integrand, by 8-point Gauss-Legendre on every cell.
double density_moment(std::span<const double> density, const VoltageGrid& grid,
                      const std::function<double(double)>& f);

}  // namespace nlif
