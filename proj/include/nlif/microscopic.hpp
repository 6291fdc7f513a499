// Interacting-particle solver: Euler-Maruyama relaxation, cascade resolution of
// multiple firing events (MFEs) and the two post-spike update rules.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlif/core.hpp"
#include "nlif/parallel.hpp"

namespace nlif {

struct MicroState {
  std::vector<double> voltages;
  std::uint64_t spike_count = 0;  // M_k, spikes since the last counter reset
  std::int64_t step = 0;          // k, with t_k = k*dt
};

enum class UpdateRule {
  no_refractory,  // fired neurons also receive the cascade kick, then drop by V_F - V_R
  refractory,     // fired neurons go to V_R and ignore same-instant kicks
};

struct MfeReport {
  std::int64_t size = 0;        // |Gamma|
  double proportion = 0.0;      // |Gamma| / L
  int depth = 0;                // number of non-empty cascade rounds
  std::int64_t violations = 0;  // fired neurons left at or above V_F (no_refractory only)
};

struct Cascade {
  std::vector<std::size_t> fired;  // ascending neuron indices
  MfeReport report;
};

/// Round-by-round cascade: Gamma_0 = {V~ >= V_F}, then every unfired neuron
/// whose V~ plus J times the fired count reaches V_F joins, until a round adds
/// nobody. O(L * depth); kept as the reference for cascade_fast.
Cascade cascade_naive(std::span<const double> tentative, double kick, double v_fire);

/// Same set as cascade_naive via a descending sort of the candidate neurons
/// and a prefix sweep.
Cascade cascade_fast(std::span<const double> tentative, double kick, double v_fire);

/// Ṽ_j = V_j - (V_j - V_L) dt + I_0(t_k) dt + sigma0 * N(0, dt), in place.
/// Noise is keyed by (rng, step, block).
void em_advance(std::span<double> voltages, std::int64_t step, const NetworkParams& params,
                const InputCurrent& input, double dt, const RandomSource& rng,
                Exec exec = Exec::parallel);

std::vector<double> em_substep(const MicroState& state, const NetworkParams& params,
                               const InputCurrent& input, double dt, const RandomSource& rng,
                               Exec exec = Exec::parallel);

/// Post-MFE voltages. `fired` must come from a cascade over `voltages`.
/// With `strict`, a no_refractory update leaving a fired neuron >= V_F throws
/// NumericalError; otherwise such neurons are counted in `violations`.
void apply_mfe(std::span<double> voltages, std::span<const std::size_t> fired, double kick,
               UpdateRule rule, const NetworkParams& params, bool strict, MfeReport& report);

std::vector<double> apply_mfe(std::span<const double> tentative,
                              std::span<const std::size_t> fired, double kick, UpdateRule rule,
                              const NetworkParams& params);

struct MicroOptions {
  UpdateRule rule = UpdateRule::refractory;
  bool strict = true;
  Exec exec = Exec::parallel;
};

struct MicroStepResult {
  double rate = 0.0;  // Ñ_{k+1} = |Gamma| / (L dt)
  MfeReport mfe;
};

/// One step of the microscopic scheme, in place: relax, cascade, update, count.
MicroStepResult micro_step(MicroState& state, const NetworkParams& params,
                           const InputCurrent& input, double dt, const MicroOptions& opts,
                           const RandomSource& rng);

/// (M_k - M_{k-k_rec}) / (L k_rec dt) over a cumulative counter series
/// indexed by step.
double windowed_rate(std::span<const std::uint64_t> counts, std::int64_t k, std::int64_t k_rec,
                     std::int64_t size, double dt);

}  // namespace nlif
