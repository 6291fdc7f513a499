// Hybrid driver. The macroscopic solver runs while the firing rate is low;
// when N_k exceeds N_on the run is traced back k_back steps and continued
// with the particle solver, which hands back to the density once the
// per-step micro rate has stayed below N_off for k_back + 1 consecutive steps.
#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "nlif/core.hpp"
#include "nlif/macroscopic.hpp"
#include "nlif/microscopic.hpp"

namespace nlif {

enum class Mode { macro, micro };
enum class SwitchDirection { macro_to_micro, micro_to_macro };

const char* to_string(Mode m);
const char* to_string(SwitchDirection d);

struct HybridConfig {
  NetworkParams params;
  InputCurrent input;
  VoltageGrid grid;
  GaussianInit init;
  double dt = 1e-4;
  std::int64_t steps = 0;  // n_t, T = n_t dt

  double rate_on = std::numeric_limits<double>::infinity();  // N_on
  double rate_off = 0.0;                                     // N_off
  int back = 10;                                             // k_back
  int max_switches = 100;
  bool rewind_on_switch_down = false;

  MicroOptions micro;
  MacroOptions macro;

  std::vector<std::int64_t> snapshot_steps;  // steps whose density is kept

  double horizon() const { return static_cast<double>(steps) * dt; }
  void validate() const;
};

/// The last k_back + 1 macroscopic states of the current macro run.
class MacroRing {
 public:
  explicit MacroRing(std::size_t capacity) : capacity_(capacity) {}

  void push(MacroState s);
  void clear() { states_.clear(); }
  bool empty() const { return states_.empty(); }
  std::size_t size() const { return states_.size(); }
  std::size_t capacity() const { return capacity_; }
  const MacroState& oldest() const { return states_.front(); }
  const MacroState& newest() const { return states_.back(); }

 private:
  std::size_t capacity_;
  std::deque<MacroState> states_;
};

struct StepRecord {
  std::int64_t step = 0;
  double time = 0.0;
  Mode mode = Mode::macro;
  double rate = 0.0;  // N_k (macro) or Ñ_k (micro)
  MfeReport mfe;      // zero for macro steps
};

struct SwitchEvent {
  SwitchDirection direction = SwitchDirection::macro_to_micro;
  std::int64_t trigger_step = 0;  // step at which the threshold test fired
  std::int64_t resume_step = 0;   // step the new solver starts from
  std::int64_t traceback = 0;     // trigger_step - resume_step
  std::int64_t samples = 0;       // neurons created (macro->micro)
  std::int64_t dropped = 0;       // neurons outside the grid (micro->macro)
  double mass = 0.0;              // density mass after the switch (micro->macro)
};

struct HybridTrajectory {
  VoltageGrid grid;
  double dt = 0.0;
  std::int64_t size = 0;
  std::vector<StepRecord> records;             // one per step, index = step
  std::vector<SwitchEvent> events;
  std::vector<std::uint64_t> cumulative_spikes;  // micro spikes since t = 0, index = step
  std::variant<MacroState, MicroState> terminal;
  std::vector<std::pair<std::int64_t, std::vector<double>>> snapshots;  // (step, density)

  Mode final_mode() const { return records.back().mode; }
  /// Contiguous [first, last] step ranges run by the micro solver.
  std::vector<std::pair<std::int64_t, std::int64_t>> micro_windows() const;
};

/// Trailing moving average of the per-step rate over k_rec records; for micro
/// stretches this equals (M_k - M_{k-k_rec}) / (L k_rec dt).
std::vector<double> windowed_rates(const HybridTrajectory& traj, std::int64_t k_rec);

/// Terminal density: the macro state itself, or the histogram of the voltages.
std::vector<double> terminal_density(const HybridTrajectory& traj);

HybridTrajectory run_hybrid(const HybridConfig& config, const RandomSource& rng);

HybridTrajectory run_pure(Mode mode, const HybridConfig& config, const RandomSource& rng);

enum class ForcedSwitch { micro_then_macro, macro_then_micro };

/// One switch at step n_t/2 regardless of the thresholds.
HybridTrajectory run_switch_once(ForcedSwitch order, const HybridConfig& config,
                                 const RandomSource& rng);

}  // namespace nlif
