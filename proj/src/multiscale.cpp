#include "nlif/multiscale.hpp"

#include <algorithm>
#include <sstream>

#include "nlif/switching.hpp"

namespace nlif {

const char* to_string(Mode m) { return m == Mode::macro ? "macro" : "micro"; }

const char* to_string(SwitchDirection d) {
  return d == SwitchDirection::macro_to_micro ? "macro_to_micro" : "micro_to_macro";
}

void HybridConfig::validate() const {
  params.validate();
  if (!(dt > 0.0)) throw ConfigError("hybrid: dt must be positive");
  if (steps < 1) throw ConfigError("hybrid: need at least one time step");
  if (!(rate_on > 0.0)) throw ConfigError("hybrid: N_on must be positive");
  if (!(rate_off >= 0.0)) throw ConfigError("hybrid: N_off must be non-negative");
  if (back < 0) throw ConfigError("hybrid: k_back must be >= 0");
  if (max_switches < 0) throw ConfigError("hybrid: max_switches must be >= 0");
  if (std::abs(grid.v_fire() - params.v_fire) > 1e-12 ||
      std::abs(grid.v_min() - params.v_min) > 1e-12) {
    throw ConfigError("hybrid: grid bounds differ from the network's V_min/V_F");
  }
}

void MacroRing::push(MacroState s) {
  if (capacity_ == 0) return;
  if (states_.size() == capacity_) states_.pop_front();
  states_.push_back(std::move(s));
}

std::vector<std::pair<std::int64_t, std::int64_t>> HybridTrajectory::micro_windows() const {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (std::size_t k = 1; k < records.size(); ++k) {
    if (records[k].mode != Mode::micro) continue;
    const auto step = records[k].step;
    if (!out.empty() && out.back().second + 1 == step) {
      out.back().second = step;
    } else {
      out.emplace_back(step, step);
    }
  }
  return out;
}

std::vector<double> windowed_rates(const HybridTrajectory& traj, std::int64_t k_rec) {
  if (k_rec < 1) throw std::invalid_argument("windowed_rates: k_rec must be >= 1");
  const auto n = static_cast<std::int64_t>(traj.records.size());
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 0) return out;
  out[0] = traj.records[0].rate;
  double sum = 0.0;
  for (std::int64_t k = 1; k < n; ++k) {
    sum += traj.records[static_cast<std::size_t>(k)].rate;
    if (k > k_rec) sum -= traj.records[static_cast<std::size_t>(k - k_rec)].rate;
    out[static_cast<std::size_t>(k)] = sum / static_cast<double>(std::min(k, k_rec));
  }
  return out;
}

std::vector<double> terminal_density(const HybridTrajectory& traj) {
  if (const auto* m = std::get_if<MacroState>(&traj.terminal)) return m->density;
  const auto& micro = std::get<MicroState>(traj.terminal);
  return samples_to_density(micro.voltages, traj.grid).density.weights();
}

namespace {

constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kStepTag = 2;
constexpr std::uint64_t kSwitchTag = 3;

class Driver {
 public:
  Driver(const HybridConfig& cfg, const RandomSource& rng)
      : cfg_(cfg), rng_(rng), ring_(static_cast<std::size_t>(cfg.back) + 1) {
    cfg_.validate();
    traj_.grid = cfg_.grid;
    traj_.dt = cfg_.dt;
    traj_.size = cfg_.params.size;
    initial_ = discretize_gaussian(cfg_.init, cfg_.grid, cfg_.params);
  }

  const MacroState& initial_density() const { return initial_; }
  Mode mode() const { return mode_; }
  std::int64_t step() const { return mode_ == Mode::macro ? macro_.step : micro_.step; }
  bool done() const { return step() >= cfg_.steps; }
  const MacroState& macro() const { return macro_; }

  void begin_macro() {
    mode_ = Mode::macro;
    macro_ = initial_;
    ring_.push(macro_);
    record(0, Mode::macro, macro_.rate, {});
  }

  void begin_micro() {
    mode_ = Mode::micro;
    micro_.voltages = sample_gaussian_init(cfg_.init, cfg_.params.size, rng_.child(kInitTag));
    micro_.spike_count = 0;
    micro_.step = 0;
    record(0, Mode::micro, 0.0, {});
  }

  void advance_macro() {
    macro_ = macro_step(macro_, cfg_.grid, cfg_.params, cfg_.input, cfg_.dt, cfg_.macro);
    ring_.push(macro_);
    record(macro_.step, Mode::macro, macro_.rate, {});
  }

  MicroStepResult advance_micro() {
    previous_count_ = micro_.spike_count;
    const auto stream = rng_.child(kStepTag).child(epoch_);
    auto res = micro_step(micro_, cfg_.params, cfg_.input, cfg_.dt, cfg_.micro, stream);
    record(micro_.step, Mode::micro, res.rate, res.mfe);
    quiet_ = res.rate < cfg_.rate_off ? quiet_ + 1 : 0;
    if (cfg_.rewind_on_switch_down) {
      micro_ring_.push_back(micro_);
      if (micro_ring_.size() > static_cast<std::size_t>(cfg_.back) + 1) micro_ring_.pop_front();
    }
    return res;
  }

  bool macro_triggered() const { return macro_.rate > cfg_.rate_on; }
  bool micro_quiet() const { return quiet_ >= static_cast<std::int64_t>(cfg_.back) + 1; }

  /// Macro -> micro from the oldest buffered state (k_1 - k_back, or the start
  /// of the current macro run if that is more recent).
  void switch_to_micro(bool trace_back) {
    const MacroState from = trace_back ? ring_.oldest() : macro_;
    const std::int64_t trigger = macro_.step;
    truncate(from.step);
    ++epoch_;
    const PiecewiseUniformDensity rho(cfg_.grid, from.density);
    micro_.voltages = density_to_samples(rho, cfg_.params.size,
                                         rng_.child(kSwitchTag).child(epoch_), cfg_.micro.exec);
    micro_.spike_count = 0;
    micro_.step = from.step;
    mode_ = Mode::micro;
    ring_.clear();
    micro_ring_.clear();
    quiet_ = 0;
    SwitchEvent e;
    e.direction = SwitchDirection::macro_to_micro;
    e.trigger_step = trigger;
    e.resume_step = from.step;
    e.traceback = trigger - from.step;
    e.samples = static_cast<std::int64_t>(micro_.voltages.size());
    push_event(e);
  }

  void switch_to_macro(bool rewind) {
    const std::int64_t trigger = micro_.step;
    double rate = rate_from_counter(micro_.spike_count, previous_count_, cfg_.params.size, cfg_.dt);
    const MicroState* from = &micro_;
    if (rewind && !micro_ring_.empty()) {
      from = &micro_ring_.front();
      rate = traj_.records[static_cast<std::size_t>(from->step)].rate;
      truncate(from->step);
    }
    const auto hist = samples_to_density(from->voltages, cfg_.grid);
    macro_.density = hist.density.weights();
    macro_.rate = rate;
    macro_.step = from->step;
    ++epoch_;
    mode_ = Mode::macro;
    micro_ring_.clear();
    ring_.clear();
    ring_.push(macro_);
    quiet_ = 0;
    SwitchEvent e;
    e.direction = SwitchDirection::micro_to_macro;
    e.trigger_step = trigger;
    e.resume_step = macro_.step;
    e.traceback = trigger - macro_.step;
    e.dropped = hist.dropped;
    e.mass = total_mass(macro_.density, cfg_.grid);
    push_event(e);
  }

  HybridTrajectory finish() {
    if (mode_ == Mode::macro) {
      traj_.terminal = macro_;
    } else {
      traj_.terminal = micro_;
    }
    return std::move(traj_);
  }

 private:
  void record(std::int64_t step, Mode mode, double rate, const MfeReport& mfe) {
    StepRecord r;
    r.step = step;
    r.time = static_cast<double>(step) * cfg_.dt;
    r.mode = mode;
    r.rate = rate;
    r.mfe = mfe;
    const std::uint64_t before = traj_.cumulative_spikes.empty() ? 0 : traj_.cumulative_spikes.back();
    traj_.records.push_back(r);
    traj_.cumulative_spikes.push_back(before + static_cast<std::uint64_t>(mfe.size));
    const auto& wanted = cfg_.snapshot_steps;
    if (std::find(wanted.begin(), wanted.end(), step) != wanted.end()) {
      traj_.snapshots.emplace_back(
          step, mode_ == Mode::macro ? macro_.density
                                     : samples_to_density(micro_.voltages, cfg_.grid).density.weights());
    }
  }

  void truncate(std::int64_t step) {
    const auto keep = static_cast<std::size_t>(step) + 1;
    traj_.records.resize(keep);
    traj_.cumulative_spikes.resize(keep);
    auto& snaps = traj_.snapshots;
    snaps.erase(std::remove_if(snaps.begin(), snaps.end(),
                               [&](const auto& sn) { return sn.first > step; }),
                snaps.end());
  }

  void push_event(const SwitchEvent& e) {
    traj_.events.push_back(e);
    if (static_cast<int>(traj_.events.size()) > cfg_.max_switches) {
      std::ostringstream os;
      os << "hybrid: more than " << cfg_.max_switches << " solver switches (last at step "
         << e.trigger_step << "); thresholds N_on=" << cfg_.rate_on << ", N_off=" << cfg_.rate_off
         << " are thrashing";
      throw NumericalError(os.str());
    }
  }

  const HybridConfig& cfg_;
  RandomSource rng_;
  HybridTrajectory traj_;
  MacroState initial_;
  Mode mode_ = Mode::macro;
  MacroState macro_;
  MicroState micro_;
  MacroRing ring_;
  std::deque<MicroState> micro_ring_;
  std::uint64_t previous_count_ = 0;
  std::int64_t quiet_ = 0;
  std::uint64_t epoch_ = 0;
};

}  // namespace

HybridTrajectory run_hybrid(const HybridConfig& config, const RandomSource& rng) {
  Driver d(config, rng);
  if (d.initial_density().rate < config.rate_on) {
    d.begin_macro();
  } else {
    d.begin_micro();
  }
  while (!d.done()) {
    if (d.mode() == Mode::macro) {
      d.advance_macro();
      if (d.macro_triggered()) d.switch_to_micro(true);
    } else {
      d.advance_micro();
      if (d.micro_quiet()) d.switch_to_macro(config.rewind_on_switch_down);
    }
  }
  return d.finish();
}

HybridTrajectory run_pure(Mode mode, const HybridConfig& config, const RandomSource& rng) {
  Driver d(config, rng);
  if (mode == Mode::macro) {
    d.begin_macro();
    while (!d.done()) d.advance_macro();
  } else {
    d.begin_micro();
    while (!d.done()) d.advance_micro();
  }
  return d.finish();
}

HybridTrajectory run_switch_once(ForcedSwitch order, const HybridConfig& config,
                                 const RandomSource& rng) {
  Driver d(config, rng);
  const std::int64_t half = config.steps / 2;
  if (order == ForcedSwitch::micro_then_macro) {
    d.begin_micro();
    while (d.step() < half) d.advance_micro();
    d.switch_to_macro(false);
    while (!d.done()) d.advance_macro();
  } else {
    d.begin_macro();
    while (d.step() < half) d.advance_macro();
    d.switch_to_micro(false);
    while (!d.done()) d.advance_micro();
  }
  return d.finish();
}

}  // namespace nlif
