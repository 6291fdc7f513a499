#include "nlif/microscopic.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlif {

namespace {

// The same floating-point expression decides firing in both cascade variants;
// it is monotone in the voltage and in the fired count.
inline bool reaches(double v, double kick, std::size_t fired_before, double v_fire) {
  return v + kick * static_cast<double>(fired_before) >= v_fire;
}

MfeReport make_report(std::size_t fired, std::size_t size, int depth) {
  MfeReport r;
  r.size = static_cast<std::int64_t>(fired);
  r.proportion = size == 0 ? 0.0 : static_cast<double>(fired) / static_cast<double>(size);
  r.depth = depth;
  return r;
}

Cascade threshold_only(std::span<const double> tentative, double v_fire) {
  Cascade c;
  for (std::size_t j = 0; j < tentative.size(); ++j) {
    if (tentative[j] >= v_fire) c.fired.push_back(j);
  }
  c.report = make_report(c.fired.size(), tentative.size(), c.fired.empty() ? 0 : 1);
  return c;
}

}  // namespace

Cascade cascade_naive(std::span<const double> tentative, double kick, double v_fire) {
  const std::size_t n = tentative.size();
  std::vector<char> in(n, 0);
  Cascade c;
  int depth = 0;
  std::vector<std::size_t> round;
  for (;;) {
    round.clear();
    const std::size_t before = c.fired.size();
    for (std::size_t j = 0; j < n; ++j) {
      if (!in[j] && reaches(tentative[j], kick, before, v_fire)) round.push_back(j);
    }
    if (round.empty()) break;
    for (const auto j : round) in[j] = 1;
    c.fired.insert(c.fired.end(), round.begin(), round.end());
    ++depth;
  }
  std::sort(c.fired.begin(), c.fired.end());
  c.report = make_report(c.fired.size(), n, depth);
  return c;
}

Cascade cascade_fast(std::span<const double> tentative, double kick, double v_fire) {
  // Negative or zero kicks cannot recruit: Gamma = Gamma_0.
  if (!(kick > 0.0)) return threshold_only(tentative, v_fire);

  const std::size_t n = tentative.size();
  std::size_t first_round = 0;
  for (const double v : tentative) first_round += (v >= v_fire);
  if (first_round == 0) return {};

  struct Candidate {
    double v;
    std::size_t j;
  };
  std::vector<Candidate> cand;
  // Only neurons that could fire once `reach` others have fired are sorted.
  // If the sweep fires more than `reach`, the bound was too tight; widen it.
  std::size_t reach = std::max<std::size_t>(2 * first_round, 64);
  std::size_t fired = 0;
  for (;;) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (reaches(tentative[j], kick, reach, v_fire)) cand.push_back({tentative[j], j});
    }
    std::sort(cand.begin(), cand.end(), [](const Candidate& x, const Candidate& y) {
      return x.v > y.v || (x.v == y.v && x.j < y.j);
    });
    fired = 0;
    while (fired < cand.size() && reaches(cand[fired].v, kick, fired, v_fire)) ++fired;
    if (fired < cand.size() || cand.size() == n || fired <= reach) break;
    reach = 2 * fired;
  }

  // Replay the rounds on the sorted prefix to recover the cascade depth.
  int depth = 1;
  std::size_t done = first_round;
  for (;;) {
    std::size_t next = done;
    while (next < fired && reaches(cand[next].v, kick, done, v_fire)) ++next;
    if (next == done) break;
    ++depth;
    done = next;
  }

  Cascade c;
  c.fired.reserve(fired);
  for (std::size_t m = 0; m < fired; ++m) c.fired.push_back(cand[m].j);
  std::sort(c.fired.begin(), c.fired.end());
  c.report = make_report(fired, n, depth);
  return c;
}

void em_advance(std::span<double> voltages, std::int64_t step, const NetworkParams& params,
                const InputCurrent& input, double dt, const RandomSource& rng, Exec exec) {
  const double drive = input(static_cast<double>(step) * dt);
  const double v_leak = params.v_leak;
  const double noise = params.sigma0 * std::sqrt(dt);
  const auto key = static_cast<std::uint64_t>(step);
  if (noise == 0.0) {
    for (auto& v : voltages) v = v - (v - v_leak) * dt + drive * dt;
    return;
  }
  for_each_block(exec, voltages.size(), [&](std::uint64_t b, std::size_t lo, std::size_t hi) {
    auto eng = rng.engine(key, b);
    boost::random::normal_distribution<double> normal;
    for (std::size_t j = lo; j < hi; ++j) {
      const double v = voltages[j];
      voltages[j] = v - (v - v_leak) * dt + drive * dt + noise * normal(eng);
    }
  });
}

std::vector<double> em_substep(const MicroState& state, const NetworkParams& params,
                               const InputCurrent& input, double dt, const RandomSource& rng,
                               Exec exec) {
  if (!(dt > 0.0)) throw ConfigError("em_substep: dt must be positive");
  std::vector<double> out = state.voltages;
  em_advance(out, state.step, params, input, dt, rng, exec);
  return out;
}

void apply_mfe(std::span<double> voltages, std::span<const std::size_t> fired, double kick,
               UpdateRule rule, const NetworkParams& params, bool strict, MfeReport& report) {
  if (fired.empty()) return;
  const double shift = kick * static_cast<double>(fired.size());
  for (auto& v : voltages) v += shift;
  if (rule == UpdateRule::refractory) {
    for (const auto j : fired) voltages[j] = params.v_reset;
    return;
  }
  const double gap = params.reset_gap();
  for (const auto j : fired) {
    voltages[j] -= gap;
    if (voltages[j] >= params.v_fire) {
      if (strict) {
        std::ostringstream os;
        os << "apply_mfe: neuron " << j << " ends at " << voltages[j]
           << " >= V_F after a cascade of " << fired.size() << " spikes (L*J = "
           << kick * static_cast<double>(params.size)
           << " >= V_F - V_R lets a neuron fire twice in one MFE); use the refractory rule";
        throw NumericalError(os.str());
      }
      ++report.violations;
    }
  }
}

std::vector<double> apply_mfe(std::span<const double> tentative,
                              std::span<const std::size_t> fired, double kick, UpdateRule rule,
                              const NetworkParams& params) {
  std::vector<double> out(tentative.begin(), tentative.end());
  MfeReport scratch;
  apply_mfe(out, fired, kick, rule, params, true, scratch);
  return out;
}

MicroStepResult micro_step(MicroState& state, const NetworkParams& params,
                           const InputCurrent& input, double dt, const MicroOptions& opts,
                           const RandomSource& rng) {
  em_advance(state.voltages, state.step, params, input, dt, rng, opts.exec);
  auto cascade = cascade_fast(state.voltages, params.kick, params.v_fire);
  MicroStepResult out;
  out.mfe = cascade.report;
  apply_mfe(state.voltages, cascade.fired, params.kick, opts.rule, params, opts.strict, out.mfe);
  state.spike_count += cascade.fired.size();
  ++state.step;
  out.rate = static_cast<double>(cascade.fired.size()) /
             (static_cast<double>(state.voltages.size()) * dt);
  return out;
}

double windowed_rate(std::span<const std::uint64_t> counts, std::int64_t k, std::int64_t k_rec,
                     std::int64_t size, double dt) {
  if (k_rec < 1 || k < k_rec) throw std::invalid_argument("windowed_rate: need k >= k_rec >= 1");
  if (k >= static_cast<std::int64_t>(counts.size())) {
    throw std::out_of_range("windowed_rate: k beyond the counter series");
  }
  const auto spikes = counts[static_cast<std::size_t>(k)] - counts[static_cast<std::size_t>(k - k_rec)];
  return static_cast<double>(spikes) /
         (static_cast<double>(size) * static_cast<double>(k_rec) * dt);
}

}  // namespace nlif
