#include "nlif/analysis.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "nlif/parallel.hpp"

namespace nlif {

int Observable::order() const {
  switch (kind) {
    case Kind::first_moment: return 1;
    case Kind::centered_second: return 2;
    case Kind::centered_third: return 3;
    case Kind::custom: return 0;
  }
  return 0;
}

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// (v - m)^k expanded as a cubic in v.
Cubic centered_power(int k, double m) {
  Cubic c;
  if (k == 2) {
    c.c[0] = m * m;
    c.c[1] = -2.0 * m;
    c.c[2] = 1.0;
  } else {
    c.c[0] = -m * m * m;
    c.c[1] = 3.0 * m * m;
    c.c[2] = -3.0 * m;
    c.c[3] = 1.0;
  }
  return c;
}

}  // namespace

double observable_on_config(std::span<const double> voltages, const Observable& f) {
  if (voltages.empty()) throw std::invalid_argument("observable_on_config: empty configuration");
  const double n = static_cast<double>(voltages.size());
  switch (f.kind) {
    case Observable::Kind::first_moment:
      return mean_of(voltages);
    case Observable::Kind::centered_second:
    case Observable::Kind::centered_third: {
      const double m = mean_of(voltages);
      const int k = f.order();
      double sum = 0.0;
      for (const double v : voltages) {
        const double d = v - m;
        sum += k == 2 ? d * d : d * d * d;
      }
      return sum / n;
    }
    case Observable::Kind::custom: {
      double sum = 0.0;
      for (const double v : voltages) sum += f.poly(v);
      return sum / n;
    }
  }
  return 0.0;
}

double observable_on_density(std::span<const double> density, const VoltageGrid& grid,
                             const Observable& f) {
  Cubic first;
  first.c[1] = 1.0;
  switch (f.kind) {
    case Observable::Kind::first_moment:
      return density_moment(density, grid, first);
    case Observable::Kind::centered_second:
    case Observable::Kind::centered_third: {
      const double m = density_moment(density, grid, first);
      return density_moment(density, grid, centered_power(f.order(), m));
    }
    case Observable::Kind::custom:
      return density_moment(density, grid, f.poly);
  }
  return 0.0;
}

double observable_on_terminal(const HybridTrajectory& traj, const Observable& f) {
  if (const auto* m = std::get_if<MacroState>(&traj.terminal)) {
    return observable_on_density(m->density, traj.grid, f);
  }
  return observable_on_config(std::get<MicroState>(traj.terminal).voltages, f);
}

double l1_distance(std::span<const double> p, std::span<const double> q, const VoltageGrid& grid) {
  if (p.size() != q.size()) throw std::invalid_argument("l1_distance: densities differ in size");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return sum * grid.dv();
}

double sup_distance(std::span<const double> a, std::span<const double> b, std::size_t first) {
  if (a.size() != b.size()) throw std::invalid_argument("sup_distance: curves differ in length");
  double out = 0.0;
  for (std::size_t k = first; k < a.size(); ++k) out = std::max(out, std::abs(a[k] - b[k]));
  return out;
}

FourTests run_four_tests(const HybridConfig& config, const RandomSource& rng) {
  FourTests out;
  out.runs[0] = run_pure(Mode::micro, config, rng.child(1));
  out.runs[1] = run_pure(Mode::macro, config, rng.child(2));
  out.runs[2] = run_switch_once(ForcedSwitch::micro_then_macro, config, rng.child(3));
  out.runs[3] = run_switch_once(ForcedSwitch::macro_then_micro, config, rng.child(4));
  return out;
}

HybridConfig scaled_config(const HybridConfig& base, std::int64_t size) {
  HybridConfig cfg = base;
  cfg.params.size = size;
  cfg.params.kick = cfg.params.b / static_cast<double>(size);
  cfg.params.validate();
  cfg.grid = VoltageGrid::make(cfg.params.v_min, cfg.params.v_fire, cfg.params.v_reset,
                               mesh_for_network(cfg.params));
  return cfg;
}

double BiasReport::at(std::int64_t size, int order, int test) const {
  for (const auto& r : rows) {
    if (r.size == size && r.order == order && r.test == test) return r.bias;
  }
  throw std::out_of_range("BiasReport: no such entry");
}

double mean_abs_bias(std::span<const double> lhs, std::span<const double> rhs) {
  if (lhs.size() != rhs.size() || lhs.empty()) {
    throw std::invalid_argument("mean_abs_bias: sample sets must be non-empty and paired");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) sum += std::abs(lhs[i] - rhs[i]);
  return sum / static_cast<double>(lhs.size());
}

std::vector<BiasRow> bias_rows(const HybridConfig& config, int replicas, const RandomSource& rng,
                               FourTests* sample) {
  if (replicas < 2) throw ConfigError("bias study: n_rep must be >= 2");
  const Observable obs[3] = {Observable::first(), Observable::second(), Observable::third()};
  // values[test][order][replica]
  std::vector<double> values[4][3];
  for (auto& t : values) {
    for (auto& o : t) o.assign(static_cast<std::size_t>(replicas), 0.0);
  }
  for_each_replica(replicas, [&](int rep) {
    const auto tests = run_four_tests(config, rng.child(static_cast<std::uint64_t>(rep)));
    for (int t = 0; t < 4; ++t) {
      for (int k = 0; k < 3; ++k) {
        values[t][k][static_cast<std::size_t>(rep)] = observable_on_terminal(tests.runs[t], obs[k]);
      }
    }
    if (sample != nullptr && rep == 0) *sample = tests;
  });
  std::vector<BiasRow> rows;
  for (int k = 0; k < 3; ++k) {
    for (int t = 1; t < 4; ++t) {
      rows.push_back({config.params.size, k + 1, t + 1, mean_abs_bias(values[0][k], values[t][k])});
    }
  }
  return rows;
}

BiasReport bias_study(const HybridConfig& base, std::span<const std::int64_t> sizes, int replicas,
                      const RandomSource& rng) {
  if (sizes.empty()) throw ConfigError("bias study: no network sizes");
  BiasReport report;
  report.replicas = replicas;
  for (const auto size : sizes) {
    const auto rows = bias_rows(scaled_config(base, size), replicas,
                                rng.child(static_cast<std::uint64_t>(size)));
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  return report;
}

double peak_rate(const HybridConfig& config, double amplitude, std::int64_t k_rec,
                 const RandomSource& rng) {
  const auto* pulse = std::get_if<GaussianPulse>(&config.input.kind());
  if (pulse == nullptr) throw ConfigError("threshold search: input must be a single Gaussian pulse");
  HybridConfig cfg = config;
  GaussianPulse p = *pulse;
  p.amplitude = amplitude;
  cfg.input = InputCurrent::pulse(p);
  const auto traj = run_pure(Mode::micro, cfg, rng);
  const auto w = windowed_rates(traj, k_rec);
  double peak = 0.0;
  for (std::size_t k = static_cast<std::size_t>(k_rec); k < w.size(); ++k) peak = std::max(peak, w[k]);
  return peak;
}

ThresholdResult amplitude_threshold_search(const HybridConfig& config, const ThresholdSearch& search,
                                           const RandomSource& rng) {
  if (!(search.threshold >= 0.0)) throw ConfigError("threshold search: N_0 must be >= 0");
  if (!(search.lattice_step > 0.0)) throw ConfigError("threshold search: lattice step must be > 0");
  if (search.subdivisions < 1) throw ConfigError("threshold search: subdivisions must be >= 1");
  if (config.steps <= search.k_rec) throw ConfigError("threshold search: run shorter than k_rec");
  ThresholdResult out;
  auto reaches = [&](double amp) {
    const double peak = peak_rate(config, amp, search.k_rec, rng);
    out.evaluations.emplace_back(amp, peak);
    return peak >= search.threshold;
  };
  const auto points = static_cast<int>(std::floor(search.lattice_max / search.lattice_step + 1e-9));
  for (int i = 0; i <= points; ++i) {
    const double amp = i * search.lattice_step;
    if (!reaches(amp)) continue;
    if (i > 0) {
      const double lo = (i - 1) * search.lattice_step;
      const double h = search.lattice_step / search.subdivisions;
      for (int j = 1; j < search.subdivisions; ++j) {
        if (reaches(lo + j * h)) {
          out.amplitude = lo + j * h;
          return out;
        }
      }
    }
    out.amplitude = amp;
    return out;
  }
  return out;
}

DivergenceResult refractory_divergence(const HybridConfig& config, int replicas,
                                       std::int64_t k_rec, const RandomSource& rng) {
  if (replicas < 1) throw ConfigError("refractory_divergence: need at least one replica");
  HybridConfig with = config;
  with.micro.rule = UpdateRule::refractory;
  HybridConfig without = config;
  without.micro.rule = UpdateRule::no_refractory;
  without.micro.strict = false;

  const auto n = static_cast<std::size_t>(config.steps) + 1;
  std::vector<std::vector<double>> curves_with(static_cast<std::size_t>(replicas));
  std::vector<std::vector<double>> curves_without(static_cast<std::size_t>(replicas));
  std::vector<std::int64_t> violations(static_cast<std::size_t>(replicas), 0);
  for_each_replica(replicas, [&](int rep) {
    const auto stream = rng.child(static_cast<std::uint64_t>(rep));
    const auto r = static_cast<std::size_t>(rep);
    curves_with[r] = windowed_rates(run_pure(Mode::micro, with, stream), k_rec);
    const auto traj = run_pure(Mode::micro, without, stream);
    curves_without[r] = windowed_rates(traj, k_rec);
    for (const auto& rec : traj.records) violations[r] += rec.mfe.violations;
  });

  DivergenceResult out;
  out.refractory.assign(n, 0.0);
  out.no_refractory.assign(n, 0.0);
  for (int rep = 0; rep < replicas; ++rep) {
    const auto r = static_cast<std::size_t>(rep);
    for (std::size_t k = 0; k < n; ++k) {
      out.refractory[k] += curves_with[r][k] / replicas;
      out.no_refractory[k] += curves_without[r][k] / replicas;
    }
    out.violations += violations[r];
  }
  out.sup_distance = sup_distance(out.refractory, out.no_refractory);
  return out;
}

ScalingResult mc_scaling_test(const PiecewiseUniformDensity& density,
                              std::span<const std::int64_t> sizes, int replicas,
                              const Observable& f, const RandomSource& rng) {
  if (sizes.size() < 3) throw ConfigError("mc_scaling_test: need at least three network sizes");
  if (replicas < 2) throw ConfigError("mc_scaling_test: n_rep must be >= 2");
  const double exact = observable_on_density(density.weights(), density.grid(), f);
  ScalingResult out;
  out.sizes.assign(sizes.begin(), sizes.end());
  for (const auto size : sizes) {
    std::vector<double> sq(static_cast<std::size_t>(replicas));
    const auto stream = rng.child(static_cast<std::uint64_t>(size));
    for_each_replica(replicas, [&](int rep) {
      const auto samples =
          density_to_samples(density, size, stream.child(static_cast<std::uint64_t>(rep)), Exec::serial);
      const double e = observable_on_config(samples, f) - exact;
      sq[static_cast<std::size_t>(rep)] = e * e;
    });
    out.rms_error.push_back(std::sqrt(std::accumulate(sq.begin(), sq.end(), 0.0) / replicas));
  }
  const auto n = static_cast<double>(sizes.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    mx += std::log(static_cast<double>(sizes[i])) / n;
    my += std::log(out.rms_error[i]) / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double dx = std::log(static_cast<double>(sizes[i])) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(out.rms_error[i]) - my);
  }
  out.slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double fit = my + out.slope * (std::log(static_cast<double>(sizes[i])) - mx);
    const double r = std::log(out.rms_error[i]) - fit;
    ssr += r * r;
  }
  out.slope_stderr = sizes.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return out;
}

RateProfile RateProfile::constant(double rate, double horizon) {
  return {{0.0, horizon}, {rate, rate}};
}

double RateProfile::operator()(double t) const {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const auto lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

double RateProfile::integral(double upto) const {
  double sum = 0.0;
  if (upto > times.back()) sum += values.back() * (upto - times.back());
  for (std::size_t i = 0; i + 1 < times.size() && times[i] < upto; ++i) {
    const double end = std::min(times[i + 1], upto);
    sum += 0.5 * ((*this)(times[i]) + (*this)(end)) * (end - times[i]);
  }
  return sum;
}

double RateProfile::max() const { return *std::max_element(values.begin(), values.end()); }

DiffusionCheck validate_diffusion_approximation(const RateProfile& profile, double kick,
                                                std::int64_t size, double horizon, int replicas,
                                                const RandomSource& rng) {
  if (profile.times.size() < 2 || profile.times.size() != profile.values.size()) {
    throw ConfigError("diffusion check: rate profile needs >= 2 matching knots");
  }
  if (!std::is_sorted(profile.times.begin(), profile.times.end()) ||
      std::adjacent_find(profile.times.begin(), profile.times.end()) != profile.times.end()) {
    throw ConfigError("diffusion check: rate profile knots must increase");
  }
  for (const double v : profile.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("diffusion check: rates must be >= 0");
  }
  if (size < 1 || replicas < 2 || !(horizon > 0.0)) {
    throw ConfigError("diffusion check: need L >= 1, n_rep >= 2, T > 0");
  }
  const double peak = profile.max();
  std::vector<double> u(static_cast<std::size_t>(replicas), 0.0);
  if (peak > 0.0) {
    for (int rep = 0; rep < replicas; ++rep) {
      const auto stream = rng.child(static_cast<std::uint64_t>(rep));
      const auto n = static_cast<std::size_t>(size);
      std::vector<std::uint64_t> counts(block_count(n), 0);
      for_each_block(Exec::parallel, n, [&](std::uint64_t b, std::size_t lo, std::size_t hi) {
        auto eng = stream.engine(0, b);
        boost::random::exponential_distribution<double> gap(peak);
        boost::random::uniform_01<double> unif;
        std::uint64_t c = 0;
        for (std::size_t j = lo; j < hi; ++j) {
          for (double t = gap(eng); t <= horizon; t += gap(eng)) {
            if (unif(eng) * peak <= profile(t)) ++c;
          }
        }
        counts[b] = c;
      });
      const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
      u[static_cast<std::size_t>(rep)] = kick * static_cast<double>(total);
    }
  }
  DiffusionCheck out;
  const double nr = replicas;
  out.mean = std::accumulate(u.begin(), u.end(), 0.0) / nr;
  double ss = 0.0;
  for (const double x : u) ss += (x - out.mean) * (x - out.mean);
  out.variance = ss / (nr - 1.0);
  const double lambda = static_cast<double>(size) * profile.integral(horizon);
  out.expected_mean = kick * lambda;
  out.expected_variance = kick * kick * lambda;
  out.mean_band = 4.0 * std::sqrt(out.expected_variance / nr);
  // Var(s^2) = sigma^4 (2/(n-1) + kappa/n), excess kurtosis kappa = 1/lambda.
  const double kurt = lambda > 0.0 ? 1.0 / lambda : 0.0;
  out.variance_band = 4.0 * out.expected_variance * std::sqrt(2.0 / (nr - 1.0) + kurt / nr);
  out.mean_ok = std::abs(out.mean - out.expected_mean) <= out.mean_band;
  out.variance_ok = std::abs(out.variance - out.expected_variance) <= out.variance_band;
  return out;
}

ErrorBudget error_budget(std::span<const double> config, std::span<const double> reference,
                         const VoltageGrid& reference_grid, std::span<const double> density,
                         const VoltageGrid& grid, std::span<const double> resampled,
                         const Observable& f) {
  const double f_config = observable_on_config(config, f);
  const double f_reference = observable_on_density(reference, reference_grid, f);
  const double f_density = observable_on_density(density, grid, f);
  const double f_resampled = observable_on_config(resampled, f);
  ErrorBudget b;
  b.total = std::abs(f_resampled - f_config);
  b.sampling = std::abs(f_config - f_reference);
  b.pde = std::abs(f_reference - f_density);
  b.resampling = std::abs(f_density - f_resampled);
  return b;
}

std::vector<BenchmarkRow> benchmark(const std::string& name, const HybridConfig& base,
                                    std::span<const std::int64_t> sizes,
                                    const RandomSource& rng) {
  using clock = std::chrono::steady_clock;
  std::vector<BenchmarkRow> rows;
  for (const auto size : sizes) {
    const HybridConfig cfg = scaled_config(base, size);
    const auto stream = rng.child(static_cast<std::uint64_t>(size));
    BenchmarkRow row;
    row.experiment = name;
    row.size = size;
    auto t0 = clock::now();
    const auto micro = run_pure(Mode::micro, cfg, stream);
    row.micro_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    t0 = clock::now();
    const auto hybrid = run_hybrid(cfg, stream);
    row.hybrid_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    row.speedup = row.micro_seconds / row.hybrid_seconds;
    for (std::size_t k = 1; k < hybrid.records.size(); ++k) {
      if (hybrid.records[k].mode == Mode::micro) ++row.micro_steps_in_hybrid;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nlif
