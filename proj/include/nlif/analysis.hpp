// Observables and the experiment drivers built on the solvers: bias studies
// between the four solver combinations, pulse-amplitude threshold search,
// update-rule divergence, Monte-Carlo scaling, Poisson aggregate moments and
// wall-time benchmarks.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlif/core.hpp"
#include "nlif/macroscopic.hpp"
#include "nlif/multiscale.hpp"
#include "nlif/switching.hpp"

namespace nlif {

struct Observable {
  enum class Kind { first_moment, centered_second, centered_third, custom };
  Kind kind = Kind::first_moment;
  Cubic poly;  // used by custom

  static Observable first() { return {Kind::first_moment, {}}; }
  static Observable second() { return {Kind::centered_second, {}}; }
  static Observable third() { return {Kind::centered_third, {}}; }
  static Observable custom(Cubic c) { return {Kind::custom, c}; }
  /// 1-based order for the three standard observables, 0 for custom.
  int order() const;
};

/// (1/L) sum F(V_j); centred observables subtract the configuration's own mean.
double observable_on_config(std::span<const double> voltages, const Observable& f);

/// sum_i p_i * integral of F over cell i; centred observables use the
/// density's own first moment.
double observable_on_density(std::span<const double> density, const VoltageGrid& grid,
                             const Observable& f);

/// Observable of a terminal state, whichever solver produced it.
double observable_on_terminal(const HybridTrajectory& traj, const Observable& f);

/// sum_i |p_i - q_i| dv.
double l1_distance(std::span<const double> p, std::span<const double> q, const VoltageGrid& grid);

/// max_k |a_k - b_k| over k >= first.
double sup_distance(std::span<const double> a, std::span<const double> b, std::size_t first = 0);

/// The four solver combinations over [0, T]: micro, macro, micro then macro,
/// macro then micro.
struct FourTests {
  std::array<HybridTrajectory, 4> runs;
};

FourTests run_four_tests(const HybridConfig& config, const RandomSource& rng);

/// Hybrid configuration for a network of `size` neurons derived from `base`:
/// J = b/L and dv ~ L^{-1/4} on an aligned grid.
HybridConfig scaled_config(const HybridConfig& base, std::int64_t size);

struct BiasRow {
  std::int64_t size = 0;
  int order = 1;   // observable F_1, F_2, F_3
  int test = 2;    // compared against Test 1
  double bias = 0.0;
};

struct BiasReport {
  std::vector<BiasRow> rows;
  int replicas = 0;

  double at(std::int64_t size, int order, int test) const;
};

/// Mean absolute difference between paired samples.
double mean_abs_bias(std::span<const double> lhs, std::span<const double> rhs);

/// E_{k,m} = (1/n_rep) sum_l |F_k^{(1),l} - F_k^{(m),l}|, k = 1..3, m = 2..4,
/// for one fixed configuration. When `sample` is given it receives the runs
/// of replica 0.
std::vector<BiasRow> bias_rows(const HybridConfig& config, int replicas, const RandomSource& rng,
                               FourTests* sample = nullptr);

/// bias_rows for every L in `sizes` via scaled_config.
BiasReport bias_study(const HybridConfig& base, std::span<const std::int64_t> sizes, int replicas,
                      const RandomSource& rng);

struct ThresholdSearch {
  double threshold = 15.0;     // N_0
  double lattice_step = 0.5;
  double lattice_max = 40.0;
  int subdivisions = 4;       // refinement points per bracketing lattice interval
  std::int64_t k_rec = 10;     // window of the rate whose peak is tested
};

struct ThresholdResult {
  std::optional<double> amplitude;  // minimal J_max, if found
  std::vector<std::pair<double, double>> evaluations;  // (J_max, peak windowed rate)
};

/// Peak windowed micro rate over the run for the given pulse amplitude.
double peak_rate(const HybridConfig& config, double amplitude, std::int64_t k_rec,
                 const RandomSource& rng);

/// Smallest J_max on the lattice {0, step, 2 step, ...} whose peak windowed
/// rate reaches N_0, refined by a scan of the bracketing interval at
/// step/subdivisions. Every evaluation reuses the same random stream, so the
/// result is monotone in N_0. `config.input` must be a
/// single Gaussian pulse; its amplitude is overridden.
ThresholdResult amplitude_threshold_search(const HybridConfig& config, const ThresholdSearch& search,
                                           const RandomSource& rng);

struct DivergenceResult {
  double sup_distance = 0.0;
  std::vector<double> refractory;     // replica-averaged windowed rate
  std::vector<double> no_refractory;
  std::int64_t violations = 0;        // neurons left >= V_F by the no-refractory rule
};

/// Sup-norm distance between the replica-averaged windowed rate curves of the
/// two update rules driven by identical noise. The no-refractory run counts,
/// rather than rejects, neurons that would fire twice in one cascade.
DivergenceResult refractory_divergence(const HybridConfig& config, int replicas,
                                       std::int64_t k_rec, const RandomSource& rng);

struct ScalingResult {
  std::vector<std::int64_t> sizes;
  std::vector<double> rms_error;
  double slope = 0.0;
  double slope_stderr = 0.0;
};

/// RMS of |F(samples) - F(density)| over `replicas` resamplings per L, and the
/// least-squares slope of log RMS against log L.
ScalingResult mc_scaling_test(const PiecewiseUniformDensity& density,
                              std::span<const std::int64_t> sizes, int replicas,
                              const Observable& f, const RandomSource& rng);

/// Piecewise-linear rate profile N(t) on increasing knots.
struct RateProfile {
  std::vector<double> times;
  std::vector<double> values;

  static RateProfile constant(double rate, double horizon);
  double operator()(double t) const;
  double integral(double upto) const;
  double max() const;
};

struct DiffusionCheck {
  double mean = 0.0, variance = 0.0;                // empirical, over replicas
  double expected_mean = 0.0, expected_variance = 0.0;
  double mean_band = 0.0, variance_band = 0.0;      // 4 sigma half-widths
  bool mean_ok = false, variance_ok = false;
};

/// U(T) = J * (spikes of L independent Poisson trains of intensity N(t)),
/// simulated by thinning; compared with J L int N and J^2 L int N.
DiffusionCheck validate_diffusion_approximation(const RateProfile& profile, double kick,
                                                std::int64_t size, double horizon, int replicas,
                                                const RandomSource& rng);

struct ErrorBudget {
  double total = 0.0;     // |F(resampled) - F(config)|
  double sampling = 0.0;  // E_1: configuration vs prescribed density
  double pde = 0.0;       // E_2: prescribed density vs macro density
  double resampling = 0.0;  // E_3: macro density vs resampled configuration
};

/// Error decomposition of an observable. `reference` on `reference_grid`
/// stands in for the prescribed density.
ErrorBudget error_budget(std::span<const double> config, std::span<const double> reference,
                         const VoltageGrid& reference_grid, std::span<const double> density,
                         const VoltageGrid& grid, std::span<const double> resampled,
                         const Observable& f);

struct BenchmarkRow {
  std::string experiment;
  std::int64_t size = 0;
  double micro_seconds = 0.0;
  double hybrid_seconds = 0.0;
  double speedup = 0.0;  // micro / hybrid
  std::int64_t micro_steps_in_hybrid = 0;
};

/// Wall time of a pure micro run and of the hybrid run for each L.
std::vector<BenchmarkRow> benchmark(const std::string& name, const HybridConfig& base,
                                    std::span<const std::int64_t> sizes,
                                    const RandomSource& rng);

}  // namespace nlif
