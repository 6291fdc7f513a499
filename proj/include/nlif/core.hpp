// Shared domain types for the NLIF network solvers: model constants, the
// voltage grid, external input currents and seeded random streams.
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace nlif {

/// Invalid parameters, misaligned grids, malformed configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver produced a state that violates one of its structural guarantees
/// (negative density, lost mass, a neuron left above threshold).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model constants. Membrane capacitance and conductance are fixed to 1.
///
/// `sigma0` drives the microscopic noise and `a` the macroscopic diffusion.
/// The two are kept independent; a consistent pair satisfies a = sigma0^2/2.
struct NetworkParams {
  double v_fire = 2.0;
  double v_reset = 1.0;
  double v_leak = 0.0;
  double v_min = -4.0;
  double sigma0 = 1.4142135623730951;
  double a = 1.0;
  double b = 0.0;
  std::int64_t size = 1;
  double kick = 0.0;  // J, voltage jump per presynaptic spike

  /// Parameters with the mean-field kick J = b/L.
  static NetworkParams mean_field(double b, std::int64_t size);

  double reset_gap() const { return v_fire - v_reset; }
  void validate() const;
};

struct GaussianPulse {
  double amplitude = 0.0;      // J_max
  double concentration = 1.0;  // beta
  double center = 0.0;         // t_p

  double operator()(double t) const;
};

/// External drive I_0(t).
class InputCurrent {
 public:
  struct Constant {
    double value = 0.0;
  };
  using PulseTrain = std::vector<GaussianPulse>;

  InputCurrent() = default;
  static InputCurrent constant(double value);
  static InputCurrent pulse(GaussianPulse p);
  static InputCurrent train(PulseTrain pulses);
  /// `count` pulses centred at offset + k*spacing, k = 0..count-1.
  static InputCurrent periodic(double amplitude, double concentration, int count,
                               double offset, double spacing);

  double operator()(double t) const;
  const auto& kind() const { return kind_; }

 private:
  std::variant<Constant, GaussianPulse, PulseTrain> kind_{Constant{}};
};

/// Uniform grid v_i = v_min + i*dv, i = 0..n_v, with v_r = V_R on a node.
class VoltageGrid {
 public:
  static VoltageGrid make(double v_min, double v_fire, double v_reset, double dv);

  double v_min() const { return v_min_; }
  double v_fire() const { return v_fire_; }
  double dv() const { return dv_; }
  int intervals() const { return n_v_; }
  int reset_index() const { return r_; }
  /// Interior cells i = 1..n_v-1; p_0 = p_{n_v} = 0 are implied.
  int cells() const { return n_v_ - 1; }

  double node(int i) const { return v_min_ + i * dv_; }
  /// Left and right faces of cell i.
  double lower_face(int i) const { return v_min_ + (i - 0.5) * dv_; }
  double upper_face(int i) const { return v_min_ + (i + 0.5) * dv_; }

 private:
  double v_min_ = 0.0;
  double v_fire_ = 0.0;
  double dv_ = 0.0;
  int n_v_ = 0;
  int r_ = 0;
};

/// Grid step closest to `target` for which both V_F and V_R sit on nodes.
double aligned_step(double v_min, double v_fire, double v_reset, double target);

/// dv ~ L^{-1/4}, the balance point between sampling error O(L^{-1/2}) and the
/// O(dv^2) discretisation error of the macroscopic scheme.
double mesh_for_network(const NetworkParams& params);

struct GaussianInit {
  double mean = -1.0;
  double variance = 0.5;

  double pdf(double v) const;
};

using Engine = std::mt19937_64;

/// Seeded random source. An engine is derived from (seed, stream, key...) by
/// hashing, so identical keys give identical sequences and distinct keys are
/// independent streams. Kernels key their engines per step and per block of
/// neurons, which keeps results independent of the thread count.
struct RandomSource {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RandomSource child(std::uint64_t tag) const;
  Engine engine(std::uint64_t key = 0, std::uint64_t block = 0) const;
};

std::uint64_t mix64(std::uint64_t x);

/// L i.i.d. normal(mean, variance) samples.
std::vector<double> sample_gaussian_init(const GaussianInit& g, std::int64_t size,
                                         const RandomSource& rng);

}  // namespace nlif
