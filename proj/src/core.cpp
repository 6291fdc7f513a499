#include "nlif/core.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "nlif/parallel.hpp"

namespace nlif {

NetworkParams NetworkParams::mean_field(double b, std::int64_t size) {
  NetworkParams p;
  p.b = b;
  p.size = size;
  p.kick = b / static_cast<double>(size);
  return p;
}

void NetworkParams::validate() const {
  if (!(v_min < v_reset && v_reset < v_fire)) {
    throw ConfigError("network: require v_min < V_R < V_F");
  }
  if (size < 1) throw ConfigError("network: L must be >= 1");
  if (!(a > 0.0)) throw ConfigError("network: diffusion coefficient a must be > 0");
  if (!(sigma0 >= 0.0)) throw ConfigError("network: sigma0 must be >= 0");
  if (!std::isfinite(b) || !std::isfinite(kick)) throw ConfigError("network: b and J must be finite");
}

double GaussianPulse::operator()(double t) const {
  const double d = t - center;
  return amplitude * std::exp(-concentration * d * d);
}

InputCurrent InputCurrent::constant(double value) {
  InputCurrent c;
  c.kind_ = Constant{value};
  return c;
}

InputCurrent InputCurrent::pulse(GaussianPulse p) {
  if (!(p.amplitude >= 0.0) || !(p.concentration > 0.0)) {
    throw ConfigError("input: pulse needs J_max >= 0 and beta > 0");
  }
  InputCurrent c;
  c.kind_ = p;
  return c;
}

InputCurrent InputCurrent::train(PulseTrain pulses) {
  for (const auto& p : pulses) {
    if (!(p.amplitude >= 0.0) || !(p.concentration > 0.0)) {
      throw ConfigError("input: pulse needs J_max >= 0 and beta > 0");
    }
  }
  InputCurrent c;
  c.kind_ = std::move(pulses);
  return c;
}

InputCurrent InputCurrent::periodic(double amplitude, double concentration, int count,
                                    double offset, double spacing) {
  PulseTrain pulses;
  for (int k = 0; k < count; ++k) {
    pulses.push_back({amplitude, concentration, offset + k * spacing});
  }
  return train(std::move(pulses));
}

double InputCurrent::operator()(double t) const {
  struct Visitor {
    double t;
    double operator()(const Constant& c) const { return c.value; }
    double operator()(const GaussianPulse& p) const { return p(t); }
    double operator()(const PulseTrain& ps) const {
      double sum = 0.0;
      for (const auto& p : ps) sum += p(t);
      return sum;
    }
  };
  return std::visit(Visitor{t}, kind_);
}

namespace {

// Distance of q from the nearest integer, relative to max(1, |q|).
double integral_defect(double q) {
  return std::abs(q - std::round(q)) / std::max(1.0, std::abs(q));
}

constexpr double kAlignTol = 1e-12;

}  // namespace

VoltageGrid VoltageGrid::make(double v_min, double v_fire, double v_reset, double dv) {
  if (!(v_min < v_reset && v_reset < v_fire)) {
    throw ConfigError("grid: require v_min < V_R < V_F");
  }
  if (!(dv > 0.0) || !std::isfinite(dv)) throw ConfigError("grid: dv must be positive");
  const double span = (v_fire - v_min) / dv;
  const double reset = (v_reset - v_min) / dv;
  if (integral_defect(span) > kAlignTol) {
    std::ostringstream os;
    os << "grid: dv=" << dv << " does not divide V_F - v_min; remainder "
       << (span - std::floor(span)) * dv;
    throw ConfigError(os.str());
  }
  if (integral_defect(reset) > kAlignTol) {
    std::ostringstream os;
    os << "grid: dv=" << dv << " puts V_R between nodes; remainder "
       << (reset - std::floor(reset)) * dv;
    throw ConfigError(os.str());
  }
  VoltageGrid g;
  g.v_min_ = v_min;
  g.v_fire_ = v_fire;
  g.n_v_ = static_cast<int>(std::lround(span));
  g.r_ = static_cast<int>(std::lround(reset));
  g.dv_ = (v_fire - v_min) / g.n_v_;
  if (g.n_v_ < 3) throw ConfigError("grid: need at least two interior cells");
  return g;
}

double aligned_step(double v_min, double v_fire, double v_reset, double target) {
  if (!(target > 0.0)) throw ConfigError("grid: target dv must be positive");
  const double width = v_fire - v_min;
  const auto guess = std::max<long>(3, std::lround(width / target));
  for (long delta = 0; delta < guess + 4096; ++delta) {
    for (const long n : {guess - delta, guess + delta}) {
      if (n < 3) continue;
      const double dv = width / static_cast<double>(n);
      if (integral_defect((v_reset - v_min) / dv) <= kAlignTol) return dv;
    }
  }
  throw ConfigError("grid: no aligned step near the requested dv");
}

double mesh_for_network(const NetworkParams& params) {
  const double target = std::pow(static_cast<double>(params.size), -0.25);
  return aligned_step(params.v_min, params.v_fire, params.v_reset, target);
}

double GaussianInit::pdf(double v) const {
  const double d = v - mean;
  return std::exp(-d * d / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomSource RandomSource::child(std::uint64_t tag) const {
  return {seed, mix64(stream ^ mix64(tag ^ 0xa5a5a5a5a5a5a5a5ULL))};
}

Engine RandomSource::engine(std::uint64_t key, std::uint64_t block) const {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  h = mix64(h ^ key);
  h = mix64(h ^ block);
  return Engine(h);
}

std::vector<double> sample_gaussian_init(const GaussianInit& g, std::int64_t size,
                                         const RandomSource& rng) {
  if (size < 1) throw ConfigError("sample_gaussian_init: L must be >= 1");
  if (!(g.variance > 0.0)) throw ConfigError("sample_gaussian_init: variance must be > 0");
  std::vector<double> out(static_cast<std::size_t>(size));
  const double sd = std::sqrt(g.variance);
  for_each_block(Exec::parallel, out.size(), [&](std::uint64_t b, std::size_t lo, std::size_t hi) {
    auto eng = rng.engine(0, b);
    boost::random::normal_distribution<double> normal(g.mean, sd);
    for (std::size_t j = lo; j < hi; ++j) out[j] = normal(eng);
  });
  return out;
}

}  // namespace nlif
