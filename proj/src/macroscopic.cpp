#include "nlif/macroscopic.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nlif {

namespace {

constexpr double kNegativityTol = 1e-12;
constexpr double kExplicitMassTol = 1e-6;

std::vector<double> log_maxwellian(const VoltageGrid& grid, const NetworkParams& params,
                                   double drive, double rate) {
  const double peak = params.v_leak + drive + params.b * rate;
  const int n = grid.cells();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    const double d = grid.node(c + 1) - peak;
    out[static_cast<std::size_t>(c)] = -d * d / (2.0 * params.a);
  }
  return out;
}

// Face coefficients of the Scharfetter-Gummel flux between cells c and c+1:
//   F_c = -(right[c] * p_{c+1} - left[c] * p_c) - N * [face above V_R],
// with right = (a/dv) M_{c+1/2}/M_{c+1} and left = (a/dv) M_{c+1/2}/M_c,
// written in log form so that underflowing weights stay finite.
struct FaceCoefficients {
  std::vector<double> left;
  std::vector<double> right;
};

FaceCoefficients face_coefficients(const std::vector<double>& log_m, double a, double dv) {
  const std::size_t faces = log_m.size() - 1;
  FaceCoefficients f;
  f.left.resize(faces);
  f.right.resize(faces);
  const double scale = a / dv;
  for (std::size_t c = 0; c < faces; ++c) {
    const double d = log_m[c + 1] - log_m[c];
    f.right[c] = scale * 2.0 / (1.0 + std::exp(d));
    f.left[c] = scale * 2.0 / (1.0 + std::exp(-d));
  }
  return f;
}

// Reinjection indicator of face c (between cells c and c+1, 0-based): the face
// v_{c+3/2} lies above V_R exactly when the 1-based cell index c+1 >= r.
inline bool face_above_reset(std::size_t c, const VoltageGrid& grid) {
  return static_cast<int>(c) + 1 >= grid.reset_index();
}

// Net shift coefficient of cell c: eta(left face) - eta(right face), with the
// two boundary faces carrying no flux at all.
int shift_sign(std::size_t c, std::size_t n, const VoltageGrid& grid) {
  const int left = (c >= 1 && face_above_reset(c - 1, grid)) ? 1 : 0;
  const int right = (c + 1 < n && face_above_reset(c, grid)) ? 1 : 0;
  return left - right;
}

void check_positivity(const std::vector<double>& p, const char* who) {
  const auto it = std::min_element(p.begin(), p.end());
  if (it != p.end() && *it < -kNegativityTol) {
    std::ostringstream os;
    os << who << ": density " << *it << " in cell " << (it - p.begin()) + 1
       << " violates positivity";
    throw NumericalError(os.str());
  }
}

}  // namespace

SgWeights compute_weights(const VoltageGrid& grid, const NetworkParams& params, double drive,
                          double rate) {
  if (!(params.a > 0.0)) throw ConfigError("compute_weights: a must be positive");
  SgWeights w;
  w.log_node = log_maxwellian(grid, params, drive, rate);
  w.node.resize(w.log_node.size());
  std::transform(w.log_node.begin(), w.log_node.end(), w.node.begin(),
                 [](double l) { return std::exp(l); });
  w.face.resize(w.log_node.size() - 1);
  for (std::size_t c = 0; c + 1 < w.log_node.size(); ++c) {
    // 2 M_c M_{c+1} / (M_c + M_{c+1}) evaluated through logs.
    const double lo = std::min(w.log_node[c], w.log_node[c + 1]);
    const double hi = std::max(w.log_node[c], w.log_node[c + 1]);
    w.face[c] = std::exp(std::numbers::ln2 + lo - std::log1p(std::exp(lo - hi)));
  }
  return w;
}

double boundary_rate(std::span<const double> density, const VoltageGrid& grid,
                     const NetworkParams& params) {
  return params.a * density.back() / grid.dv();
}

double total_mass(std::span<const double> density, const VoltageGrid& grid) {
  double s = 0.0;
  for (const double p : density) s += p;
  return s * grid.dv();
}

MacroState discretize_gaussian(const GaussianInit& g, const VoltageGrid& grid,
                               const NetworkParams& params) {
  MacroState s;
  s.density.resize(static_cast<std::size_t>(grid.cells()));
  for (int c = 0; c < grid.cells(); ++c) s.density[static_cast<std::size_t>(c)] = g.pdf(grid.node(c + 1));
  const double mass = total_mass(s.density, grid);
  if (!(mass > 0.0)) throw ConfigError("initial density vanishes on the grid");
  for (auto& p : s.density) p /= mass;
  s.rate = boundary_rate(s.density, grid, params);
  return s;
}

MacroState macro_step_semi_implicit(const MacroState& state, const VoltageGrid& grid,
                                    const NetworkParams& params, double drive, double dt,
                                    ShiftClosure closure) {
  if (!(dt > 0.0)) throw ConfigError("macro_step: dt must be positive");
  const std::size_t n = state.density.size();
  const double dv = grid.dv();
  const double lambda = dt / dv;
  const auto log_m = log_maxwellian(grid, params, drive, state.rate);
  const auto f = face_coefficients(log_m, params.a, dv);

  // Row c: sub[c] p_{c-1} + diag[c] p_c + sup[c] p_{c+1} + last[c] p_{n-1} = rhs[c].
  std::vector<double> sub(n, 0.0), diag(n, 1.0), sup(n, 0.0), last(n, 0.0), rhs(state.density);
  for (std::size_t c = 0; c < n; ++c) {
    if (c + 1 < n) {
      diag[c] += lambda * f.left[c];
      sup[c] = -lambda * f.right[c];
    }
    if (c >= 1) {
      diag[c] += lambda * f.right[c - 1];
      sub[c] = -lambda * f.left[c - 1];
    }
    const int s = shift_sign(c, n, grid);
    if (s == 0) continue;
    if (closure == ShiftClosure::implicit) {
      last[c] = lambda * (params.a / dv) * s;
    } else {
      rhs[c] -= lambda * state.rate * s;
    }
  }

  // Forward elimination; the extra last-column entries fold into the band
  // once they reach it.
  auto fold = [&](std::size_t c) {
    if (c + 1 == n) {
      diag[c] += last[c];
      last[c] = 0.0;
    } else if (c + 2 == n) {
      sup[c] += last[c];
      last[c] = 0.0;
    }
  };
  fold(0);
  for (std::size_t c = 1; c < n; ++c) {
    const double m = sub[c] / diag[c - 1];
    diag[c] -= m * sup[c - 1];
    last[c] -= m * last[c - 1];
    rhs[c] -= m * rhs[c - 1];
    fold(c);
  }
  MacroState next;
  next.density.resize(n);
  auto& p = next.density;
  p[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t c = n - 1; c-- > 0;) {
    p[c] = (rhs[c] - sup[c] * p[c + 1] - last[c] * p[n - 1]) / diag[c];
  }
  if (!std::all_of(p.begin(), p.end(), [](double x) { return std::isfinite(x); })) {
    throw NumericalError("macro_step_semi_implicit: singular system");
  }
  check_positivity(p, "macro_step_semi_implicit");
  next.rate = boundary_rate(p, grid, params);
  next.step = state.step + 1;
  return next;
}

MacroState macro_step_explicit(const MacroState& state, const VoltageGrid& grid,
                               const NetworkParams& params, double drive, double dt) {
  if (!(dt > 0.0)) throw ConfigError("macro_step: dt must be positive");
  const std::size_t n = state.density.size();
  const double dv = grid.dv();
  const double lambda = dt / dv;
  const auto log_m = log_maxwellian(grid, params, drive, state.rate);
  const auto f = face_coefficients(log_m, params.a, dv);
  const auto& p = state.density;

  std::vector<double> flux(n - 1);
  for (std::size_t c = 0; c + 1 < n; ++c) {
    flux[c] = -(f.right[c] * p[c + 1] - f.left[c] * p[c]) -
              (face_above_reset(c, grid) ? state.rate : 0.0);
  }
  MacroState next;
  next.density.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double out = c + 1 < n ? flux[c] : 0.0;
    const double in = c >= 1 ? flux[c - 1] : 0.0;
    next.density[c] = p[c] - lambda * (out - in);
  }
  const double before = total_mass(p, grid);
  const double after = total_mass(next.density, grid);
  const bool negative =
      *std::min_element(next.density.begin(), next.density.end()) < -kNegativityTol;
  if (negative || std::abs(after - before) > kExplicitMassTol) {
    std::ostringstream os;
    os << "macro_step_explicit: unstable step (dt=" << dt << ", dv=" << dv
       << ", dv^2/2a=" << dv * dv / (2.0 * params.a)
       << "); reduce dt or use the semi-implicit scheme";
    throw NumericalError(os.str());
  }
  next.rate = boundary_rate(next.density, grid, params);
  next.step = state.step + 1;
  return next;
}

MacroState macro_step(const MacroState& state, const VoltageGrid& grid,
                      const NetworkParams& params, const InputCurrent& input, double dt,
                      const MacroOptions& opts) {
  const double drive = input(static_cast<double>(state.step) * dt);
  if (opts.scheme == MacroScheme::explicit_euler) {
    return macro_step_explicit(state, grid, params, drive, dt);
  }
  return macro_step_semi_implicit(state, grid, params, drive, dt, opts.closure);
}

double Cubic::integral(double lo, double hi) const {
  // Two-point Gauss-Legendre is exact for cubics.
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double off = half / std::numbers::sqrt3;
  return half * ((*this)(mid - off) + (*this)(mid + off));
}

double density_moment(std::span<const double> density, const VoltageGrid& grid, const Cubic& f) {
  double s = 0.0;
  for (std::size_t c = 0; c < density.size(); ++c) {
    const int i = static_cast<int>(c) + 1;
    s += density[c] * f.integral(grid.lower_face(i), grid.upper_face(i));
  }
  return s;
}

double density_moment(std::span<const double> density, const VoltageGrid& grid,
                      const std::function<double(double)>& f) {
  double s = 0.0;
  for (std::size_t c = 0; c < density.size(); ++c) {
    const int i = static_cast<int>(c) + 1;
    s += density[c] *
         boost::math::quadrature::gauss<double, 8>::integrate(f, grid.lower_face(i), grid.upper_face(i));
  }
  return s;
}

}  // namespace nlif
