#pragma once

// Finite-dimensional Brownian driving noise, the multiplicative structure
// b_j + i B_j u, and the gauge transform y = e^{-i sum_j B_j beta_j} u together
// with the coefficients it induces (the drift A(t), J~ and b~_j).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "mks/vector_ops.hpp"

namespace mks {

// ---------------------------------------------------------------------------
// Time profiles g(t) with analytic derivative; b_j and J are g(t) * shape(x).

struct TimeProfile {
  enum class Kind { constant, sine, exponential, linear };
  Kind kind = Kind::constant;
  double a = 1.0;  // amplitude / constant / intercept
  double b = 0.0;  // omega / rate / slope
  double c = 0.0;  // phase (sine only)

  static TimeProfile constant(double value) { return {Kind::constant, value, 0.0, 0.0}; }
  static TimeProfile sine(double amp, double omega, double phase = 0.0) {
    return {Kind::sine, amp, omega, phase};
  }
  static TimeProfile exponential(double amp, double rate) { return {Kind::exponential, amp, rate, 0.0}; }
  static TimeProfile linear(double intercept, double slope) { return {Kind::linear, intercept, slope, 0.0}; }

  double value(double t) const {
    switch (kind) {
      case Kind::constant: return a;
      case Kind::sine: return a * std::sin(b * t + c);
      case Kind::exponential: return a * std::exp(-b * t);
      case Kind::linear: return a + b * t;
    }
    return 0.0;
  }

  double derivative(double t) const {
    switch (kind) {
      case Kind::constant: return 0.0;
      case Kind::sine: return a * b * std::cos(b * t + c);
      case Kind::exponential: return -a * b * std::exp(-b * t);
      case Kind::linear: return b;
    }
    return 0.0;
  }
};

struct SpaceTimeField {
  TimeProfile profile;
  Field6 shape;  // physical

  Field6 at(double t) const { return cplx(profile.value(t)) * shape; }
  Field6 derivative_at(double t) const { return cplx(profile.derivative(t)) * shape; }
  bool is_zero() const {
    if (profile.kind == TimeProfile::Kind::constant && profile.a == 0.0) return true;
    return std::ranges::all_of(shape.data(), [](const cplx& v) { return v == cplx{}; });
  }
};

// ---------------------------------------------------------------------------
// Brownian bundles on a uniform time grid.

struct BrownianBundle {
  int count = 0;             // N
  int steps = 0;             // K
  double horizon = 0.0;      // T
  std::uint64_t seed = 0;
  int level = 0;             // number of bridge refinements applied
  std::vector<double> values;  // count x (steps + 1), path-major

  double dt() const { return horizon / steps; }
  double time(int k) const { return horizon * k / steps; }
  double value(int j, int k) const {
    return values[static_cast<std::size_t>(j) * (steps + 1) + static_cast<std::size_t>(k)];
  }
  double& value(int j, int k) {
    return values[static_cast<std::size_t>(j) * (steps + 1) + static_cast<std::size_t>(k)];
  }
  double increment(int j, int k) const { return value(j, k + 1) - value(j, k); }

  std::optional<int> time_index(double t) const {
    const double x = t / horizon * steps;
    const double r = std::round(x);
    if (r < 0 || r > steps || std::abs(x - r) > 1e-9) return std::nullopt;
    return static_cast<int>(r);
  }
  int require_index(double t) const {
    auto k = time_index(t);
    if (!k) {
      std::ostringstream os;
      os << "time " << t << " is not on the Brownian grid (dt=" << dt() << ")";
      throw UsageError(os.str());
    }
    return *k;
  }
  std::vector<double> values_at(int k) const {
    std::vector<double> b(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) b[static_cast<std::size_t>(j)] = value(j, k);
    return b;
  }
};

namespace detail {

// Independent stream per (seed, path, refinement level).
inline std::mt19937_64 substream(std::uint64_t seed, int path, int level) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(level), 0x4d4b53u};
  return std::mt19937_64(seq);
}

}  // namespace detail

inline BrownianBundle sample_brownian(int count, double horizon, int steps, std::uint64_t seed) {
  if (steps < 1) throw UsageError("sample_brownian: K must be >= 1");
  if (!(horizon > 0.0)) throw UsageError("sample_brownian: T must be positive");
  if (count < 0) throw UsageError("sample_brownian: N must be >= 0");
  BrownianBundle b{count, steps, horizon, seed, 0, {}};
  b.values.assign(static_cast<std::size_t>(count) * (steps + 1), 0.0);
  const double sd = std::sqrt(horizon / steps);
  for (int j = 0; j < count; ++j) {
    auto rng = detail::substream(seed, j, 0);
    std::normal_distribution<double> z;
    for (int k = 0; k < steps; ++k) b.value(j, k + 1) = b.value(j, k) + sd * z(rng);
  }
  return b;
}

// Brownian bridge midpoint insertion; coarse values are copied unchanged.
inline BrownianBundle refine(const BrownianBundle& c) {
  BrownianBundle f{c.count, 2 * c.steps, c.horizon, c.seed, c.level + 1, {}};
  f.values.assign(static_cast<std::size_t>(f.count) * (f.steps + 1), 0.0);
  const double half_sd = 0.5 * std::sqrt(c.dt());
  for (int j = 0; j < c.count; ++j) {
    auto rng = detail::substream(c.seed, j, f.level);
    std::normal_distribution<double> z;
    for (int k = 0; k <= c.steps; ++k) f.value(j, 2 * k) = c.value(j, k);
    for (int k = 0; k < c.steps; ++k)
      f.value(j, 2 * k + 1) = 0.5 * (c.value(j, k) + c.value(j, k + 1)) + half_sd * z(rng);
  }
  return f;
}

inline BrownianBundle refine(const BrownianBundle& c, int times) {
  BrownianBundle b = c;
  for (int i = 0; i < times; ++i) b = refine(b);
  return b;
}

// Subsamples to `steps` intervals (must divide the bundle's K).
inline BrownianBundle restrict_to(const BrownianBundle& f, int steps) {
  if (steps < 1 || f.steps % steps != 0) throw UsageError("restrict_to: K must divide bundle K");
  const int stride = f.steps / steps;
  BrownianBundle c{f.count, steps, f.horizon, f.seed, f.level, {}};
  int s = stride, lv = f.level;
  while (s > 1) { s /= 2; --lv; }
  c.level = std::max(lv, 0);
  c.values.assign(static_cast<std::size_t>(c.count) * (steps + 1), 0.0);
  for (int j = 0; j < f.count; ++j)
    for (int k = 0; k <= steps; ++k) c.value(j, k) = f.value(j, k * stride);
  return c;
}

// "BRW1", u32 N, u32 K, u64 seed, f64 T, then N (K+1) f64 values path-major.
inline void write_bundle(std::ostream& os, const BrownianBundle& b) {
  os.write("BRW1", 4);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(b.count));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(b.steps));
  detail::put_le<std::uint64_t>(os, b.seed);
  detail::put_le<double>(os, b.horizon);
  for (double v : b.values) detail::put_le<double>(os, v);
}

inline BrownianBundle read_bundle(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "BRW1", 4) != 0)
    throw UsageError("bundle: bad magic");
  BrownianBundle b;
  b.count = static_cast<int>(detail::get_le<std::uint32_t>(is));
  b.steps = static_cast<int>(detail::get_le<std::uint32_t>(is));
  b.seed = detail::get_le<std::uint64_t>(is);
  b.horizon = detail::get_le<double>(is);
  b.values.resize(static_cast<std::size_t>(b.count) * (b.steps + 1));
  for (auto& v : b.values) v = detail::get_le<double>(is);
  return b;
}

// ---------------------------------------------------------------------------
// Noise specification.

// Relative L^2 energy of the modes with some |signed index| > max_index.
template <int C>
double band_leakage(const Field<C>& spectral, int max_index) {
  spectral.require(Representation::spectral, "band_leakage");
  const GridSpec& g = spectral.grid();
  const int n = g.points();
  double out = 0.0, all = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const bool outside = std::abs(g.signed_frequency(a)) > max_index ||
                             std::abs(g.signed_frequency(b)) > max_index ||
                             std::abs(g.signed_frequency(c)) > max_index;
        const auto i = g.index(a, b, c);
        for (int k = 0; k < C; ++k) {
          const double e = std::norm(spectral.at(k, i));
          all += e;
          if (outside) out += e;
        }
      }
  return all > 0.0 ? std::sqrt(out / all) : 0.0;
}

struct NoiseSpec {
  GridSpec grid;
  std::vector<ScalarField> B;      // physical, real-valued
  std::vector<VectorField> gradB;  // physical, real-valued
  std::vector<SpaceTimeField> b;   // one per Brownian motion
  SpaceTimeField J;
  Field6 u0;                       // physical

  int count() const { return static_cast<int>(B.size()); }
  bool gauge_trivial() const {
    return std::ranges::all_of(B, [](const ScalarField& f) {
      return std::ranges::all_of(f.data(), [](const cplx& v) { return v == cplx{}; });
    });
  }
};

inline constexpr double kLeakageTolerance = 1e-10;

// Builds a spec, differentiating each B_j spectrally. B_j must be real and
// band-limited to half the Nyquist index.
inline NoiseSpec make_noise_spec(const GridSpec& g, std::vector<ScalarField> B,
                                 std::vector<SpaceTimeField> b, SpaceTimeField J, Field6 u0) {
  if (B.size() != b.size()) throw ConfigError("noise spec: need one b_j per B_j");
  NoiseSpec s;
  s.grid = g;
  for (std::size_t j = 0; j < B.size(); ++j) {
    auto& Bj = B[j];
    Bj.require(Representation::physical, "make_noise_spec");
    for (auto& v : Bj.data()) {
      if (std::abs(v.imag()) > 1e-14 * (1.0 + std::abs(v.real())))
        throw ConfigError("[M6] violated: B_" + std::to_string(j + 1) + " must be real-valued");
      v = {v.real(), 0.0};
    }
    Bj.set_real_state(true);
    const ScalarField Bh = to_spectral(Bj);
    const double leak = band_leakage(Bh, g.points() / 4);
    if (leak > kLeakageTolerance) {
      std::ostringstream os;
      os << "[M6] violated: B_" << j + 1 << " not band-limited to half-Nyquist (leakage " << leak
         << ")";
      throw ConfigError(os.str());
    }
    VectorField gB = to_physical(grad(Bh));
    for (auto& v : gB.data()) v = {v.real(), 0.0};
    s.gradB.push_back(std::move(gB));
  }
  s.B = std::move(B);
  s.b = std::move(b);
  s.J = std::move(J);
  s.u0 = std::move(u0);
  return s;
}

// ---------------------------------------------------------------------------
// Gauge transform.

struct GaugePhase {
  ScalarField phase;  // e^{-i sum_j B_j beta_j}, physical
  std::vector<double> beta;
};

enum class GaugeDirection { forward, inverse };

inline GaugePhase gauge_phase_at(const NoiseSpec& spec, const std::vector<double>& beta) {
  GaugePhase p{ScalarField(spec.grid, Representation::physical), beta};
  const std::size_t n = spec.grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    double arg = 0.0;
    for (int j = 0; j < spec.count(); ++j) arg += spec.B[static_cast<std::size_t>(j)].at(0, i).real() * beta[static_cast<std::size_t>(j)];
    p.phase.at(0, i) = std::polar(1.0, -arg);
  }
  return p;
}

inline GaugePhase gauge_phase(const NoiseSpec& spec, const BrownianBundle& bundle, double t) {
  return gauge_phase_at(spec, bundle.values_at(bundle.require_index(t)));
}

// forward: u * e^{-i Phi}; inverse: u * e^{+i Phi}.
inline Field6 apply_gauge(const Field6& u, const GaugePhase& p, GaugeDirection dir) {
  u.require(Representation::physical, "apply_gauge");
  if (!(u.grid() == p.phase.grid())) throw UsageError("apply_gauge: grid mismatch");
  Field6 out = u;
  const bool fwd = dir == GaugeDirection::forward;
  for (int c = 0; c < 6; ++c) {
    auto comp = out.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) {
      const cplx ph = p.phase.at(0, i);
      comp[i] *= fwd ? ph : std::conj(ph);
    }
  }
  out.set_real_state(false);
  return out;
}

// sum_j i beta_j (grad B_j x y2, -grad B_j x y1), pointwise.
inline Field6 gauge_cross_term(const Field6& y, const NoiseSpec& spec, const std::vector<double>& beta) {
  y.require(Representation::physical, "gauge_cross_term");
  Field6 out(y.grid(), Representation::physical);
  const std::size_t n = y.grid().size();
  for (int j = 0; j < spec.count(); ++j) {
    const double bj = beta[static_cast<std::size_t>(j)];
    if (bj == 0.0) continue;
    const VectorField& g = spec.gradB[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 k{g.at(0, i).real(), g.at(1, i).real(), g.at(2, i).real()};
      const auto c2 = detail::cross(k, detail::load3(y, 3, i));
      const auto c1 = detail::cross(k, detail::load3(y, 0, i));
      for (int c = 0; c < 3; ++c) {
        out.at(c, i) += detail::I * bj * c2[static_cast<std::size_t>(c)];
        out.at(c + 3, i) -= detail::I * bj * c1[static_cast<std::size_t>(c)];
      }
    }
  }
  return out;
}

// A(t)y = 1/2 sum_j B_j^2 y + sum_j i beta_j (grad B_j x y2, -grad B_j x y1).
inline Field6 drift_A_apply_at(const Field6& y, const NoiseSpec& spec, const std::vector<double>& beta) {
  Field6 out = gauge_cross_term(y, spec, beta);
  const std::size_t n = y.grid().size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& Bj : spec.B) s += Bj.at(0, i).real() * Bj.at(0, i).real();
    s *= 0.5;
    if (s == 0.0) continue;
    for (int c = 0; c < 6; ++c) out.at(c, i) += s * y.at(c, i);
  }
  return out;
}

inline Field6 drift_A_apply(const Field6& y, double t, const NoiseSpec& spec, const BrownianBundle& bundle) {
  return drift_A_apply_at(y, spec, bundle.values_at(bundle.require_index(t)));
}

// Pointwise multiplication of a Field6 by the scalar phase.
inline Field6 multiply_phase(Field6 u, const ScalarField& phase) {
  for (int c = 0; c < 6; ++c) {
    auto comp = u.component(c);
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= phase.at(0, i);
  }
  u.set_real_state(false);
  return u;
}

// (sum_j -i b_j B_j + J) evaluated at time t, before the phase factor.
inline Field6 untransformed_current(double t, const NoiseSpec& spec) {
  Field6 out = spec.J.at(t);
  const std::size_t n = spec.grid.size();
  for (int j = 0; j < spec.count(); ++j) {
    const double g = spec.b[static_cast<std::size_t>(j)].profile.value(t);
    if (g == 0.0) continue;
    const Field6& shape = spec.b[static_cast<std::size_t>(j)].shape;
    const ScalarField& Bj = spec.B[static_cast<std::size_t>(j)];
    for (int c = 0; c < 6; ++c)
      for (std::size_t i = 0; i < n; ++i)
        out.at(c, i) += -detail::I * g * shape.at(c, i) * Bj.at(0, i).real();
  }
  return out;
}

// J~ = (sum_j -i b_j B_j + J) e^{-i sum_n B_n beta_n}, J entering once.
inline Field6 transformed_current_at(double t, const NoiseSpec& spec, const GaugePhase& p) {
  return multiply_phase(untransformed_current(t, spec), p.phase);
}

inline Field6 transformed_current(double t, const NoiseSpec& spec, const BrownianBundle& bundle) {
  return transformed_current_at(t, spec, gauge_phase(spec, bundle, t));
}

// b~_i = b_i e^{-i sum_j B_j beta_j}.
inline Field6 transformed_noise_at(int i, double t, const NoiseSpec& spec, const GaugePhase& p) {
  return multiply_phase(spec.b.at(static_cast<std::size_t>(i)).at(t), p.phase);
}

inline Field6 transformed_noise(int i, double t, const NoiseSpec& spec, const BrownianBundle& bundle) {
  return transformed_noise_at(i, t, spec, gauge_phase(spec, bundle, t));
}

}  // namespace mks
