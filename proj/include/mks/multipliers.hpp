#pragma once

// Spectral cutoffs: the sharp cube cutoff P_n (all |k_i| <= 2^n), its radial
// variant 1{1+|k|^2 <= 2^n}, and the smooth Littlewood-Paley cutoff
// S_n = sum_{l<=n} Psi(2^{-l}(1+|k|^2)).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "mks/vector_ops.hpp"

namespace mks {

struct CutoffLevel {
  int n = 0;

  double scale() const { return std::ldexp(1.0, n); }
};

// Largest level n with 2^n not exceeding the grid's Nyquist wavenumber.
inline int nyquist_level(const GridSpec& g) {
  return static_cast<int>(std::floor(std::log2(g.nyquist()) + 1e-12));
}

class WindowFunction {
public:
  WindowFunction() = default;
  explicit WindowFunction(std::function<double(double)> psi) : psi_(std::move(psi)) {}

  double operator()(double x) const { return psi_(x); }

  // sum_{l<=level} Psi(2^{-l} x); only l with 2^{-l}x in (1/2, 2) contribute.
  double partial_sum(double x, int level) const {
    if (!(x > 0.0)) return 0.0;
    const int lo = static_cast<int>(std::floor(std::log2(x))) - 2;
    double s = 0.0;
    for (int l = lo; l <= level; ++l) s += psi_(std::ldexp(x, -l));
    return s;
  }

  // sum over all l in Z (the partition of unity).
  double partition_sum(double x) const {
    if (!(x > 0.0)) return 0.0;
    const int c = static_cast<int>(std::floor(std::log2(x)));
    double s = 0.0;
    for (int l = c - 2; l <= c + 2; ++l) s += psi_(std::ldexp(x, -l));
    return s;
  }

private:
  std::function<double(double)> psi_;
};

namespace detail {

// Smooth bump exp(-1/((x-1/2)(2-x))) on (1/2, 2).
inline double window_bump(double x) {
  if (x <= 0.5 || x >= 2.0) return 0.0;
  return std::exp(-1.0 / ((x - 0.5) * (2.0 - x)));
}

}  // namespace detail

// Psi(x) = phi(x) / sum_l phi(2^{-l} x); a partition of unity by construction.
inline WindowFunction standard_window() {
  return WindowFunction([](double x) {
    if (x <= 0.5 || x >= 2.0) return 0.0;
    const double den = detail::window_bump(x) + detail::window_bump(2.0 * x) +
                       detail::window_bump(0.5 * x);
    return detail::window_bump(x) / den;
  });
}

inline bool in_cube(const ModeInfo& m, CutoffLevel level) {
  const double s = level.scale() * (1.0 + 1e-12);
  return std::abs(m.k[0]) <= s && std::abs(m.k[1]) <= s && std::abs(m.k[2]) <= s;
}

inline bool in_ball(const ModeInfo& m, CutoffLevel level) {
  return 1.0 + m.k2 <= level.scale() * (1.0 + 1e-12);
}

// Scalar multiplier stored per mode, applied componentwise.
class Multiplier {
public:
  Multiplier() = default;
  Multiplier(GridSpec g, std::vector<double> values)
      : grid_(std::move(g)), values_(std::make_shared<const std::vector<double>>(std::move(values))) {}

  const GridSpec& grid() const { return grid_; }
  double operator[](std::size_t i) const { return (*values_)[i]; }
  std::span<const double> values() const { return *values_; }

  template <int C>
  Field<C> apply(Field<C> u) const {
    u.require(Representation::spectral, "Multiplier::apply");
    if (!(u.grid() == grid_)) throw UsageError("Multiplier::apply: grid mismatch");
    const auto& v = *values_;
    for (int c = 0; c < C; ++c) {
      auto comp = u.component(c);
      for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= v[i];
    }
    return u;
  }

  // True when every value is 1 (the multiplier is the identity).
  bool is_identity() const {
    return std::ranges::all_of(*values_, [](double x) { return x == 1.0; });
  }

private:
  GridSpec grid_;
  std::shared_ptr<const std::vector<double>> values_;
};

inline Multiplier cube_multiplier(const GridSpec& g, CutoffLevel level) {
  std::vector<double> v(g.size());
  for_each_mode(g, [&](const ModeInfo& m) { v[m.index] = in_cube(m, level) ? 1.0 : 0.0; });
  return {g, std::move(v)};
}

inline Multiplier radial_multiplier(const GridSpec& g, CutoffLevel level) {
  std::vector<double> v(g.size());
  for_each_mode(g, [&](const ModeInfo& m) { v[m.index] = in_ball(m, level) ? 1.0 : 0.0; });
  return {g, std::move(v)};
}

inline Multiplier smooth_multiplier(const GridSpec& g, CutoffLevel level, const WindowFunction& w) {
  std::vector<double> v(g.size());
  for_each_mode(g, [&](const ModeInfo& m) { v[m.index] = w.partial_sum(1.0 + m.k2, level.n); });
  return {g, std::move(v)};
}

// P_n: zero every mode with some |k_i| > 2^n.
inline Field6 sharp_cutoff(const Field6& u, CutoffLevel level) {
  u.require(Representation::spectral, "sharp_cutoff");
  return cube_multiplier(u.grid(), level).apply(u);
}

// Radial P_n: keep modes with 1 + |k|^2 <= 2^n.
inline Field6 radial_cutoff(const Field6& u, CutoffLevel level) {
  u.require(Representation::spectral, "radial_cutoff");
  return radial_multiplier(u.grid(), level).apply(u);
}

// S_n with window w.
inline Field6 smooth_cutoff(const Field6& u, CutoffLevel level, const WindowFunction& w) {
  u.require(Representation::spectral, "smooth_cutoff");
  return smooth_multiplier(u.grid(), level, w).apply(u);
}

struct SandwichReport {
  int level = 0;
  double sn_pn_violation = 0.0;    // max |S_n P_n - P_n|
  double pn_sn1_violation = 0.0;   // max |P_n S_{n-1} - S_{n-1}|
  double max_violation() const { return std::max(sn_pn_violation, pn_sn1_violation); }
};

// Checks S_n P_n = P_n and P_n S_{n-1} = S_{n-1} mode by mode with the radial P_n.
inline SandwichReport cutoff_sandwich_check(CutoffLevel level, const GridSpec& g,
                                            const WindowFunction& w = standard_window()) {
  SandwichReport r;
  r.level = level.n;
  for_each_mode(g, [&](const ModeInfo& m) {
    const double x = 1.0 + m.k2;
    const double p = in_ball(m, level) ? 1.0 : 0.0;
    const double s = w.partial_sum(x, level.n);
    const double s1 = w.partial_sum(x, level.n - 1);
    r.sn_pn_violation = std::max(r.sn_pn_violation, std::abs(s * p - p));
    r.pn_sn1_violation = std::max(r.pn_sn1_violation, std::abs(p * s1 - s1));
  });
  return r;
}

}  // namespace mks
