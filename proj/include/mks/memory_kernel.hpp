#pragma once

// Retarded material law (G*u)(t) = int_0^t G(t-s) u(s) ds for a
// space-constant 6x6 kernel, its time derivative, the contraction window
// length and the windowed Picard driver.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "mks/spectral_grid.hpp"

namespace mks {

using Mat6 = Eigen::Matrix<double, 6, 6>;

struct KernelSpec {
  enum class Form { zero, scalar_exponential, matrix_profile };
  Form form = Form::zero;
  // scalar_exponential: G(t) = amplitude e^{-decay t} matrix
  double amplitude = 0.0;
  double decay = 0.0;
  Mat6 matrix = Mat6::Identity();
  // matrix_profile: samples G(k table_dt), linear in between, last value held
  double table_dt = 0.0;
  std::vector<Mat6> table;

  static KernelSpec zero() { return {}; }
  static KernelSpec exponential(double a, double lambda, const Mat6& m = Mat6::Identity()) {
    KernelSpec k;
    k.form = Form::scalar_exponential;
    k.amplitude = a;
    k.decay = lambda;
    k.matrix = m;
    return k;
  }
  static KernelSpec profile(double dt, std::vector<Mat6> samples) {
    if (!(dt > 0.0) || samples.empty()) throw ConfigError("kernel table needs dt > 0 and samples");
    KernelSpec k;
    k.form = Form::matrix_profile;
    k.table_dt = dt;
    k.table = std::move(samples);
    return k;
  }

  bool is_zero() const {
    switch (form) {
      case Form::zero: return true;
      case Form::scalar_exponential: return amplitude == 0.0 || matrix.isZero(0.0);
      case Form::matrix_profile:
        for (const auto& m : table)
          if (!m.isZero(0.0)) return false;
        return true;
    }
    return true;
  }

  bool has_derivative() const { return form != Form::matrix_profile; }

  Mat6 at(double t) const {
    switch (form) {
      case Form::zero: return Mat6::Zero();
      case Form::scalar_exponential: return amplitude * std::exp(-decay * t) * matrix;
      case Form::matrix_profile: {
        const double x = t / table_dt;
        const auto last = static_cast<double>(table.size() - 1);
        if (x >= last) return table.back();
        if (x <= 0.0) return table.front();
        const auto i = static_cast<std::size_t>(std::floor(x));
        const double w = x - static_cast<double>(i);
        return (1.0 - w) * table[i] + w * table[i + 1];
      }
    }
    return Mat6::Zero();
  }

  Mat6 derivative(double t) const {
    switch (form) {
      case Form::zero: return Mat6::Zero();
      case Form::scalar_exponential:
        return -decay * amplitude * std::exp(-decay * t) * matrix;
      case Form::matrix_profile:
        throw UnsupportedError("kernel derivative: tabulated kernels have no analytic G'");
    }
    return Mat6::Zero();
  }

  // ||G||_{L^1(0,T)} with the spectral (operator 2-) norm of G(t).
  double l1_norm(double T) const {
    switch (form) {
      case Form::zero: return 0.0;
      case Form::scalar_exponential: {
        const double mn = std::abs(amplitude) * matrix.operatorNorm();
        if (decay == 0.0) return mn * T;
        return mn * (1.0 - std::exp(-decay * T)) / decay;
      }
      case Form::matrix_profile: {
        const int steps = std::max(1, static_cast<int>(std::ceil(T / table_dt)) * 4);
        const double h = T / steps;
        double s = 0.0;
        for (int i = 0; i <= steps; ++i) {
          const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
          s += w * at(i * h).operatorNorm();
        }
        return s * h;
      }
    }
    return 0.0;
  }
};

// Pointwise (G u)(x) for a space-constant matrix; valid in either representation.
inline Field6 apply_matrix(const Mat6& G, const Field6& u) {
  Field6 out(u.grid(), u.representation());
  const std::size_t n = u.grid().size();
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) {
      const double g = G(r, c);
      if (g == 0.0) continue;
      auto dst = out.component(r);
      auto src = u.component(c);
      for (std::size_t i = 0; i < n; ++i) dst[i] += g * src[i];
    }
  out.set_real_state(u.real_state());
  return out;
}

// Uniformly spaced states (t0 + k dt, u_k).
class History {
public:
  History() = default;
  History(GridSpec grid, Representation rep, double t0, double dt)
      : grid_(std::move(grid)), rep_(rep), t0_(t0), dt_(dt) {
    if (!(dt > 0.0)) throw UsageError("History: dt must be positive");
  }

  const GridSpec& grid() const { return grid_; }
  Representation representation() const { return rep_; }
  double dt() const { return dt_; }
  double start() const { return t0_; }
  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }
  double time(std::size_t k) const { return t0_ + dt_ * static_cast<double>(k); }
  double latest_time() const { return time(states_.size() - 1); }
  const Field6& operator[](std::size_t k) const { return states_[k]; }
  const Field6& back() const { return states_.back(); }

  // Appends the state at time t, which must be the next grid time.
  void push(double t, Field6 u) {
    u.require(rep_, "History::push");
    const double expect = time(states_.size());
    if (std::abs(t - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
      std::ostringstream os;
      os << "History::push: time " << t << " off grid (expected " << expect << ")";
      throw UsageError(os.str());
    }
    states_.push_back(std::move(u));
  }

  void truncate(std::size_t count) { states_.resize(std::min(count, states_.size())); }

private:
  GridSpec grid_;
  Representation rep_ = Representation::spectral;
  double t0_ = 0.0;
  double dt_ = 1.0;
  std::vector<Field6> states_;
};

namespace detail {

// Trapezoid sum_k w_k K(t - t_k) u_k dt over history entries [0, last].
template <typename KernelAt>
Field6 trapezoid(const History& h, std::size_t last, double t, KernelAt&& kernel_at) {
  Field6 acc(h.grid(), h.representation());
  if (last == 0) return acc;
  for (std::size_t k = 0; k <= last; ++k) {
    const double w = (k == 0 || k == last) ? 0.5 : 1.0;
    const Mat6 G = kernel_at(t - h.time(k));
    acc += apply_matrix(w * h.dt() * G, h[k]);
  }
  return acc;
}

inline std::size_t history_index(const History& h, double t) {
  const double x = (t - h.start()) / h.dt();
  const double r = std::round(x);
  if (r < 0 || r >= static_cast<double>(h.size()) || std::abs(x - r) > 1e-9) {
    std::ostringstream os;
    os << "history: time " << t << " not covered";
    throw UsageError(os.str());
  }
  return static_cast<std::size_t>(r);
}

}  // namespace detail

// Trapezoid approximation of int_{t0}^t G(t-s) u(s) ds using entries up to t.
// An empty history or a single entry gives zero.
inline Field6 convolve_history(const History& h, const KernelSpec& kernel, double t) {
  if (h.empty()) return Field6(h.grid(), h.representation());
  const std::size_t last = detail::history_index(h, t);
  if (kernel.is_zero()) return Field6(h.grid(), h.representation());
  return detail::trapezoid(h, last, t, [&](double s) { return kernel.at(s); });
}

inline Field6 convolve_history(const History& h, const KernelSpec& kernel) {
  return h.empty() ? Field6(h.grid(), h.representation())
                   : convolve_history(h, kernel, h.latest_time());
}

// d/dt (G*u)(t) = G(0) u(t) + int G'(t-s) u(s) ds.
inline Field6 convolution_derivative(const History& h, const KernelSpec& kernel, double t) {
  if (!kernel.has_derivative())
    throw UnsupportedError("convolution_derivative: kernel has no analytic derivative");
  if (h.empty()) return Field6(h.grid(), h.representation());
  const std::size_t last = detail::history_index(h, t);
  if (kernel.is_zero()) return Field6(h.grid(), h.representation());
  Field6 out = apply_matrix(kernel.at(0.0), h[last]);
  out += detail::trapezoid(h, last, t, [&](double s) { return kernel.derivative(s); });
  return out;
}

// kappa(T0) = (T0 g^2 / 2) e^{2(1 + 2 Ct^2 + C^2) T0}.
inline double contraction_factor(double T0, double g_l1, double lipschitz_noise,
                                 double burkholder = 0.0) {
  const double e = 2.0 * (1.0 + 2.0 * burkholder * burkholder + lipschitz_noise * lipschitz_noise);
  return 0.5 * T0 * g_l1 * g_l1 * std::exp(e * T0);
}

// Largest T / 2^m with kappa <= 1/2; T when there is no memory.
inline double contraction_step_length(double g_l1, double lipschitz_noise, double T,
                                      double burkholder = 0.0) {
  if (g_l1 < 0.0 || lipschitz_noise < 0.0 || burkholder < 0.0 || !(T > 0.0))
    throw UsageError("contraction_step_length: constants must be >= 0 and T > 0");
  if (g_l1 == 0.0) return T;
  double T0 = T;
  for (int m = 0; m < 1100; ++m, T0 *= 0.5)
    if (contraction_factor(T0, g_l1, lipschitz_noise, burkholder) <= 0.5) return T0;
  return T0;
}

using Trajectory = std::vector<Field6>;
using WindowSolver = std::function<Trajectory(const Trajectory&)>;

struct PicardResult {
  Trajectory trajectory;
  // Number of updates that moved the iterate by more than tol.
  int iterations = 0;
  std::vector<double> distances;  // sup-in-time L^2 distance of successive iterates

  std::vector<double> ratios() const {
    std::vector<double> r;
    for (std::size_t i = 1; i < distances.size(); ++i)
      if (distances[i - 1] > 0.0) r.push_back(distances[i] / distances[i - 1]);
    return r;
  }
};

inline double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw UsageError("sup_distance: trajectory length mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, l2_norm(a[k] - b[k]));
  return d;
}

// Iterates v -> K v on one window until successive iterates are within tol.
inline PicardResult picard_solve(double t_a, double t_b, Trajectory initial_guess,
                                 const WindowSolver& step, double tol, int max_iter) {
  if (!(t_b > t_a)) throw UsageError("picard_solve: empty window");
  if (!(tol > 0.0) || max_iter < 1) throw UsageError("picard_solve: need tol > 0, max_iter >= 1");
  PicardResult r;
  Trajectory v = std::move(initial_guess);
  for (int it = 0; it < max_iter; ++it) {
    Trajectory next = step(v);
    const double d = sup_distance(next, v);
    r.distances.push_back(d);
    v = std::move(next);
    if (d <= tol) {
      r.trajectory = std::move(v);
      return r;
    }
    ++r.iterations;
  }
  std::ostringstream os;
  os << "picard_solve: no contraction on [" << t_a << ", " << t_b << "] after " << max_iter
     << " iterations; last distances";
  const std::size_t from = r.distances.size() > 3 ? r.distances.size() - 3 : 0;
  for (std::size_t i = from; i < r.distances.size(); ++i) os << ' ' << r.distances[i];
  throw NumericalError(os.str());
}

}  // namespace mks
