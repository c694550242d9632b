#pragma once

// Time stepping of the truncated Galerkin system. The transformed equation
// (TSEE) is
//   dy = P_n[My - F(y) + A(t)y + J~(t)] dt + sum_i S_{n-1} b~_i(t) dbeta_i,
// and the untransformed one (MSEE) is
//   du = P_n[Mu - F(u) + J + G*u] dt + sum_i P_n(b_i + i B_i u) dbeta_i.
// States are spectral and stay in the range of the cube cutoff P_n.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mks/ito.hpp"
#include "mks/kerr.hpp"
#include "mks/memory_kernel.hpp"
#include "mks/multipliers.hpp"
#include "mks/noise.hpp"

namespace mks {

enum class Scheme { euler_maruyama, lie_splitting };
enum class Equation { TSEE, MSEE, WSEE_linear_noise };

inline const char* to_string(Scheme s) {
  return s == Scheme::euler_maruyama ? "euler_maruyama" : "lie_splitting";
}

inline const char* to_string(Equation e) {
  switch (e) {
    case Equation::TSEE: return "TSEE";
    case Equation::MSEE: return "MSEE";
    case Equation::WSEE_linear_noise: return "WSEE";
  }
  return "?";
}

enum class MemoryMode { direct, picard };

struct SchemeConfig {
  Scheme scheme = Scheme::euler_maruyama;
  double dt = 1.0 / 64;
  double horizon = 1.0;
  CutoffLevel cutoff{3};
  Equation equation = Equation::TSEE;
  KerrExponent kerr{2.0, false};
  bool kerr_enabled = true;
  double beta_truncation_m = 0.0;  // <= 0 selects 8 sqrt(T)
  int save_stride = 1;
  bool diagnostics = true;
  bool store_trajectory = false;
  double blowup_threshold = 1e8;

  // Memory coupling. TSEE with a kernel always runs windowed Picard.
  MemoryMode memory_mode = MemoryMode::direct;
  double lipschitz_noise = -1.0;  // < 0 selects max_j ||B_j||_inf
  double burkholder = 2.0;
  double picard_tol = 1e-10;
  int picard_max_iter = 60;

  int steps() const {
    const double x = horizon / dt;
    const double r = std::round(x);
    if (!(dt > 0.0) || !(horizon > 0.0) || r < 1 || std::abs(x - r) > 1e-9 * x) {
      std::ostringstream os;
      os << "dt=" << dt << " does not divide T=" << horizon;
      throw ConfigError(os.str());
    }
    return static_cast<int>(r);
  }

  double truncation_level() const {
    return beta_truncation_m > 0.0 ? beta_truncation_m : 8.0 * std::sqrt(horizon);
  }

  bool transformed() const { return equation == Equation::TSEE; }
};

inline void validate_scheme(const SchemeConfig& cfg, const GridSpec& g) {
  (void)cfg.steps();
  if (cfg.cutoff.n < 0) throw ConfigError("cutoff level must be >= 0");
  if (cfg.cutoff.scale() > g.nyquist() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "cutoff 2^" << cfg.cutoff.n << " exceeds the grid Nyquist wavenumber " << g.nyquist();
    throw ConfigError(os.str());
  }
  if (cfg.save_stride < 1) throw ConfigError("save stride must be >= 1");
  if (cfg.kerr_enabled && !(cfg.kerr.q > 0.0)) throw ConfigError("kerr exponent q must be > 0");
  if (!(cfg.blowup_threshold > 0.0)) throw ConfigError("blow-up threshold must be positive");
}

// Effective Brownian path beta(t ^ tau_m): frozen at the first grid time with
// some |beta_i| > m.
struct StoppedBundle {
  BrownianBundle bundle;
  std::optional<int> exit_step;
};

inline StoppedBundle stop_bundle(const BrownianBundle& b, double m) {
  StoppedBundle out{b, std::nullopt};
  for (int k = 0; k <= b.steps && !out.exit_step; ++k)
    for (int j = 0; j < b.count; ++j)
      if (std::abs(b.value(j, k)) > m) {
        out.exit_step = k;
        break;
      }
  if (out.exit_step)
    for (int j = 0; j < b.count; ++j)
      for (int k = *out.exit_step + 1; k <= b.steps; ++k)
        out.bundle.value(j, k) = b.value(j, *out.exit_step);
  return out;
}

// Immutable per-run data shared by all paths: the spec, multipliers and the
// spectral shapes used when the gauge is trivial.
class TruncatedModel {
public:
  TruncatedModel(NoiseSpec spec, SchemeConfig cfg, KernelSpec kernel = {},
                 const WindowFunction& w = standard_window())
      : spec_(std::move(spec)), cfg_(std::move(cfg)), kernel_(std::move(kernel)) {
    const GridSpec& g = spec_.grid;
    validate_scheme(cfg_, g);
    if (spec_.count() != static_cast<int>(spec_.b.size()))
      throw ConfigError("noise spec: need one b_j per B_j");
    projector_ = cube_multiplier(g, cfg_.cutoff);
    noise_filter_ = smooth_multiplier(g, CutoffLevel{cfg_.cutoff.n - 1}, w);
    projector_identity_ = projector_.is_identity();
    trivial_ = spec_.gauge_trivial();
    J_hat_ = to_spectral(spec_.J.shape);
    for (const auto& bj : spec_.b) b_hat_.push_back(to_spectral(bj.shape));
    if (kernel_.is_zero()) kernel_ = KernelSpec::zero();
  }

  const NoiseSpec& spec() const { return spec_; }
  const SchemeConfig& config() const { return cfg_; }
  const KernelSpec& kernel() const { return kernel_; }
  const GridSpec& grid() const { return spec_.grid; }
  const Multiplier& projector() const { return projector_; }
  const Multiplier& noise_filter() const { return noise_filter_; }
  bool gauge_trivial() const { return trivial_; }
  bool has_memory() const { return !kernel_.is_zero(); }
  int steps() const { return cfg_.steps(); }
  double dt() const { return cfg_.dt; }

  // Phase e^{-i sum B_j beta_j} is needed (TSEE with non-trivial gauge).
  bool uses_phase() const { return cfg_.transformed() && !trivial_; }

  bool needs_physical(bool with_kerr) const {
    return (with_kerr && cfg_.kerr_enabled) || !trivial_;
  }

  double noise_lipschitz() const {
    if (cfg_.lipschitz_noise >= 0.0) return cfg_.lipschitz_noise;
    double c = 0.0;
    for (const auto& Bj : spec_.B) c = std::max(c, lp_norm(Bj, std::numeric_limits<double>::infinity()));
    return c;
  }

  // P_n[(M y) - F(y) + A(t)y + J~(t) + memory] for TSEE, and
  // P_n[(M u) - F(u) + J(t) + memory] for MSEE. `memory` is spectral G*v.
  Field6 drift(const Field6& y, const Field6* y_phys, double t, const std::vector<double>& beta,
               const ScalarField* phase, const Field6* memory, bool with_maxwell,
               bool with_kerr) const {
    Field6 acc = with_maxwell ? maxwell_apply(y) : Field6(grid(), Representation::spectral);
    Field6 pw(grid(), Representation::physical);
    bool have_pw = false;
    if (with_kerr && cfg_.kerr_enabled) {
      pw -= kerr_force(*y_phys, cfg_.kerr.q);
      have_pw = true;
    }
    if (uses_phase()) {
      pw += drift_A_apply_at(*y_phys, spec_, beta);
      Field6 cur = untransformed_current(t, spec_);
      if (memory) cur += to_physical(*memory);
      pw += multiply_phase(std::move(cur), *phase);
      have_pw = true;
    }
    if (have_pw) acc += to_spectral(std::move(pw));
    if (!uses_phase()) {
      // B = 0 makes J~ = J; MSEE always takes J directly.
      acc.axpy(spec_.J.profile.value(t), J_hat_);
      if (memory) acc += *memory;
    }
    acc.set_real_state(false);
    return projector_.apply(std::move(acc));
  }

  // Z_i = S_{n-1} b~_i (TSEE) or P_n(b_i + i B_i y) (MSEE), spectral.
  std::vector<Field6> noise_coefficients(const Field6* y_phys, double t,
                                         const ScalarField* phase) const {
    std::vector<Field6> z;
    z.reserve(spec_.b.size());
    for (std::size_t i = 0; i < spec_.b.size(); ++i) {
      const double g = spec_.b[i].profile.value(t);
      if (cfg_.transformed()) {
        Field6 s = uses_phase() ? to_spectral(multiply_phase(spec_.b[i].at(t), *phase))
                                : cplx(g) * b_hat_[i];
        s.set_real_state(false);
        z.push_back(noise_filter_.apply(std::move(s)));
      } else {
        Field6 s;
        if (trivial_) {
          s = cplx(g) * b_hat_[i];
        } else {
          Field6 p = spec_.b[i].at(t);
          const ScalarField& Bi = spec_.B[i];
          for (int c = 0; c < 6; ++c) {
            auto dst = p.component(c);
            auto src = y_phys->component(c);
            for (std::size_t x = 0; x < dst.size(); ++x)
              dst[x] += detail::I * Bi.at(0, x).real() * src[x];
          }
          s = to_spectral(std::move(p));
        }
        s.set_real_state(false);
        z.push_back(projector_.apply(std::move(s)));
      }
    }
    return z;
  }

  // Physical field of the P_n-filtered spectral state.
  Field6 physical(const Field6& y) const { return to_physical(y); }

  bool projector_is_identity() const { return projector_identity_; }

private:
  NoiseSpec spec_;
  SchemeConfig cfg_;
  KernelSpec kernel_;
  Multiplier projector_;
  Multiplier noise_filter_;
  bool projector_identity_ = false;
  bool trivial_ = true;
  Field6 J_hat_;
  std::vector<Field6> b_hat_;
};

struct PathState {
  double t = 0.0;
  int step = 0;
  Field6 y;                               // spectral, in the range of P_n
  History history;                        // own states, kept when memory is direct
  const History* memory_input = nullptr;  // external v for G*v (Picard windows)
  ItoEnergy energy;
};

// Quantities evaluated at the start of a step.
struct StepTerms {
  Field6 drift;                  // Lambda(t_k): the full drift
  std::vector<Field6> noise;     // Z_i(t_k)
  std::vector<double> increments;
  Field6 y_phys;                 // physical state when it was needed
  bool has_phys = false;
};

inline PathState initial_state(const TruncatedModel& m) {
  const Field6& u0 = m.spec().u0;
  u0.require(Representation::physical, "initial_state");
  for (const auto& v : u0.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw ConfigError("[M2] violated: u0 has non-finite values");
  PathState s;
  Field6 y = to_spectral(u0);
  y.set_real_state(false);
  s.y = m.noise_filter().apply(std::move(y));
  s.energy = ItoEnergy(s.y);
  if (m.has_memory()) {
    s.history = History(m.grid(), Representation::spectral, 0.0, m.dt());
    s.history.push(0.0, s.y);
  }
  return s;
}

namespace detail {

inline Field6 memory_term(const TruncatedModel& m, const PathState& s) {
  if (!m.has_memory()) return {};
  const History* h = s.memory_input ? s.memory_input : &s.history;
  if (m.config().transformed() && !s.memory_input)
    throw UsageError("TSEE memory needs an external u-trajectory (Picard mode)");
  return convolve_history(*h, m.kernel(), s.t);
}

inline void require_bundle(const TruncatedModel& m, const BrownianBundle& b) {
  if (b.steps != m.steps() || std::abs(b.horizon - m.config().horizon) > 1e-12 * b.horizon ||
      b.count != m.spec().count())
    throw UsageError("bundle does not match the scheme grid or the noise count");
}

inline ScalarField phase_at(const TruncatedModel& m, const std::vector<double>& beta) {
  return gauge_phase_at(m.spec(), beta).phase;
}

inline void advance(const TruncatedModel& m, PathState& s, Field6 y_new) {
  const double t_new = m.config().horizon * (s.step + 1) / m.steps();
  bool finite = true;
  for (const auto& v : y_new.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      finite = false;
      break;
    }
  const double norm = finite ? l2_norm(y_new) : std::numeric_limits<double>::infinity();
  if (!finite || norm > m.config().blowup_threshold) throw BlowUpError(t_new, norm);
  s.y = std::move(y_new);
  s.t = t_new;
  ++s.step;
  if (m.has_memory() && !s.memory_input) s.history.push(s.t, s.y);
}

}  // namespace detail

// Drift, noise coefficients and increments at the state's time.
inline StepTerms step_terms(const PathState& s, const TruncatedModel& m, const BrownianBundle& b) {
  detail::require_bundle(m, b);
  if (s.step >= m.steps()) throw UsageError("step beyond the horizon");
  StepTerms r;
  const int k = s.step;
  const std::vector<double> beta = b.values_at(k);
  std::optional<ScalarField> phase;
  if (m.uses_phase()) phase = detail::phase_at(m, beta);
  if (m.needs_physical(true)) {
    r.y_phys = m.physical(s.y);
    r.has_phys = true;
  }
  const Field6 mem = detail::memory_term(m, s);
  r.drift = m.drift(s.y, r.has_phys ? &r.y_phys : nullptr, s.t, beta, phase ? &*phase : nullptr,
                    m.has_memory() ? &mem : nullptr, true, true);
  r.noise = m.noise_coefficients(r.has_phys ? &r.y_phys : nullptr, s.t, phase ? &*phase : nullptr);
  r.increments.resize(static_cast<std::size_t>(b.count));
  for (int j = 0; j < b.count; ++j) r.increments[static_cast<std::size_t>(j)] = b.increment(j, k);
  return r;
}

// Lambda(t) = P_n[My - F(y) + A(t)y + J~(t)], the full drift.
inline Field6 lambda_process(const PathState& s, const TruncatedModel& m, const BrownianBundle& b) {
  detail::require_bundle(m, b);
  if (s.step == m.steps()) {
    // At the horizon there is no increment; evaluate the drift directly.
    const std::vector<double> beta = b.values_at(s.step);
    std::optional<ScalarField> phase;
    if (m.uses_phase()) phase = detail::phase_at(m, beta);
    std::optional<Field6> yp;
    if (m.needs_physical(true)) yp = m.physical(s.y);
    const Field6 mem = detail::memory_term(m, s);
    return m.drift(s.y, yp ? &*yp : nullptr, s.t, beta, phase ? &*phase : nullptr,
                   m.has_memory() ? &mem : nullptr, true, true);
  }
  return step_terms(s, m, b).drift;
}

// y + dt Lambda + sum_i Z_i dbeta_i in a fixed operation order.
inline Field6 euler_update(const Field6& y, const StepTerms& t, double dt) {
  Field6 out = y;
  out.axpy(dt, t.drift);
  for (std::size_t i = 0; i < t.noise.size(); ++i) out.axpy(t.increments[i], t.noise[i]);
  return out;
}

inline PathState step_euler_maruyama(PathState s, const TruncatedModel& m, const BrownianBundle& b,
                                     StepTerms* capture = nullptr) {
  StepTerms terms = step_terms(s, m, b);
  Field6 y_new = euler_update(s.y, terms, m.dt());
  if (capture) *capture = std::move(terms);
  detail::advance(m, s, std::move(y_new));
  return s;
}

// e^{dt M}, implicit Kerr resolvent, remaining drift, then the noise increment.
inline PathState step_lie_splitting(PathState s, const TruncatedModel& m, const BrownianBundle& b,
                                    StepTerms* capture = nullptr) {
  detail::require_bundle(m, b);
  if (s.step >= m.steps()) throw UsageError("step beyond the horizon");
  const int k = s.step;
  const double dt = m.dt();
  const std::vector<double> beta = b.values_at(k);
  std::optional<ScalarField> phase;
  if (m.uses_phase()) phase = detail::phase_at(m, beta);

  std::optional<Field6> y_phys;
  if (capture) {
    *capture = step_terms(s, m, b);
    if (capture->has_phys) y_phys = capture->y_phys;
  } else if (!m.gauge_trivial() && !m.config().transformed()) {
    y_phys = m.physical(s.y);
  }

  Field6 y = maxwell_group(dt, s.y);
  std::optional<Field6> y2_phys;
  if (m.config().kerr_enabled) {
    Field6 v = implicit_kerr_solve(to_physical(y), dt, m.config().kerr.q);
    y = m.projector().apply(to_spectral(v));
    if (m.projector_is_identity()) y2_phys = std::move(v);
  }
  if (m.uses_phase() && !y2_phys) y2_phys = m.physical(y);

  const Field6 mem = detail::memory_term(m, s);
  const Field6 rest = m.drift(y, y2_phys ? &*y2_phys : nullptr, s.t, beta,
                              phase ? &*phase : nullptr, m.has_memory() ? &mem : nullptr,
                              false, false);
  y.axpy(dt, rest);

  const std::vector<Field6> z = capture ? capture->noise
                                        : m.noise_coefficients(y_phys ? &*y_phys : nullptr, s.t,
                                                               phase ? &*phase : nullptr);
  for (std::size_t i = 0; i < z.size(); ++i) y.axpy(b.increment(static_cast<int>(i), k), z[i]);
  detail::advance(m, s, std::move(y));
  return s;
}

inline PathState step(PathState s, const TruncatedModel& m, const BrownianBundle& b,
                      StepTerms* capture = nullptr) {
  return m.config().scheme == Scheme::euler_maruyama
             ? step_euler_maruyama(std::move(s), m, b, capture)
             : step_lie_splitting(std::move(s), m, b, capture);
}

// u(t) in spectral form: e^{+i sum B_j beta_j} y for TSEE, the state otherwise.
inline Field6 untransformed_state(const PathState& s, const TruncatedModel& m,
                                  const BrownianBundle& b, const Field6* y_phys = nullptr) {
  if (!m.uses_phase()) return s.y;
  const GaugePhase p = gauge_phase_at(m.spec(), b.values_at(s.step));
  Field6 u = apply_gauge(y_phys ? *y_phys : m.physical(s.y), p, GaugeDirection::inverse);
  return to_spectral(std::move(u));
}

// ---------------------------------------------------------------------------
// Whole paths.

struct PathEvent {
  enum class Kind { tau_exit, blow_up, picard };
  Kind kind;
  double time;
  double value;
  std::string detail;
};

inline const char* to_string(PathEvent::Kind k) {
  switch (k) {
    case PathEvent::Kind::tau_exit: return "tau_exit";
    case PathEvent::Kind::blow_up: return "blow_up";
    case PathEvent::Kind::picard: return "picard";
  }
  return "?";
}

struct PathSeries {
  std::vector<int> step;
  std::vector<double> time;
  std::vector<double> norm2;            // ||y||_2
  std::vector<double> lq_pow;           // ||y||_{q+2}^{q+2}
  std::vector<double> lambda_norm;      // ||Lambda||_2
  std::vector<double> energy_residual;  // Ito identity residual
};

struct PathAggregates {
  double sup_norm_sq = 0.0;    // sup_t ||y||^2 on the save grid
  double lq_integral = 0.0;    // int ||y||_{q+2}^{q+2} dt
  double sup_lambda_sq = 0.0;  // sup_t ||Lambda||^2 on the save grid
  double lambda0 = 0.0;        // ||Lambda(0)||
  double forcing_sq = 0.0;     // int ||J~||^2 dt
  double noise_sq = 0.0;       // sum_i int ||b~_i||^2 dt
  double u0_sq = 0.0;          // ||u0||^2
  double final_norm = 0.0;     // ||y(T)||
  double final_residual = 0.0; // energy residual at T
};

struct PathResult {
  std::uint64_t seed = 0;
  PathSeries series;
  PathAggregates agg;
  std::vector<PathEvent> events;
  bool blew_up = false;
  std::vector<double> times;
  Trajectory states;         // spectral y at save points
  Trajectory untransformed;  // spectral u at save points
  Field6 final_state;
  std::vector<std::vector<double>> picard_distances;  // per window, successive iterates
};

namespace detail {

// Drives steps [s.step, k_end) and records diagnostics into `out`.
class PathRunner {
public:
  PathRunner(const TruncatedModel& m, const BrownianBundle& b) : m_(m), b_(b) {
    q_ = m.config().kerr.q;
  }

  PathState run(PathState s, int k_end, PathResult& out, Trajectory* u_traj) {
    const bool diag = m_.config().diagnostics;
    while (s.step < k_end) {
      StepTerms terms;
      const PathState before_step = shallow(s);
      const int k = s.step;
      if (diag) accumulate_forcing(s.t);
      PathState next = step(std::move(s), m_, b_, diag ? &terms : nullptr);
      if (diag) {
        const Field6 yp = terms.has_phys ? terms.y_phys : m_.physical(before_step.y);
        record(before_step, k, &terms.drift, &yp, out);
        next.energy.add(before_step.y, terms.drift, terms.noise, terms.increments, m_.dt());
        out.agg.lq_integral += m_.dt() * lp_norm_pow(yp, q_ + 2.0);
      } else {
        record(before_step, k, nullptr, nullptr, out);
      }
      s = std::move(next);
      if (u_traj) u_traj->push_back(untransformed_state(s, m_, b_));
    }
    return s;
  }

  // Records the state at the horizon (no step follows).
  void finish(const PathState& s, PathResult& out) {
    if (m_.config().diagnostics) {
      const Field6 lam = lambda_process(s, m_, b_);
      const Field6 yp = m_.physical(s.y);
      record(s, s.step, &lam, &yp, out);
    } else {
      record(s, s.step, nullptr, nullptr, out);
    }
    out.agg.final_norm = l2_norm(s.y);
    out.agg.final_residual = s.energy.residual(s.y);
    out.final_state = s.y;
  }

private:
  // Copy of the state without the history.
  static PathState shallow(const PathState& s) {
    PathState c;
    c.t = s.t;
    c.step = s.step;
    c.y = s.y;
    c.energy = s.energy;
    return c;
  }

  void accumulate_forcing(double t) {
    const double dt = m_.dt();
    const double j = l2_norm(untransformed_current(t, m_.spec()));
    acc_forcing_ += dt * j * j;
    for (const auto& bi : m_.spec().b) {
      const double n = l2_norm(bi.at(t));
      acc_noise_ += dt * n * n;
    }
  }

  void record(const PathState& s, int k, const Field6* lambda, const Field6* y_phys,
              PathResult& out) {
    out.agg.forcing_sq = acc_forcing_;
    out.agg.noise_sq = acc_noise_;
    const bool save = k % m_.config().save_stride == 0 || k == m_.steps();
    if (k == 0 && lambda) out.agg.lambda0 = l2_norm(*lambda);
    if (!save) return;
    const double n2 = l2_norm(s.y);
    out.series.step.push_back(k);
    out.series.time.push_back(s.t);
    out.series.norm2.push_back(n2);
    out.agg.sup_norm_sq = std::max(out.agg.sup_norm_sq, n2 * n2);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (lambda) {
      const double ln = l2_norm(*lambda);
      out.series.lambda_norm.push_back(ln);
      out.series.lq_pow.push_back(lp_norm_pow(*y_phys, q_ + 2.0));
      out.series.energy_residual.push_back(s.energy.residual(s.y));
      out.agg.sup_lambda_sq = std::max(out.agg.sup_lambda_sq, ln * ln);
    } else {
      out.series.lambda_norm.push_back(nan);
      out.series.lq_pow.push_back(nan);
      out.series.energy_residual.push_back(nan);
    }
    if (m_.config().store_trajectory) {
      out.times.push_back(s.t);
      out.states.push_back(s.y);
      out.untransformed.push_back(untransformed_state(s, m_, b_, y_phys));
    }
  }

  const TruncatedModel& m_;
  const BrownianBundle& b_;
  double q_ = 2.0;
  double acc_forcing_ = 0.0;
  double acc_noise_ = 0.0;
};

}  // namespace detail

// Picard window length: the contraction length rounded down to whole steps.
inline int picard_window_steps(const TruncatedModel& m) {
  const double T = m.config().horizon;
  const double T0 = contraction_step_length(m.kernel().l1_norm(T), m.noise_lipschitz(), T,
                                            m.config().burkholder);
  const int w = static_cast<int>(std::floor(T0 / m.dt() + 1e-9));
  if (w < 1) {
    std::ostringstream os;
    os << "contraction window " << T0 << " is shorter than dt=" << m.dt();
    throw ConfigError(os.str());
  }
  return w;
}

namespace detail {

inline void run_windowed(const TruncatedModel& m, const BrownianBundle& eff, PathResult& out,
                         int window_steps) {
  const int K = m.steps();
  const double dt = m.dt();
  PathState s = initial_state(m);
  History u_hist(m.grid(), Representation::spectral, 0.0, dt);
  u_hist.push(0.0, untransformed_state(s, m, eff));
  PathRunner final_runner(m, eff);
  while (s.step < K) {
    const int ka = s.step;
    const int kb = std::min(K, ka + window_steps);
    const double ta = s.t, tb = dt * kb;
    Trajectory guess(static_cast<std::size_t>(kb - ka + 1), u_hist.back());
    auto solver = [&](const Trajectory& v) {
      u_hist.truncate(static_cast<std::size_t>(ka) + 1);
      for (std::size_t i = 1; i < v.size(); ++i) u_hist.push(dt * (ka + static_cast<int>(i)), v[i]);
      PathState w = s;
      w.memory_input = &u_hist;
      Trajectory traj{u_hist[static_cast<std::size_t>(ka)]};
      PathResult sink;
      PathRunner runner(m, eff);
      runner.run(std::move(w), kb, sink, &traj);
      return traj;
    };
    PicardResult pr = picard_solve(ta, tb, std::move(guess), solver, m.config().picard_tol,
                                   m.config().picard_max_iter);
    out.picard_distances.push_back(pr.distances);
    out.events.push_back({PathEvent::Kind::picard, tb, static_cast<double>(pr.iterations),
                          "window [" + std::to_string(ta) + ", " + std::to_string(tb) + "]"});
    u_hist.truncate(static_cast<std::size_t>(ka) + 1);
    for (std::size_t i = 1; i < pr.trajectory.size(); ++i)
      u_hist.push(dt * (ka + static_cast<int>(i)), pr.trajectory[i]);
    // Replay the window against the fixed point to record diagnostics.
    s.memory_input = &u_hist;
    s = final_runner.run(std::move(s), kb, out, nullptr);
  }
  final_runner.finish(s, out);
}

}  // namespace detail

// One Monte-Carlo path. Blow-ups are caught, logged and end the path.
inline PathResult run_path(const TruncatedModel& m, const BrownianBundle& bundle) {
  BrownianBundle b = bundle;
  if (b.steps != m.steps()) {
    if (b.steps % m.steps() != 0) throw UsageError("run_path: bundle grid is not a refinement of dt");
    b = restrict_to(bundle, m.steps());
  }
  PathResult out;
  out.seed = bundle.seed;
  const StoppedBundle stopped = stop_bundle(b, m.config().truncation_level());
  if (stopped.exit_step) {
    std::ostringstream os;
    os << "|beta| exceeded m=" << m.config().truncation_level();
    out.events.push_back({PathEvent::Kind::tau_exit, stopped.bundle.time(*stopped.exit_step),
                          m.config().truncation_level(), os.str()});
  }
  const BrownianBundle& eff = stopped.bundle;
  out.agg.u0_sq = std::pow(l2_norm(m.spec().u0), 2);
  try {
    const bool windowed = m.has_memory() &&
                          (m.config().transformed() || m.config().memory_mode == MemoryMode::picard);
    if (windowed) {
      detail::run_windowed(m, eff, out, picard_window_steps(m));
    } else {
      detail::PathRunner runner(m, eff);
      PathState s = runner.run(initial_state(m), m.steps(), out, nullptr);
      runner.finish(s, out);
    }
  } catch (const BlowUpError& e) {
    out.blew_up = true;
    out.events.push_back({PathEvent::Kind::blow_up, e.time(), e.norm(), e.what()});
  }
  return out;
}

}  // namespace mks
