#pragma once

// Measurements built on top of the integrator: energy-identity residuals,
// Monte-Carlo statistics, a priori and Lambda bound reports, strong-order and
// Galerkin convergence studies.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "mks/integrator.hpp"

namespace mks {

struct McSummary {
  std::size_t samples = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double ci_half = 0.0;   // 1.96 sd / sqrt(samples)
};

inline McSummary mc_summary(std::span<const double> v) {
  McSummary s;
  s.samples = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss / static_cast<double>(v.size() - 1);
    s.ci_half = 1.96 * std::sqrt(s.variance / static_cast<double>(v.size()));
  }
  return s;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool exact = false;  // every error was zero
};

// Least squares of log y against log x.
inline SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("fit_loglog: need >= 2 matched points");
  SlopeFit f;
  if (std::ranges::all_of(y, [](double v) { return v == 0.0; })) {
    f.exact = true;
    return f;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw UsageError("fit_loglog: non-positive point");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

// r(t_k) for a trajectory X_0..X_K with drift Y_j and noise Z_j (j < K).
inline std::vector<double> energy_identity_residual(const Trajectory& X, const Trajectory& Y,
                                                    const std::vector<std::vector<Field6>>& Z,
                                                    const BrownianBundle& b) {
  if (X.empty()) return {};
  const std::size_t K = X.size() - 1;
  if (Y.size() < K || Z.size() < K || static_cast<std::size_t>(b.steps) != K)
    throw UsageError("energy_identity_residual: length mismatch");
  std::vector<double> r(K + 1);
  ItoEnergy e(X[0]);
  r[0] = e.residual(X[0]);
  std::vector<double> db(static_cast<std::size_t>(b.count));
  for (std::size_t j = 0; j < K; ++j) {
    for (int i = 0; i < b.count; ++i) db[static_cast<std::size_t>(i)] = b.increment(i, static_cast<int>(j));
    e.add(X[j], Y[j], Z[j], db, b.dt());
    r[j + 1] = e.residual(X[j + 1]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Monte-Carlo execution.

using BundleFactory = std::function<BrownianBundle(std::uint64_t seed)>;

inline BundleFactory default_bundles(const TruncatedModel& m) {
  const int n = m.spec().count();
  const double T = m.config().horizon;
  const int K = m.steps();
  return [=](std::uint64_t seed) { return sample_brownian(n, T, K, seed); };
}

// Runs fn(i) for i in [0, count) on `workers` threads; results land by index
// so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(w, count); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::vector<PathResult> run_paths(const TruncatedModel& m,
                                         const std::vector<std::uint64_t>& seeds, int workers,
                                         const BundleFactory& bundles = {}) {
  const BundleFactory make = bundles ? bundles : default_bundles(m);
  std::vector<PathResult> out(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    out[i] = run_path(m, make(seeds[i]));
    out[i].seed = seeds[i];
  });
  return out;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t base, int count) {
  std::vector<std::uint64_t> s(static_cast<std::size_t>(std::max(count, 0)));
  std::iota(s.begin(), s.end(), base);
  return s;
}

// ---------------------------------------------------------------------------
// Aggregates.

struct RunReport {
  std::vector<PathResult> paths;  // seed order
  McSummary sup_norm_sq;
  McSummary lq_integral;
  McSummary sup_lambda_sq;
  McSummary final_norm;
  McSummary final_residual;
  int blow_ups = 0;
  int tau_exits = 0;
};

template <typename Get>
McSummary summarize_field(const std::vector<PathResult>& paths, Get&& get) {
  std::vector<double> v;
  v.reserve(paths.size());
  for (const auto& p : paths)
    if (!p.blew_up) v.push_back(get(p));
  return mc_summary(v);
}

inline RunReport summarize(std::vector<PathResult> paths) {
  RunReport r;
  r.paths = std::move(paths);
  r.sup_norm_sq = summarize_field(r.paths, [](const PathResult& p) { return p.agg.sup_norm_sq; });
  r.lq_integral = summarize_field(r.paths, [](const PathResult& p) { return p.agg.lq_integral; });
  r.sup_lambda_sq = summarize_field(r.paths, [](const PathResult& p) { return p.agg.sup_lambda_sq; });
  r.final_norm = summarize_field(r.paths, [](const PathResult& p) { return p.agg.final_norm; });
  r.final_residual = summarize_field(r.paths, [](const PathResult& p) { return p.agg.final_residual; });
  for (const auto& p : r.paths) {
    r.blow_ups += p.blew_up ? 1 : 0;
    for (const auto& e : p.events) r.tau_exits += e.kind == PathEvent::Kind::tau_exit ? 1 : 0;
  }
  return r;
}

struct BoundReport {
  McSummary lhs;      // E sup ||y||^2 + E int ||y||_{q+2}^{q+2}
  double rhs = 0.0;   // E int ||J~||^2 + sum E int ||b~||^2 + ||u0||^2
  double constant = 1.0;
  double ratio = 0.0;  // lhs / (C rhs)
  bool violated = false;
};

inline BoundReport apriori_bound_report(const std::vector<PathResult>& paths, double C = 1.0) {
  if (paths.size() < 30) throw UsageError("apriori_bound_report: need at least 30 paths");
  BoundReport r;
  r.constant = C;
  std::vector<double> lhs;
  double rhs = 0.0;
  for (const auto& p : paths) {
    lhs.push_back(p.agg.sup_norm_sq + p.agg.lq_integral);
    rhs += p.agg.forcing_sq + p.agg.noise_sq + p.agg.u0_sq;
  }
  r.lhs = mc_summary(lhs);
  r.rhs = rhs / static_cast<double>(paths.size());
  r.ratio = r.rhs > 0.0 ? r.lhs.mean / (C * r.rhs) : (r.lhs.mean > 0.0 ? INFINITY : 0.0);
  r.violated = r.lhs.mean > C * r.rhs;
  return r;
}

struct LambdaReport {
  McSummary sup_lambda_sq;
  double lambda0 = 0.0;        // ||Lambda(0)||
  double initial_scale = 0.0;  // 1 + ||M u0|| + ||u0||_{2(q+1)}^{q+1} + ||u0||
  double initial_ratio = 0.0;
};

inline LambdaReport lambda_bound_report(const std::vector<PathResult>& paths, const TruncatedModel& m) {
  const double q = m.config().kerr.q;
  (void)make_kerr_exponent(q, true);
  if (paths.empty()) throw UsageError("lambda_bound_report: no paths");
  LambdaReport r;
  std::vector<double> v;
  for (const auto& p : paths) v.push_back(p.agg.sup_lambda_sq);
  r.sup_lambda_sq = mc_summary(v);
  r.lambda0 = paths.front().agg.lambda0;
  const Field6& u0 = m.spec().u0;
  const Field6 u0h = to_spectral(u0);
  r.initial_scale = 1.0 + l2_norm(maxwell_apply(u0h)) +
                    std::pow(lp_norm(u0, 2.0 * (q + 1.0)), q + 1.0) + l2_norm(u0);
  r.initial_ratio = r.lambda0 / r.initial_scale;
  return r;
}

// ---------------------------------------------------------------------------
// Convergence studies.

struct ConvergenceRow {
  double x = 0.0;  // dt or cutoff level
  McSummary error;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  SlopeFit fit;
};

namespace detail {

inline int dyadic_exponent(double ratio) {
  const double l = std::log2(ratio);
  const double r = std::round(l);
  if (std::abs(l - r) > 1e-9 || r < 0) throw UsageError("dt values must be dyadic multiples");
  return static_cast<int>(r);
}

}  // namespace detail

// E ||y_dt(T) - y_ref(T)||_2 against a reference at dt_min / 4 on bridge-refined
// paths shared by all step sizes.
inline ConvergenceTable strong_convergence_order(const NoiseSpec& spec, SchemeConfig cfg,
                                                 const KernelSpec& kernel,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 std::vector<double> dts, int workers = 1) {
  if (dts.size() < 3) throw UsageError("strong_convergence_order: need at least 3 step sizes");
  std::ranges::sort(dts, std::greater<>());
  const double dt_ref = dts.back() / 4.0;
  cfg.diagnostics = false;
  cfg.store_trajectory = false;
  std::vector<TruncatedModel> models;
  for (double dt : dts) {
    SchemeConfig c = cfg;
    c.dt = dt;
    models.emplace_back(spec, c, kernel);
  }
  SchemeConfig cr = cfg;
  cr.dt = dt_ref;
  const TruncatedModel ref(spec, cr, kernel);
  const int k0 = models.front().steps();
  const int levels = detail::dyadic_exponent(static_cast<double>(ref.steps()) / k0);

  std::vector<std::vector<double>> err(dts.size(), std::vector<double>(seeds.size()));
  parallel_for(seeds.size(), workers, [&](std::size_t s) {
    const BrownianBundle fine =
        refine(sample_brownian(spec.count(), cfg.horizon, k0, seeds[s]), levels);
    const PathResult r = run_path(ref, fine);
    for (std::size_t i = 0; i < dts.size(); ++i) {
      const PathResult p = run_path(models[i], fine);
      err[i][s] = (p.blew_up || r.blew_up) ? INFINITY : l2_norm(p.final_state - r.final_state);
    }
  });

  ConvergenceTable t;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    t.rows.push_back({dts[i], mc_summary(err[i])});
    xs.push_back(dts[i]);
    ys.push_back(t.rows.back().error.mean);
  }
  t.fit = fit_loglog(xs, ys);
  return t;
}

// E sup_t ||y_{n+1}(t) - y_n(t)||_2 over consecutive levels on shared paths.
inline ConvergenceTable galerkin_convergence(const NoiseSpec& spec, SchemeConfig cfg,
                                             const KernelSpec& kernel, std::vector<int> levels,
                                             const std::vector<std::uint64_t>& seeds,
                                             int workers = 1) {
  if (levels.size() < 2 || !std::ranges::is_sorted(levels) ||
      std::adjacent_find(levels.begin(), levels.end()) != levels.end())
    throw UsageError("galerkin_convergence: levels must be strictly increasing");
  if (levels.back() > nyquist_level(spec.grid))
    throw ConfigError("galerkin_convergence: level above the Nyquist level");
  cfg.diagnostics = false;
  cfg.store_trajectory = true;
  std::vector<TruncatedModel> models;
  for (int n : levels) {
    SchemeConfig c = cfg;
    c.cutoff = CutoffLevel{n};
    models.emplace_back(spec, c, kernel);
  }
  const BundleFactory make = default_bundles(models.front());
  std::vector<std::vector<double>> diff(levels.size() - 1, std::vector<double>(seeds.size()));
  parallel_for(seeds.size(), workers, [&](std::size_t s) {
    const BrownianBundle b = make(seeds[s]);
    std::vector<PathResult> runs;
    for (const auto& m : models) runs.push_back(run_path(m, b));
    for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
      double d = 0.0;
      const auto& a = runs[i].states;
      const auto& c = runs[i + 1].states;
      for (std::size_t k = 0; k < std::min(a.size(), c.size()); ++k)
        d = std::max(d, l2_norm(c[k] - a[k]));
      diff[i][s] = d;
    }
  });
  ConvergenceTable t;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i)
    t.rows.push_back({static_cast<double>(levels[i]), mc_summary(diff[i])});
  return t;
}

// max_t { ||u(t) - v(t)||^2 - ||u(0) - v(0)||^2 e^{c t} }.
inline double monotone_limit_check(const Trajectory& u, const Trajectory& v,
                                   const std::vector<double>& times, double c) {
  if (u.size() != v.size() || u.size() != times.size() || u.empty())
    throw UsageError("monotone_limit_check: trajectory length mismatch");
  const double d0 = std::pow(l2_norm(u[0] - v[0]), 2);
  double worst = -INFINITY;
  for (std::size_t k = 0; k < u.size(); ++k)
    worst = std::max(worst, std::pow(l2_norm(u[k] - v[k]), 2) - d0 * std::exp(c * times[k]));
  return worst;
}

}  // namespace mks
