#pragma once

// Invariant suite: operator identities, dense-oracle agreement, Kerr
// monotonicity, and (full level) Monte-Carlo and integrator checks. Each
// check reports its measured value against a threshold.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "mks/dense_operator.hpp"
#include "mks/diagnostics.hpp"

namespace mks {

struct VerifyEntry {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

enum class VerifyLevel { fast, full };

struct VerifyOptions {
  // Mutation fixture: flips the sign of the curl in the second block of M,
  // which destroys skew-adjointness.
  bool break_curl_sign = false;
};

using FieldOp = std::function<Field6(const Field6&)>;

inline FieldOp maxwell_under_test(const VerifyOptions& o) {
  if (!o.break_curl_sign) return [](const Field6& u) { return maxwell_apply(u); };
  return [](const Field6& u) {
    Field6 m = maxwell_apply(u);
    for (int c = 3; c < 6; ++c)
      for (auto& v : m.component(c)) v = -v;
    return m;
  };
}

// Complex random spectral field with unit-variance coefficients.
inline Field6 random_spectral_field(const GridSpec& g, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Field6 f(g, Representation::spectral);
  for (auto& v : f.data()) v = cplx(z(rng), z(rng));
  return f;
}

namespace verify_detail {

inline double rel(double num, double den) { return den > 0.0 ? num / den : num; }

struct MaxTracker {
  std::vector<VerifyEntry>* out;
  std::vector<std::pair<std::string, double>> worst;

  void add(const std::string& name, double v) {
    for (auto& [n, w] : worst)
      if (n == name) {
        w = std::max(w, v);
        return;
      }
    worst.emplace_back(name, v);
  }
  void flush(double threshold, const std::string& prefix) {
    for (const auto& [n, w] : worst)
      out->push_back({prefix + n, w, threshold, w <= threshold});
  }
};

}  // namespace verify_detail

// Worst relative residual over `samples` random field pairs for each operator
// identity. M is taken from `maxwell` so that a mutated operator can be fed in.
inline std::vector<VerifyEntry> operator_identity_checks(const GridSpec& g, int samples,
                                                         std::uint64_t seed, const FieldOp& maxwell,
                                                         double threshold = 1e-10,
                                                         const WindowFunction& w = standard_window()) {
  using verify_detail::rel;
  std::vector<VerifyEntry> out;
  verify_detail::MaxTracker t{&out, {}};
  std::mt19937_64 rng(seed);
  const int top = nyquist_level(g);
  std::vector<Multiplier> cube, ball, smooth;
  for (int n = 0; n <= top; ++n) {
    cube.push_back(cube_multiplier(g, CutoffLevel{n}));
    ball.push_back(radial_multiplier(g, CutoffLevel{n}));
    smooth.push_back(smooth_multiplier(g, CutoffLevel{n}, w));
  }
  for (int s = 0; s < samples; ++s) {
    const Field6 u = random_spectral_field(g, rng);
    const Field6 v = random_spectral_field(g, rng);
    const Field6 Mu = maxwell(u), Mv = maxwell(v);
    const double nu = l2_norm(u), nv = l2_norm(v);

    t.add("maxwell_skew_adjoint", rel(std::abs(inner_product(Mu, v) + inner_product(u, Mv)),
                                      l2_norm(Mu) * nv + nu * l2_norm(Mv)));
    const Field6 Pu = helmholtz_project(u);
    const Field6 MPu = maxwell(Pu);
    t.add("maxwell_commutes_helmholtz", rel(l2_norm(MPu - helmholtz_project(Mu)), l2_norm(Mu)));
    t.add("maxwell_kills_gradients", rel(l2_norm(maxwell(u - Pu)), l2_norm(Mu)));
    const Field6 lap = hodge_laplacian_apply(u);
    t.add("maxwell_squared_is_laplacian_on_div_free",
          rel(l2_norm(maxwell(Mu) - hodge_laplacian_apply(Pu)), l2_norm(lap)));
    for (const auto& blk : {block1(u), block2(u)}) {
      const VectorField cc = curl(curl(blk));
      const VectorField gd = grad(div(blk));
      const Field6 l6 = hodge_laplacian_apply(join_blocks(blk, blk));
      VectorField neg_lap = block1(l6);
      neg_lap *= -1.0;
      t.add("laplacian_is_curlcurl_minus_graddiv", rel(l2_norm(neg_lap - (cc - gd)), l2_norm(neg_lap)));
    }
    t.add("helmholtz_idempotent", rel(l2_norm(helmholtz_project(Pu) - Pu), nu));
    t.add("helmholtz_self_adjoint",
          rel(std::abs(inner_product(Pu, v) - inner_product(u, helmholtz_project(v))), nu * nv));

    for (int n = 0; n <= top; ++n) {
      const auto& P = cube[static_cast<std::size_t>(n)];
      const auto& R = ball[static_cast<std::size_t>(n)];
      const auto& S = smooth[static_cast<std::size_t>(n)];
      const Field6 Pu_ = P.apply(u), Ru = R.apply(u), Su = S.apply(u);
      t.add("cutoff_idempotent", rel(l2_norm(P.apply(Pu_) - Pu_) + l2_norm(R.apply(Ru) - Ru), nu));
      t.add("cutoff_self_adjoint",
            rel(std::abs(inner_product(Pu_, v) - inner_product(u, P.apply(v))) +
                    std::abs(inner_product(Su, v) - inner_product(u, S.apply(v))),
                nu * nv));
      t.add("cutoff_commutes_maxwell",
            rel(l2_norm(maxwell(Pu_) - P.apply(Mu)) + l2_norm(maxwell(Su) - S.apply(Mu)), l2_norm(Mu)));
      t.add("cutoff_commutes_helmholtz",
            rel(l2_norm(helmholtz_project(Su) - S.apply(Pu)) + l2_norm(helmholtz_project(Pu_) - P.apply(Pu)), nu));
      t.add("cutoffs_commute", rel(l2_norm(S.apply(Pu_) - P.apply(Su)), nu));
      t.add("sandwich_Sn_Pn_eq_Pn", rel(l2_norm(S.apply(Ru) - Ru), nu));
      if (n >= 1) {
        const Field6 S1u = smooth[static_cast<std::size_t>(n - 1)].apply(u);
        t.add("sandwich_Pn_Sn-1_eq_Sn-1", rel(l2_norm(R.apply(S1u) - S1u), nu));
      }
    }
  }
  t.flush(threshold, "");
  return out;
}

// Column-wise agreement of the fast operators with explicit matrices and of
// e^{tM} with the matrix exponential (4^3 grid).
inline std::vector<VerifyEntry> dense_oracle_checks(const GridSpec& g, const FieldOp& maxwell,
                                                    double op_tol = 1e-10, double exp_tol = 1e-8) {
  std::vector<VerifyEntry> out;
  const int level = nyquist_level(g) - 1;
  struct Case {
    const char* name;
    OperatorKind kind;
    FieldOp fast;
  };
  const WindowFunction w = standard_window();
  const std::vector<Case> cases = {
      {"dense_maxwell", OperatorKind::maxwell, maxwell},
      {"dense_hodge_laplacian", OperatorKind::hodge_laplacian,
       [](const Field6& u) { return hodge_laplacian_apply(u); }},
      {"dense_helmholtz", OperatorKind::helmholtz, [](const Field6& u) { return helmholtz_project(u); }},
      {"dense_sharp_cutoff", OperatorKind::sharp_cutoff,
       [&](const Field6& u) { return sharp_cutoff(u, CutoffLevel{level}); }},
      {"dense_smooth_cutoff", OperatorKind::smooth_cutoff,
       [&](const Field6& u) { return smooth_cutoff(u, CutoffLevel{level}, w); }},
  };
  const auto dim = static_cast<Eigen::Index>(6 * g.size());
  for (const auto& c : cases) {
    const DenseOperator d = dense_operator(c.kind, g, level, w);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      Field6 e(g, Representation::physical);
      e.data()[static_cast<std::size_t>(j)] = 1.0;
      const Field6 fast = to_physical(c.fast(to_spectral(e)));
      Eigen::Map<const Eigen::VectorXcd> col(fast.data().data(), dim);
      const double scale = std::max(1.0, d.matrix.col(j).norm());
      worst = std::max(worst, (col - d.matrix.col(j)).norm() / scale);
    }
    out.push_back({c.name, worst, op_tol, worst <= op_tol});
  }
  const DenseOperator M = dense_operator(OperatorKind::maxwell, g);
  for (double t : {0.1, 0.3, 1.0}) {
    const Eigen::MatrixXcd E = (t * M.matrix).exp();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      Field6 e(g, Representation::physical);
      e.data()[static_cast<std::size_t>(j)] = 1.0;
      const Field6 fast = to_physical(maxwell_group(t, to_spectral(e)));
      Eigen::Map<const Eigen::VectorXcd> col(fast.data().data(), dim);
      worst = std::max(worst, (col - E.col(j)).norm());
    }
    out.push_back({"dense_maxwell_group_t=" + csv_number(t), worst, exp_tol, worst <= exp_tol});
  }
  return out;
}

inline std::vector<VerifyEntry> kerr_checks(std::uint64_t seed, int pairs, int scalar_pairs) {
  std::vector<VerifyEntry> out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  for (double q : {1.5, 2.0, 3.0}) {
    double worst = -INFINITY;
    for (int i = 0; i < pairs; ++i) {
      Point6 u, v;
      const double su = std::exp(z(rng)), sv = std::exp(z(rng));
      for (auto& x : u) x = su * cplx(z(rng), z(rng));
      for (auto& x : v) x = sv * cplx(z(rng), z(rng));
      const double scale = std::pow(std::max(kerr_point::norm2(u), kerr_point::norm2(v)), 0.5 * (q + 2));
      worst = std::max(worst, kerr_point::monotonicity_gap(u, v, q) / scale);
    }
    for (int i = 0; i < scalar_pairs; ++i) {
      Point6 u{}, v{};
      u[0] = cplx(z(rng), 0.0);
      v[0] = cplx(z(rng), 0.0);
      const double scale = std::pow(std::max(std::norm(u[0]), std::norm(v[0])), 0.5 * (q + 2));
      if (scale > 0.0) worst = std::max(worst, kerr_point::monotonicity_gap(u, v, q) / scale);
    }
    out.push_back({"kerr_monotone_q=" + csv_number(q), worst, 1e-12, worst <= 1e-12});
    double res = 0.0;
    for (int i = 0; i < pairs; ++i) {
      const double r = std::exp(2.0 * z(rng));
      const double dt = std::exp(z(rng)) * 0.1;
      const double s = solve_kerr_scalar(r, dt, q);
      res = std::max(res, std::abs(s + dt * std::pow(s, q + 1) - r) / r);
    }
    out.push_back({"kerr_implicit_residual_q=" + csv_number(q), res, 1e-12, res <= 1e-12});

    // one-sided difference quotient of F against F'; error should be O(h)
    double order = INFINITY, sym = 0.0;
    for (int i = 0; i < 10; ++i) {
      Point6 u, v, w;
      for (auto& x : u) x = cplx(z(rng), z(rng));
      for (auto& x : v) x = cplx(z(rng), z(rng));
      for (auto& x : w) x = cplx(z(rng), z(rng));
      const Point6 fu = kerr_point::force(u, q), du = kerr_point::jacobian(u, v, q);
      std::vector<double> hs, errs;
      for (double h = 1e-2; h > 2e-5; h /= 4) {
        Point6 uh;
        for (std::size_t c = 0; c < 6; ++c) uh[c] = u[c] + h * v[c];
        const Point6 fh = kerr_point::force(uh, q);
        Point6 e;
        for (std::size_t c = 0; c < 6; ++c) e[c] = (fh[c] - fu[c]) / h - du[c];
        hs.push_back(h);
        errs.push_back(std::sqrt(kerr_point::norm2(e)));
      }
      order = std::min(order, fit_loglog(hs, errs).slope);
      const Point6 a = kerr_point::hessian(u, v, w, q), b = kerr_point::hessian(u, w, v, q);
      Point6 d;
      for (std::size_t c = 0; c < 6; ++c) d[c] = a[c] - b[c];
      sym = std::max(sym, std::sqrt(kerr_point::norm2(d) / std::max(kerr_point::norm2(a), 1e-300)));
    }
    out.push_back({"kerr_derivative_fd_order_q=" + csv_number(q), order, 0.9, order >= 0.9});
    out.push_back({"kerr_hessian_symmetry_q=" + csv_number(q), sym, 1e-12, sym <= 1e-12});
  }
  return out;
}

// Free Lie flow conserves ||y||_2; the Ito residual stays at round-off.
inline std::vector<VerifyEntry> free_flow_checks(const GridSpec& g, std::uint64_t seed) {
  std::vector<VerifyEntry> out;
  std::mt19937_64 rng(seed);
  Field6 u0 = to_physical(random_spectral_field(g, rng));
  NoiseSpec spec = make_noise_spec(g, {}, {}, {TimeProfile::constant(0.0), Field6(g, Representation::physical)}, u0);
  SchemeConfig cfg;
  cfg.scheme = Scheme::lie_splitting;
  cfg.kerr_enabled = false;
  cfg.dt = 1.0 / 16;
  cfg.horizon = 1.0;
  cfg.cutoff = CutoffLevel{nyquist_level(g)};
  const TruncatedModel m(spec, cfg);
  const PathResult r = run_path(m, sample_brownian(0, 1.0, m.steps(), seed));
  double drift = 0.0, resid = 0.0;
  for (std::size_t k = 0; k < r.series.norm2.size(); ++k) {
    drift = std::max(drift, std::abs(r.series.norm2[k] - r.series.norm2[0]) / r.series.norm2[0]);
    resid = std::max(resid, std::abs(r.series.energy_residual[k]) / std::pow(r.series.norm2[0], 2));
  }
  out.push_back({"lie_free_flow_norm_conservation", drift, 1e-12, drift <= 1e-12});
  out.push_back({"lie_free_flow_energy_residual", resid, 1e-12, resid <= 1e-12});
  return out;
}

// Sample mean of ||Z beta(T)||^2 / (||Z||^2 T) over independent paths.
inline VerifyEntry ito_isometry_check(std::uint64_t seed, int samples) {
  double s = 0.0;
  for (int i = 0; i < samples; ++i) {
    const BrownianBundle b = sample_brownian(1, 1.0, 16, seed + static_cast<std::uint64_t>(i));
    s += b.value(0, 16) * b.value(0, 16);
  }
  const double ratio = s / samples;
  return {"ito_isometry_ratio", ratio, 0.06, std::abs(ratio - 1.0) <= 0.06};
}

inline std::vector<VerifyEntry> verify_suite(VerifyLevel level, const VerifyOptions& opt = {}) {
  std::vector<VerifyEntry> out;
  auto append = [&](std::vector<VerifyEntry> v, const std::string& prefix) {
    for (auto& e : v) {
      e.name = prefix + e.name;
      out.push_back(std::move(e));
    }
  };
  const FieldOp M = maxwell_under_test(opt);
  const GridSpec g4 = make_grid(4, 2.0 * std::numbers::pi);
  append(operator_identity_checks(g4, 10, 1, M), "grid4/");
  append(dense_oracle_checks(g4, M), "grid4/");
  append(kerr_checks(2, 100, level == VerifyLevel::full ? 1000000 : 10000), "");
  {
    const auto s = cutoff_sandwich_check(CutoffLevel{2}, g4);
    out.push_back({"grid4/sandwich_report", s.max_violation(), 1e-12, s.max_violation() <= 1e-12});
  }
  if (level == VerifyLevel::full) {
    const GridSpec g16 = make_grid(16, 2.0 * std::numbers::pi);
    append(operator_identity_checks(g16, 20, 3, M), "grid16/");
    append(free_flow_checks(g16, 4), "grid16/");
    out.push_back(ito_isometry_check(5, 10000));
  }
  return out;
}

}  // namespace mks
