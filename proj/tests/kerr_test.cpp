#include <gtest/gtest.h>

#include "mks/kerr.hpp"
#include "mks/diagnostics.hpp"
#include "test_util.hpp"

using namespace mks;

namespace {
const GridSpec g = make_grid(4, 1.3);

Field6 pointwise(const GridSpec& grid, std::array<cplx, 6> p) {
  return sample_field<6>(grid, [&](double, double, double) { return p; });
}

double max_point_dist(const Field6& a, const Field6& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Plain bisection for s + dt s^{q+1} = r.
double bisect(double r, double dt, double q) {
  double lo = 0.0, hi = r;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid + dt * std::pow(mid, q + 1) > r ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace

TEST(KerrExponent, StrongModeRange) {
  EXPECT_NO_THROW(make_kerr_exponent(2.0, true));
  EXPECT_NO_THROW(make_kerr_exponent(1.5, true));
  EXPECT_THROW(make_kerr_exponent(3.0, true), ConfigError);
  EXPECT_THROW(make_kerr_exponent(1.0, true), ConfigError);
  EXPECT_NO_THROW(make_kerr_exponent(3.0, false));
  EXPECT_THROW(make_kerr_exponent(0.0, false), ConfigError);
  try {
    make_kerr_exponent(3.0, true);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("[M1]"), std::string::npos);
  }
}

TEST(KerrForce, ZeroAndPointValue) {
  const Field6 z(g, Representation::physical);
  EXPECT_EQ(l2_norm(kerr_force(z, 2.0)), 0.0);
  const Field6 u = pointwise(g, {2.0, 0, 0, 0, 0, 0});
  const Field6 f = kerr_force(u, 2.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(f.at(0, i), cplx(8.0));
    for (int c = 1; c < 6; ++c) EXPECT_EQ(f.at(c, i), cplx{});
  }
}

TEST(KerrForce, DualNormIdentity) {
  for (double q : {1.5, 2.0, 3.0}) {
    const Field6 u = test::random_physical(g, 1);
    const double lhs = lp_norm(kerr_force(u, q), (q + 2) / (q + 1));
    const double rhs = std::pow(lp_norm(u, q + 2), q + 1);
    EXPECT_NEAR(lhs, rhs, 1e-12 * rhs) << q;
  }
}

TEST(KerrJacobian, ZeroCases) {
  const Field6 u = test::random_physical(g, 2);
  const Field6 z(g, Representation::physical);
  EXPECT_EQ(l2_norm(kerr_jacobian_apply(u, z, 2.0)), 0.0);
  EXPECT_EQ(l2_norm(kerr_jacobian_apply(z, u, 1.5)), 0.0);
}

TEST(KerrJacobian, FiniteDifferenceOrder) {
  for (double q : {1.5, 2.0, 3.0}) {
    const Field6 u = test::random_physical(g, 3), v = test::random_physical(g, 4);
    const Field6 Fu = kerr_force(u, q), dF = kerr_jacobian_apply(u, v, q);
    std::vector<double> eps, err;
    for (double e : {1e-3, 1e-4, 1e-5}) {
      Field6 ue = u;
      ue.axpy(e, v);
      Field6 fd = kerr_force(ue, q) - Fu;
      fd *= 1.0 / e;
      eps.push_back(e);
      err.push_back(l2_norm(fd - dF));
    }
    EXPECT_GE(fit_loglog(eps, err).slope, 0.9) << q;
  }
}

TEST(KerrHessian, ZeroSymmetryAndDifference) {
  const Field6 u = test::random_physical(g, 5), v = test::random_physical(g, 6),
               w = test::random_physical(g, 7);
  const Field6 z(g, Representation::physical);
  EXPECT_EQ(l2_norm(kerr_hessian_apply(z, v, w, 2.0)), 0.0);
  for (double q : {1.5, 2.0, 3.0}) {
    const Field6 a = kerr_hessian_apply(u, v, w, q), b = kerr_hessian_apply(u, w, v, q);
    EXPECT_LE(l2_norm(a - b), 1e-12 * l2_norm(a));
    // central difference of F'(.)v along w: error O(h^2)
    std::vector<double> hs, err;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
      Field6 up = u, um = u;
      up.axpy(h, w);
      um.axpy(-h, w);
      Field6 cd = kerr_jacobian_apply(up, v, q) - kerr_jacobian_apply(um, v, q);
      cd *= 0.5 / h;
      hs.push_back(h);
      err.push_back(l2_norm(cd - a));
    }
    // q = 2: F' is quadratic, so the central difference is exact up to round-off
    if (q == 2.0)
      EXPECT_LE(*std::ranges::max_element(err), 1e-9 * l2_norm(a));
    else
      EXPECT_GE(fit_loglog(hs, err).slope, 1.8) << q;
  }
}

TEST(Monotonicity, TrivialCases) {
  const Field6 u = test::random_physical(g, 8);
  const Field6 z(g, Representation::physical);
  EXPECT_EQ(monotonicity_gap(u, u, 2.0), 0.0);
  for (double q : {1.5, 2.0}) {
    // u = 0: Re<F(v), -v> = -||v||^{q+2}
    const double lp = lp_norm_pow(u, q + 2);
    const double re = inner_product(kerr_force(u, q), u).real();
    EXPECT_NEAR(re, lp, 1e-12 * lp);
    EXPECT_LE(monotonicity_gap(z, u, q), 0.0);
  }
}

TEST(Monotonicity, RandomFieldPairs) {
  for (double q : {1.5, 2.0, 3.0})
    for (int i = 0; i < 100; ++i) {
      Field6 u = test::random_physical(g, 100 + 2 * i), v = test::random_physical(g, 101 + 2 * i);
      v *= std::exp(0.1 * (i % 7 - 3));
      const double scale = std::max(lp_norm_pow(u, q + 2), lp_norm_pow(v, q + 2));
      EXPECT_LE(monotonicity_gap(u, v, q), 1e-12 * scale);
    }
}

TEST(Monotonicity, MillionScalarPairs) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z;
  for (double q : {1.5, 2.0}) {
    double worst = -INFINITY;
    for (int i = 0; i < 1000000; ++i) {
      Point6 u{}, v{};
      u[0] = z(rng);
      v[0] = z(rng);
      worst = std::max(worst, kerr_point::monotonicity_gap(u, v, q));
    }
    EXPECT_LE(worst, 0.0) << q;
  }
}

TEST(ImplicitSolve, ZeroAndAnalytic) {
  const Field6 z(g, Representation::physical);
  EXPECT_EQ(l2_norm(implicit_kerr_solve(z, 0.5, 2.0)), 0.0);
  const Field6 w = pointwise(g, {0, 0, 2.0, 0, 0, 0});
  const Field6 v = implicit_kerr_solve(w, 1.0, 2.0);
  Field6 half = w;
  half *= 0.5;
  EXPECT_LE(max_point_dist(v, half), 1e-15);
  EXPECT_THROW(implicit_kerr_solve(w, 0.0, 2.0), UsageError);
}

TEST(ImplicitSolve, MatchesBisectionOracle) {
  for (double q : {1.5, 2.0, 3.0}) {
    Field6 w = test::random_physical(g, 9);
    w *= 3.0;
    const double dt = 0.3;
    const Field6 v = implicit_kerr_solve(w, dt, q);
    double res = 0.0, dev = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double r2 = 0.0, s2 = 0.0;
      for (int c = 0; c < 6; ++c) {
        r2 += std::norm(w.at(c, i));
        s2 += std::norm(v.at(c, i));
      }
      const double r = std::sqrt(r2), s = std::sqrt(s2);
      res = std::max(res, std::abs(s + dt * std::pow(s, q + 1) - r) / r);
      dev = std::max(dev, std::abs(s - bisect(r, dt, q)) / r);
      // v is parallel to w
      for (int c = 0; c < 6; ++c) EXPECT_LT(std::abs(v.at(c, i) * r - w.at(c, i) * s), 1e-12 * r * r);
    }
    EXPECT_LE(res, 1e-12);
    EXPECT_LE(dev, 1e-12);
  }
}

TEST(ImplicitSolve, ExtremeInputs) {
  for (double r : {1e-12, 1e-3, 1.0, 1e3, 1e6})
    for (double dt : {1e-6, 1e-2, 1.0, 10.0}) {
      const double s = solve_kerr_scalar(r, dt, 2.0);
      EXPECT_LE(std::abs(s + dt * s * s * s - r), 1e-12 * (1 + r)) << r << " " << dt;
    }
}
