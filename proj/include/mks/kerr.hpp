#pragma once

// The power nonlinearity F(u) = |u|^q u on C^6-valued fields, its real
// derivatives, the monotonicity gap and the pointwise resolvent
// v + dt |v|^q v = w.

#include <array>
#include <cmath>
#include <sstream>

#include "mks/spectral_grid.hpp"

namespace mks {

struct KerrExponent {
  double q = 2.0;
  bool strong_mode = false;
};

inline KerrExponent make_kerr_exponent(double q, bool strong_mode) {
  if (!(q > 0.0) || !std::isfinite(q)) throw ConfigError("kerr exponent q must be > 0");
  if (strong_mode && !(q > 1.0 && q <= 2.0)) {
    std::ostringstream os;
    os << "[M1] violated: q=" << q << " in strong mode (need 1 < q <= 2)";
    throw ConfigError(os.str());
  }
  return {q, strong_mode};
}

// Monotonicity constant c_q in Re<F(v)-F(u), u-v> <= -c_q ||u-v||_{q+2}^{q+2}.
inline double monotonicity_constant(double q) { return std::pow(2.0, -q); }

using Point6 = std::array<cplx, 6>;

namespace kerr_point {

inline double norm2(const Point6& u) {
  double s = 0.0;
  for (const auto& x : u) s += std::norm(x);
  return s;
}

// Re <u, v>_{C^6}
inline double re_dot(const Point6& u, const Point6& v) {
  double s = 0.0;
  for (std::size_t c = 0; c < 6; ++c) s += (u[c] * std::conj(v[c])).real();
  return s;
}

inline Point6 force(const Point6& u, double q) {
  const double n2 = norm2(u);
  const double f = n2 > 0.0 ? std::pow(n2, 0.5 * q) : 0.0;
  Point6 r;
  for (std::size_t c = 0; c < 6; ++c) r[c] = f * u[c];
  return r;
}

inline Point6 jacobian(const Point6& u, const Point6& v, double q) {
  const double n2 = norm2(u);
  Point6 r{};
  if (n2 == 0.0) return r;
  const double a = q * std::pow(n2, 0.5 * q - 1.0) * re_dot(u, v);
  const double b = std::pow(n2, 0.5 * q);
  for (std::size_t c = 0; c < 6; ++c) r[c] = a * u[c] + b * v[c];
  return r;
}

inline Point6 hessian(const Point6& u, const Point6& v, const Point6& w, double q) {
  const double n2 = norm2(u);
  Point6 r{};
  if (n2 == 0.0) return r;
  const double pre = q * std::pow(n2, 0.5 * q - 1.0);
  const double uw = re_dot(u, w), uv = re_dot(u, v), wv = re_dot(w, v);
  const double cu = (q - 2.0) / n2 * uw * uv + wv;
  for (std::size_t c = 0; c < 6; ++c) r[c] = pre * (cu * u[c] + uw * v[c] + uv * w[c]);
  return r;
}

// Re<F(v)-F(u), u-v> + c_q |u-v|^{q+2} at a single point.
inline double monotonicity_gap(const Point6& u, const Point6& v, double q) {
  const Point6 fu = force(u, q), fv = force(v, q);
  Point6 dF, d;
  for (std::size_t c = 0; c < 6; ++c) {
    dF[c] = fv[c] - fu[c];
    d[c] = u[c] - v[c];
  }
  return re_dot(dF, d) + monotonicity_constant(q) * std::pow(norm2(d), 0.5 * (q + 2.0));
}

}  // namespace kerr_point

namespace detail {

inline Point6 load6(const Field6& f, std::size_t i) {
  Point6 p;
  for (int c = 0; c < 6; ++c) p[static_cast<std::size_t>(c)] = f.at(c, i);
  return p;
}

inline void store6(Field6& f, std::size_t i, const Point6& p) {
  for (int c = 0; c < 6; ++c) f.at(c, i) = p[static_cast<std::size_t>(c)];
}

}  // namespace detail

inline Field6 kerr_force(const Field6& u, double q) {
  u.require(Representation::physical, "kerr_force");
  Field6 out(u.grid(), Representation::physical);
  for (std::size_t i = 0; i < u.grid().size(); ++i)
    detail::store6(out, i, kerr_point::force(detail::load6(u, i), q));
  out.set_real_state(u.real_state());
  return out;
}

// F'(u)v = q|u|^{q-2} Re<u,v> u + |u|^q v, extended by 0 where u = 0.
inline Field6 kerr_jacobian_apply(const Field6& u, const Field6& v, double q) {
  u.check_compatible(v, "kerr_jacobian_apply");
  u.require(Representation::physical, "kerr_jacobian_apply");
  Field6 out(u.grid(), Representation::physical);
  for (std::size_t i = 0; i < u.grid().size(); ++i)
    detail::store6(out, i, kerr_point::jacobian(detail::load6(u, i), detail::load6(v, i), q));
  return out;
}

inline Field6 kerr_hessian_apply(const Field6& u, const Field6& v, const Field6& w, double q) {
  if (!(q > 1.0)) throw UnsupportedError("kerr_hessian_apply: requires q > 1");
  u.check_compatible(v, "kerr_hessian_apply");
  u.check_compatible(w, "kerr_hessian_apply");
  u.require(Representation::physical, "kerr_hessian_apply");
  Field6 out(u.grid(), Representation::physical);
  for (std::size_t i = 0; i < u.grid().size(); ++i)
    detail::store6(out, i,
                   kerr_point::hessian(detail::load6(u, i), detail::load6(v, i),
                                       detail::load6(w, i), q));
  return out;
}

// Re<F(v)-F(u), u-v>_{L^2} + 2^{-q} ||u-v||_{q+2}^{q+2}; non-positive.
inline double monotonicity_gap(const Field6& u, const Field6& v, double q) {
  u.check_compatible(v, "monotonicity_gap");
  u.require(Representation::physical, "monotonicity_gap");
  const Field6 d = u - v;
  const Field6 dF = kerr_force(v, q) - kerr_force(u, q);
  return inner_product(dF, d).real() + monotonicity_constant(q) * lp_norm_pow(d, q + 2.0);
}

// Root s >= 0 of s + dt s^{q+1} = r. Newton from s = r (right of the root,
// the map is convex) with bisection on [0, r] as fallback.
inline double solve_kerr_scalar(double r, double dt, double q) {
  if (r == 0.0) return 0.0;
  auto f = [&](double s) { return s + dt * std::pow(s, q + 1.0) - r; };
  double lo = 0.0, hi = r, s = r;
  const double tol = 1e-15 * (1.0 + r);
  for (int it = 0; it < 100; ++it) {
    const double fs = f(s);
    if (std::abs(fs) <= tol) return s;
    if (fs > 0.0) hi = s; else lo = s;
    const double d = 1.0 + dt * (q + 1.0) * std::pow(s, q);
    double next = s - fs / d;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == s) return s;
    s = next;
  }
  if (std::abs(f(s)) <= 1e-12 * (1.0 + r)) return s;
  std::ostringstream os;
  os << "implicit_kerr_solve: no convergence for |w|=" << r << " dt=" << dt << " q=" << q;
  throw NumericalError(os.str());
}

// Pointwise v with v + dt |v|^q v = w.
inline Field6 implicit_kerr_solve(const Field6& w, double dt, double q) {
  w.require(Representation::physical, "implicit_kerr_solve");
  if (!(dt > 0.0)) throw UsageError("implicit_kerr_solve: dt must be positive");
  Field6 out(w.grid(), Representation::physical);
  for (std::size_t i = 0; i < w.grid().size(); ++i) {
    Point6 p = detail::load6(w, i);
    const double r = std::sqrt(kerr_point::norm2(p));
    if (r == 0.0) continue;
    const double scale = solve_kerr_scalar(r, dt, q) / r;
    for (auto& x : p) x *= scale;
    detail::store6(out, i, p);
  }
  out.set_real_state(w.real_state());
  return out;
}

}  // namespace mks
