#pragma once

// Spectral curl/div/grad, the Maxwell operator M(u1,u2) = (curl u2, -curl u1),
// the Hodge Laplacian, the Helmholtz projection and the exact group e^{tM}.
// All operators act on spectral data and are diagonal in the mode index.

#include <array>
#include <cmath>

#include "mks/spectral_grid.hpp"

namespace mks {

using Vec3 = std::array<double, 3>;

struct ModeInfo {
  std::size_t index;
  Vec3 k;
  double k2;
  bool nyquist;  // any coordinate sits on the Nyquist index
};

template <typename Fn>
void for_each_mode(const GridSpec& g, Fn&& fn) {
  const int n = g.points();
  for (int a = 0; a < n; ++a) {
    const double k1 = g.wavenumber(a);
    for (int b = 0; b < n; ++b) {
      const double k2 = g.wavenumber(b);
      for (int c = 0; c < n; ++c) {
        const double k3 = g.wavenumber(c);
        fn(ModeInfo{g.index(a, b, c), {k1, k2, k3}, k1 * k1 + k2 * k2 + k3 * k3,
                    g.is_nyquist(a) || g.is_nyquist(b) || g.is_nyquist(c)});
      }
    }
  }
}

namespace detail {

inline std::array<cplx, 3> cross(const Vec3& k, const std::array<cplx, 3>& v) {
  return {k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]};
}

template <int C>
std::array<cplx, 3> load3(const Field<C>& f, int offset, std::size_t i) {
  return {f.at(offset, i), f.at(offset + 1, i), f.at(offset + 2, i)};
}

template <int C>
void store3(Field<C>& f, int offset, std::size_t i, const std::array<cplx, 3>& v) {
  for (int c = 0; c < 3; ++c) f.at(offset + c, i) = v[static_cast<std::size_t>(c)];
}

// Derivative symbols vanish on the Nyquist planes of real-state fields so
// that derivatives of real fields stay real.
inline bool drop_mode(const ModeInfo& m, bool real_state) { return real_state && m.nyquist; }

constexpr cplx I{0.0, 1.0};

// (i k x v) applied to block at `src` and written with factor `sign` to `dst`.
template <int CI, int CO>
void curl_block(const Field<CI>& in, int src, Field<CO>& out, int dst, double sign) {
  const bool real = in.real_state();
  for_each_mode(in.grid(), [&](const ModeInfo& m) {
    if (drop_mode(m, real)) {
      store3(out, dst, m.index, {});
      return;
    }
    auto c = cross(m.k, load3(in, src, m.index));
    for (auto& x : c) x *= sign * I;
    store3(out, dst, m.index, c);
  });
}

}  // namespace detail

inline VectorField curl(const VectorField& u) {
  u.require(Representation::spectral, "curl");
  VectorField out(u.grid(), Representation::spectral);
  detail::curl_block(u, 0, out, 0, 1.0);
  out.set_real_state(u.real_state());
  return out;
}

inline ScalarField div(const VectorField& u) {
  u.require(Representation::spectral, "div");
  ScalarField out(u.grid(), Representation::spectral);
  const bool real = u.real_state();
  for_each_mode(u.grid(), [&](const ModeInfo& m) {
    if (detail::drop_mode(m, real)) return;
    const auto v = detail::load3(u, 0, m.index);
    out.at(0, m.index) = detail::I * (m.k[0] * v[0] + m.k[1] * v[1] + m.k[2] * v[2]);
  });
  out.set_real_state(real);
  return out;
}

inline VectorField grad(const ScalarField& phi) {
  phi.require(Representation::spectral, "grad");
  VectorField out(phi.grid(), Representation::spectral);
  const bool real = phi.real_state();
  for_each_mode(phi.grid(), [&](const ModeInfo& m) {
    if (detail::drop_mode(m, real)) return;
    const cplx p = phi.at(0, m.index);
    for (int c = 0; c < 3; ++c) out.at(c, m.index) = detail::I * m.k[static_cast<std::size_t>(c)] * p;
  });
  out.set_real_state(real);
  return out;
}

// M(u1, u2) = (curl u2, -curl u1).
inline Field6 maxwell_apply(const Field6& u) {
  u.require(Representation::spectral, "maxwell_apply");
  Field6 out(u.grid(), Representation::spectral);
  detail::curl_block(u, 3, out, 0, 1.0);
  detail::curl_block(u, 0, out, 3, -1.0);
  out.set_real_state(u.real_state());
  return out;
}

// Componentwise multiplier -|k|^2.
inline Field6 hodge_laplacian_apply(const Field6& u) {
  u.require(Representation::spectral, "hodge_laplacian_apply");
  Field6 out(u.grid(), Representation::spectral);
  for_each_mode(u.grid(), [&](const ModeInfo& m) {
    for (int c = 0; c < 6; ++c) out.at(c, m.index) = -m.k2 * u.at(c, m.index);
  });
  out.set_real_state(u.real_state());
  return out;
}

// Per block: v - k (k.v)/|k|^2 for k != 0; the k = 0 mode is kept.
inline Field6 helmholtz_project(const Field6& u) {
  u.require(Representation::spectral, "helmholtz_project");
  Field6 out = u;
  for_each_mode(u.grid(), [&](const ModeInfo& m) {
    if (m.k2 == 0.0) return;
    for (int off : {0, 3}) {
      auto v = detail::load3(u, off, m.index);
      const cplx kv = m.k[0] * v[0] + m.k[1] * v[1] + m.k[2] * v[2];
      for (std::size_t c = 0; c < 3; ++c) v[c] -= m.k[c] * kv / m.k2;
      detail::store3(out, off, m.index, v);
    }
  });
  return out;
}

// e^{tM} per mode: on the transverse part M^2 = -|k|^2, so the flow is
// cos(|k|t) + sin(|k|t)/|k| M; the longitudinal part and k = 0 are fixed.
inline Field6 maxwell_group(double t, const Field6& u) {
  u.require(Representation::spectral, "maxwell_group");
  Field6 out = u;
  if (t == 0.0) return out;
  const bool real = u.real_state();
  for_each_mode(u.grid(), [&](const ModeInfo& m) {
    if (m.k2 == 0.0 || detail::drop_mode(m, real)) return;
    const double kn = std::sqrt(m.k2);
    const double cs = std::cos(kn * t);
    const double sn = std::sin(kn * t) / kn;
    const auto v1 = detail::load3(u, 0, m.index);
    const auto v2 = detail::load3(u, 3, m.index);
    const auto c2 = detail::cross(m.k, v2);  // k x v2
    const auto c1 = detail::cross(m.k, v1);
    const cplx kv1 = m.k[0] * v1[0] + m.k[1] * v1[1] + m.k[2] * v1[2];
    const cplx kv2 = m.k[0] * v2[0] + m.k[1] * v2[1] + m.k[2] * v2[2];
    std::array<cplx, 3> w1, w2;
    for (std::size_t c = 0; c < 3; ++c) {
      const cplx l1 = m.k[c] * kv1 / m.k2;
      const cplx l2 = m.k[c] * kv2 / m.k2;
      w1[c] = l1 + cs * (v1[c] - l1) + sn * detail::I * c2[c];
      w2[c] = l2 + cs * (v2[c] - l2) - sn * detail::I * c1[c];
    }
    detail::store3(out, 0, m.index, w1);
    detail::store3(out, 3, m.index, w2);
  });
  return out;
}

}  // namespace mks
