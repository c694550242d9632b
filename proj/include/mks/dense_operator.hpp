#pragma once

// Brute-force matrices of M, Delta_H, P_H, P_n and S_n in the physical basis,
// assembled from an explicit DFT matrix and per-mode symbols written out
// independently of the fast operators. Tiny grids only.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>

#include "mks/multipliers.hpp"

namespace mks {

enum class OperatorKind { maxwell, hodge_laplacian, helmholtz, sharp_cutoff, smooth_cutoff };

struct DenseOperator {
  GridSpec grid;
  Eigen::Index dimension = 0;
  Eigen::MatrixXcd matrix;

  // Applies the matrix to a physical Field6 (flattened in storage order).
  Field6 apply(const Field6& u) const {
    u.require(Representation::physical, "DenseOperator::apply");
    if (!(u.grid() == grid)) throw UsageError("DenseOperator::apply: grid mismatch");
    Eigen::Map<const Eigen::VectorXcd> x(u.data().data(), dimension);
    Field6 out(grid, Representation::physical);
    Eigen::Map<Eigen::VectorXcd>(out.data().data(), dimension) = matrix * x;
    return out;
  }
};

inline constexpr std::size_t kMaxDenseDimension = 6 * 8 * 8 * 8;

inline DenseOperator dense_operator(OperatorKind kind, const GridSpec& g, int level = 0,
                                    const WindowFunction& w = standard_window()) {
  const int n = g.points();
  const std::size_t pts = g.size();
  if (6 * pts > kMaxDenseDimension)
    throw ConfigError("dense_operator: grid too large (6n^3 = " + std::to_string(6 * pts) + ")");
  const auto np = static_cast<Eigen::Index>(pts);
  const double two_pi = 2.0 * std::numbers::pi;

  // 1D unitary DFT matrix, rows = modes, cols = points.
  Eigen::MatrixXcd w1(n, n);
  for (int m = 0; m < n; ++m)
    for (int j = 0; j < n; ++j)
      w1(m, j) = std::polar(1.0 / std::sqrt(double(n)), -two_pi * m * j / n);
  Eigen::MatrixXcd w3(np, np);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int x = 0; x < n; ++x)
          for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z)
              w3((a * n + b) * n + c, (x * n + y) * n + z) = w1(a, x) * w1(b, y) * w1(c, z);

  auto freq = [&](int m) { return two_pi * (m < n / 2 ? m : m - n) / g.length(); };

  // Per-mode 6x6 symbols.
  std::vector<Eigen::Matrix<cplx, 6, 6>> sym(pts);
  const double lev = std::ldexp(1.0, level);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const double k1 = freq(a), k2 = freq(b), k3 = freq(c);
        const double kk = k1 * k1 + k2 * k2 + k3 * k3;
        Eigen::Matrix<cplx, 6, 6> s = Eigen::Matrix<cplx, 6, 6>::Zero();
        Eigen::Matrix3cd kx;
        kx << 0.0, -k3, k2, k3, 0.0, -k1, -k2, k1, 0.0;
        switch (kind) {
          case OperatorKind::maxwell:
            s.block<3, 3>(0, 3) = cplx(0, 1) * kx;
            s.block<3, 3>(3, 0) = -cplx(0, 1) * kx;
            break;
          case OperatorKind::hodge_laplacian:
            s = -kk * Eigen::Matrix<cplx, 6, 6>::Identity();
            break;
          case OperatorKind::helmholtz: {
            Eigen::Matrix3cd p = Eigen::Matrix3cd::Identity();
            if (kk > 0.0) {
              Eigen::Vector3d kv(k1, k2, k3);
              p -= (kv * kv.transpose() / kk).cast<cplx>();
            }
            s.block<3, 3>(0, 0) = p;
            s.block<3, 3>(3, 3) = p;
            break;
          }
          case OperatorKind::sharp_cutoff: {
            const double tol = lev * (1.0 + 1e-12);
            const bool keep = std::abs(k1) <= tol && std::abs(k2) <= tol && std::abs(k3) <= tol;
            if (keep) s.setIdentity();
            break;
          }
          case OperatorKind::smooth_cutoff:
            s = w.partial_sum(1.0 + kk, level) * Eigen::Matrix<cplx, 6, 6>::Identity();
            break;
        }
        sym[static_cast<std::size_t>((a * n + b) * n + c)] = s;
      }

  DenseOperator op;
  op.grid = g;
  op.dimension = 6 * np;
  op.matrix = Eigen::MatrixXcd::Zero(op.dimension, op.dimension);
  const Eigen::MatrixXcd w3h = w3.adjoint();
  for (int r = 0; r < 6; ++r)
    for (int q = 0; q < 6; ++q) {
      Eigen::VectorXcd d(np);
      bool any = false;
      for (Eigen::Index i = 0; i < np; ++i) {
        d(i) = sym[static_cast<std::size_t>(i)](r, q);
        any = any || d(i) != cplx{};
      }
      if (!any) continue;
      op.matrix.block(r * np, q * np, np, np) = w3h * d.asDiagonal() * w3;
    }
  return op;
}

}  // namespace mks
