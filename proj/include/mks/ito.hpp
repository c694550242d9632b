#pragma once

// Discrete Ito energy identity for X(t) = X0 + int Y ds + sum_i int Z_i dbeta_i:
// r(t_k) = ||X_k||^2 - ||X_0||^2 - sum_j dt (2 Re<X_j,Y_j> + sum_i ||Z_ij||^2)
//          - 2 sum_j Re<X_j, sum_i Z_ij dbeta_ij>.

#include <vector>

#include "mks/spectral_grid.hpp"

namespace mks {

class ItoEnergy {
public:
  ItoEnergy() = default;
  explicit ItoEnergy(const Field6& x0) : x0_sq_(sq(x0)) {}

  void add(const Field6& x, const Field6& y, const std::vector<Field6>& z,
           const std::vector<double>& dbeta, double dt) {
    if (z.size() != dbeta.size()) throw UsageError("ItoEnergy::add: noise/increment mismatch");
    double zz = 0.0;
    double xz = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      zz += sq(z[i]);
      xz += dbeta[i] * inner_product(x, z[i]).real();
    }
    det_ += dt * (2.0 * inner_product(x, y).real() + zz);
    sto_ += 2.0 * xz;
  }

  double residual(const Field6& x) const { return sq(x) - x0_sq_ - det_ - sto_; }

  double initial_energy() const { return x0_sq_; }
  double deterministic_part() const { return det_; }
  double stochastic_part() const { return sto_; }

private:
  static double sq(const Field6& f) {
    const double n = l2_norm(f);
    return n * n;
  }

  double x0_sq_ = 0.0;
  double det_ = 0.0;
  double sto_ = 0.0;
};

}  // namespace mks
