// Library use without a config file: one TSEE path with a single linear
// multiplicative noise, printed as t, ||u(t)||_2.

#include <iostream>

#include "mks/diagnostics.hpp"

int main() {
  using namespace mks;
  const GridSpec g = make_grid(16, 2.0 * std::numbers::pi);
  auto B1 = sample_field<1>(g, [](double x, double, double) { return std::array<cplx, 1>{0.3 * std::sin(x)}; });
  Field6 zero(g, Representation::physical);
  Field6 u0 = sample_field<6>(g, [](double, double, double z) {
    return std::array<cplx, 6>{0, std::cos(z), 0, 0, 0, 0};
  });
  NoiseSpec spec = make_noise_spec(g, {B1}, {{TimeProfile::constant(0.0), zero}},
                                   {TimeProfile::constant(0.0), zero}, u0);

  SchemeConfig cfg;
  cfg.scheme = Scheme::lie_splitting;
  cfg.dt = 1.0 / 64;
  cfg.horizon = 1.0;
  cfg.cutoff = CutoffLevel{3};
  cfg.kerr = make_kerr_exponent(2.0, true);
  cfg.save_stride = 8;
  cfg.store_trajectory = true;

  const TruncatedModel model(spec, cfg);
  const PathResult p = run_path(model, sample_brownian(1, cfg.horizon, model.steps(), 42));
  for (std::size_t k = 0; k < p.times.size(); ++k)
    std::cout << p.times[k] << ' ' << l2_norm(p.untransformed[k]) << '\n';
}
