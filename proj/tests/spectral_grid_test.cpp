#include <gtest/gtest.h>

#include <sstream>

#include "mks/spectral_grid.hpp"
#include "test_util.hpp"

using namespace mks;

TEST(MakeGrid, FourPointsOnTwoPi) {
  const GridSpec g = make_grid(4, 2.0 * std::numbers::pi);
  const std::vector<double> expect = {0.0, 1.0, -2.0, -1.0};
  ASSERT_EQ(g.wavenumbers().size(), 4u);
  for (int m = 0; m < 4; ++m) EXPECT_NEAR(g.wavenumber(m), expect[static_cast<std::size_t>(m)], 1e-15);
}

TEST(MakeGrid, NyquistOnUnitBox) {
  const GridSpec g = make_grid(8, 1.0);
  double kmax = 0.0;
  for (double k : g.wavenumbers()) kmax = std::max(kmax, std::abs(k));
  EXPECT_NEAR(kmax, 2.0 * std::numbers::pi * 4, 1e-12);
  EXPECT_NEAR(g.nyquist(), 2.0 * std::numbers::pi * 4, 1e-12);
}

TEST(MakeGrid, RejectsBadSizes) {
  EXPECT_THROW(make_grid(6, 2.0 * std::numbers::pi), ConfigError);
  EXPECT_THROW(make_grid(2, 1.0), ConfigError);
  EXPECT_THROW(make_grid(8, 0.0), ConfigError);
  EXPECT_THROW(make_grid(8, -1.0), ConfigError);
}

TEST(Transform, ConstantGoesToZeroMode) {
  const GridSpec g = make_grid(8, 3.0);
  const cplx c(1.5, -0.25);
  Field6 u = sample_field<6>(g, [&](double, double, double) {
    std::array<cplx, 6> v{};
    v[2] = c;
    return v;
  });
  const Field6 h = to_spectral(u);
  const double norm = std::sqrt(double(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cplx expect = i == 0 ? c * norm : cplx{};
    EXPECT_LT(std::abs(h.at(2, i) - expect), 1e-12);
    EXPECT_LT(std::abs(h.at(0, i)), 1e-14);
  }
}

TEST(Transform, PlaneWaveIsSingleCoefficient) {
  const GridSpec g = make_grid(8, 2.0);
  const std::array<int, 3> m = {1, -2, 3};
  const Field6 h = to_spectral(test::plane_wave(g, m, 4));
  const auto target = test::mode_index(g, m);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cplx expect = i == target ? cplx(std::sqrt(double(g.size()))) : cplx{};
    EXPECT_LT(std::abs(h.at(4, i) - expect), 1e-12) << i;
  }
}

// Direct O(N^2) DFT on the 4^3 grid as an independent oracle.
TEST(Transform, MatchesDirectDftAndRoundTrips) {
  const GridSpec g = make_grid(4, 2.0 * std::numbers::pi);
  const Field6 u = test::random_physical(g, 17);
  const Field6 h = to_spectral(u);
  const int n = 4;
  for (int c = 0; c < 6; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d) {
          cplx acc{};
          for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y)
              for (int z = 0; z < n; ++z)
                acc += u.at(c, g.index(x, y, z)) *
                       std::polar(1.0, -2.0 * std::numbers::pi * (a * x + b * y + d * z) / n);
          acc /= std::sqrt(64.0);
          EXPECT_LT(std::abs(h.at(c, g.index(a, b, d)) - acc), 1e-12);
        }
  const Field6 back = to_physical(h);
  double err = 0.0;
  for (std::size_t i = 0; i < u.data().size(); ++i) err = std::max(err, std::abs(back.data()[i] - u.data()[i]));
  EXPECT_LT(err, 1e-12);
}

TEST(Transform, RepresentationIsChecked) {
  const GridSpec g = make_grid(4, 1.0);
  Field6 u(g, Representation::spectral);
  EXPECT_THROW(to_spectral(u), UsageError);
  EXPECT_THROW(lp_norm(u, 2.0), UsageError);
}

TEST(InnerProduct, UnitPlaneWaveGivesVolume) {
  const GridSpec g = make_grid(8, 1.7);
  const Field6 u = test::plane_wave(g, {2, 0, -1}, 0);
  EXPECT_NEAR(std::abs(inner_product(u, u) - g.volume()), 0.0, 1e-12);
  const Field6 zero(g, Representation::physical);
  EXPECT_EQ(inner_product(u, zero), cplx{});
}

TEST(InnerProduct, Parseval) {
  const GridSpec g = make_grid(8, 2.5);
  const Field6 u = test::random_physical(g, 3), v = test::random_physical(g, 4);
  const cplx phys = inner_product(u, v);
  const cplx spec = inner_product(to_spectral(u), to_spectral(v));
  EXPECT_LT(std::abs(phys - spec) / std::abs(phys), 1e-12);
  EXPECT_NEAR(l2_norm(u), l2_norm(to_spectral(u)), 1e-12 * l2_norm(u));
}

TEST(LpNorm, ConstantField) {
  const GridSpec g = make_grid(4, 3.0);
  const Field6 u = sample_field<6>(g, [](double, double, double) {
    return std::array<cplx, 6>{cplx(3, 0), cplx(0, 4), {}, {}, {}, {}};
  });
  EXPECT_NEAR(lp_norm(u, 2.0), 5.0 * std::sqrt(g.volume()), 1e-12);
}

TEST(LpNorm, SpikeInfinity) {
  const GridSpec g = make_grid(8, 1.0);
  Field6 u(g, Representation::physical);
  u.at(3, 77) = cplx(0.0, -6.5);
  EXPECT_EQ(lp_norm(u, std::numeric_limits<double>::infinity()), 6.5);
}

TEST(LpNorm, P4MatchesDirectSum) {
  const GridSpec g = make_grid(8, 2.0);
  const Field6 u = test::random_physical(g, 9);
  long double acc = 0.0L;
  for (std::size_t i = 0; i < g.size(); ++i) {
    long double s = 0.0L;
    for (int c = 0; c < 6; ++c) s += std::norm(u.at(c, i));
    acc += s * s;
  }
  const double expect = static_cast<double>(std::pow(acc * g.cell_volume(), 0.25L));
  EXPECT_NEAR(lp_norm(u, 4.0), expect, 1e-12 * expect);
  EXPECT_NEAR(lp_norm_pow(u, 4.0), std::pow(expect, 4), 1e-11 * std::pow(expect, 4));
  EXPECT_THROW(lp_norm(u, 0.5), UsageError);
}

TEST(Hermitian, RealFieldHasZeroDefect) {
  const GridSpec g = make_grid(8, 1.0);
  Field6 u = test::random_physical(g, 5);
  for (auto& v : u.data()) v = {v.real(), 0.0};
  EXPECT_LT(hermitian_defect(to_spectral(u)), 1e-12);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const GridSpec g = make_grid(4, 1.25);
  const Field6 u = to_spectral(test::random_physical(g, 8));
  std::stringstream ss;
  write_checkpoint(ss, u);
  EXPECT_EQ(ss.str().size(), 4 + 4 + 8 + 1 + 6 * 64 * 16u);
  EXPECT_EQ(ss.str().substr(0, 4), "MKS1");
  const Field6 v = read_checkpoint(ss);
  EXPECT_TRUE(v.is_spectral());
  EXPECT_EQ(v.grid().points(), 4);
  EXPECT_EQ(v.grid().length(), 1.25);
  for (std::size_t i = 0; i < u.data().size(); ++i) EXPECT_EQ(u.data()[i], v.data()[i]);
}

TEST(Checkpoint, BadMagic) {
  std::stringstream ss("XXXX");
  EXPECT_THROW(read_checkpoint(ss), UsageError);
}
