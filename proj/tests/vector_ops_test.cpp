#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "mks/dense_operator.hpp"
#include "mks/vector_ops.hpp"
#include "test_util.hpp"

using namespace mks;

namespace {

const GridSpec g4 = make_grid(4, 2.0 * std::numbers::pi);
const GridSpec g8 = make_grid(8, 3.0);

double max_abs(const Field6& u) {
  double m = 0.0;
  for (const auto& v : u.data()) m = std::max(m, std::abs(v));
  return m;
}

Field6 constant6(const GridSpec& g) {
  return to_spectral(sample_field<6>(g, [](double, double, double) {
    return std::array<cplx, 6>{1.0, -2.0, cplx(0, 3), 0.5, 0.25, 4.0};
  }));
}

// Gradient pair (grad phi1, grad phi2) with random phi, no k = 0 part.
Field6 gradient_field(const GridSpec& g, std::uint64_t seed) {
  ScalarField p1 = test::random_field<1>(g, seed, Representation::spectral);
  ScalarField p2 = test::random_field<1>(g, seed + 1, Representation::spectral);
  return join_blocks(grad(p1), grad(p2));
}

}  // namespace

TEST(Curl, ConstantAndGradientVanish) {
  EXPECT_EQ(max_abs(maxwell_apply(constant6(g8))), 0.0);
  const ScalarField phi = test::random_field<1>(g8, 1, Representation::spectral);
  const VectorField c = curl(grad(phi));
  double m = 0.0;
  for (const auto& v : c.data()) m = std::max(m, std::abs(v));
  EXPECT_LT(m, 1e-12 * g8.nyquist() * g8.nyquist());
}

TEST(Curl, PlaneWaveSymbolic) {
  const GridSpec g = make_grid(8, 2.0);
  const int m1 = 3;
  const double k1 = 2.0 * std::numbers::pi * m1 / g.length();
  const VectorField u = block1(to_spectral(test::plane_wave(g, {m1, 0, 0}, 2)));
  const VectorField c = to_physical(curl(u));
  const Field6 wave = test::plane_wave(g, {m1, 0, 0}, 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_LT(std::abs(c.at(0, i)), 1e-12);
    EXPECT_LT(std::abs(c.at(1, i) - cplx(0, -k1) * wave.at(0, i)), 1e-12);
    EXPECT_LT(std::abs(c.at(2, i)), 1e-12);
  }
}

TEST(Div, CurlIsDivergenceFree) {
  const VectorField u = test::random_field<3>(g8, 4, Representation::spectral);
  const ScalarField d = div(curl(u));
  for (const auto& v : d.data()) EXPECT_LT(std::abs(v), 1e-12);
}

TEST(Div, GradOfConstantAndModewiseLaplacian) {
  ScalarField c(g8, Representation::spectral);
  c.at(0, 0) = 2.0;
  for (const auto& v : grad(c).data()) EXPECT_EQ(v, cplx{});
  const ScalarField phi = test::random_field<1>(g8, 7, Representation::spectral);
  const ScalarField lap = div(grad(phi));
  for_each_mode(g8, [&](const ModeInfo& m) {
    EXPECT_LT(std::abs(lap.at(0, m.index) + m.k2 * phi.at(0, m.index)), 1e-12 * (1 + m.k2));
  });
}

TEST(Maxwell, RealPartOfEnergyVanishes) {
  const Field6 u = test::random_field<6>(g8, 11, Representation::spectral);
  const double r = inner_product(maxwell_apply(u), u).real();
  EXPECT_LT(std::abs(r), 1e-12 * l2_norm(maxwell_apply(u)) * l2_norm(u));
}

TEST(Maxwell, MatchesDenseMatrix) {
  const DenseOperator D = dense_operator(OperatorKind::maxwell, g4);
  const Field6 u = test::random_physical(g4, 12);
  const Field6 fast = to_physical(maxwell_apply(to_spectral(u)));
  EXPECT_LT(l2_norm(fast - D.apply(u)), 1e-10 * l2_norm(fast));
}

TEST(Maxwell, RealStateDropsNyquistPlanes) {
  // a real field: the Nyquist derivative has no real-valued representative
  const GridSpec g = make_grid(4, 2.0 * std::numbers::pi);
  Field6 u = test::random_physical(g, 13);
  for (auto& v : u.data()) v = {v.real(), 0.0};
  u.set_real_state(true);
  const Field6 Mu = to_physical(maxwell_apply(to_spectral(u)));
  for (const auto& v : Mu.data()) EXPECT_LT(std::abs(v.imag()), 1e-12);
}

TEST(HodgeLaplacian, ConstantAndEigenfunction) {
  EXPECT_EQ(max_abs(hodge_laplacian_apply(constant6(g8))), 0.0);
  const std::array<int, 3> m = {1, -2, 2};
  const Field6 w = to_spectral(test::plane_wave(g8, m, 5));
  const double s = 2.0 * std::numbers::pi / g8.length();
  const double k2 = s * s * 9.0;
  EXPECT_LT(l2_norm(hodge_laplacian_apply(w) + k2 * w), 1e-12 * k2 * l2_norm(w));
}

TEST(HodgeLaplacian, CurlCurlMinusGradDiv) {
  const Field6 u = test::random_field<6>(g8, 14, Representation::spectral);
  const Field6 lap = hodge_laplacian_apply(u);
  for (const auto& blk : {block1(u), block2(u)}) {
    const VectorField rhs = curl(curl(blk)) - grad(div(blk));
    const Field6 l = hodge_laplacian_apply(join_blocks(blk, blk));
    VectorField neg = block1(l);
    neg *= -1.0;
    EXPECT_LT(l2_norm(neg - rhs), 1e-12 * l2_norm(neg));
  }
}

TEST(Helmholtz, KillsGradientsFixesDivergenceFree) {
  const Field6 gr = gradient_field(g8, 20);
  EXPECT_LT(l2_norm(helmholtz_project(gr)), 1e-12 * l2_norm(gr));
  const Field6 u = test::random_field<6>(g8, 21, Representation::spectral);
  const Field6 c = join_blocks(curl(block1(u)), curl(block2(u)));
  EXPECT_LT(l2_norm(helmholtz_project(c) - c), 1e-12 * l2_norm(c));
}

TEST(Helmholtz, DenseMatrixIsHermitianIdempotent) {
  const DenseOperator P = dense_operator(OperatorKind::helmholtz, g4);
  const double n = P.matrix.norm();
  EXPECT_LT((P.matrix - P.matrix.adjoint()).norm(), 1e-10 * n);
  EXPECT_LT((P.matrix * P.matrix - P.matrix).norm(), 1e-10 * n);
  const Field6 u = test::random_physical(g4, 22);
  EXPECT_LT(l2_norm(to_physical(helmholtz_project(to_spectral(u))) - P.apply(u)), 1e-10 * l2_norm(u));
}

TEST(MaxwellGroup, IdentityAtZeroAndOnGradients) {
  const Field6 u = test::random_field<6>(g8, 30, Representation::spectral);
  EXPECT_EQ(l2_norm(maxwell_group(0.0, u) - u), 0.0);
  const Field6 gr = gradient_field(g8, 31);
  EXPECT_LT(l2_norm(maxwell_group(0.7, gr) - gr), 1e-12 * l2_norm(gr));
}

TEST(MaxwellGroup, MatchesMatrixExponential) {
  const DenseOperator D = dense_operator(OperatorKind::maxwell, g4);
  const Eigen::MatrixXcd E = (0.3 * D.matrix).exp();
  const Field6 u = test::random_physical(g4, 32);
  Eigen::Map<const Eigen::VectorXcd> x(u.data().data(), D.dimension);
  const Eigen::VectorXcd ref = E * x;
  const Field6 fast = to_physical(maxwell_group(0.3, to_spectral(u)));
  Eigen::Map<const Eigen::VectorXcd> y(fast.data().data(), D.dimension);
  EXPECT_LT((y - ref).norm(), 1e-8 * ref.norm());
}

TEST(MaxwellGroup, IsometryAndGroupLaw) {
  const Field6 u = test::random_field<6>(g8, 33, Representation::spectral);
  const Field6 a = maxwell_group(0.9, maxwell_group(0.4, u));
  const Field6 b = maxwell_group(1.3, u);
  EXPECT_LT(l2_norm(a - b), 1e-12 * l2_norm(u));
  EXPECT_NEAR(l2_norm(b), l2_norm(u), 1e-12 * l2_norm(u));
}

TEST(DenseOperator, MaxwellIsSkewHermitian) {
  const DenseOperator D = dense_operator(OperatorKind::maxwell, g4);
  EXPECT_LT((D.matrix + D.matrix.adjoint()).norm(), 1e-12 * D.matrix.norm());
}

TEST(DenseOperator, ColumnsMatchFastPath) {
  const DenseOperator D = dense_operator(OperatorKind::hodge_laplacian, g4);
  for (Eigen::Index col = 0; col < D.dimension; col += 37) {
    Field6 e(g4, Representation::physical);
    e.data()[static_cast<std::size_t>(col)] = 1.0;
    const Field6 fast = to_physical(hodge_laplacian_apply(to_spectral(e)));
    Eigen::Map<const Eigen::VectorXcd> y(fast.data().data(), D.dimension);
    EXPECT_LT((y - D.matrix.col(col)).norm(), 1e-10 * (1.0 + D.matrix.col(col).norm()));
  }
}

TEST(DenseOperator, RefusesLargeGrids) {
  EXPECT_THROW(dense_operator(OperatorKind::maxwell, make_grid(16, 1.0)), ConfigError);
}
