#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "graphrank/comparison_graph.hpp"
#include "graphrank/errors.hpp"
#include "graphrank/spectral.hpp"
#include "support/oracles.hpp"

namespace graphrank {
namespace {

using testing::max_abs;

Eigen::MatrixXd path3(double m) {
  Eigen::MatrixXd n(3, 3);
  n << m, -m, 0, -m, m * m + m, -m * m, 0, -m * m, m * m;
  return n;
}

Eigen::MatrixXd complete(std::size_t k, double c = 1.0) {
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd n = Eigen::MatrixXd::Constant(kk, kk, -c);
  n.diagonal().setConstant(c * static_cast<double>(k - 1));
  return n;
}

Eigen::MatrixXd path4(double k) {
  Eigen::MatrixXd n(4, 4);
  n << k, -k, 0, 0, -k, k + 1, -1, 0, 0, -1, k + 1, -k, 0, 0, -k, k;
  return n;
}

void expect_penrose(const Eigen::MatrixXd& a, const Eigen::MatrixXd& p) {
  const double sa = std::max(max_abs(a), 1.0);
  const double sp = std::max(max_abs(p), 1.0);
  EXPECT_LE(max_abs(a * p * a - a), 1e-8 * sa);
  EXPECT_LE(max_abs(p * a * p - p), 1e-8 * sp);
  const Eigen::MatrixXd ap = a * p, pa = p * a;
  EXPECT_LE(max_abs(ap - ap.transpose()), 1e-8);
  EXPECT_LE(max_abs(pa - pa.transpose()), 1e-8);
}

TEST(PinvLaplacian, ThreeItemPathClosedForm) {
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    Eigen::MatrixXd expected(3, 3);
    expected << 4 * m + 1, 1 - 2 * m, -2 * (m + 1), 1 - 2 * m, m + 1, m - 2, -2 * (m + 1), m - 2, m + 4;
    expected /= 9 * m * m;
    EXPECT_LE(max_abs(pinv_laplacian(path3(m)) - expected), 1e-10) << "m=" << m;
  }
}

TEST(PinvLaplacian, CompleteGraphIsScaledLaplacian) {
  for (std::size_t k : {2u, 3u, 8u, 50u}) {
    const Eigen::MatrixXd n = complete(k);
    EXPECT_LE(max_abs(pinv_laplacian(n) - n / static_cast<double>(k * k)), 1e-10);
  }
}

TEST(PinvLaplacian, TwoItemsDoubleComparison) {
  Eigen::MatrixXd n(2, 2);
  n << 2, -2, -2, 2;
  Eigen::MatrixXd expected(2, 2);
  expected << 0.125, -0.125, -0.125, 0.125;
  EXPECT_LE(max_abs(pinv_laplacian(n) - expected), 1e-15);
}

TEST(PinvLaplacian, DisconnectedNamesComponents) {
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(4, 4);
  n.topLeftCorner(2, 2) << 1, -1, -1, 1;
  n.bottomRightCorner(2, 2) << 1, -1, -1, 1;
  try {
    pinv_laplacian(n);
    FAIL() << "expected IdentifiabilityError";
  } catch (const IdentifiabilityError& e) {
    ASSERT_EQ(e.components().size(), 2u);
    EXPECT_EQ(e.components()[1], (std::vector<std::size_t>{2, 3}));
  }
}

TEST(PinvLaplacian, RandomGraphsAgainstIndependentPinv) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(trial) % 49;
    const auto data = testing::random_connected(rng, k, 0.2, 6);
    const Eigen::MatrixXd n = laplacian(build_graph(data.records, k));
    const Eigen::MatrixXd p = pinv_laplacian(n);
    const Eigen::MatrixXd oracle = testing::cod_pinv(n);
    EXPECT_LE(max_abs(p - oracle), 1e-8 * max_abs(oracle));
    EXPECT_LE(max_abs(p - p.transpose()), 0.0);
    EXPECT_LE(max_abs(p * Eigen::VectorXd::Ones(n.rows())), 1e-10 * std::max(max_abs(p), 1.0));
    expect_penrose(n, p);
    // Kernel route and eigen route agree.
    const Eigen::VectorXd q = Eigen::VectorXd::Ones(n.rows()) / std::sqrt(static_cast<double>(k));
    EXPECT_LE(max_abs(pinv_symmetric(n, q) - p), 1e-10 * std::max(max_abs(p), 1.0));
    EXPECT_LE(max_abs(pinv_symmetric(n) - p), 1e-8 * max_abs(p));
  }
}

TEST(PinvSymmetric, SimpleCases) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  EXPECT_LE(max_abs(pinv_symmetric(id) - id), 1e-15);
  Eigen::VectorXd q(3);
  q << 1, 2, 2;
  q /= 3.0;
  const Eigen::MatrixXd qq = q * q.transpose();
  EXPECT_LE(max_abs(pinv_symmetric(qq) - qq), 1e-12);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(pinv_symmetric(asym), DataError);
}

TEST(PinvSymmetric, PenroseOnRandomPsd) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index dim = 2 + trial % 9;
    const Eigen::Index rank = 1 + trial % dim;
    Eigen::MatrixXd b(dim, rank);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
    const Eigen::MatrixXd a = b * b.transpose();
    const Eigen::MatrixXd p = pinv_symmetric(a);
    expect_penrose(a, p);
    EXPECT_LE(max_abs(p - testing::cod_pinv(a)), 1e-8 * std::max(max_abs(p), 1.0));
  }
}

TEST(SpectralSummary, FourItemPathCounterexample) {
  for (double k : {1.0, 10.0, 100.0}) {
    const SpectralSummary s = spectral_summary(path4(k));
    EXPECT_NEAR(s.lambda2, k + 1 - std::sqrt(k * k + 1), 1e-9);
    EXPECT_LE(s.lambda2, 1.0);
    EXPECT_TRUE(s.connected);
  }
}

TEST(SpectralSummary, CompleteAndPath) {
  for (std::size_t k : {3u, 7u, 20u}) {
    const SpectralSummary s = spectral_summary(complete(k));
    EXPECT_NEAR(s.lambda2, static_cast<double>(k), 1e-9);
    EXPECT_NEAR(s.pinv_trace, static_cast<double>(k - 1) / static_cast<double>(k), 1e-10);
    EXPECT_NEAR(s.pinv_max_eigenvalue, 1.0 / static_cast<double>(k), 1e-12);
    EXPECT_LE(std::abs(s.eigenvalues[0]), s.tolerance);

    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(kk, kk);
    for (Eigen::Index i = 0; i + 1 < kk; ++i) {
      p(i, i) += 1;
      p(i + 1, i + 1) += 1;
      p(i, i + 1) = p(i + 1, i) = -1;
    }
    const SpectralSummary sp = spectral_summary(p);
    EXPECT_NEAR(sp.lambda2, path_algebraic_connectivity(k), 1e-10);
    EXPECT_NEAR(sp.fiedler.norm(), 1.0, 1e-12);
    EXPECT_LE(max_abs(p * sp.fiedler - sp.lambda2 * sp.fiedler), 1e-9);
  }
}

TEST(SpectralSummary, DisconnectedHasZeroLambda2) {
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(4, 4);
  n.topLeftCorner(2, 2) << 1, -1, -1, 1;
  n.bottomRightCorner(2, 2) << 1, -1, -1, 1;
  const SpectralSummary s = spectral_summary(n);
  EXPECT_FALSE(s.connected);
  EXPECT_LE(s.lambda2, s.tolerance);
}

TEST(SpectralProperties, LoewnerAndConnectivityBounds) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 3 + static_cast<std::size_t>(trial) % 12;
    const auto base = testing::random_connected(rng, k, 0.3, 5);
    const ComparisonGraph small = build_graph(base.records, k);
    auto extra = base.records;
    const auto more = testing::random_connected(rng, k, 0.5, 3);
    extra.insert(extra.end(), more.records.begin(), more.records.end());
    const ComparisonGraph big = build_graph(extra, k);

    const Eigen::MatrixXd p_small = pinv_laplacian(laplacian(small));
    const Eigen::MatrixXd p_big = pinv_laplacian(laplacian(big));
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p_small - p_big).eigenvalues().minCoeff();
    EXPECT_GE(min_eig, -1e-8 * max_abs(p_small));

    const SpectralSummary s_small = spectral_summary(laplacian(small));
    const SpectralSummary s_big = spectral_summary(laplacian(big));
    EXPECT_GE(s_big.lambda2, s_small.lambda2 - 1e-10);

    const double m = static_cast<double>(bottleneck_m(small).m);
    EXPECT_GE(s_small.lambda2, m * path_algebraic_connectivity(k) * (1 - 1e-10));
    EXPECT_NEAR(s_small.pinv_trace, p_small.trace(), 1e-8 * std::max(1.0, p_small.trace()));
  }
}

TEST(PrincipalAngle, Basics) {
  Eigen::MatrixXd a(3, 1), b(3, 1), c(3, 1);
  a << 1, 2, 3;
  b << 2, 4, 6;
  c << 1, 1, -1;
  EXPECT_NEAR(principal_angle(a, b), 0.0, 1e-12);
  EXPECT_NEAR(principal_angle(a, c), std::numbers::pi / 2, 1e-12);
  EXPECT_THROW(principal_angle(Eigen::MatrixXd::Zero(3, 1), a), DataError);
}

TEST(PrincipalAngle, PerfectSquaresConstruction) {
  const Eigen::Index n = 100;
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(n, 1);
  for (Eigen::Index r = 1; r * r <= n; ++r) x(r * r - 1, 0) = -1.0;
  EXPECT_NEAR(principal_angle(ones, x), std::acos(0.8), 1e-12);
}

TEST(PrincipalAngle, SmallAnglesKeepPrecision) {
  for (double theta : {1e-3, 1e-6, 1e-9}) {
    Eigen::MatrixXd a(2, 1), b(2, 1);
    a << 1, 0;
    b << std::cos(theta), std::sin(theta);
    EXPECT_NEAR(principal_angle(a, b), theta, 1e-6 * theta);
  }
}

}  // namespace
}  // namespace graphrank
