#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "incfed/error.hpp"
#include "incfed/stats.hpp"
#include "oracles.hpp"

namespace incfed {
namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix M(2, 2);
  M << a, b, c, d;
  return M;
}

SuffStats scalar_stats(double v, double b) {
  return SuffStats(Matrix::Constant(1, 1, v), Vector::Constant(1, b));
}

TEST(LogDetReg, ZeroMatrixGivesZero) {
  EXPECT_EQ(log_det_reg(SuffStats(3), 1.0), 0.0);
}

TEST(LogDetReg, DiagonalMatchesHandValue) {
  // log(2) + log(3)
  const SuffStats S(mat2(1, 0, 0, 2), Vector::Zero(2));
  EXPECT_NEAR(log_det_reg(S, 1.0), 1.791759469228055, 1e-14);
}

TEST(LogDetReg, DenseTwoByTwo) {
  // det [[2.5, 1], [1, 2.5]] = 5.25
  const SuffStats S(mat2(2, 1, 1, 2), Vector::Zero(2));
  EXPECT_NEAR(log_det_reg(S, 0.5), 1.658228076603532, 1e-14);
}

TEST(LogDetReg, RejectsNonFinite) {
  Matrix V = Matrix::Zero(2, 2);
  V(0, 1) = std::nan("");
  EXPECT_THROW(log_det_reg(V, 1.0), NumericError);
  EXPECT_THROW(SuffStats(V, Vector::Zero(2)), NumericError);
}

TEST(LogDetReg, RejectsIndefinite) {
  // V + I = diag(-1, 2) is not positive definite.
  EXPECT_THROW(log_det_reg(mat2(-2, 0, 0, 1), 1.0), NumericError);
}

TEST(LogDetReg, IsDeterministic) {
  std::mt19937_64 rng(7);
  const Matrix V = oracle::random_psd(rng, 6, 4);
  EXPECT_EQ(log_det_reg(V, 0.3), log_det_reg(V, 0.3));
}

TEST(LogDetReg, MatchesCofactorOracle) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 4), rank(0, 5);
  std::uniform_real_distribution<double> lam(0.05, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Matrix V = oracle::random_psd(rng, dim(rng), rank(rng));
    const double lambda = lam(rng);
    const double direct = oracle::det_reg(V, lambda);
    EXPECT_NEAR(std::exp(log_det_reg(V, lambda)) / direct, 1.0, 1e-9);
  }
}

TEST(LogDetReg, MonotoneUnderRankOneAndPsdAdditions) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const Index d = 1 + trial % 8;
    const Matrix A = oracle::random_psd(rng, d, 3);
    const Matrix B = oracle::random_psd(rng, d, 2);
    Vector x(d);
    for (Index i = 0; i < d; ++i) x[i] = g(rng);
    const double base = log_det_reg(A, 1.0);
    EXPECT_GE(log_det_reg(Matrix(A + x * x.transpose()), 1.0), base - 1e-12);
    EXPECT_GE(log_det_reg(Matrix(A + B), 1.0), base - 1e-12);
  }
}

TEST(SuffStats, SymmetrizesOnIngestion) {
  const SuffStats S(mat2(1, 2, 0, 1), Vector::Zero(2));
  EXPECT_EQ(S.V()(0, 1), 1.0);
  EXPECT_EQ(S.V()(1, 0), 1.0);
}

TEST(SuffStats, AdditionIsEntrywise) {
  std::mt19937_64 rng(5);
  const SuffStats a(oracle::random_psd(rng, 3, 2), Vector::Ones(3));
  const SuffStats b(oracle::random_psd(rng, 3, 2), Vector::Constant(3, 2.0));
  const SuffStats c = a + b;
  EXPECT_TRUE(c.V().isApprox(a.V() + b.V()));
  EXPECT_TRUE((c.V() - c.V().transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  EXPECT_GE(min_eigenvalue(c.V()), -1e-9);
  EXPECT_EQ(c.b(), Vector::Constant(3, 3.0));
}

TEST(RidgeEstimate, ZeroRhsGivesZero) {
  std::mt19937_64 rng(1);
  const SuffStats S(oracle::random_psd(rng, 4, 2), Vector::Zero(4));
  EXPECT_EQ(ridge_estimate(S, 1.0), Vector::Zero(4));
}

TEST(RidgeEstimate, ScalarSolve) {
  EXPECT_NEAR(ridge_estimate(scalar_stats(2, 4), 1.0)[0], 4.0 / 3.0, 1e-15);
}

TEST(RidgeEstimate, DiagonalSolve) {
  Vector b(2);
  b << 2, 8;
  const Vector theta = ridge_estimate(SuffStats(mat2(1, 0, 0, 3), b), 1.0);
  EXPECT_NEAR(theta[0], 1.0, 1e-15);
  EXPECT_NEAR(theta[1], 2.0, 1e-15);
}

TEST(RidgeEstimate, ResidualBoundOnRandomInstances) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 25);
  std::uniform_real_distribution<double> lam(1e-3, 10.0);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index d = dim(rng);
    const Matrix V = oracle::random_psd(rng, d, static_cast<int>(d) + 3);
    Vector b(d);
    for (Index i = 0; i < d; ++i) b[i] = 10.0 * g(rng);
    const double lambda = lam(rng);
    const Vector theta = ridge_estimate(SuffStats(V, b), lambda);
    Matrix A = V;
    A.diagonal().array() += lambda;
    ASSERT_LE((A * theta - b).norm(), 1e-8 * (1.0 + b.norm())) << "trial " << trial;
  }
}

TEST(ConfidenceWidth, ColdStartValues) {
  EXPECT_NEAR(confidence_width(SuffStats(3), {1.0, 1.0, std::exp(-0.5)}), 2.0, 1e-14);
  EXPECT_NEAR(confidence_width(SuffStats(2), {4.0, 2.0, std::exp(-2.0)}), 6.0, 1e-14);
}

TEST(ConfidenceWidth, ScalarCase) {
  // 1 + sqrt(log 4 + 2 log 10), evaluated at 40 digits.
  EXPECT_NEAR(confidence_width(scalar_stats(3, 0), {1.0, 1.0, 0.1}), 3.4477468306808165, 1e-13);
}

TEST(ConfidenceWidth, NeverBelowSqrtLambdaAndNonDecreasingInData) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  const ModelParams p{0.7, 0.5, 0.05};
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 1 + trial % 6;
    SuffStats S(oracle::random_psd(rng, d, 2), Vector::Zero(d));
    const double before = confidence_width(S, p);
    EXPECT_GE(before, std::sqrt(p.lambda));
    Vector x(d);
    for (Index i = 0; i < d; ++i) x[i] = g(rng);
    S.add_observation(x, 1.0);
    EXPECT_GE(confidence_width(S, p), before - 1e-12);
  }
}

TEST(UcbScore, ColdStartIsScaledNorm) {
  const ModelParams p{2.0, 0.3, 0.1};
  const SuffStats S(3);
  Vector x(3);
  x << 0.3, -0.4, 1.2;
  const double alpha = confidence_width(S, p);
  EXPECT_NEAR(ucb_score(x, S, p), alpha * x.norm() / std::sqrt(p.lambda), 1e-14);
}

TEST(UcbScore, ScalarChainedExample) {
  // 6/4 + (1 + sqrt(log 4 + 2 log 10)) * sqrt(1/4), evaluated at 40 digits.
  const ModelParams p{1.0, 1.0, 0.1};
  EXPECT_NEAR(ucb_score(Vector::Ones(1), scalar_stats(3, 6), p), 3.2238734153404083, 1e-13);
}

TEST(UcbScore, ZeroArmScoresZero) {
  std::mt19937_64 rng(4);
  const SuffStats S(oracle::random_psd(rng, 4, 3), Vector::Ones(4));
  EXPECT_EQ(ucb_score(Vector::Zero(4), S, {}), 0.0);
}

TEST(ModelParams, Validation) {
  EXPECT_NO_THROW((ModelParams{1.0, 0.1, 0.5}.validate()));
  EXPECT_THROW((ModelParams{0.0, 0.1, 0.5}.validate()), ConfigError);
  EXPECT_THROW((ModelParams{1.0, -1.0, 0.5}.validate()), ConfigError);
  EXPECT_THROW((ModelParams{1.0, 0.1, 1.0}.validate()), ConfigError);
}

}  // namespace
}  // namespace incfed
