#include "incfed/stats.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "incfed/error.hpp"

namespace incfed {

namespace {

constexpr double kRadicandSlack = 1e-12;

void require_finite(const Matrix& M, const char* what) {
  if (!all_finite(M)) {
    throw NumericError(std::string(what) + " has non-finite entries");
  }
}

}  // namespace

void ModelParams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda", "must be > 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma", "must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta", "must lie in (0, 1)");
}

bool all_finite(const Matrix& M) { return M.allFinite(); }

void symmetrize(Matrix& M) {
  M = (0.5 * (M + M.transpose())).eval();
}

double min_eigenvalue(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(M, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigenvalue solver failed");
  return solver.eigenvalues().minCoeff();
}

SuffStats::SuffStats(Index dim) : V_(Matrix::Zero(dim, dim)), b_(Vector::Zero(dim)) {}

SuffStats::SuffStats(Matrix V, Vector b) : V_(std::move(V)), b_(std::move(b)) {
  if (V_.rows() != V_.cols() || V_.rows() != b_.size()) {
    throw NumericError("SuffStats: V must be d x d and b must have length d");
  }
  require_finite(V_, "SuffStats V");
  require_finite(b_, "SuffStats b");
  symmetrize(V_);
}

void SuffStats::add_observation(const Vector& x, double y) {
  V_.noalias() += x * x.transpose();
  b_.noalias() += x * y;
}

bool SuffStats::V_is_zero() const noexcept {
  return (V_.array() == 0.0).all();
}

void SuffStats::reset() {
  V_.setZero();
  b_.setZero();
}

SuffStats& SuffStats::operator+=(const SuffStats& other) {
  V_ += other.V_;
  b_ += other.b_;
  return *this;
}

SuffStats& SuffStats::operator-=(const SuffStats& other) {
  V_ -= other.V_;
  b_ -= other.b_;
  return *this;
}

RegularizedFactor::RegularizedFactor(const Matrix& V, double lambda) {
  if (V.rows() != V.cols()) throw NumericError("RegularizedFactor: matrix is not square");
  if (!(lambda > 0.0)) throw NumericError("RegularizedFactor: lambda must be > 0");
  require_finite(V, "covariance");
  Matrix A = V;
  A.diagonal().array() += lambda;
  llt_.compute(A);
  if (llt_.info() != Eigen::Success) {
    throw NumericError("V + lambda*I is not positive definite (d=" + std::to_string(V.rows()) +
                       ", lambda=" + std::to_string(lambda) + ")");
  }
  const auto diag = llt_.matrixLLT().diagonal();
  log_det_ = 2.0 * diag.array().log().sum();
}

Vector RegularizedFactor::solve(const Vector& rhs) const { return llt_.solve(rhs); }

double RegularizedFactor::inverse_quad(const Vector& x) const {
  // ‖L⁻¹x‖² with L the lower Cholesky factor.
  const Vector z = llt_.matrixL().solve(x);
  return z.squaredNorm();
}

double log_det_reg(const Matrix& V, double lambda) {
  return RegularizedFactor(V, lambda).log_det();
}

double log_det_reg(const SuffStats& S, double lambda) { return log_det_reg(S.V(), lambda); }

Vector ridge_estimate(const SuffStats& S, double lambda) {
  require_finite(S.b(), "b");
  return RegularizedFactor(S.V(), lambda).solve(S.b());
}

double confidence_width_from_log_det(double log_det, Index dim, const ModelParams& p) {
  double radicand = log_det - static_cast<double>(dim) * std::log(p.lambda) +
                    2.0 * std::log(1.0 / p.delta);
  if (radicand < -kRadicandSlack) {
    throw NumericError("confidence width radicand is negative (" + std::to_string(radicand) +
                       "); log-determinant is inconsistent");
  }
  if (radicand < 0.0) radicand = 0.0;
  return p.sigma * std::sqrt(radicand) + std::sqrt(p.lambda);
}

double confidence_width(const SuffStats& S, const ModelParams& p) {
  return confidence_width_from_log_det(log_det_reg(S, p.lambda), S.dim(), p);
}

UcbScorer::UcbScorer(const SuffStats& S, const ModelParams& p)
    : factor_(S.V(), p.lambda),
      theta_(factor_.solve(S.b())),
      alpha_(confidence_width_from_log_det(factor_.log_det(), S.dim(), p)) {
  require_finite(S.b(), "b");
}

double UcbScorer::score(const Vector& x) const {
  return x.dot(theta_) + alpha_ * std::sqrt(factor_.inverse_quad(x));
}

double ucb_score(const Vector& x, const SuffStats& S, const ModelParams& p) {
  if (!x.allFinite()) throw NumericError("arm feature has non-finite entries");
  return UcbScorer(S, p).score(x);
}

}  // namespace incfed
