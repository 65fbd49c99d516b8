#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace incfed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Ridge regularizer, noise scale and confidence level of the UCB policy.
struct ModelParams {
  double lambda = 1.0;
  double sigma = 0.1;
  double delta = 0.01;

  /// Throws ConfigError when lambda <= 0, sigma <= 0 or delta outside (0, 1).
  void validate() const;
};

/// Sufficient statistics (V, b) of a linear bandit: V accumulates outer
/// products of chosen features and b accumulates feature-weighted rewards.
///
/// The same type holds global, per-client, pending and delta statistics.
/// V is kept symmetric: matrices passed in from outside are averaged with
/// their transpose, and rank-one updates are symmetric by construction.
class SuffStats {
 public:
  SuffStats() = default;
  explicit SuffStats(Index dim);

  /// Throws NumericError on non-finite entries or mismatched shapes.
  SuffStats(Matrix V, Vector b);

  Index dim() const noexcept { return b_.size(); }
  const Matrix& V() const noexcept { return V_; }
  const Vector& b() const noexcept { return b_; }

  /// V += x xᵀ, b += x y.
  void add_observation(const Vector& x, double y);

  /// True when every entry of V is exactly zero. b is not inspected.
  bool V_is_zero() const noexcept;

  void reset();

  SuffStats& operator+=(const SuffStats& other);
  SuffStats& operator-=(const SuffStats& other);
  friend SuffStats operator+(SuffStats a, const SuffStats& b) { return a += b; }
  friend SuffStats operator-(SuffStats a, const SuffStats& b) { return a -= b; }

 private:
  Matrix V_;
  Vector b_;
};

/// Cholesky factor of V + λI. Every determinant, solve and quadratic form in
/// the library goes through one of these, so they agree with each other.
class RegularizedFactor {
 public:
  /// Throws NumericError if V has non-finite entries or V + λI is not
  /// positive definite.
  RegularizedFactor(const Matrix& V, double lambda);

  Index dim() const noexcept { return llt_.rows(); }

  /// log det(V + λI).
  double log_det() const noexcept { return log_det_; }

  /// Solves (V + λI) z = rhs.
  Vector solve(const Vector& rhs) const;

  /// xᵀ (V + λI)⁻¹ x.
  double inverse_quad(const Vector& x) const;

 private:
  Eigen::LLT<Matrix> llt_;
  double log_det_ = 0.0;
};

/// log det(V + λI) for the statistics' V.
double log_det_reg(const SuffStats& S, double lambda);
double log_det_reg(const Matrix& V, double lambda);

/// θ̂ = (V + λI)⁻¹ b via a Cholesky solve.
Vector ridge_estimate(const SuffStats& S, double lambda);

/// σ·sqrt(log det(V+λI) − d·log λ + 2·log(1/δ)) + sqrt(λ).
double confidence_width(const SuffStats& S, const ModelParams& p);

/// Same, given an already computed log det(V + λI).
double confidence_width_from_log_det(double log_det, Index dim, const ModelParams& p);

/// Precomputes θ̂ and α for one SuffStats so that many arms can be scored
/// against a single factorization.
class UcbScorer {
 public:
  UcbScorer(const SuffStats& S, const ModelParams& p);

  /// xᵀθ̂ + α·sqrt(xᵀ(V+λI)⁻¹x).
  double score(const Vector& x) const;

  double width() const noexcept { return alpha_; }
  const Vector& theta_hat() const noexcept { return theta_; }

 private:
  RegularizedFactor factor_;
  Vector theta_;
  double alpha_;
};

double ucb_score(const Vector& x, const SuffStats& S, const ModelParams& p);

/// Averages M with its transpose in place.
void symmetrize(Matrix& M);

bool all_finite(const Matrix& M);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& M);

}  // namespace incfed
