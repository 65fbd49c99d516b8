#include "incfed/client.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "incfed/error.hpp"

namespace incfed {

namespace {
constexpr double kPsdSlack = 1e-9;
}

Client::Client(std::size_t id, Index dim, double base_cost)
    : id_(id), synced_(dim), pending_(dim), base_cost_(base_cost) {
  if (!(base_cost >= 0.0) || !std::isfinite(base_cost)) {
    throw ConfigError("costs", "client cost must be finite and >= 0");
  }
}

Client::Client(std::size_t id, SuffStats synced, SuffStats pending, std::size_t elapsed,
               double base_cost)
    : Client(id, synced.dim(), base_cost) {
  if (pending.dim() != synced.dim()) throw std::invalid_argument("Client: dimension mismatch");
  if (min_eigenvalue(pending.V()) < -kPsdSlack ||
      min_eigenvalue(synced.V() - pending.V()) < -kPsdSlack) {
    throw NumericError("Client: pending covariance must be PSD and dominated by synced");
  }
  synced_ = std::move(synced);
  pending_ = std::move(pending);
  elapsed_ = elapsed;
}

double Client::effective_cost() const noexcept {
  return pending_.V_is_zero() ? 0.0 : base_cost_;
}

std::size_t Client::select_arm(const Matrix& arms, const ModelParams& p) const {
  if (arms.cols() == 0) throw std::invalid_argument("select_arm: empty arm pool");
  if (arms.rows() != dim()) throw std::invalid_argument("select_arm: arm dimension mismatch");
  if (!arms.allFinite()) throw NumericError("select_arm: arm features are not finite");

  const UcbScorer scorer(synced_, p);
  std::size_t best = 0;
  double best_score = scorer.score(arms.col(0));
  for (Index k = 1; k < arms.cols(); ++k) {
    const double s = scorer.score(arms.col(k));
    if (s > best_score) {
      best_score = s;
      best = static_cast<std::size_t>(k);
    }
  }
  return best;
}

void Client::observe(const Vector& x, double y) {
  if (x.size() != dim()) throw std::invalid_argument("observe: feature dimension mismatch");
  if (!x.allFinite() || !std::isfinite(y)) throw NumericError("observe: non-finite observation");
  synced_.add_observation(x, y);
  pending_.add_observation(x, y);
  ++elapsed_;
}

bool Client::trigger_fires(double d_c, double lambda) const {
  if (elapsed_ == 0 || pending_.V_is_zero()) return false;
  const double gain =
      log_det_reg(synced_.V(), lambda) - log_det_reg(synced_.V() - pending_.V(), lambda);
  return static_cast<double>(elapsed_) * gain > d_c;
}

void Client::apply_download(const SuffStats& dv) {
  if (dv.dim() != dim()) throw std::invalid_argument("apply_download: dimension mismatch");
  if (!dv.V_is_zero() && min_eigenvalue(dv.V()) < -kPsdSlack) {
    throw NumericError("apply_download: downloaded covariance is not PSD");
  }
  synced_ += dv;
  elapsed_ = 0;
}

void Client::clear_pending() { pending_.reset(); }

}  // namespace incfed
