#pragma once

#include <cstddef>

#include "incfed/stats.hpp"

namespace incfed {

/// One client of the federated protocol.
///
/// `synced` is everything the client knows (shared pool plus its own data),
/// `pending` is the part of its own data that has not reached the server yet,
/// and `elapsed` counts steps since the client last communicated.
class Client {
 public:
  Client(std::size_t id, Index dim, double base_cost);

  /// Restores a client from explicit state. Throws NumericError unless
  /// pending.V ⪯ synced.V (within 1e-9) and pending.V is PSD.
  Client(std::size_t id, SuffStats synced, SuffStats pending, std::size_t elapsed,
         double base_cost);

  std::size_t id() const noexcept { return id_; }
  Index dim() const noexcept { return synced_.dim(); }
  const SuffStats& synced() const noexcept { return synced_; }
  const SuffStats& pending() const noexcept { return pending_; }
  std::size_t elapsed() const noexcept { return elapsed_; }
  double base_cost() const noexcept { return base_cost_; }

  /// base_cost if the client has unshared covariance, 0 otherwise.
  double effective_cost() const noexcept;

  /// Index of the arm (column of `arms`) with the highest UCB score under
  /// `synced`; ties go to the lowest index. Throws std::invalid_argument on an
  /// empty pool.
  std::size_t select_arm(const Matrix& arms, const ModelParams& p) const;

  /// Folds (x, y) into synced and pending and advances elapsed.
  void observe(const Vector& x, double y);

  /// elapsed · log(det(synced + λI) / det(synced − pending + λI)) > d_c.
  bool trigger_fires(double d_c, double lambda) const;

  /// Adds server data to synced and resets elapsed. Throws NumericError if
  /// dv.V is not PSD within 1e-9.
  void apply_download(const SuffStats& dv);

  /// Called when the client's pending data has been accepted by the server.
  void clear_pending();

 private:
  std::size_t id_;
  SuffStats synced_;
  SuffStats pending_;
  std::size_t elapsed_ = 0;
  double base_cost_;
};

}  // namespace incfed
