#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "incfed/client.hpp"
#include "incfed/stats.hpp"

namespace incfed {

/// Subset of the client indices [0, N).
class ClientSet {
 public:
  ClientSet() = default;
  explicit ClientSet(std::size_t universe, bool full = false);

  static ClientSet all(std::size_t universe) { return ClientSet(universe, true); }
  static ClientSet none(std::size_t universe) { return ClientSet(universe, false); }

  std::size_t universe() const noexcept { return bits_.size(); }
  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  bool contains(std::size_t i) const { return bits_.at(i); }
  void insert(std::size_t i);
  void erase(std::size_t i);

  /// Members in ascending order.
  std::vector<std::size_t> members() const;

  friend bool operator==(const ClientSet&, const ClientSet&) = default;

 private:
  std::vector<bool> bits_;
  std::size_t count_ = 0;
};

/// Server-side statistics: the shared pool and, per client, the shared data
/// that has not yet been delivered to that client.
struct ServerState {
  SuffStats global;
  std::vector<SuffStats> pending_down;

  ServerState() = default;
  ServerState(std::size_t n_clients, Index dim);

  std::size_t n_clients() const noexcept { return pending_down.size(); }
};

/// What every client reveals when a round is triggered: its pending
/// covariance and its effective sharing cost.
struct Offer {
  std::vector<Matrix> delta_V;
  std::vector<double> cost;

  std::size_t n_clients() const noexcept { return delta_V.size(); }
};

Offer collect_offer(std::span<const Client> clients);

/// Result of one incentive mechanism invocation.
struct IncentiveOutcome {
  ClientSet participants;
  /// Clients that participate because of a monetary top-up.
  ClientSet money_incentivized;
  /// Data incentive of every participant evaluated with `participants`
  /// committed; 0 for non-participants.
  std::vector<double> data_incentive;
  /// Monetary incentive; non-zero only for money-incentivized participants.
  std::vector<double> payment;
  double total_payment = 0.0;
  /// Payment of the last-resort solution when one existed.
  std::optional<double> last_resort_payment;
  bool used_last_resort = false;
};

/// Fallback of the payment-efficient mechanism: the highest-ranked single
/// client whose addition alone meets the β gap. Absent when no such client
/// exists, which acts as an infinitely expensive last resort.
struct LastResort {
  std::optional<std::size_t> client;
  double payment = 0.0;
};

/// Switches for the ablated variants of the payment-efficient mechanism.
struct MechanismOptions {
  /// Skip data-incentivized participation: the payment-free stage is not run
  /// and the search never absorbs clients for free.
  bool disable_payment_free_absorption = false;
  /// Rank the candidates once against the data-incentivized set and add them
  /// in that fixed order instead of re-ranking after every addition.
  bool disable_iterative_search = false;
};

/// Frozen snapshot of one communication round: the offer, the server state
/// and every client's covariance. All valuations of the mechanisms are
/// methods of this class. Pooled covariances always sum the deltas in
/// ascending client order, so V_g(all) computed here and via `pooled(all)`
/// are bitwise identical.
class RoundValuation {
 public:
  RoundValuation(Offer offer, const ServerState& server, std::span<const Matrix> client_V,
                 double lambda);

  std::size_t n_clients() const noexcept { return offer_.n_clients(); }
  double lambda() const noexcept { return lambda_; }
  double cost(std::size_t i) const { return offer_.cost.at(i); }
  const Offer& offer() const noexcept { return offer_; }

  /// V_g(S) = global.V + Σ_{j∈S} ΔV_j.
  Matrix pooled(const ClientSet& S) const;

  double log_det_pooled(const ClientSet& S) const;
  double log_det_all() const noexcept { return log_det_all_; }

  /// log det(V_g(S)+λI) − log det(V_g(all)+λI); always ≤ 0 up to rounding.
  double log_gap(const ClientSet& S) const;

  /// det(V_g(S)+λI)/det(V_g(all)+λI) ≥ β, compared in the log domain.
  bool meets_beta(const ClientSet& S, double beta) const;

  /// log det(D + V_i + λI) − log det(V_i + λI) where D is the data the server
  /// can hand client i: the deltas of the other members of S plus what is
  /// already pending for i.
  double log_data_incentive(std::size_t i, const ClientSet& S) const;

  /// det ratio − 1, clamped at 0.
  double data_incentive(std::size_t i, const ClientSet& S) const;

  /// log det(ΔV_i + V_g(S) + λI) − log det(V_g(S) + λI).
  double log_marginal_contribution(std::size_t i, const ClientSet& S) const;
  double marginal_contribution(std::size_t i, const ClientSet& S) const;

  /// Clients outside S ordered by marginal contribution to V_g(S),
  /// descending, ties to the lower index.
  std::vector<std::size_t> rank_outside(const ClientSet& S) const;
  std::vector<std::size_t> rank(std::span<const std::size_t> candidates,
                                const ClientSet& S) const;

  /// Builds an outcome for `participants`, paying each money-incentivized
  /// member max(0, cost − data incentive).
  IncentiveOutcome settle(const ClientSet& participants, const ClientSet& money) const;

 private:
  Offer offer_;
  Matrix global_V_;
  std::vector<Matrix> pending_down_V_;
  std::vector<Matrix> client_V_;
  std::vector<double> client_log_det_;
  double lambda_;
  double log_det_all_;
};

/// Removes, one at a time, the first client (ascending id) whose data
/// incentive is below its cost, rescanning after each removal, until the set
/// is stable or empty. No payments.
IncentiveOutcome payment_free_select(const RoundValuation& v);

/// Data-incentivized set from payment-free selection, topped up with paid
/// participants until the β gap holds.
IncentiveOutcome payment_efficient_select(const RoundValuation& v, double beta,
                                          const MechanismOptions& options = {});

/// Greedy search over the clients that cannot meet β alone. Returns the
/// first β-feasible set whose payment does not exceed the last resort;
/// returns the last resort as soon as the accumulated payment exceeds it or
/// when the candidates run out.
IncentiveOutcome heuristic_search(const RoundValuation& v, std::span<const std::size_t> invalid,
                                  const ClientSet& data_incentivized, const LastResort& last,
                                  double beta, const MechanismOptions& options = {});

/// Participant uploads go into the global pool and into every other client's
/// pending download; participants' pending data is cleared; then every
/// client downloads and the server's pending downloads are reset.
void commit_exchange(ServerState& server, std::span<Client> clients,
                     const ClientSet& participants);

}  // namespace incfed
