#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "incfed/client.hpp"
#include "incfed/environment.hpp"
#include "incfed/incentives.hpp"
#include "incfed/stats.hpp"

namespace incfed {

enum class Mechanism {
  payment_free,
  payment_efficient,
  /// Every client shares every round, no payments.
  dislinucb,
  /// The trigger never fires.
  none,
};

/// Short names used on the command line and in output files: pf, pe,
/// dislinucb, none.
std::string_view to_string(Mechanism m) noexcept;
std::optional<Mechanism> parse_mechanism(std::string_view name) noexcept;

struct ProtocolConfig {
  Mechanism mechanism = Mechanism::payment_efficient;
  double beta = 1.0;
  /// Communication threshold D_c; nullopt selects theoretical_Dc.
  std::optional<double> d_c;
  ModelParams model;
  /// Per-client base sharing cost. Empty means all zero.
  std::vector<double> costs;
  MechanismOptions ablations;
  /// Do not meter valuation uploads of clients with no pending data.
  bool skip_zero_uploads = false;
  /// Check conservation and the β gap after every round and throw
  /// ProtocolError on violation.
  bool audit = false;

  void validate(std::size_t n_clients) const;
};

struct EpochRecord {
  std::size_t step = 0;
  std::size_t trigger_client = 0;  // 0-based
  std::size_t n_participants = 0;
  double round_payment = 0.0;
  std::uint64_t round_scalars = 0;
  /// log det(V_g+λI) − log det(Ṽ+λI) after the exchange.
  double beta_gap_logratio = 0.0;
};

struct RunMetrics {
  /// True for synthetic runs (pseudo-regret); false for dataset runs
  /// (realized reward).
  bool reports_regret = true;
  /// Index t-1 holds the value after step t.
  std::vector<double> cum_regret_or_reward;
  std::vector<std::uint64_t> cum_comm_scalars;
  std::vector<double> cum_payment;
  std::vector<EpochRecord> epochs;
  /// Arm chosen at each step.
  std::vector<std::size_t> choices;
  double d_c = 0.0;

  double final_value() const { return cum_regret_or_reward.empty() ? 0.0 : cum_regret_or_reward.back(); }
  std::uint64_t final_comm() const { return cum_comm_scalars.empty() ? 0 : cum_comm_scalars.back(); }
  double final_payment() const { return cum_payment.empty() ? 0.0 : cum_payment.back(); }
};

/// D_c = T/(N²d log T) − sqrt(T²/(N²dR log T))·log β with
/// R = ⌈d log(1 + T/(λd))⌉. Throws ConfigError for T < 2 or β ∉ (0, 1].
double theoretical_Dc(std::size_t T, std::size_t N, std::size_t d, double lambda, double beta);

/// Scalars moved in one communication round: N·d² valuation uploads,
/// n_participants·d reward uploads, N·(d²+d) downloads.
std::uint64_t round_comm_cost(std::size_t N, std::size_t n_participants, std::size_t d);

/// Everything a round observer may inspect before the exchange is committed.
struct RoundAudit {
  std::size_t step;
  std::size_t trigger_client;
  const RoundValuation& valuation;
  const IncentiveOutcome& outcome;
};

/// A protocol run in progress. Steps are executed one at a time so callers can
/// inspect clients, the server and the all-data covariance between steps.
class Protocol {
 public:
  Protocol(const Environment& env, ProtocolConfig cfg);

  /// Executes the next step. Errors are rethrown as ProtocolError carrying
  /// the step index.
  void advance();
  void run_to_end();
  bool done() const noexcept { return next_step_ > env_->horizon(); }
  std::size_t steps_taken() const noexcept { return next_step_ - 1; }

  std::span<const Client> clients() const noexcept { return clients_; }
  const ServerState& server() const noexcept { return server_; }
  /// Ṽ_t: every observation made so far, in step order.
  const SuffStats& oracle_covariance() const noexcept { return oracle_; }
  const RunMetrics& metrics() const noexcept { return metrics_; }
  RunMetrics take_metrics() && { return std::move(metrics_); }
  const ProtocolConfig& config() const noexcept { return cfg_; }

  /// Called once per communication round, after the mechanism and before the
  /// exchange is committed.
  void on_round(std::function<void(const RoundAudit&)> observer) { observer_ = std::move(observer); }

 private:
  void step_once(std::size_t t);
  void communicate(std::size_t t, std::size_t trigger_client);
  IncentiveOutcome select(const RoundValuation& v) const;

  const Environment* env_;
  ProtocolConfig cfg_;
  std::vector<Client> clients_;
  ServerState server_;
  SuffStats oracle_;
  RunMetrics metrics_;
  std::size_t next_step_ = 1;
  double value_ = 0.0;
  std::uint64_t scalars_ = 0;
  double payment_ = 0.0;
  std::function<void(const RoundAudit&)> observer_;
};

RunMetrics run_protocol(const Environment& env, const ProtocolConfig& cfg);

}  // namespace incfed
