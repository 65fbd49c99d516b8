#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "incfed/stats.hpp"

namespace incfed {

struct EnvConfig {
  std::size_t n_clients = 50;
  std::size_t horizon = 5000;
  std::size_t dim = 25;
  std::size_t pool_size = 25;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// What the active client sees at one step. `step` is 1-based, `active_client`
/// is a 0-based client index, and `arms` holds one candidate per column (d×K).
struct RoundObservation {
  std::size_t step = 0;
  std::size_t active_client = 0;
  Matrix arms;

  std::size_t pool_size() const noexcept { return static_cast<std::size_t>(arms.cols()); }
  auto arm(std::size_t k) const { return arms.col(static_cast<Index>(k)); }
};

/// One logged round of a dataset: arms plus the reward each arm would have paid.
struct LoggedRound {
  std::size_t client = 0;  // 0-based
  Matrix arms;             // d×K
  Vector rewards;          // K
};

enum class EnvMode { synthetic, dataset };

/// An immutable, replayable bandit world. Every round (active client, arm pool,
/// realized rewards) is fixed at construction, so `step` and `draw_reward` are
/// pure lookups and concurrent readers need no synchronization.
class Environment {
 public:
  /// θ* and arms uniform on the unit sphere, active client uniform over
  /// clients, reward noise Gaussian(0, σ²) committed per (round, arm).
  static Environment synthetic(const EnvConfig& cfg);

  /// Dataset-mode environment from in-memory rounds.
  static Environment from_rounds(std::size_t n_clients, std::vector<LoggedRound> rounds);

  /// Parses the line-oriented dataset format:
  ///   N T d K
  ///   t client_id            (client_id is 1-based)
  ///   f_1 ... f_d reward     (K lines)
  /// Throws DatasetError carrying the offending line number.
  static Environment load_dataset(const std::filesystem::path& path);
  static Environment parse_dataset(std::istream& in);

  EnvMode mode() const noexcept { return mode_; }
  std::size_t n_clients() const noexcept { return n_clients_; }
  std::size_t horizon() const noexcept { return rounds_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t pool_size() const noexcept { return pool_size_; }

  /// Throws std::out_of_range unless 1 <= t <= horizon().
  const RoundObservation& step(std::size_t t) const;

  /// Realized reward of arm `arm` (0-based) at step t. Synthetic: xᵀθ* plus the
  /// pre-committed noise; dataset: the logged reward.
  double draw_reward(std::size_t t, std::size_t arm) const;

  /// xᵀθ* for arm `arm` at step t. Synthetic mode only.
  double expected_reward(std::size_t t, std::size_t arm) const;

  /// max over the round's arms of xᵀθ*. Synthetic mode only.
  double best_expected(std::size_t t) const;

  /// Synthetic mode only.
  const Vector& theta_star() const;

  /// Writes the environment in the dataset format. Rewards are the realized
  /// ones, so a synthetic environment round-trips into dataset mode.
  void save_dataset(std::ostream& out) const;

 private:
  struct Round {
    RoundObservation obs;
    Vector rewards;
  };

  Environment() = default;
  const Round& round(std::size_t t) const;
  void require_synthetic(const char* op) const;

  EnvMode mode_ = EnvMode::synthetic;
  std::size_t n_clients_ = 0;
  std::size_t dim_ = 0;
  std::size_t pool_size_ = 0;
  std::optional<Vector> theta_star_;
  std::vector<Round> rounds_;
};

}  // namespace incfed
