#include "incfed/incentives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "incfed/error.hpp"

namespace incfed {

// ---------------------------------------------------------------------------
// ClientSet

ClientSet::ClientSet(std::size_t universe, bool full)
    : bits_(universe, full), count_(full ? universe : 0) {}

void ClientSet::insert(std::size_t i) {
  if (!bits_.at(i)) {
    bits_[i] = true;
    ++count_;
  }
}

void ClientSet::erase(std::size_t i) {
  if (bits_.at(i)) {
    bits_[i] = false;
    --count_;
  }
}

std::vector<std::size_t> ClientSet::members() const {
  std::vector<std::size_t> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ServerState / Offer

ServerState::ServerState(std::size_t n_clients, Index dim)
    : global(dim), pending_down(n_clients, SuffStats(dim)) {}

Offer collect_offer(std::span<const Client> clients) {
  Offer offer;
  offer.delta_V.reserve(clients.size());
  offer.cost.reserve(clients.size());
  for (const Client& c : clients) {
    offer.delta_V.push_back(c.pending().V());
    offer.cost.push_back(c.effective_cost());
  }
  return offer;
}

// ---------------------------------------------------------------------------
// RoundValuation

RoundValuation::RoundValuation(Offer offer, const ServerState& server,
                               std::span<const Matrix> client_V, double lambda)
    : offer_(std::move(offer)), global_V_(server.global.V()), lambda_(lambda) {
  const std::size_t n = offer_.n_clients();
  if (offer_.cost.size() != n || server.n_clients() != n || client_V.size() != n) {
    throw std::invalid_argument("RoundValuation: inconsistent client counts");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(offer_.cost[i] >= 0.0)) throw ConfigError("costs", "effective cost must be >= 0");
    if (offer_.delta_V[i].rows() != global_V_.rows() ||
        client_V[i].rows() != global_V_.rows()) {
      throw std::invalid_argument("RoundValuation: dimension mismatch");
    }
  }
  pending_down_V_.reserve(n);
  for (const auto& p : server.pending_down) pending_down_V_.push_back(p.V());
  client_V_.assign(client_V.begin(), client_V.end());
  client_log_det_.reserve(n);
  for (const auto& V : client_V_) client_log_det_.push_back(log_det_reg(V, lambda_));
  log_det_all_ = log_det_pooled(ClientSet::all(n));
}

Matrix RoundValuation::pooled(const ClientSet& S) const {
  Matrix V = global_V_;
  for (std::size_t j = 0; j < n_clients(); ++j) {
    if (S.contains(j)) V += offer_.delta_V[j];
  }
  return V;
}

double RoundValuation::log_det_pooled(const ClientSet& S) const {
  return log_det_reg(pooled(S), lambda_);
}

double RoundValuation::log_gap(const ClientSet& S) const {
  return log_det_pooled(S) - log_det_all_;
}

bool RoundValuation::meets_beta(const ClientSet& S, double beta) const {
  if (beta <= 0.0) return true;
  return log_gap(S) >= std::log(beta);
}

double RoundValuation::log_data_incentive(std::size_t i, const ClientSet& S) const {
  Matrix D = pending_down_V_.at(i);
  for (std::size_t j = 0; j < n_clients(); ++j) {
    if (j != i && S.contains(j)) D += offer_.delta_V[j];
  }
  if ((D.array() == 0.0).all()) return 0.0;
  D += client_V_[i];
  return log_det_reg(D, lambda_) - client_log_det_[i];
}

double RoundValuation::data_incentive(std::size_t i, const ClientSet& S) const {
  return std::max(0.0, std::expm1(log_data_incentive(i, S)));
}

double RoundValuation::log_marginal_contribution(std::size_t i, const ClientSet& S) const {
  const Matrix& dv = offer_.delta_V.at(i);
  if ((dv.array() == 0.0).all()) return 0.0;
  const Matrix base = pooled(S);
  return log_det_reg(base + dv, lambda_) - log_det_reg(base, lambda_);
}

double RoundValuation::marginal_contribution(std::size_t i, const ClientSet& S) const {
  return std::exp(log_marginal_contribution(i, S));
}

std::vector<std::size_t> RoundValuation::rank(std::span<const std::size_t> candidates,
                                              const ClientSet& S) const {
  const Matrix base = pooled(S);
  const double base_log_det = log_det_reg(base, lambda_);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidates.size());
  for (std::size_t i : candidates) {
    const Matrix& dv = offer_.delta_V.at(i);
    const double gain =
        (dv.array() == 0.0).all() ? 0.0 : log_det_reg(base + dv, lambda_) - base_log_det;
    scored.emplace_back(gain, i);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> out;
  out.reserve(scored.size());
  for (const auto& [gain, i] : scored) out.push_back(i);
  return out;
}

std::vector<std::size_t> RoundValuation::rank_outside(const ClientSet& S) const {
  std::vector<std::size_t> outside;
  for (std::size_t i = 0; i < n_clients(); ++i) {
    if (!S.contains(i)) outside.push_back(i);
  }
  return rank(outside, S);
}

IncentiveOutcome RoundValuation::settle(const ClientSet& participants,
                                        const ClientSet& money) const {
  const std::size_t n = n_clients();
  IncentiveOutcome out;
  out.participants = participants;
  out.money_incentivized = ClientSet::none(n);
  out.data_incentive.assign(n, 0.0);
  out.payment.assign(n, 0.0);
  for (std::size_t i : participants.members()) {
    out.data_incentive[i] = data_incentive(i, participants);
    if (money.universe() == n && money.contains(i)) {
      out.money_incentivized.insert(i);
      out.payment[i] = std::max(0.0, cost(i) - out.data_incentive[i]);
      out.total_payment += out.payment[i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mechanisms

IncentiveOutcome payment_free_select(const RoundValuation& v) {
  const std::size_t n = v.n_clients();
  ClientSet S = ClientSet::all(n);
  bool stable = false;
  while (!S.empty() && !stable) {
    stable = true;
    for (std::size_t i : S.members()) {
      if (v.data_incentive(i, S) < v.cost(i)) {
        S.erase(i);
        stable = false;
        break;
      }
    }
  }
  return v.settle(S, ClientSet::none(n));
}

namespace {

IncentiveOutcome settle_last_resort(const RoundValuation& v, const ClientSet& data_incentivized,
                                    const LastResort& last) {
  const std::size_t n = v.n_clients();
  ClientSet S = data_incentivized;
  ClientSet money = ClientSet::none(n);
  if (last.client) {
    S.insert(*last.client);
    money.insert(*last.client);
  } else {
    // Unreachable when the candidate list covers everyone outside the
    // data-incentivized set: the full set meets any β ≤ 1. Paying every
    // remaining client is the only β-feasible answer left.
    for (std::size_t i = 0; i < n; ++i) {
      if (!S.contains(i)) {
        S.insert(i);
        money.insert(i);
      }
    }
  }
  IncentiveOutcome out = v.settle(S, money);
  out.used_last_resort = true;
  if (last.client) out.last_resort_payment = last.payment;
  return out;
}

void absorb_data_incentivized(const RoundValuation& v, ClientSet& S,
                              std::vector<std::size_t>& remaining) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t j = 0; j < v.n_clients(); ++j) {
      if (S.contains(j)) continue;
      if (v.data_incentive(j, S) >= v.cost(j)) {
        S.insert(j);
        std::erase(remaining, j);
        changed = true;
      }
    }
  }
}

}  // namespace

IncentiveOutcome heuristic_search(const RoundValuation& v, std::span<const std::size_t> invalid,
                                  const ClientSet& data_incentivized, const LastResort& last,
                                  double beta, const MechanismOptions& options) {
  const std::size_t n = v.n_clients();
  ClientSet S = data_incentivized;
  ClientSet money = ClientSet::none(n);
  std::vector<std::size_t> remaining(invalid.begin(), invalid.end());
  for (std::size_t i : remaining) {
    if (S.contains(i)) throw std::invalid_argument("heuristic_search: candidate already in S");
  }

  while (!remaining.empty()) {
    std::size_t top = remaining.front();
    if (!options.disable_iterative_search) top = v.rank(remaining, S).front();
    std::erase(remaining, top);
    S.insert(top);
    money.insert(top);

    if (!options.disable_payment_free_absorption) absorb_data_incentivized(v, S, remaining);

    double total = 0.0;
    for (std::size_t i : money.members()) {
      total += std::max(0.0, v.cost(i) - v.data_incentive(i, S));
    }
    if (last.client && total > last.payment) {
      IncentiveOutcome out = settle_last_resort(v, data_incentivized, last);
      return out;
    }
    if (v.meets_beta(S, beta)) {
      IncentiveOutcome out = v.settle(S, money);
      if (last.client) out.last_resort_payment = last.payment;
      return out;
    }
  }
  return settle_last_resort(v, data_incentivized, last);
}

IncentiveOutcome payment_efficient_select(const RoundValuation& v, double beta,
                                          const MechanismOptions& options) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta", "must lie in [0, 1]");
  const std::size_t n = v.n_clients();

  const ClientSet data_incentivized = options.disable_payment_free_absorption
                                          ? ClientSet::none(n)
                                          : payment_free_select(v).participants;
  if (v.meets_beta(data_incentivized, beta)) {
    return v.settle(data_incentivized, ClientSet::none(n));
  }

  const std::vector<std::size_t> ranked = v.rank_outside(data_incentivized);
  LastResort last;
  std::size_t alpha = ranked.size();
  for (std::size_t j = 0; j < ranked.size(); ++j) {
    ClientSet candidate = data_incentivized;
    candidate.insert(ranked[j]);
    if (v.meets_beta(candidate, beta)) {
      alpha = j;
      last.client = ranked[j];
      last.payment = std::max(0.0, v.cost(ranked[j]) - v.data_incentive(ranked[j], candidate));
      break;
    }
  }
  const std::span<const std::size_t> invalid(ranked.data(), alpha);
  return heuristic_search(v, invalid, data_incentivized, last, beta, options);
}

// ---------------------------------------------------------------------------
// Exchange

void commit_exchange(ServerState& server, std::span<Client> clients,
                     const ClientSet& participants) {
  const std::size_t n = clients.size();
  if (server.n_clients() != n || participants.universe() != n) {
    throw std::invalid_argument("commit_exchange: inconsistent client counts");
  }
  for (std::size_t i : participants.members()) {
    const SuffStats& upload = clients[i].pending();
    server.global += upload;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) server.pending_down[j] += upload;
    }
    clients[i].clear_pending();
  }
  for (std::size_t i = 0; i < n; ++i) {
    clients[i].apply_download(server.pending_down[i]);
    server.pending_down[i].reset();
  }
}

}  // namespace incfed
