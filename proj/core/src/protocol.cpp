#include "incfed/protocol.hpp"

#include <cmath>
#include <exception>
#include <string>

#include "incfed/error.hpp"

namespace incfed {

namespace {

constexpr double kAuditTolerance = 1e-9;

double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

}  // namespace

std::string_view to_string(Mechanism m) noexcept {
  switch (m) {
    case Mechanism::payment_free: return "pf";
    case Mechanism::payment_efficient: return "pe";
    case Mechanism::dislinucb: return "dislinucb";
    case Mechanism::none: return "none";
  }
  return "unknown";
}

std::optional<Mechanism> parse_mechanism(std::string_view name) noexcept {
  if (name == "pf") return Mechanism::payment_free;
  if (name == "pe") return Mechanism::payment_efficient;
  if (name == "dislinucb") return Mechanism::dislinucb;
  if (name == "none") return Mechanism::none;
  return std::nullopt;
}

void ProtocolConfig::validate(std::size_t n_clients) const {
  model.validate();
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta", "must lie in [0, 1]");
  if (d_c && (!(*d_c >= 0.0) || !std::isfinite(*d_c))) {
    throw ConfigError("dc", "threshold must be finite and >= 0");
  }
  if (!costs.empty() && costs.size() != n_clients) {
    throw ConfigError("costs", "expected " + std::to_string(n_clients) + " values, got " +
                                   std::to_string(costs.size()));
  }
  for (double c : costs) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("costs", "must be finite and >= 0");
  }
}

double theoretical_Dc(std::size_t T, std::size_t N, std::size_t d, double lambda, double beta) {
  if (T < 2) throw ConfigError("T", "theoretical D_c needs T >= 2");
  if (N < 1 || d < 1) throw ConfigError("N", "N and d must be >= 1");
  if (!(lambda > 0.0)) throw ConfigError("lambda", "must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta", "theoretical D_c needs beta in (0, 1]");
  const double t = static_cast<double>(T);
  const double n = static_cast<double>(N);
  const double dd = static_cast<double>(d);
  const double log_t = std::log(t);
  const double R = std::ceil(dd * std::log1p(t / (lambda * dd)));
  const double first = t / (n * n * dd * log_t);
  if (beta == 1.0) return first;
  return first - std::sqrt(t * t / (n * n * dd * R * log_t)) * std::log(beta);
}

std::uint64_t round_comm_cost(std::size_t N, std::size_t n_participants, std::size_t d) {
  const std::uint64_t n = N;
  const std::uint64_t dd = d;
  return n * dd * dd + static_cast<std::uint64_t>(n_participants) * dd + n * (dd * dd + dd);
}

Protocol::Protocol(const Environment& env, ProtocolConfig cfg) : env_(&env), cfg_(std::move(cfg)) {
  const std::size_t n = env.n_clients();
  cfg_.validate(n);
  if (cfg_.costs.empty()) cfg_.costs.assign(n, 0.0);

  if (cfg_.mechanism == Mechanism::none) {
    metrics_.d_c = cfg_.d_c.value_or(0.0);
  } else if (cfg_.d_c) {
    metrics_.d_c = *cfg_.d_c;
  } else {
    const double beta = cfg_.mechanism == Mechanism::payment_efficient ? cfg_.beta : 1.0;
    if (beta <= 0.0) throw ConfigError("dc", "theoretical D_c is undefined for beta = 0");
    metrics_.d_c = theoretical_Dc(env.horizon(), n, env.dim(), cfg_.model.lambda, beta);
  }

  const auto dim = static_cast<Index>(env.dim());
  clients_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) clients_.emplace_back(i, dim, cfg_.costs[i]);
  server_ = ServerState(n, dim);
  oracle_ = SuffStats(dim);

  metrics_.reports_regret = env.mode() == EnvMode::synthetic;
  metrics_.cum_regret_or_reward.reserve(env.horizon());
  metrics_.cum_comm_scalars.reserve(env.horizon());
  metrics_.cum_payment.reserve(env.horizon());
  metrics_.choices.reserve(env.horizon());
}

void Protocol::advance() {
  if (done()) throw std::out_of_range("protocol already finished");
  const std::size_t t = next_step_;
  try {
    step_once(t);
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(t, e.what());
  }
  ++next_step_;
}

void Protocol::run_to_end() {
  while (!done()) advance();
}

void Protocol::step_once(std::size_t t) {
  const RoundObservation& obs = env_->step(t);
  Client& client = clients_.at(obs.active_client);

  const std::size_t k = client.select_arm(obs.arms, cfg_.model);
  const Vector x = obs.arm(k);
  const double y = env_->draw_reward(t, k);
  if (metrics_.reports_regret) {
    value_ += env_->best_expected(t) - env_->expected_reward(t, k);
  } else {
    value_ += y;
  }

  client.observe(x, y);
  oracle_.add_observation(x, y);

  if (cfg_.mechanism != Mechanism::none &&
      client.trigger_fires(metrics_.d_c, cfg_.model.lambda)) {
    communicate(t, obs.active_client);
  }

  metrics_.choices.push_back(k);
  metrics_.cum_regret_or_reward.push_back(value_);
  metrics_.cum_comm_scalars.push_back(scalars_);
  metrics_.cum_payment.push_back(payment_);
}

IncentiveOutcome Protocol::select(const RoundValuation& v) const {
  switch (cfg_.mechanism) {
    case Mechanism::payment_free:
      return payment_free_select(v);
    case Mechanism::payment_efficient:
      return payment_efficient_select(v, cfg_.beta, cfg_.ablations);
    case Mechanism::dislinucb:
    case Mechanism::none:
      break;
  }
  IncentiveOutcome out;
  const std::size_t n = v.n_clients();
  out.participants = ClientSet::all(n);
  out.money_incentivized = ClientSet::none(n);
  out.data_incentive.assign(n, 0.0);
  out.payment.assign(n, 0.0);
  return out;
}

void Protocol::communicate(std::size_t t, std::size_t trigger_client) {
  const std::size_t n = clients_.size();
  const std::size_t d = env_->dim();

  std::size_t uploads = n;
  if (cfg_.skip_zero_uploads) {
    uploads = 0;
    for (const Client& c : clients_) uploads += c.pending().V_is_zero() ? 0 : 1;
  }

  std::vector<Matrix> client_V;
  client_V.reserve(n);
  for (const Client& c : clients_) client_V.push_back(c.synced().V());
  const RoundValuation valuation(collect_offer(clients_), server_, client_V, cfg_.model.lambda);
  const IncentiveOutcome outcome = select(valuation);

  if (observer_) observer_(RoundAudit{t, trigger_client, valuation, outcome});

  commit_exchange(server_, clients_, outcome.participants);

  const std::size_t n_part = outcome.participants.size();
  const std::uint64_t scalars = cfg_.skip_zero_uploads
                                    ? static_cast<std::uint64_t>(uploads) * d * d +
                                          static_cast<std::uint64_t>(n_part) * d +
                                          static_cast<std::uint64_t>(n) * (d * d + d)
                                    : round_comm_cost(n, n_part, d);
  scalars_ += scalars;
  payment_ += outcome.total_payment;

  const double gap = log_det_reg(server_.global, cfg_.model.lambda) -
                     log_det_reg(oracle_, cfg_.model.lambda);

  if (cfg_.audit) {
    Matrix total = server_.global.V();
    for (const Client& c : clients_) total += c.pending().V();
    const double drift = max_abs(total - oracle_.V());
    if (drift > kAuditTolerance * (1.0 + max_abs(oracle_.V()))) {
      throw ProtocolError(t, "conservation violated: drift " + std::to_string(drift));
    }
    if (cfg_.mechanism == Mechanism::payment_efficient && cfg_.beta > 0.0 &&
        gap < std::log(cfg_.beta) - kAuditTolerance) {
      throw ProtocolError(t, "beta gap violated: log ratio " + std::to_string(gap));
    }
  }

  metrics_.epochs.push_back(EpochRecord{t, trigger_client, n_part, outcome.total_payment, scalars, gap});
}

RunMetrics run_protocol(const Environment& env, const ProtocolConfig& cfg) {
  Protocol p(env, cfg);
  p.run_to_end();
  return std::move(p).take_metrics();
}

}  // namespace incfed
