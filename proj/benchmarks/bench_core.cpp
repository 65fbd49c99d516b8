#include <random>

#include <benchmark/benchmark.h>

#include "incfed/incentives.hpp"
#include "incfed/protocol.hpp"

namespace {

using namespace incfed;

Matrix random_gram(std::mt19937_64& rng, Index d, int rank) {
  std::normal_distribution<double> g;
  Matrix M = Matrix::Zero(d, d);
  for (int r = 0; r < rank; ++r) {
    Vector v(d);
    for (Index i = 0; i < d; ++i) v[i] = g(rng);
    M += v * v.transpose();
  }
  return M;
}

void BM_LogDetReg(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Index d = state.range(0);
  const Matrix V = random_gram(rng, d, static_cast<int>(2 * d));
  for (auto _ : state) benchmark::DoNotOptimize(log_det_reg(V, 1.0));
}
BENCHMARK(BM_LogDetReg)->Arg(5)->Arg(25);

void BM_UcbScore(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Index d = state.range(0);
  const SuffStats S(random_gram(rng, d, static_cast<int>(2 * d)), Vector::Ones(d));
  const Vector x = Vector::Ones(d).normalized();
  for (auto _ : state) benchmark::DoNotOptimize(ucb_score(x, S, {}));
}
BENCHMARK(BM_UcbScore)->Arg(5)->Arg(25);

void BM_PaymentEfficient(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Index d = state.range(1);
  ServerState server(n, d);
  server.global = SuffStats(random_gram(rng, d, 40), Vector::Zero(d));
  Offer offer;
  std::vector<Matrix> client_V;
  std::uniform_real_distribution<double> cost(0.0, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    offer.delta_V.push_back(random_gram(rng, d, 3));
    offer.cost.push_back(cost(rng));
    client_V.push_back(server.global.V() + offer.delta_V.back());
  }
  const RoundValuation v(offer, server, client_V, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(payment_efficient_select(v, 0.7));
}
BENCHMARK(BM_PaymentEfficient)->Args({10, 5})->Args({50, 25})->Unit(benchmark::kMillisecond);

void BM_DeskRun(benchmark::State& state) {
  EnvConfig ec;
  ec.n_clients = 10;
  ec.horizon = 2000;
  ec.dim = 5;
  ec.pool_size = 10;
  const auto env = Environment::synthetic(ec);
  ProtocolConfig cfg;
  cfg.beta = 0.7;
  cfg.costs.assign(10, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(run_protocol(env, cfg).final_value());
}
BENCHMARK(BM_DeskRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
