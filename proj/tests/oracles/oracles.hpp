#pragma once

// Reference computations used only by tests. Nothing here calls into the
// library's factorization or mechanism code: determinants come from cofactor
// expansion and subsets are enumerated exhaustively.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "incfed/incentives.hpp"
#include "incfed/stats.hpp"

namespace incfed::oracle {

/// Laplace expansion along the first row. Exponential cost; d ≤ 6 only.
double cofactor_det(const Matrix& M);

/// det(M + λI) by cofactor expansion.
double det_reg(const Matrix& M, double lambda);

/// Random PSD matrix: sum of `rank` outer products of Gaussian vectors.
Matrix random_psd(std::mt19937_64& rng, Index d, int rank, double scale = 1.0);

/// One communication round in explicit form.
struct Instance {
  double lambda = 1.0;
  Matrix global_V;
  std::vector<Matrix> pending_down_V;
  std::vector<Matrix> client_V;
  std::vector<Matrix> delta_V;
  std::vector<double> cost;

  std::size_t n() const { return delta_V.size(); }
  Index d() const { return global_V.rows(); }

  /// The same round as the library sees it.
  RoundValuation valuation() const;
};

/// Random instance with client covariances that dominate their deltas; some
/// deltas are zero (and then cost zero).
Instance random_instance(std::mt19937_64& rng, std::size_t n, Index d);

using Subset = std::uint32_t;  // bit i set ⇔ client i in S

ClientSet to_client_set(Subset s, std::size_t n);
Subset to_subset(const ClientSet& S);

/// det(D + V_i + λI)/det(V_i + λI) − 1 with D = Σ_{j∈S, j≠i} ΔV_j + pending_down_i.
double data_incentive(const Instance& in, std::size_t i, Subset S);

/// det(V_g(S)+λI)/det(V_g(all)+λI).
double gap_ratio(const Instance& in, Subset S);

/// det(ΔV_i + V_g(S) + λI)/det(V_g(S) + λI).
double contribution(const Instance& in, std::size_t i, Subset S);

/// Every member's data incentive covers its cost.
bool is_stable(const Instance& in, Subset S);

/// Union of all stable subsets. Because data incentives only grow with S,
/// this union is itself stable and is the unique largest stable set.
Subset largest_stable_set(const Instance& in);

/// Σ_{i∈S} max(0, cost_i − data_incentive(i, S)): the least payment that
/// makes S individually rational.
double min_payment(const Instance& in, Subset S);

/// Cheapest β-feasible subset over all 2^N subsets.
struct Optimum {
  Subset set = 0;
  double payment = 0.0;
};
Optimum exhaustive_optimum(const Instance& in, double beta);

/// Last resort recomputed from scratch: among clients outside `base`, the
/// one ranked highest by contribution (ties to lower id) whose sole addition
/// meets β, and its deficit. nullopt when none qualifies.
struct LastResortRef {
  std::size_t client;
  double payment;
};
std::optional<LastResortRef> last_resort(const Instance& in, Subset base, double beta);

}  // namespace incfed::oracle
