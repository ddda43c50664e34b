#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mvpmcmc/core.hpp"
#include "mvpmcmc/mcmc.hpp"
#include "mvpmcmc/model.hpp"

namespace mvpmcmc {

/// Resources per level l = l_star..L; N[i] and K[i] belong to level l_star + i.
struct LevelPlan {
  int l_star = 0;
  int L = 0;
  std::vector<std::size_t> N;
  std::vector<std::size_t> K;
  std::size_t M = 1;
  std::optional<double> epsilon;

  std::size_t levels() const { return static_cast<std::size_t>(L - l_star + 1); }
  std::size_t N_at(int l) const { return N.at(static_cast<std::size_t>(l - l_star)); }
  std::size_t K_at(int l) const { return K.at(static_cast<std::size_t>(l - l_star)); }
  void validate() const;
};

/// Mean of phi over samples[burn_in..]. Throws "insufficient samples" when nothing is retained.
double estimate_base(const std::vector<ChainSample>& samples, const TestFunctional& phi, std::size_t burn_in);

/// Log change-of-measure weights of each retained coupled sample:
///   fine[k]   = sum_s log Hcheck(x_s, x~_s; y_s)
///   coarse[k] = sum_s log Hcheck(x~_s, x_s; y_s)
struct IncrementWeights {
  std::vector<double> log_fine;
  std::vector<double> log_coarse;
  std::size_t burn_in = 0;
};

IncrementWeights increment_weights(const std::vector<CoupledChainSample>& samples, const Model& model,
                                   const Dataset& data, std::size_t burn_in);

struct IncrementEstimate {
  double value = 0.0;
  double fine_mean = 0.0;    // self-normalized average of phi(theta, x^l)
  double coarse_mean = 0.0;  // self-normalized average of phi(theta, x~^{l-1})
  double ess_fine = 0.0;     // 1 / sum of squared normalized weights
  double ess_coarse = 0.0;
};

IncrementEstimate weighted_increment(const std::vector<CoupledChainSample>& samples, const IncrementWeights& w,
                                     const TestFunctional& phi);

/// Fine-minus-coarse self-normalized difference. Throws "weight degeneracy"
/// naming the side whose weights all vanish.
double estimate_increment(const std::vector<CoupledChainSample>& samples, const Model& model, const Dataset& data,
                          const TestFunctional& phi, std::size_t burn_in);

struct MLEstimate {
  double value = 0.0;
  double base_term = 0.0;
  std::vector<double> increments;
  std::vector<double> ess_fine;
  std::vector<double> ess_coarse;
};

MLEstimate combine_ml_estimate(double base, const std::vector<double>& increments);

/// L = max(l_star+1, ceil(log2(1/eps))), K_l = ceil(c_K eps^-2 Delta_l^{6/7}),
/// N_l = ceil(c_N eps^-2 Delta_l^{1/2}).
LevelPlan allocate_levels(double epsilon, int l_star, double c_K, double c_N, std::size_t M);

/// Single-level counterpart: level ceil(log2(1/eps)) (at least l_min),
/// K = ceil(c_K eps^-2), N = ceil(c_N eps^-2).
LevelPlan allocate_single_level(double epsilon, double c_K, double c_N, std::size_t M, int l_min = 0);

/// sum_l K_l Delta_l^{-1} (N_l^2 + M N_l) T.
double plan_cost(const LevelPlan& plan, std::size_t T);

/// Burn-in for a chain of K iterations under a fraction (floor, capped at K-1).
std::size_t burn_in_for(std::size_t K, double fraction);

}  // namespace mvpmcmc
