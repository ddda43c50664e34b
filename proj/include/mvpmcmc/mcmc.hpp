#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mvpmcmc/core.hpp"
#include "mvpmcmc/filters.hpp"
#include "mvpmcmc/law.hpp"
#include "mvpmcmc/model.hpp"
#include "mvpmcmc/rng.hpp"

namespace mvpmcmc {

/// Diagonal Gaussian random walk on the unconstrained scale. A zero scale
/// freezes its coordinate.
struct ProposalConfig {
  std::vector<double> step_scales;
};

struct ChainConfig {
  std::size_t iterations = 1000;  // K
  std::size_t burn_in = 0;
  Level level;
  std::size_t law_particles = 100;   // N
  std::size_t filter_particles = 50;  // M
  ProposalConfig proposal;
  /// Explicit starting point; drawn from the prior when absent.
  std::optional<ParamVector> theta0;
  FilterOptions filter;
  /// Abort when more than this fraction of proposals fail numerically.
  double max_failure_rate = 0.5;

  void validate(const Model& model) const;
};

struct ChainSample {
  ParamVector theta;
  double log_lik = 0.0;
  Trajectory trajectory;
  bool accepted = false;
};

struct CoupledChainSample {
  ParamVector theta;
  double log_lik = 0.0;
  Trajectory fine_trajectory;
  Trajectory coarse_trajectory;
  bool accepted = false;
};

struct ChainStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t out_of_support = 0;
  /// Proposals rejected because the filter collapsed or the dynamics blew up.
  std::size_t failures = 0;

  double acceptance_rate() const { return proposals ? static_cast<double>(accepted) / proposals : 0.0; }
  double failure_rate() const { return proposals ? static_cast<double>(failures) / proposals : 0.0; }
};

template <class Sample>
struct ChainRun {
  std::vector<Sample> samples;  // K + 1 states, index 0 is the starting point
  ChainStats stats;
};

using PmcmcChain = ChainRun<ChainSample>;
using BilevelChain = ChainRun<CoupledChainSample>;

/// theta' = from_unconstrained(to_unconstrained(theta) + eps), eps ~ N(0, diag(scales^2)).
ParamVector propose(const ParamVector& theta, const ProposalConfig& cfg, const ParamTransform& transform,
                    RandStream& stream);

/// min{1, exp(log_lik' + log_prior' + log_q_rev - log_lik - log_prior - log_q_fwd)}.
double mh_log_accept(double log_lik_prop, double log_prior_prop, double log_q_fwd, double log_q_rev, double log_lik,
                     double log_prior);

/// Log proposal density terms for the natural-scale parameters (log q(theta'|theta),
/// log q(theta|theta')) up to the shared Gaussian constant.
std::pair<double, double> proposal_log_densities(const ParamVector& current, const ParamVector& proposed,
                                                 const ParamTransform& transform);

/// Single-level particle marginal Metropolis-Hastings.
PmcmcChain run_pmcmc_chain(const Model& model, const Dataset& data, const ChainConfig& cfg, const RandStream& stream);

/// Bi-level chain on (level, level - 1) driven by the Delta particle filter.
BilevelChain run_bilevel_chain(const Model& model, const Dataset& data, const ChainConfig& cfg,
                               const RandStream& stream);

}  // namespace mvpmcmc
