#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvpmcmc/core.hpp"
#include "mvpmcmc/law.hpp"
#include "mvpmcmc/model.hpp"
#include "mvpmcmc/rng.hpp"

namespace mvpmcmc {

struct WeightVector {
  std::vector<double> log_weights;
  std::vector<double> normalized;
  /// log((1/M) sum exp(log_weights)).
  double log_mean = 0.0;
};

/// Max-shifted softmax. NaN entries count as zero weight. Throws a degeneracy
/// error "total weight collapse" when no weight is positive.
WeightVector normalize_log_weights(std::span<const double> log_w);

enum class Resampling { Multinomial, Systematic };

/// M i.i.d. categorical draws from w.normalized (0-based ancestor indices).
std::vector<std::size_t> multinomial_resample(const WeightVector& w, std::size_t M, RandStream& stream);
std::vector<std::size_t> systematic_resample(const WeightVector& w, std::size_t M, RandStream& stream);
std::vector<std::size_t> resample(Resampling scheme, const WeightVector& w, std::size_t M, RandStream& stream);
/// One categorical draw.
std::size_t sample_index(const WeightVector& w, RandStream& stream);

/// log(0.5 * (g(x_fine, y) + g(x_coarse, y))).
double coupled_weight_H(const Dynamics& dyn, std::span<const double> x_fine, std::span<const double> x_coarse,
                        std::span<const double> y);
/// log g(x_first, y) - log H(x_first, x_second, y).
double correction_weight_Hcheck(const Dynamics& dyn, std::span<const double> x_first,
                                std::span<const double> x_second, std::span<const double> y);

/// Same quantities from precomputed log g values.
double log_average_pair(double log_g_a, double log_g_b);
double log_hcheck(double log_g_first, double log_g_second);

/// How the Delta PF weights particle pairs. FineOnly replaces H by g(fine); it
/// exists to validate the coupled filter against the bootstrap one.
enum class CoupledWeighting { Averaged, FineOnly };

struct FilterOptions {
  Resampling resampling = Resampling::Multinomial;
  CoupledWeighting weighting = CoupledWeighting::Averaged;
  /// Keep the fine-grid intermediate states of the traced trajectory.
  bool keep_paths = false;
  /// Use the reference serial kernels instead of the OpenMP ones.
  bool serial = false;
};

struct FilterOutput {
  double log_likelihood = 0.0;
  Trajectory trajectory;
  /// When requested: segment t-1 holds the states on (t-1, t] of the traced particle.
  std::vector<std::vector<StateVec>> paths;
};

struct CoupledFilterOutput {
  double log_likelihood = 0.0;
  Trajectory fine_trajectory;
  Trajectory coarse_trajectory;
  std::vector<std::vector<StateVec>> fine_paths;
  std::vector<std::vector<StateVec>> coarse_paths;
};

/// Bootstrap particle filter through frozen laws (laws[t-1] covers [t-1, t]).
/// Collapse errors carry the 1-based time step in Error::index().
FilterOutput bootstrap_pf(const Dynamics& dyn, const std::vector<LawPath>& laws, const Dataset& data, std::size_t M,
                          const RandStream& stream, const FilterOptions& opts = {});

/// Delta particle filter on fine/coarse pairs sharing one ancestor vector.
CoupledFilterOutput delta_pf(const Dynamics& dyn, const std::vector<CoupledLawPath>& laws, const Dataset& data,
                             std::size_t M, const RandStream& stream, const FilterOptions& opts = {});

}  // namespace mvpmcmc
