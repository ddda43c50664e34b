#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mvpmcmc/core.hpp"
#include "mvpmcmc/model.hpp"
#include "mvpmcmc/rng.hpp"

namespace mvpmcmc {

/// Any coordinate beyond this magnitude aborts a step as a blow-up.
inline constexpr double kBlowUpThreshold = 1e12;

/// Dyadic discretization level: step 2^-l, 2^l steps per unit interval.
struct Level {
  int l = 0;

  double delta() const { return 1.0 / static_cast<double>(steps()); }
  std::size_t steps() const { return std::size_t{1} << l; }
  friend bool operator==(const Level&, const Level&) = default;
};

/// Fine-grid Brownian increments for one unit interval, laid out
/// [step][particle][coordinate]. Each entry is N(0, delta) for the block's level.
struct BrownianBlock {
  std::size_t steps = 0;
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<double> increments;

  std::span<const double> step(std::size_t j) const { return {increments.data() + j * count * dim, count * dim}; }
  std::span<const double> at(std::size_t j, std::size_t i) const {
    return {increments.data() + (j * count + i) * dim, dim};
  }
};

/// Particle clouds over one unit interval [t-1, t]. measures[j] is the cloud at
/// t-1+j*delta and drives the step to t-1+(j+1)*delta; end is the cloud at t.
struct LawPath {
  Level level;
  std::vector<EmpiricalMeasure> measures;
  EmpiricalMeasure end;

  std::size_t particle_count() const { return end.size(); }
};

/// Fine (level l) and coarse (level l-1) clouds built from the same N particles
/// with coarse increments formed from pairs of fine ones. The noise blocks are
/// kept only when recording is requested.
struct CoupledLawPath {
  LawPath fine;
  LawPath coarse;
  std::optional<BrownianBlock> fine_noise;
  std::optional<BrownianBlock> coarse_noise;
};

/// Endpoint of one transition and, on request, the intermediate states
/// x_{t-1+delta}, ..., x_t.
struct TransitionSample {
  StateVec end;
  std::vector<StateVec> path;
};

struct CoupledTransitionSample {
  TransitionSample fine;
  TransitionSample coarse;
};

/// Draws the block: particle i reads stream.child("particle", i) in step-major order.
BrownianBlock draw_brownian_block(const RandStream& stream, Level level, std::size_t count, std::size_t dim);
/// Coarse block whose step j is the sum of fine steps 2j and 2j+1.
BrownianBlock coarsen(const BrownianBlock& fine);

/// One Euler-Maruyama step of every particle against a frozen driving measure:
///   X' = X + a(X, zeta1_bar(X, driving)) dt + b(X, zeta2_bar(X, driving)) dW.
/// `noise` holds one d-vector per particle. Throws "numeric blow-up" with the
/// particle index when a coordinate leaves [-1e12, 1e12] or is not finite.
EmpiricalMeasure euler_step(const Dynamics& dyn, const EmpiricalMeasure& particles,
                            const EmpiricalMeasure& driving, double dt, std::span<const double> noise);

/// Initial law cloud: particle i draws X_0 from stream.child("particle", i).
EmpiricalMeasure initial_cloud(const Dynamics& dyn, std::size_t count, const RandStream& stream);

/// Self-driven particle system over one unit interval.
LawPath propagate_law_block(const Dynamics& dyn, const EmpiricalMeasure& init, Level level,
                            const RandStream& stream);

/// Fine cloud on level l and coarse cloud on level l-1 sharing Brownian paths.
/// Throws "no coarser level" for l = 0.
CoupledLawPath propagate_coupled_law_block(const Dynamics& dyn, const EmpiricalMeasure& fine_init,
                                           const EmpiricalMeasure& coarse_init, Level fine_level,
                                           const RandStream& stream, bool record_noise = false);

/// Law paths for t = 1..T starting from an initial cloud of `count` particles.
std::vector<LawPath> propagate_laws(const Dynamics& dyn, std::size_t count, std::size_t horizon, Level level,
                                    const RandStream& stream);
std::vector<CoupledLawPath> propagate_coupled_laws(const Dynamics& dyn, std::size_t count, std::size_t horizon,
                                                   Level fine_level, const RandStream& stream);

/// One particle driven through the frozen measures of `laws`.
TransitionSample sample_transition_path(const Dynamics& dyn, std::span<const double> start, const LawPath& laws,
                                        RandStream& stream, bool keep_path = false);

/// Fine and coarse particles driven by shared Brownian increments through the
/// frozen measures of `laws`.
CoupledTransitionSample sample_coupled_transition_path(const Dynamics& dyn, std::span<const double> fine_start,
                                                       std::span<const double> coarse_start,
                                                       const CoupledLawPath& laws, RandStream& stream,
                                                       bool keep_path = false);

namespace kernels {

/// Reference implementations: straightforward loops, no threading.
namespace serial {
EmpiricalMeasure euler_step(const Dynamics& dyn, const EmpiricalMeasure& particles, const EmpiricalMeasure& driving,
                            double dt, std::span<const double> noise);
BrownianBlock draw_brownian_block(const RandStream& stream, Level level, std::size_t count, std::size_t dim);
std::vector<TransitionSample> transition_batch(const Dynamics& dyn, const EmpiricalMeasure& starts,
                                               const LawPath& laws, const RandStream& stream, bool keep_paths);
std::vector<CoupledTransitionSample> coupled_transition_batch(const Dynamics& dyn, const EmpiricalMeasure& fine_starts,
                                                              const EmpiricalMeasure& coarse_starts,
                                                              const CoupledLawPath& laws, const RandStream& stream,
                                                              bool keep_paths);
}  // namespace serial

/// OpenMP versions; results are bit-identical to the serial ones for any thread count.
namespace omp {
EmpiricalMeasure euler_step(const Dynamics& dyn, const EmpiricalMeasure& particles, const EmpiricalMeasure& driving,
                            double dt, std::span<const double> noise);
BrownianBlock draw_brownian_block(const RandStream& stream, Level level, std::size_t count, std::size_t dim);
std::vector<TransitionSample> transition_batch(const Dynamics& dyn, const EmpiricalMeasure& starts,
                                               const LawPath& laws, const RandStream& stream, bool keep_paths);
std::vector<CoupledTransitionSample> coupled_transition_batch(const Dynamics& dyn, const EmpiricalMeasure& fine_starts,
                                                              const EmpiricalMeasure& coarse_starts,
                                                              const CoupledLawPath& laws, const RandStream& stream,
                                                              bool keep_paths);
}  // namespace omp

}  // namespace kernels

}  // namespace mvpmcmc
