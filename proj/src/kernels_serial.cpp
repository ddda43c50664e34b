// Reference kernels. Kept deliberately plain; the OpenMP versions are checked
// against these bit-for-bit.

#include "euler_detail.hpp"
#include "kernels_common.hpp"
#include "mvpmcmc/law.hpp"

namespace mvpmcmc::kernels::serial {

EmpiricalMeasure euler_step(const Dynamics& dyn, const EmpiricalMeasure& particles, const EmpiricalMeasure& driving,
                            double dt, std::span<const double> noise) {
  detail::check_step_args(particles, driving, noise);
  const std::size_t d = particles.dim();
  EmpiricalMeasure out(particles.size(), d);
  detail::EulerScratch scratch(d);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (!detail::euler_particle(dyn, particles.particle(i), driving, dt, noise.subspan(i * d, d), out.particle(i),
                                scratch)) {
      detail::throw_blow_up(static_cast<long>(i));
    }
  }
  return out;
}

BrownianBlock draw_brownian_block(const RandStream& stream, Level level, std::size_t count, std::size_t dim) {
  BrownianBlock block{level.steps(), count, dim, std::vector<double>(level.steps() * count * dim)};
  for (std::size_t i = 0; i < count; ++i) detail::draw_particle_noise(stream, level, i, block);
  return block;
}

std::vector<TransitionSample> transition_batch(const Dynamics& dyn, const EmpiricalMeasure& starts,
                                               const LawPath& laws, const RandStream& stream, bool keep_paths) {
  std::vector<TransitionSample> out(starts.size());
  for (std::size_t m = 0; m < starts.size(); ++m) {
    out[m] = detail::transition_one(dyn, starts.particle(m), laws, stream, m, keep_paths);
  }
  return out;
}

std::vector<CoupledTransitionSample> coupled_transition_batch(const Dynamics& dyn, const EmpiricalMeasure& fine_starts,
                                                              const EmpiricalMeasure& coarse_starts,
                                                              const CoupledLawPath& laws, const RandStream& stream,
                                                              bool keep_paths) {
  detail::check_pair_shapes(fine_starts, coarse_starts);
  std::vector<CoupledTransitionSample> out(fine_starts.size());
  for (std::size_t m = 0; m < fine_starts.size(); ++m) {
    out[m] = detail::coupled_transition_one(dyn, fine_starts.particle(m), coarse_starts.particle(m), laws, stream, m,
                                            keep_paths);
  }
  return out;
}

}  // namespace mvpmcmc::kernels::serial
