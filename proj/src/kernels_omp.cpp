// OpenMP kernels. Every iteration writes only its own slot and draws from its
// own derived stream, so results do not depend on the schedule. Failures are
// collected per iteration and the lowest failing index is rethrown after the
// parallel region, which is what the serial loop would have thrown.

#include <exception>
#include <limits>

#include "euler_detail.hpp"
#include "kernels_common.hpp"
#include "mvpmcmc/law.hpp"

namespace mvpmcmc::kernels::omp {

namespace {

struct FirstFailure {
  long index = std::numeric_limits<long>::max();
  std::exception_ptr error;

  void record(long i, std::exception_ptr e) {
#pragma omp critical(mvpmcmc_first_failure)
    {
      if (i < index) {
        index = i;
        error = std::move(e);
      }
    }
  }
  void rethrow() const {
    if (error) std::rethrow_exception(error);
  }
};

}  // namespace

EmpiricalMeasure euler_step(const Dynamics& dyn, const EmpiricalMeasure& particles, const EmpiricalMeasure& driving,
                            double dt, std::span<const double> noise) {
  detail::check_step_args(particles, driving, noise);
  const std::size_t d = particles.dim();
  const long n = static_cast<long>(particles.size());
  EmpiricalMeasure out(particles.size(), d);
  FirstFailure fail;
#pragma omp parallel
  {
    detail::EulerScratch scratch(d);
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      try {
        if (!detail::euler_particle(dyn, particles.particle(k), driving, dt, noise.subspan(k * d, d),
                                    out.particle(k), scratch)) {
          detail::throw_blow_up(i);
        }
      } catch (...) {
        fail.record(i, std::current_exception());
      }
    }
  }
  fail.rethrow();
  return out;
}

BrownianBlock draw_brownian_block(const RandStream& stream, Level level, std::size_t count, std::size_t dim) {
  BrownianBlock block{level.steps(), count, dim, std::vector<double>(level.steps() * count * dim)};
  const long n = static_cast<long>(count);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) detail::draw_particle_noise(stream, level, static_cast<std::size_t>(i), block);
  return block;
}

std::vector<TransitionSample> transition_batch(const Dynamics& dyn, const EmpiricalMeasure& starts,
                                               const LawPath& laws, const RandStream& stream, bool keep_paths) {
  std::vector<TransitionSample> out(starts.size());
  const long n = static_cast<long>(starts.size());
  FirstFailure fail;
#pragma omp parallel for schedule(static)
  for (long m = 0; m < n; ++m) {
    const auto k = static_cast<std::size_t>(m);
    try {
      out[k] = detail::transition_one(dyn, starts.particle(k), laws, stream, k, keep_paths);
    } catch (...) {
      fail.record(m, std::current_exception());
    }
  }
  fail.rethrow();
  return out;
}

std::vector<CoupledTransitionSample> coupled_transition_batch(const Dynamics& dyn, const EmpiricalMeasure& fine_starts,
                                                              const EmpiricalMeasure& coarse_starts,
                                                              const CoupledLawPath& laws, const RandStream& stream,
                                                              bool keep_paths) {
  detail::check_pair_shapes(fine_starts, coarse_starts);
  std::vector<CoupledTransitionSample> out(fine_starts.size());
  const long n = static_cast<long>(fine_starts.size());
  FirstFailure fail;
#pragma omp parallel for schedule(static)
  for (long m = 0; m < n; ++m) {
    const auto k = static_cast<std::size_t>(m);
    try {
      out[k] = detail::coupled_transition_one(dyn, fine_starts.particle(k), coarse_starts.particle(k), laws, stream, k,
                                              keep_paths);
    } catch (...) {
      fail.record(m, std::current_exception());
    }
  }
  fail.rethrow();
  return out;
}

}  // namespace mvpmcmc::kernels::omp
