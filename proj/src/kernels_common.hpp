#pragma once

#include <cmath>
#include <string>

#include "mvpmcmc/error.hpp"
#include "mvpmcmc/law.hpp"

namespace mvpmcmc::detail {

inline void check_step_args(const EmpiricalMeasure& particles, const EmpiricalMeasure& driving,
                            std::span<const double> noise) {
  if (driving.empty()) throw Error(ErrorKind::Domain, "degenerate measure", "empty driving measure");
  if (driving.dim() != particles.dim()) throw Error(ErrorKind::Domain, "domain", "driving measure dimension differs");
  if (noise.size() != particles.size() * particles.dim()) {
    throw Error(ErrorKind::Domain, "domain", "need one noise vector per particle");
  }
}

inline void check_pair_shapes(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size() || a.dim() != b.dim()) {
    throw Error(ErrorKind::Domain, "domain", "fine and coarse particle sets differ in shape");
  }
}

inline void draw_particle_noise(const RandStream& stream, Level level, std::size_t i, BrownianBlock& block) {
  RandStream s = stream.child("particle", i);
  const double dt = level.delta();
  for (std::size_t j = 0; j < block.steps; ++j) {
    double* p = block.increments.data() + (j * block.count + i) * block.dim;
    s.fill_gaussian({p, block.dim}, dt);
  }
}

// Transition of filter particle m, re-tagging blow-ups with the particle index.
inline TransitionSample transition_one(const Dynamics& dyn, std::span<const double> start, const LawPath& laws,
                                       const RandStream& stream, std::size_t m, bool keep_path) {
  RandStream s = stream.child("particle", m);
  try {
    return sample_transition_path(dyn, start, laws, s, keep_path);
  } catch (const Error& e) {
    if (e.code() != "numeric blow-up") throw;
    throw Error(ErrorKind::Numeric, "numeric blow-up", "filter particle " + std::to_string(m) + " left the finite range",
                static_cast<long>(m));
  }
}

inline CoupledTransitionSample coupled_transition_one(const Dynamics& dyn, std::span<const double> fine_start,
                                                      std::span<const double> coarse_start, const CoupledLawPath& laws,
                                                      const RandStream& stream, std::size_t m, bool keep_path) {
  RandStream s = stream.child("particle", m);
  try {
    return sample_coupled_transition_path(dyn, fine_start, coarse_start, laws, s, keep_path);
  } catch (const Error& e) {
    if (e.code() != "numeric blow-up") throw;
    throw Error(ErrorKind::Numeric, "numeric blow-up", "filter particle " + std::to_string(m) + " left the finite range",
                static_cast<long>(m));
  }
}

}  // namespace mvpmcmc::detail
