#pragma once

// Per-particle Euler-Maruyama update shared by the serial and OpenMP kernels.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mvpmcmc/error.hpp"
#include "mvpmcmc/law.hpp"
#include "mvpmcmc/model.hpp"

namespace mvpmcmc::detail {

struct EulerScratch {
  std::vector<double> drift;
  std::vector<double> diffusion;

  explicit EulerScratch(std::size_t d) : drift(d), diffusion(d * d) {}
};

inline bool within_bounds(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v) || std::fabs(v) > kBlowUpThreshold) return false;
  }
  return true;
}

[[noreturn]] inline void throw_blow_up(long index) {
  throw Error(ErrorKind::Numeric, "numeric blow-up",
              "particle " + std::to_string(index) + " left the finite range", index);
}

/// out = x + a(x, zeta1) dt + b(x, zeta2) dw. `out` must not alias `x`.
/// Returns false when the new state is out of range.
inline bool euler_particle(const Dynamics& dyn, std::span<const double> x, const EmpiricalMeasure& driving, double dt,
                           std::span<const double> dw, std::span<double> out, EulerScratch& scratch) {
  const std::size_t d = x.size();
  const double z1 = eval_interaction(dyn, Interaction::Drift, x, driving);
  const double z2 = eval_interaction(dyn, Interaction::Diffusion, x, driving);
  dyn.drift(x, z1, scratch.drift);
  dyn.diffusion(x, z2, scratch.diffusion);
  for (std::size_t r = 0; r < d; ++r) {
    double v = x[r] + scratch.drift[r] * dt;
    const double* row = scratch.diffusion.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) v += row[c] * dw[c];
    out[r] = v;
  }
  return within_bounds(out);
}

}  // namespace mvpmcmc::detail
