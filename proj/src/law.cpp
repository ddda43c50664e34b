#include "mvpmcmc/law.hpp"

#include <algorithm>

#include "euler_detail.hpp"
#include "mvpmcmc/error.hpp"

namespace mvpmcmc {

namespace {

void check_level(Level level) {
  if (level.l < 0 || level.l > 30) throw Error(ErrorKind::Domain, "domain", "level must lie in 0..30");
}

LawPath run_block(const Dynamics& dyn, const EmpiricalMeasure& init, Level level, const BrownianBlock& noise) {
  LawPath path;
  path.level = level;
  path.measures.reserve(level.steps());
  EmpiricalMeasure cur = init;
  for (std::size_t j = 0; j < level.steps(); ++j) {
    EmpiricalMeasure next = euler_step(dyn, cur, cur, level.delta(), noise.step(j));
    path.measures.push_back(std::move(cur));
    cur = std::move(next);
  }
  path.end = std::move(cur);
  return path;
}

}  // namespace

BrownianBlock draw_brownian_block(const RandStream& stream, Level level, std::size_t count, std::size_t dim) {
  return kernels::omp::draw_brownian_block(stream, level, count, dim);
}

BrownianBlock coarsen(const BrownianBlock& fine) {
  if (fine.steps < 2 || fine.steps % 2 != 0) {
    throw Error(ErrorKind::Domain, "no coarser level", "a block of " + std::to_string(fine.steps) + " steps");
  }
  BrownianBlock coarse{fine.steps / 2, fine.count, fine.dim, {}};
  const std::size_t stride = fine.count * fine.dim;
  coarse.increments.resize(coarse.steps * stride);
  for (std::size_t j = 0; j < coarse.steps; ++j) {
    const double* a = fine.increments.data() + (2 * j) * stride;
    const double* b = a + stride;
    double* out = coarse.increments.data() + j * stride;
    for (std::size_t k = 0; k < stride; ++k) out[k] = a[k] + b[k];
  }
  return coarse;
}

EmpiricalMeasure euler_step(const Dynamics& dyn, const EmpiricalMeasure& particles, const EmpiricalMeasure& driving,
                            double dt, std::span<const double> noise) {
  return kernels::omp::euler_step(dyn, particles, driving, dt, noise);
}

EmpiricalMeasure initial_cloud(const Dynamics& dyn, std::size_t count, const RandStream& stream) {
  if (count == 0) throw Error(ErrorKind::Domain, "degenerate measure", "law needs at least one particle");
  EmpiricalMeasure cloud(count, dyn.dim());
  for (std::size_t i = 0; i < count; ++i) {
    RandStream s = stream.child("particle", i);
    dyn.initial_state(s, cloud.particle(i));
  }
  return cloud;
}

LawPath propagate_law_block(const Dynamics& dyn, const EmpiricalMeasure& init, Level level,
                            const RandStream& stream) {
  check_level(level);
  if (init.empty()) throw Error(ErrorKind::Domain, "degenerate measure", "empty initial cloud");
  const BrownianBlock noise = draw_brownian_block(stream, level, init.size(), init.dim());
  return run_block(dyn, init, level, noise);
}

CoupledLawPath propagate_coupled_law_block(const Dynamics& dyn, const EmpiricalMeasure& fine_init,
                                           const EmpiricalMeasure& coarse_init, Level fine_level,
                                           const RandStream& stream, bool record_noise) {
  check_level(fine_level);
  if (fine_level.l < 1) throw Error(ErrorKind::Domain, "no coarser level", "coupling needs fine level >= 1");
  if (fine_init.empty() || coarse_init.empty()) {
    throw Error(ErrorKind::Domain, "degenerate measure", "empty initial cloud");
  }
  if (fine_init.size() != coarse_init.size() || fine_init.dim() != coarse_init.dim()) {
    throw Error(ErrorKind::Domain, "domain", "fine and coarse clouds must have the same shape");
  }
  BrownianBlock fine_noise = draw_brownian_block(stream, fine_level, fine_init.size(), fine_init.dim());
  BrownianBlock coarse_noise = coarsen(fine_noise);

  CoupledLawPath out;
  out.fine = run_block(dyn, fine_init, fine_level, fine_noise);
  out.coarse = run_block(dyn, coarse_init, Level{fine_level.l - 1}, coarse_noise);
  if (record_noise) {
    out.fine_noise = std::move(fine_noise);
    out.coarse_noise = std::move(coarse_noise);
  }
  return out;
}

std::vector<LawPath> propagate_laws(const Dynamics& dyn, std::size_t count, std::size_t horizon, Level level,
                                    const RandStream& stream) {
  std::vector<LawPath> laws;
  laws.reserve(horizon);
  EmpiricalMeasure cur = initial_cloud(dyn, count, stream.child("init", 0));
  for (std::size_t t = 1; t <= horizon; ++t) {
    laws.push_back(propagate_law_block(dyn, cur, level, stream.child("block", t)));
    cur = laws.back().end;
  }
  return laws;
}

std::vector<CoupledLawPath> propagate_coupled_laws(const Dynamics& dyn, std::size_t count, std::size_t horizon,
                                                   Level fine_level, const RandStream& stream) {
  std::vector<CoupledLawPath> laws;
  laws.reserve(horizon);
  const EmpiricalMeasure init = initial_cloud(dyn, count, stream.child("init", 0));
  const EmpiricalMeasure* fine = &init;
  const EmpiricalMeasure* coarse = &init;
  for (std::size_t t = 1; t <= horizon; ++t) {
    laws.push_back(propagate_coupled_law_block(dyn, *fine, *coarse, fine_level, stream.child("block", t)));
    fine = &laws.back().fine.end;
    coarse = &laws.back().coarse.end;
  }
  return laws;
}

TransitionSample sample_transition_path(const Dynamics& dyn, std::span<const double> start, const LawPath& laws,
                                        RandStream& stream, bool keep_path) {
  const std::size_t d = start.size();
  const std::size_t steps = laws.level.steps();
  if (laws.measures.size() != steps) throw Error(ErrorKind::Domain, "domain", "incomplete law path");
  const double dt = laws.level.delta();

  detail::EulerScratch scratch(d);
  std::vector<double> dw(d);
  StateVec x(start.begin(), start.end());
  StateVec next(d);
  TransitionSample out;
  if (keep_path) out.path.reserve(steps);
  for (std::size_t j = 0; j < steps; ++j) {
    stream.fill_gaussian(dw, dt);
    if (!detail::euler_particle(dyn, x, laws.measures[j], dt, dw, next, scratch)) detail::throw_blow_up(0);
    x.swap(next);
    if (keep_path) out.path.push_back(x);
  }
  out.end = std::move(x);
  return out;
}

CoupledTransitionSample sample_coupled_transition_path(const Dynamics& dyn, std::span<const double> fine_start,
                                                       std::span<const double> coarse_start,
                                                       const CoupledLawPath& laws, RandStream& stream,
                                                       bool keep_path) {
  const std::size_t d = fine_start.size();
  if (coarse_start.size() != d) throw Error(ErrorKind::Domain, "domain", "fine and coarse states differ in dimension");
  const std::size_t coarse_steps = laws.coarse.level.steps();
  if (laws.fine.level.l != laws.coarse.level.l + 1 || laws.fine.measures.size() != 2 * coarse_steps ||
      laws.coarse.measures.size() != coarse_steps) {
    throw Error(ErrorKind::Domain, "domain", "inconsistent coupled law path");
  }
  const double dt_f = laws.fine.level.delta();
  const double dt_c = laws.coarse.level.delta();

  detail::EulerScratch scratch(d);
  std::vector<double> dw1(d), dw2(d), dwc(d);
  StateVec xf(fine_start.begin(), fine_start.end()), xc(coarse_start.begin(), coarse_start.end());
  StateVec next(d);
  CoupledTransitionSample out;
  if (keep_path) {
    out.fine.path.reserve(2 * coarse_steps);
    out.coarse.path.reserve(coarse_steps);
  }
  for (std::size_t j = 0; j < coarse_steps; ++j) {
    stream.fill_gaussian(dw1, dt_f);
    stream.fill_gaussian(dw2, dt_f);
    for (std::size_t c = 0; c < d; ++c) dwc[c] = dw1[c] + dw2[c];

    if (!detail::euler_particle(dyn, xf, laws.fine.measures[2 * j], dt_f, dw1, next, scratch)) {
      detail::throw_blow_up(0);
    }
    xf.swap(next);
    if (keep_path) out.fine.path.push_back(xf);
    if (!detail::euler_particle(dyn, xf, laws.fine.measures[2 * j + 1], dt_f, dw2, next, scratch)) {
      detail::throw_blow_up(0);
    }
    xf.swap(next);
    if (keep_path) out.fine.path.push_back(xf);

    if (!detail::euler_particle(dyn, xc, laws.coarse.measures[j], dt_c, dwc, next, scratch)) {
      detail::throw_blow_up(0);
    }
    xc.swap(next);
    if (keep_path) out.coarse.path.push_back(xc);
  }
  out.fine.end = std::move(xf);
  out.coarse.end = std::move(xc);
  return out;
}

}  // namespace mvpmcmc
