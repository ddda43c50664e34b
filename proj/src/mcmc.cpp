#include "mvpmcmc/mcmc.hpp"

#include <cmath>
#include <limits>

#include "mvpmcmc/error.hpp"

namespace mvpmcmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_runtime_failure(const Error& e) {
  return e.kind() == ErrorKind::Numeric || e.kind() == ErrorKind::Degeneracy;
}

// Shared Metropolis-Hastings loop. `evaluate(dyn, stream)` runs laws + filter
// for one parameter and returns a Sample with log_lik and trajectories filled.
template <class Sample, class Evaluate>
ChainRun<Sample> run_chain(const Model& model, const Dataset& data, const ChainConfig& cfg, const RandStream& stream,
                           Evaluate evaluate) {
  cfg.validate(model);
  data.validate(model.obs_dim());
  const ParamTransform transform = model.transform();

  ChainRun<Sample> run;
  run.samples.reserve(cfg.iterations + 1);

  ParamVector theta;
  if (cfg.theta0) {
    theta = model.make_params(cfg.theta0->values);
  } else {
    RandStream ps = stream.child("prior", 0);
    theta = model.sample_prior(ps);
  }
  double log_prior = model.log_prior(theta);
  if (!std::isfinite(log_prior)) {
    throw Error(ErrorKind::Config, "config", "starting parameter lies outside the prior support");
  }
  {
    const RandStream s0 = stream.child("iter", 0);
    Sample first = evaluate(*model.bind(theta), s0);
    first.theta = theta;
    first.accepted = true;
    run.samples.push_back(std::move(first));
  }

  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    const RandStream ks = stream.child("iter", k);
    RandStream prop_stream = ks.child("proposal", 0);
    ParamVector cand = propose(theta, cfg.proposal, transform, prop_stream);
    ++run.stats.proposals;

    const Sample& cur = run.samples.back();
    double alpha = 0.0;
    Sample next;
    const double cand_prior = model.log_prior(cand);
    if (std::isfinite(cand_prior) && cand.all_finite()) {
      try {
        next = evaluate(*model.bind(cand), ks);
        next.theta = cand;
        const auto [log_q_fwd, log_q_rev] = proposal_log_densities(theta, cand, transform);
        alpha = mh_log_accept(next.log_lik, cand_prior, log_q_fwd, log_q_rev, cur.log_lik, log_prior);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Domain) {
          ++run.stats.out_of_support;
        } else if (is_runtime_failure(e)) {
          ++run.stats.failures;
        } else {
          throw;
        }
        alpha = 0.0;
      }
    } else {
      ++run.stats.out_of_support;
    }

    RandStream us = ks.child("accept", 0);
    const double u = us.uniform();
    if (u < alpha) {
      next.accepted = true;
      theta = next.theta;
      log_prior = cand_prior;
      ++run.stats.accepted;
      run.samples.push_back(std::move(next));
    } else {
      Sample keep = cur;
      keep.accepted = false;
      run.samples.push_back(std::move(keep));
    }
  }

  if (run.stats.failure_rate() > cfg.max_failure_rate) {
    throw Error(ErrorKind::Degeneracy, "filter collapse rate",
                std::to_string(run.stats.failures) + " of " + std::to_string(run.stats.proposals) +
                    " proposals failed in the filter or the particle system");
  }
  return run;
}

}  // namespace

void ChainConfig::validate(const Model& model) const {
  if (iterations < 1) throw Error(ErrorKind::Config, "config", "K must be at least 1");
  if (burn_in >= iterations) throw Error(ErrorKind::Config, "config", "burn_in must be smaller than K");
  if (law_particles < 1 || filter_particles < 1) throw Error(ErrorKind::Config, "config", "N and M must be >= 1");
  if (level.l < 0) throw Error(ErrorKind::Config, "config", "level must be nonnegative");
  if (proposal.step_scales.size() != model.param_dim()) {
    throw Error(ErrorKind::Config, "config",
                "proposal needs " + std::to_string(model.param_dim()) + " step scales");
  }
  for (double s : proposal.step_scales) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorKind::Config, "config", "step scales must be finite and >= 0");
  }
}

ParamVector propose(const ParamVector& theta, const ProposalConfig& cfg, const ParamTransform& transform,
                    RandStream& stream) {
  std::vector<double> v = transform.to_unconstrained(theta);
  if (cfg.step_scales.size() != v.size()) throw Error(ErrorKind::Config, "config", "step scale count mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double z = stream.normal();
    v[i] += cfg.step_scales[i] * z;
  }
  return transform.from_unconstrained(v, theta.names);
}

double mh_log_accept(double log_lik_prop, double log_prior_prop, double log_q_fwd, double log_q_rev, double log_lik,
                     double log_prior) {
  if (log_lik_prop == kNegInf || log_prior_prop == kNegInf || log_q_rev == kNegInf) return 0.0;
  const double r = log_lik_prop + log_prior_prop + log_q_rev - log_lik - log_prior - log_q_fwd;
  if (std::isnan(r)) return 0.0;
  return r >= 0.0 ? 1.0 : std::exp(r);
}

std::pair<double, double> proposal_log_densities(const ParamVector& current, const ParamVector& proposed,
                                                 const ParamTransform& transform) {
  // Gaussian on the log scale => density on the natural scale carries 1/theta.
  return {-transform.log_jacobian(proposed), -transform.log_jacobian(current)};
}

PmcmcChain run_pmcmc_chain(const Model& model, const Dataset& data, const ChainConfig& cfg, const RandStream& stream) {
  const std::size_t T = data.horizon();
  return run_chain<ChainSample>(model, data, cfg, stream, [&](const Dynamics& dyn, const RandStream& ks) {
    const auto laws = propagate_laws(dyn, cfg.law_particles, T, cfg.level, ks.child("laws", 0));
    auto pf = bootstrap_pf(dyn, laws, data, cfg.filter_particles, ks.child("filter", 0), cfg.filter);
    ChainSample s;
    s.log_lik = pf.log_likelihood;
    s.trajectory = std::move(pf.trajectory);
    return s;
  });
}

BilevelChain run_bilevel_chain(const Model& model, const Dataset& data, const ChainConfig& cfg,
                               const RandStream& stream) {
  if (cfg.level.l < 1) throw Error(ErrorKind::Config, "no coarser level", "bi-level chain needs level >= 1");
  const std::size_t T = data.horizon();
  return run_chain<CoupledChainSample>(model, data, cfg, stream, [&](const Dynamics& dyn, const RandStream& ks) {
    const auto laws = propagate_coupled_laws(dyn, cfg.law_particles, T, cfg.level, ks.child("laws", 0));
    auto pf = delta_pf(dyn, laws, data, cfg.filter_particles, ks.child("filter", 0), cfg.filter);
    CoupledChainSample s;
    s.log_lik = pf.log_likelihood;
    s.fine_trajectory = std::move(pf.fine_trajectory);
    s.coarse_trajectory = std::move(pf.coarse_trajectory);
    return s;
  });
}

}  // namespace mvpmcmc
