#include "mvpmcmc/multilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvpmcmc/error.hpp"
#include "mvpmcmc/filters.hpp"

namespace mvpmcmc {

namespace {

struct SelfNormalized {
  std::vector<double> w;
  double ess = 0.0;
};

SelfNormalized self_normalize(const std::vector<double>& log_w, const char* side) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : log_w) {
    if (!std::isnan(v)) mx = std::max(mx, v);
  }
  if (!std::isfinite(mx)) {
    throw Error(ErrorKind::Degeneracy, "weight degeneracy", std::string(side) + " weights all vanish");
  }
  SelfNormalized out;
  out.w.resize(log_w.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    out.w[k] = std::isnan(log_w[k]) ? 0.0 : std::exp(log_w[k] - mx);
    sum += out.w[k];
  }
  double sq = 0.0;
  for (double& v : out.w) {
    v /= sum;
    sq += v * v;
  }
  out.ess = 1.0 / sq;
  return out;
}

std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::max(1.0, std::ceil(x))); }

}  // namespace

void LevelPlan::validate() const {
  if (l_star < 0) throw Error(ErrorKind::Config, "config", "l_star must be >= 0");
  if (L < l_star) throw Error(ErrorKind::Config, "config", "L must be >= l_star");
  if (N.size() != levels() || K.size() != levels()) {
    throw Error(ErrorKind::Config, "config", "N_l and K_l need one entry per level l_star..L");
  }
  if (M < 1) throw Error(ErrorKind::Config, "config", "M must be >= 1");
  for (std::size_t i = 0; i < levels(); ++i) {
    if (N[i] < 1 || K[i] < 1) throw Error(ErrorKind::Config, "config", "N_l and K_l must be >= 1");
  }
}

double estimate_base(const std::vector<ChainSample>& samples, const TestFunctional& phi, std::size_t burn_in) {
  if (burn_in >= samples.size()) {
    throw Error(ErrorKind::Degeneracy, "insufficient samples", "no samples left after burn-in");
  }
  double s = 0.0;
  for (std::size_t k = burn_in; k < samples.size(); ++k) s += phi(samples[k].theta, samples[k].trajectory);
  return s / static_cast<double>(samples.size() - burn_in);
}

IncrementWeights increment_weights(const std::vector<CoupledChainSample>& samples, const Model& model,
                                   const Dataset& data, std::size_t burn_in) {
  if (burn_in >= samples.size()) {
    throw Error(ErrorKind::Degeneracy, "insufficient samples", "no coupled samples left after burn-in");
  }
  IncrementWeights w;
  w.burn_in = burn_in;
  const std::size_t T = data.horizon();
  // Consecutive rejected samples share theta, so binding is cached.
  const ParamVector* bound_theta = nullptr;
  std::shared_ptr<const Dynamics> dyn;
  for (std::size_t k = burn_in; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (s.fine_trajectory.size() != T || s.coarse_trajectory.size() != T) {
      throw Error(ErrorKind::Domain, "domain", "trajectory length differs from the data horizon");
    }
    if (!bound_theta || !(*bound_theta == s.theta)) {
      dyn = model.bind(s.theta);
      bound_theta = &s.theta;
    }
    double lf = 0.0, lc = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto& y = data.observations[t];
      const double gf = dyn->log_obs(s.fine_trajectory[t], y);
      const double gc = dyn->log_obs(s.coarse_trajectory[t], y);
      lf += log_hcheck(gf, gc);
      lc += log_hcheck(gc, gf);
    }
    w.log_fine.push_back(lf);
    w.log_coarse.push_back(lc);
  }
  return w;
}

IncrementEstimate weighted_increment(const std::vector<CoupledChainSample>& samples, const IncrementWeights& w,
                                     const TestFunctional& phi) {
  const auto fine = self_normalize(w.log_fine, "fine");
  const auto coarse = self_normalize(w.log_coarse, "coarse");
  IncrementEstimate est;
  for (std::size_t i = 0; i < fine.w.size(); ++i) {
    const auto& s = samples[w.burn_in + i];
    est.fine_mean += fine.w[i] * phi(s.theta, s.fine_trajectory);
    est.coarse_mean += coarse.w[i] * phi(s.theta, s.coarse_trajectory);
  }
  est.value = est.fine_mean - est.coarse_mean;
  est.ess_fine = fine.ess;
  est.ess_coarse = coarse.ess;
  return est;
}

double estimate_increment(const std::vector<CoupledChainSample>& samples, const Model& model, const Dataset& data,
                          const TestFunctional& phi, std::size_t burn_in) {
  return weighted_increment(samples, increment_weights(samples, model, data, burn_in), phi).value;
}

MLEstimate combine_ml_estimate(double base, const std::vector<double>& increments) {
  MLEstimate e;
  e.base_term = base;
  e.increments = increments;
  e.value = base;
  for (double v : increments) e.value += v;
  return e;
}

LevelPlan allocate_levels(double epsilon, int l_star, double c_K, double c_N, std::size_t M) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::Domain, "domain", "epsilon must lie in (0, 1)");
  if (l_star < 0) throw Error(ErrorKind::Domain, "domain", "l_star must be >= 0");
  if (!(c_K > 0.0 && c_N > 0.0)) throw Error(ErrorKind::Domain, "domain", "c_K and c_N must be positive");
  LevelPlan plan;
  plan.l_star = l_star;
  plan.L = std::max(l_star + 1, static_cast<int>(std::ceil(std::log2(1.0 / epsilon) - 1e-12)));
  plan.M = M;
  plan.epsilon = epsilon;
  const double inv_eps2 = 1.0 / (epsilon * epsilon);
  for (int l = l_star; l <= plan.L; ++l) {
    const double delta = std::ldexp(1.0, -l);
    plan.K.push_back(ceil_count(c_K * inv_eps2 * std::pow(delta, 6.0 / 7.0)));
    plan.N.push_back(ceil_count(c_N * inv_eps2 * std::sqrt(delta)));
  }
  return plan;
}

LevelPlan allocate_single_level(double epsilon, double c_K, double c_N, std::size_t M, int l_min) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::Domain, "domain", "epsilon must lie in (0, 1)");
  if (!(c_K > 0.0 && c_N > 0.0)) throw Error(ErrorKind::Domain, "domain", "c_K and c_N must be positive");
  LevelPlan plan;
  plan.L = std::max(l_min, static_cast<int>(std::ceil(std::log2(1.0 / epsilon) - 1e-12)));
  plan.l_star = plan.L;
  plan.M = M;
  plan.epsilon = epsilon;
  const double inv_eps2 = 1.0 / (epsilon * epsilon);
  plan.K.push_back(ceil_count(c_K * inv_eps2));
  plan.N.push_back(ceil_count(c_N * inv_eps2));
  return plan;
}

double plan_cost(const LevelPlan& plan, std::size_t T) {
  double c = 0.0;
  for (int l = plan.l_star; l <= plan.L; ++l) {
    const double n = static_cast<double>(plan.N_at(l));
    c += static_cast<double>(plan.K_at(l)) * std::ldexp(1.0, l) * (n * n + static_cast<double>(plan.M) * n);
  }
  return c * static_cast<double>(T);
}

std::size_t burn_in_for(std::size_t K, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw Error(ErrorKind::Config, "config", "burn_in_fraction must lie in [0, 1)");
  const auto b = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(K)));
  return std::min(b, K > 0 ? K - 1 : 0);
}

}  // namespace mvpmcmc
