#include "mvpmcmc/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mvpmcmc/error.hpp"

namespace mvpmcmc {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}
}  // namespace

double Dynamics::mean_kernel(Interaction which, std::span<const double> x, const EmpiricalMeasure& mu) const {
  double s = 0.0;
  for (std::size_t n = 0; n < mu.size(); ++n) s += kernel(which, x, mu.particle(n));
  return s / static_cast<double>(mu.size());
}

double Prior::log_density(double value) const {
  switch (kind) {
    case PriorKind::Normal:
      return normal_logpdf(value, a, b);
    case PriorKind::LogNormal:
      if (!(value > 0.0)) return -std::numeric_limits<double>::infinity();
      return normal_logpdf(std::log(value), a, b) - std::log(value);
    case PriorKind::Uniform:
      if (!(value > a && value < b)) return -std::numeric_limits<double>::infinity();
      return -std::log(b - a);
    case PriorKind::Flat:
      return 0.0;
  }
  return 0.0;
}

double Prior::sample(RandStream& s) const {
  switch (kind) {
    case PriorKind::Normal:
      return a + b * s.normal();
    case PriorKind::LogNormal:
      return std::exp(a + b * s.normal());
    case PriorKind::Uniform:
      return a + (b - a) * s.uniform();
    case PriorKind::Flat:
      break;
  }
  throw Error(ErrorKind::Config, "config", "cannot sample an improper flat prior; supply theta0");
}

std::vector<std::string> Model::param_names() const {
  std::vector<std::string> names;
  for (const auto& p : free_params()) names.push_back(p.name);
  return names;
}

ParamTransform Model::transform() const {
  ParamTransform t;
  for (const auto& p : free_params()) t.flags.push_back(p.transform);
  return t;
}

ParamVector Model::make_params(std::vector<double> values) const {
  if (values.size() != param_dim()) {
    throw Error(ErrorKind::Domain, "domain",
                "model '" + name() + "' expects " + std::to_string(param_dim()) + " parameters");
  }
  return {std::move(values), param_names()};
}

double Model::log_prior(const ParamVector& theta) const {
  const auto& params = free_params();
  double s = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) s += params[i].prior.log_density(theta[i]);
  return s;
}

ParamVector Model::sample_prior(RandStream& s) const {
  std::vector<double> values;
  for (const auto& p : free_params()) values.push_back(p.prior.sample(s));
  return make_params(std::move(values));
}

double log_prior_density(const Model& model, const ParamVector& theta) { return model.log_prior(theta); }

double eval_interaction(const Dynamics& dyn, Interaction which, std::span<const double> x,
                        const EmpiricalMeasure& mu) {
  if (mu.empty()) throw Error(ErrorKind::Domain, "degenerate measure", "interaction over an empty measure");
  if (mu.dim() != x.size()) throw Error(ErrorKind::Domain, "domain", "state and measure dimensions differ");
  const double v = dyn.mean_kernel(which, x, mu);
  if (!std::isfinite(v)) throw Error(ErrorKind::Numeric, "numeric overflow", "non-finite interaction average");
  return v;
}

}  // namespace mvpmcmc
