#include "mvpmcmc/core.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

#include "mvpmcmc/error.hpp"

namespace mvpmcmc {

std::size_t ParamVector::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::Config, "config", "unknown parameter '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

bool ParamVector::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> ParamTransform::to_unconstrained(const ParamVector& theta) const {
  if (theta.size() != flags.size()) {
    throw Error(ErrorKind::Domain, "domain", "parameter length does not match transform");
  }
  std::vector<double> v(theta.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (flags[i] == Transform::Log) {
      if (!(theta[i] > 0.0)) {
        throw Error(ErrorKind::Domain, "domain",
                    "log-transformed coordinate '" + (i < theta.names.size() ? theta.names[i] : std::string("?")) +
                        "' must be positive",
                    static_cast<long>(i));
      }
      v[i] = std::log(theta[i]);
    } else {
      v[i] = theta[i];
    }
  }
  return v;
}

ParamVector ParamTransform::from_unconstrained(std::span<const double> v, const std::vector<std::string>& names) const {
  if (v.size() != flags.size()) {
    throw Error(ErrorKind::Domain, "domain", "vector length does not match transform");
  }
  ParamVector theta{std::vector<double>(v.size()), names};
  for (std::size_t i = 0; i < v.size(); ++i) {
    theta.values[i] = flags[i] == Transform::Log ? std::exp(v[i]) : v[i];
  }
  return theta;
}

double ParamTransform::log_jacobian(const ParamVector& theta) const {
  double s = 0.0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == Transform::Log) s += std::log(theta[i]);
  }
  return s;
}

EmpiricalMeasure::EmpiricalMeasure(std::size_t count, std::size_t dim)
    : count_(count), dim_(dim), data_(count * dim, 0.0) {}

EmpiricalMeasure::EmpiricalMeasure(std::size_t count, std::size_t dim, std::vector<double> data)
    : count_(count), dim_(dim), data_(std::move(data)) {
  if (data_.size() != count * dim) {
    throw Error(ErrorKind::Domain, "domain", "particle storage does not match count x dim");
  }
}

EmpiricalMeasure EmpiricalMeasure::from_states(const std::vector<StateVec>& states) {
  if (states.empty()) return {};
  const std::size_t d = states.front().size();
  EmpiricalMeasure m(states.size(), d);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].size() != d) throw Error(ErrorKind::Domain, "domain", "particles differ in dimension");
    std::copy(states[i].begin(), states[i].end(), m.particle(i).begin());
  }
  return m;
}

StateVec EmpiricalMeasure::mean() const {
  StateVec m(dim_, 0.0);
  for (std::size_t i = 0; i < count_; ++i) {
    for (std::size_t c = 0; c < dim_; ++c) m[c] += data_[i * dim_ + c];
  }
  for (double& v : m) v /= static_cast<double>(count_);
  return m;
}

void Dataset::validate(std::size_t expected_dim) const {
  if (observations.empty()) throw Error(ErrorKind::Config, "config", "dataset must contain at least one observation");
  for (std::size_t s = 0; s < observations.size(); ++s) {
    if (observations[s].size() != expected_dim) {
      throw Error(ErrorKind::Config, "config",
                  "observation " + std::to_string(s + 1) + " has dimension " +
                      std::to_string(observations[s].size()) + ", expected " + std::to_string(expected_dim));
    }
  }
}

TestFunctional parameter_functional(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::Config, "config", "unknown functional parameter '" + name + "'");
  const std::size_t idx = static_cast<std::size_t>(it - names.begin());
  return {name, [idx](const ParamVector& theta, const Trajectory&) { return theta[idx]; }};
}

TestFunctional state_functional(std::size_t t, std::size_t coord) {
  if (t == 0) throw Error(ErrorKind::Config, "config", "state functional time index starts at 1");
  return {"state:" + std::to_string(t) + ":" + std::to_string(coord),
          [t, coord](const ParamVector&, const Trajectory& x) { return x.at(t - 1).at(coord); }};
}

TestFunctional parse_functional(const std::vector<std::string>& param_names, const std::string& spec) {
  constexpr std::string_view prefix = "state:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string rest = spec.substr(prefix.size());
    const auto colon = rest.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::Config, "config", "state functional must look like state:<t>:<coord>");
    }
    try {
      return state_functional(std::stoul(rest.substr(0, colon)), std::stoul(rest.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Config, "config", "bad state functional '" + spec + "'");
    }
  }
  return parameter_functional(param_names, spec);
}

}  // namespace mvpmcmc
