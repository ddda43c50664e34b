#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mvpmcmc {

using StateVec = std::vector<double>;
using Trajectory = std::vector<StateVec>;  // states at integer times 1..T

/// Parameter values on the natural scale, one label per coordinate.
struct ParamVector {
  std::vector<double> values;
  std::vector<std::string> names;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  /// Index of a named coordinate; throws a config error when absent.
  std::size_t index_of(const std::string& name) const;
  bool all_finite() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

enum class Transform { Identity, Log };

/// Per-coordinate map between the natural and the unconstrained scale.
struct ParamTransform {
  std::vector<Transform> flags;

  /// Throws a domain error when a log coordinate is not strictly positive.
  std::vector<double> to_unconstrained(const ParamVector& theta) const;
  ParamVector from_unconstrained(std::span<const double> v, const std::vector<std::string>& names) const;
  /// log |d theta / d v| summed over coordinates, i.e. the sum of log theta_i over log coordinates.
  double log_jacobian(const ParamVector& theta) const;
};

/// Uniform-weight atomic measure over N particles in R^d, stored row-major.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  EmpiricalMeasure(std::size_t count, std::size_t dim);
  EmpiricalMeasure(std::size_t count, std::size_t dim, std::vector<double> data);
  static EmpiricalMeasure from_states(const std::vector<StateVec>& states);

  std::size_t size() const { return count_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return count_ == 0; }

  std::span<const double> particle(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> particle(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Per-coordinate empirical mean.
  StateVec mean() const;

  friend bool operator==(const EmpiricalMeasure&, const EmpiricalMeasure&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Observations y_1..y_T at unit time spacing.
struct Dataset {
  std::vector<StateVec> observations;

  std::size_t horizon() const { return observations.size(); }
  std::size_t obs_dim() const { return observations.empty() ? 0 : observations.front().size(); }
  /// Throws a config error unless T >= 1 and every row has `expected_dim` entries.
  void validate(std::size_t expected_dim) const;
};

/// phi(theta, x_{1:T}).
struct TestFunctional {
  std::string label;
  std::function<double(const ParamVector&, const Trajectory&)> eval;

  double operator()(const ParamVector& theta, const Trajectory& x) const { return eval(theta, x); }
};

/// phi(theta, x) = theta[name].
TestFunctional parameter_functional(const std::vector<std::string>& names, const std::string& name);
/// phi(theta, x) = x_t[coord] with t in 1..T.
TestFunctional state_functional(std::size_t t, std::size_t coord);
/// Parses "name" (parameter coordinate) or "state:<t>:<coord>".
TestFunctional parse_functional(const std::vector<std::string>& param_names, const std::string& spec);

}  // namespace mvpmcmc
