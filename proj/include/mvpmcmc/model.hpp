#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mvpmcmc/core.hpp"
#include "mvpmcmc/rng.hpp"

namespace mvpmcmc {

/// Which of the two interaction kernels: the one feeding the drift or the one
/// feeding the diffusion coefficient.
enum class Interaction { Drift, Diffusion };

/// A McKean-Vlasov model with its parameter fixed:
///   dX = a(X, zeta1_bar(X, mu)) dt + b(X, zeta2_bar(X, mu)) dW,
///   zeta_m_bar(x, mu) = integral of zeta_m(x, z) mu(dz),
/// observed at integer times through the density g(x, y).
/// Implementations are immutable and safe to share across threads.
class Dynamics {
 public:
  virtual ~Dynamics() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t obs_dim() const = 0;

  /// Draws X_0 (a fixed point for Dirac initial laws).
  virtual void initial_state(RandStream& s, std::span<double> out) const = 0;

  virtual double kernel(Interaction which, std::span<const double> x, std::span<const double> z) const = 0;

  /// (1/N) sum_n kernel(which, x, particle_n). The default is the plain loop over
  /// `kernel`; models may override with an equivalent inlined loop.
  virtual double mean_kernel(Interaction which, std::span<const double> x, const EmpiricalMeasure& mu) const;

  virtual void drift(std::span<const double> x, double zeta_drift, std::span<double> out) const = 0;
  /// Row-major d x d matrix.
  virtual void diffusion(std::span<const double> x, double zeta_diffusion, std::span<double> out) const = 0;

  virtual double log_obs(std::span<const double> x, std::span<const double> y) const = 0;
  virtual void sample_obs(std::span<const double> x, RandStream& s, std::span<double> y) const = 0;
};

enum class PriorKind { Normal, LogNormal, Uniform, Flat };

/// Prior of one coordinate on the natural scale. For LogNormal, (a, b) are the
/// mean and standard deviation of log(theta); for Normal of theta itself; for
/// Uniform the support bounds.
struct Prior {
  PriorKind kind = PriorKind::Flat;
  double a = 0.0;
  double b = 1.0;

  double log_density(double value) const;
  double sample(RandStream& s) const;
};

struct FreeParam {
  std::string name;
  Transform transform = Transform::Identity;
  Prior prior;
};

/// A registered model: fixed structure, a set of inferred coordinates with
/// priors and transforms, and a factory that binds a parameter vector.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual const std::vector<FreeParam>& free_params() const = 0;
  /// Throws a domain error when theta violates model constraints.
  virtual std::shared_ptr<const Dynamics> bind(const ParamVector& theta) const = 0;

  std::size_t param_dim() const { return free_params().size(); }
  std::vector<std::string> param_names() const;
  ParamTransform transform() const;
  ParamVector make_params(std::vector<double> values) const;
  double log_prior(const ParamVector& theta) const;
  ParamVector sample_prior(RandStream& s) const;
};

/// log nu(theta); -infinity outside the support.
double log_prior_density(const Model& model, const ParamVector& theta);

/// (1/N) sum_n zeta_m(theta, x, particle_n). Throws "degenerate measure" on an
/// empty measure and "numeric overflow" on a non-finite result.
double eval_interaction(const Dynamics& dyn, Interaction which, std::span<const double> x,
                        const EmpiricalMeasure& mu);

}  // namespace mvpmcmc
