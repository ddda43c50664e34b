#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvpmcmc/core.hpp"
#include "mvpmcmc/model.hpp"

namespace mvpmcmc {

/// Stochastic FitzHugh-Nagumo population with synaptic gating.
struct NeuronParams {
  double a = 0.7, b = 0.8, c = 0.08, I = 0.5, b_ext = 0.5;
  double V_rev = 1.0, a_r = 1.0, a_d = 1.0, T_max = 1.0, lambda = 0.2;
  double J = 1.0, b_J = 0.2, V_T = 2.0, Gamma = 0.1, Lambda = 0.5;
  // Initial law: independent normals with these means and standard deviations
  // (or a point mass at the means when gaussian_init is false).
  double V0 = 0.0, w0 = 0.5, y0 = 0.3;
  double sigma_V0 = 0.4, sigma_w0 = 0.4, sigma_y0 = 0.05;
  double sigma1 = 0.2, sigma2 = 0.1, sigma3 = 0.02;
  bool gaussian_init = true;

  void validate() const;
};

/// dX = theta_pull (mean(mu) - X) dt + sigma dW, X_0 = m0, Y = X + N(0, sigma_obs^2).
struct OUMeanFieldParams {
  double theta_pull = 1.0;
  double sigma = 1.0;
  double m0 = 0.0;
  double sigma_obs = 0.5;

  void validate() const;
};

/// Non-interacting dX = kappa (mu - X) dt + sigma dW, X_0 = x0, Y = X + N(0, sigma_obs^2).
struct LinearGaussianParams {
  double kappa = 0.5;
  double mu = 0.0;
  double sigma = 1.0;
  double x0 = 0.0;
  double sigma_obs = 0.5;

  void validate() const;
};

std::shared_ptr<const Dynamics> make_neuron_dynamics(const NeuronParams& p);
std::shared_ptr<const Dynamics> make_ou_dynamics(const OUMeanFieldParams& p);
std::shared_ptr<const Dynamics> make_linear_gaussian_dynamics(const LinearGaussianParams& p);

std::array<double, 3> neuron_drift(const NeuronParams& p, std::span<const double> x, const EmpiricalMeasure& mu);
/// Row-major 3 x 3.
std::array<double, 9> neuron_diffusion(const NeuronParams& p, std::span<const double> x, const EmpiricalMeasure& mu);
double neuron_b32(const NeuronParams& p, std::span<const double> x);
double neuron_obs_logdensity(const NeuronParams& p, std::span<const double> x, std::span<const double> y);

/// Transition of the level-l Euler chain over one unit of time:
/// X_t = A X_{t-1} + (1 - A) mu + N(0, Q). level < 0 gives the exact SDE transition.
struct LinearTransition {
  double A = 1.0;
  double Q = 0.0;
};
LinearTransition linear_transition(double kappa, double sigma, int level);

/// Exact log-likelihood of y_{1:T} under the (discretized) linear system.
/// level < 0 uses the continuous-time transition. Throws "singular" when the
/// innovation variance is not positive.
double kalman_loglik(const LinearGaussianParams& p, const Dataset& data, int level);
/// Smoothed means E[X_t | y_{1:T}] for t = 1..T (Rauch-Tung-Striebel), same level convention.
std::vector<double> kalman_smoothed_means(const LinearGaussianParams& p, const Dataset& data, int level);

/// Options when instantiating a registered model.
struct ModelOptions {
  /// Fixed-value overrides keyed by coordinate name.
  std::map<std::string, double> params;
  /// Inferred coordinates; the model's default set when absent.
  std::optional<std::vector<std::string>> free;
  /// Prior overrides for inferred coordinates.
  std::map<std::string, Prior> priors;
  /// Neuron only: Gaussian (default) or point-mass initial law.
  std::optional<bool> gaussian_init;
};

/// "neuron3d", "ou-meanfield", "linear-gaussian". Throws a config error for
/// unknown names, unknown coordinates or invalid values.
std::unique_ptr<Model> make_model(const std::string& name, const ModelOptions& opts = {});
std::vector<std::string> registered_models();

/// Full parameter structs after applying overrides and, optionally, the
/// inferred coordinates of theta (matched by name).
NeuronParams neuron_params(const ModelOptions& opts, const ParamVector* theta = nullptr);
OUMeanFieldParams ou_params(const ModelOptions& opts, const ParamVector* theta = nullptr);
LinearGaussianParams linear_gaussian_params(const ModelOptions& opts, const ParamVector* theta = nullptr);

/// Stored value of one named coordinate of a registered model.
double model_coordinate(const std::string& model, const ModelOptions& opts, const std::string& name);

}  // namespace mvpmcmc
