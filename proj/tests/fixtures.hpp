#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "mvpmcmc/core.hpp"
#include "mvpmcmc/model.hpp"

namespace fixtures {

using namespace mvpmcmc;

// Dynamics assembled from callables, for hand-checkable toy systems.
struct ToyDynamics : Dynamics {
  std::size_t d = 1;
  std::function<void(RandStream&, std::span<double>)> init = [](RandStream&, std::span<double> out) {
    for (double& v : out) v = 0.0;
  };
  std::function<double(Interaction, std::span<const double>, std::span<const double>)> zeta =
      [](Interaction, std::span<const double>, std::span<const double>) { return 0.0; };
  std::function<void(std::span<const double>, double, std::span<double>)> a =
      [](std::span<const double>, double, std::span<double> out) {
        for (double& v : out) v = 0.0;
      };
  // Default: identity diffusion.
  std::function<void(std::span<const double>, double, std::span<double>)> b =
      [](std::span<const double> x, double, std::span<double> out) {
        const std::size_t n = x.size();
        for (std::size_t i = 0; i < n * n; ++i) out[i] = (i % (n + 1) == 0) ? 1.0 : 0.0;
      };
  std::function<double(std::span<const double>, std::span<const double>)> g =
      [](std::span<const double> x, std::span<const double> y) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += -0.5 * (y[i] - x[i]) * (y[i] - x[i]);
        return s - 0.5 * static_cast<double>(x.size()) * std::log(2 * std::numbers::pi);
      };

  std::size_t dim() const override { return d; }
  std::size_t obs_dim() const override { return d; }
  void initial_state(RandStream& s, std::span<double> out) const override { init(s, out); }
  double kernel(Interaction w, std::span<const double> x, std::span<const double> z) const override {
    return zeta(w, x, z);
  }
  void drift(std::span<const double> x, double z, std::span<double> out) const override { a(x, z, out); }
  void diffusion(std::span<const double> x, double z, std::span<double> out) const override { b(x, z, out); }
  double log_obs(std::span<const double> x, std::span<const double> y) const override { return g(x, y); }
  void sample_obs(std::span<const double> x, RandStream& s, std::span<double> y) const override {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + s.normal();
  }
};

// Model whose binding is a user callable.
struct ToyModel : Model {
  std::vector<FreeParam> params;
  std::size_t d = 1;
  std::function<std::shared_ptr<const Dynamics>(const ParamVector&)> binder;

  std::string name() const override { return "toy"; }
  std::size_t state_dim() const override { return d; }
  std::size_t obs_dim() const override { return d; }
  const std::vector<FreeParam>& free_params() const override { return params; }
  std::shared_ptr<const Dynamics> bind(const ParamVector& theta) const override { return binder(theta); }
};

// dX = theta dt, X_0 = 0, y ~ N(x, 1): deterministic, no interaction.
inline std::unique_ptr<ToyModel> deterministic_drift_model() {
  auto m = std::make_unique<ToyModel>();
  m->params = {{"theta", Transform::Identity, {PriorKind::Normal, 1.0, 0.5}}};
  m->binder = [](const ParamVector& th) {
    auto dyn = std::make_shared<ToyDynamics>();
    const double v = th[0];
    dyn->a = [v](std::span<const double>, double, std::span<double> out) { out[0] = v; };
    dyn->b = [](std::span<const double>, double, std::span<double> out) { out[0] = 0.0; };
    return dyn;
  };
  return m;
}

inline double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd * std::sqrt(2 * std::numbers::pi));
}

}  // namespace fixtures
