#include "mvpmcmc/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvpmcmc/error.hpp"

namespace mvpmcmc {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::Domain, "domain", what);
}

double gauss_logpdf(double y, double mean, double sd) {
  const double z = (y - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

// ---------------------------------------------------------------- neuron

class NeuronDynamics final : public Dynamics {
 public:
  explicit NeuronDynamics(const NeuronParams& p) : p_(p) {}

  std::size_t dim() const override { return 3; }
  std::size_t obs_dim() const override { return 3; }

  void initial_state(RandStream& s, std::span<double> out) const override {
    out[0] = p_.V0;
    out[1] = p_.w0;
    out[2] = p_.y0;
    if (p_.gaussian_init) {
      out[0] += p_.sigma_V0 * s.normal();
      out[1] += p_.sigma_w0 * s.normal();
      out[2] += p_.sigma_y0 * s.normal();
    }
  }

  double kernel(Interaction which, std::span<const double> x, std::span<const double> z) const override {
    return coupling(which) * (x[0] - p_.V_rev) * z[2];
  }

  double mean_kernel(Interaction which, std::span<const double> x, const EmpiricalMeasure& mu) const override {
    const double f = coupling(which) * (x[0] - p_.V_rev);
    const double* z = mu.data().data();
    const std::size_t n = mu.size();
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += f * z[3 * k + 2];
    return s / static_cast<double>(n);
  }

  void drift(std::span<const double> x, double zeta, std::span<double> out) const override {
    out[0] = x[0] - x[0] * x[0] * x[0] / 3.0 - x[1] + p_.I - zeta;
    out[1] = p_.c * (x[0] + p_.a - p_.b * x[1]);
    out[2] = gate(x) - p_.a_d * x[2];
  }

  void diffusion(std::span<const double> x, double zeta, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = p_.b_ext;
    out[2] = -zeta;
    out[7] = b32(x);
  }

  double log_obs(std::span<const double> x, std::span<const double> y) const override {
    return gauss_logpdf(y[0], x[0], p_.sigma1) + gauss_logpdf(y[1], x[1], p_.sigma2) +
           gauss_logpdf(y[2], x[2], p_.sigma3);
  }

  void sample_obs(std::span<const double> x, RandStream& s, std::span<double> y) const override {
    y[0] = x[0] + p_.sigma1 * s.normal();
    y[1] = x[1] + p_.sigma2 * s.normal();
    y[2] = x[2] + p_.sigma3 * s.normal();
  }

  double gate(std::span<const double> x) const {
    return p_.a_r * p_.T_max * (1.0 - x[2]) / (1.0 + std::exp(-p_.lambda * (x[0] - p_.V_T)));
  }

  double b32(std::span<const double> x) const {
    const double x3 = x[2];
    if (!(x3 > 0.0 && x3 < 1.0)) return 0.0;
    const double u = 2.0 * x3 - 1.0;
    const double damp = std::exp(-p_.Lambda / (1.0 - u * u));
    return std::sqrt(std::max(0.0, gate(x) + p_.a_d * x3)) * p_.Gamma * damp;
  }

 private:
  double coupling(Interaction which) const { return which == Interaction::Drift ? p_.J : p_.b_J; }

  NeuronParams p_;
};

// ---------------------------------------------------------------- OU mean field

class OUDynamics final : public Dynamics {
 public:
  explicit OUDynamics(const OUMeanFieldParams& p) : p_(p) {}

  std::size_t dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  void initial_state(RandStream&, std::span<double> out) const override { out[0] = p_.m0; }

  double kernel(Interaction which, std::span<const double>, std::span<const double> z) const override {
    return which == Interaction::Drift ? z[0] : 1.0;
  }

  double mean_kernel(Interaction which, std::span<const double>, const EmpiricalMeasure& mu) const override {
    if (which == Interaction::Diffusion) return 1.0;
    double s = 0.0;
    for (double z : mu.data()) s += z;
    return s / static_cast<double>(mu.size());
  }

  void drift(std::span<const double> x, double zeta, std::span<double> out) const override {
    out[0] = p_.theta_pull * (zeta - x[0]);
  }
  void diffusion(std::span<const double>, double, std::span<double> out) const override { out[0] = p_.sigma; }

  double log_obs(std::span<const double> x, std::span<const double> y) const override {
    return gauss_logpdf(y[0], x[0], p_.sigma_obs);
  }
  void sample_obs(std::span<const double> x, RandStream& s, std::span<double> y) const override {
    y[0] = x[0] + p_.sigma_obs * s.normal();
  }

 private:
  OUMeanFieldParams p_;
};

// ---------------------------------------------------------------- linear Gaussian

class LinearGaussianDynamics final : public Dynamics {
 public:
  explicit LinearGaussianDynamics(const LinearGaussianParams& p) : p_(p) {}

  std::size_t dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  void initial_state(RandStream&, std::span<double> out) const override { out[0] = p_.x0; }

  double kernel(Interaction, std::span<const double>, std::span<const double>) const override { return 0.0; }
  double mean_kernel(Interaction, std::span<const double>, const EmpiricalMeasure&) const override { return 0.0; }

  void drift(std::span<const double> x, double, std::span<double> out) const override {
    out[0] = p_.kappa * (p_.mu - x[0]);
  }
  void diffusion(std::span<const double>, double, std::span<double> out) const override { out[0] = p_.sigma; }

  double log_obs(std::span<const double> x, std::span<const double> y) const override {
    return gauss_logpdf(y[0], x[0], p_.sigma_obs);
  }
  void sample_obs(std::span<const double> x, RandStream& s, std::span<double> y) const override {
    y[0] = x[0] + p_.sigma_obs * s.normal();
  }

 private:
  LinearGaussianParams p_;
};

// ---------------------------------------------------------------- registry

template <class P>
struct Field {
  const char* name;
  double P::*ptr;
  bool positive;    // inferred on the log scale
  double prior_sd;  // default prior spread on the inference scale
};

const std::vector<Field<NeuronParams>>& neuron_fields() {
  using P = NeuronParams;
  static const std::vector<Field<P>> f = {
      {"a", &P::a, false, 1.0},          {"b", &P::b, false, 1.0},
      {"c", &P::c, true, 0.5},           {"I", &P::I, false, 1.0},
      {"b_ext", &P::b_ext, true, 0.5},   {"V_rev", &P::V_rev, false, 1.0},
      {"a_r", &P::a_r, true, 0.5},       {"a_d", &P::a_d, true, 0.5},
      {"T_max", &P::T_max, true, 0.5},   {"lambda", &P::lambda, true, 0.5},
      {"J", &P::J, false, 1.0},          {"b_J", &P::b_J, false, 1.0},
      {"V_T", &P::V_T, false, 1.0},      {"Gamma", &P::Gamma, true, 0.5},
      {"Lambda", &P::Lambda, true, 0.5}, {"V0", &P::V0, false, 1.0},
      {"w0", &P::w0, false, 1.0},        {"y0", &P::y0, false, 1.0},
      {"sigma_V0", &P::sigma_V0, true, 0.5}, {"sigma_w0", &P::sigma_w0, true, 0.5},
      {"sigma_y0", &P::sigma_y0, true, 0.5}, {"sigma1", &P::sigma1, true, 0.5},
      {"sigma2", &P::sigma2, true, 0.5}, {"sigma3", &P::sigma3, true, 0.5},
  };
  return f;
}

const std::vector<Field<OUMeanFieldParams>>& ou_fields() {
  using P = OUMeanFieldParams;
  static const std::vector<Field<P>> f = {
      {"theta_pull", &P::theta_pull, true, 0.5},
      {"sigma", &P::sigma, true, 0.5},
      {"m0", &P::m0, false, 1.0},
      {"sigma_obs", &P::sigma_obs, true, 0.5},
  };
  return f;
}

const std::vector<Field<LinearGaussianParams>>& lg_fields() {
  using P = LinearGaussianParams;
  static const std::vector<Field<P>> f = {
      {"kappa", &P::kappa, true, 0.5}, {"mu", &P::mu, false, 1.0},      {"sigma", &P::sigma, true, 0.5},
      {"x0", &P::x0, false, 1.0},      {"sigma_obs", &P::sigma_obs, true, 0.5},
  };
  return f;
}

template <class P>
const Field<P>& find_field(const std::vector<Field<P>>& fields, const std::string& name) {
  for (const auto& f : fields) {
    if (name == f.name) return f;
  }
  throw Error(ErrorKind::Config, "config", "unknown model coordinate '" + name + "'");
}

template <class P>
P apply_overrides(P p, const std::vector<Field<P>>& fields, const ModelOptions& opts, const ParamVector* theta) {
  for (const auto& [name, value] : opts.params) p.*(find_field(fields, name).ptr) = value;
  if (theta) {
    for (std::size_t i = 0; i < theta->size(); ++i) p.*(find_field(fields, theta->names.at(i)).ptr) = (*theta)[i];
  }
  return p;
}

template <class P>
class StructModel final : public Model {
 public:
  using Factory = std::shared_ptr<const Dynamics> (*)(const P&);

  StructModel(std::string name, std::size_t d, std::size_t dy, P base, const std::vector<Field<P>>& fields,
              const std::vector<std::string>& free, const std::map<std::string, Prior>& priors, Factory factory)
      : name_(std::move(name)), d_(d), dy_(dy), base_(base), factory_(factory) {
    base_.validate();
    for (const auto& [pname, prior] : priors) {
      if (std::find(free.begin(), free.end(), pname) == free.end()) {
        throw Error(ErrorKind::Config, "config", "prior given for non-inferred coordinate '" + pname + "'");
      }
    }
    for (const auto& fname : free) {
      const auto& f = find_field(fields, fname);
      if (std::find(ptrs_.begin(), ptrs_.end(), f.ptr) != ptrs_.end()) {
        throw Error(ErrorKind::Config, "config", "coordinate '" + fname + "' listed twice");
      }
      const double v = base_.*f.ptr;
      FreeParam fp;
      fp.name = fname;
      if (f.positive) {
        fp.transform = Transform::Log;
        fp.prior = {PriorKind::LogNormal, std::log(v), f.prior_sd};
      } else {
        fp.prior = {PriorKind::Normal, v, f.prior_sd};
      }
      if (auto it = priors.find(fname); it != priors.end()) fp.prior = it->second;
      free_.push_back(fp);
      ptrs_.push_back(f.ptr);
    }
  }

  std::string name() const override { return name_; }
  std::size_t state_dim() const override { return d_; }
  std::size_t obs_dim() const override { return dy_; }
  const std::vector<FreeParam>& free_params() const override { return free_; }

  std::shared_ptr<const Dynamics> bind(const ParamVector& theta) const override {
    if (theta.size() != ptrs_.size()) {
      throw Error(ErrorKind::Domain, "domain", "model '" + name_ + "' expects " + std::to_string(ptrs_.size()) +
                                                   " parameters, got " + std::to_string(theta.size()));
    }
    P p = base_;
    for (std::size_t i = 0; i < ptrs_.size(); ++i) p.*ptrs_[i] = theta[i];
    p.validate();
    return factory_(p);
  }

 private:
  std::string name_;
  std::size_t d_, dy_;
  P base_;
  Factory factory_;
  std::vector<FreeParam> free_;
  std::vector<double P::*> ptrs_;
};

}  // namespace

void NeuronParams::validate() const {
  require(std::isfinite(a) && std::isfinite(b) && std::isfinite(I) && std::isfinite(J) && std::isfinite(b_J) &&
              std::isfinite(V_rev) && std::isfinite(V_T) && std::isfinite(V0) && std::isfinite(w0) &&
              std::isfinite(y0),
          "neuron parameters must be finite");
  require(c > 0 && b_ext > 0 && a_r > 0 && a_d > 0 && T_max > 0 && lambda > 0 && Gamma > 0 && Lambda > 0,
          "neuron rate and scale parameters must be positive");
  require(sigma_V0 >= 0 && sigma_w0 >= 0 && sigma_y0 >= 0, "initial standard deviations must be nonnegative");
  require(sigma1 > 0 && sigma2 > 0 && sigma3 > 0, "observation noise levels must be positive");
}

void OUMeanFieldParams::validate() const {
  require(theta_pull >= 0 && std::isfinite(theta_pull), "theta_pull must be nonnegative");
  require(sigma > 0 && std::isfinite(sigma), "sigma must be positive");
  require(std::isfinite(m0), "m0 must be finite");
  require(sigma_obs > 0 && std::isfinite(sigma_obs), "sigma_obs must be positive");
}

void LinearGaussianParams::validate() const {
  require(kappa >= 0 && std::isfinite(kappa), "kappa must be nonnegative");
  require(std::isfinite(mu) && std::isfinite(x0), "mu and x0 must be finite");
  require(sigma > 0 && std::isfinite(sigma), "sigma must be positive");
  require(sigma_obs > 0 && std::isfinite(sigma_obs), "sigma_obs must be positive");
}

std::shared_ptr<const Dynamics> make_neuron_dynamics(const NeuronParams& p) {
  p.validate();
  return std::make_shared<NeuronDynamics>(p);
}
std::shared_ptr<const Dynamics> make_ou_dynamics(const OUMeanFieldParams& p) {
  p.validate();
  return std::make_shared<OUDynamics>(p);
}
std::shared_ptr<const Dynamics> make_linear_gaussian_dynamics(const LinearGaussianParams& p) {
  p.validate();
  return std::make_shared<LinearGaussianDynamics>(p);
}

std::array<double, 3> neuron_drift(const NeuronParams& p, std::span<const double> x, const EmpiricalMeasure& mu) {
  require(x.size() == 3 && mu.dim() == 3, "neuron states are three-dimensional");
  const NeuronDynamics dyn(p);
  std::array<double, 3> out{};
  dyn.drift(x, eval_interaction(dyn, Interaction::Drift, x, mu), out);
  return out;
}

std::array<double, 9> neuron_diffusion(const NeuronParams& p, std::span<const double> x, const EmpiricalMeasure& mu) {
  require(x.size() == 3 && mu.dim() == 3, "neuron states are three-dimensional");
  const NeuronDynamics dyn(p);
  std::array<double, 9> out{};
  dyn.diffusion(x, eval_interaction(dyn, Interaction::Diffusion, x, mu), out);
  return out;
}

double neuron_b32(const NeuronParams& p, std::span<const double> x) {
  require(x.size() == 3, "neuron states are three-dimensional");
  return NeuronDynamics(p).b32(x);
}

double neuron_obs_logdensity(const NeuronParams& p, std::span<const double> x, std::span<const double> y) {
  require(p.sigma1 > 0 && p.sigma2 > 0 && p.sigma3 > 0, "observation noise levels must be positive");
  require(x.size() == 3 && y.size() == 3, "neuron states are three-dimensional");
  return NeuronDynamics(p).log_obs(x, y);
}

LinearTransition linear_transition(double kappa, double sigma, int level) {
  LinearTransition tr;
  const double s2 = sigma * sigma;
  if (level < 0) {
    tr.A = std::exp(-kappa);
    tr.Q = kappa > 0 ? s2 * (-std::expm1(-2.0 * kappa)) / (2.0 * kappa) : s2;
    return tr;
  }
  const std::size_t n = std::size_t{1} << level;
  const double dt = 1.0 / static_cast<double>(n);
  const double r = 1.0 - kappa * dt;
  double pw = 1.0, q = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    q += pw * pw;
    pw *= r;
  }
  tr.A = pw;
  tr.Q = s2 * dt * q;
  return tr;
}

double kalman_loglik(const LinearGaussianParams& p, const Dataset& data, int level) {
  p.validate();
  data.validate(1);
  const auto tr = linear_transition(p.kappa, p.sigma, level);
  const double r = p.sigma_obs * p.sigma_obs;
  double m = p.x0, P = 0.0, ll = 0.0;
  for (const auto& yv : data.observations) {
    m = tr.A * m + (1.0 - tr.A) * p.mu;
    P = tr.A * tr.A * P + tr.Q;
    const double S = P + r;
    if (!(S > 0.0) || !std::isfinite(S)) throw Error(ErrorKind::Numeric, "singular", "innovation variance is not positive");
    const double e = yv[0] - m;
    ll += -0.5 * (std::log(2.0 * std::numbers::pi * S) + e * e / S);
    const double K = P / S;
    m += K * e;
    P = (1.0 - K) * P;
  }
  return ll;
}

std::vector<double> kalman_smoothed_means(const LinearGaussianParams& p, const Dataset& data, int level) {
  p.validate();
  data.validate(1);
  const auto tr = linear_transition(p.kappa, p.sigma, level);
  const double r = p.sigma_obs * p.sigma_obs;
  const std::size_t T = data.horizon();
  std::vector<double> mp(T), Pp(T), mf(T), Pf(T);
  double m = p.x0, P = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    mp[t] = tr.A * m + (1.0 - tr.A) * p.mu;
    Pp[t] = tr.A * tr.A * P + tr.Q;
    const double S = Pp[t] + r;
    if (!(S > 0.0) || !std::isfinite(S)) throw Error(ErrorKind::Numeric, "singular", "innovation variance is not positive");
    const double K = Pp[t] / S;
    mf[t] = m = mp[t] + K * (data.observations[t][0] - mp[t]);
    Pf[t] = P = (1.0 - K) * Pp[t];
  }
  std::vector<double> ms(T);
  ms[T - 1] = mf[T - 1];
  for (std::size_t t = T - 1; t-- > 0;) {
    const double G = Pp[t + 1] > 0.0 ? Pf[t] * tr.A / Pp[t + 1] : 0.0;
    ms[t] = mf[t] + G * (ms[t + 1] - mp[t + 1]);
  }
  return ms;
}

NeuronParams neuron_params(const ModelOptions& opts, const ParamVector* theta) {
  NeuronParams p = apply_overrides(NeuronParams{}, neuron_fields(), opts, theta);
  if (opts.gaussian_init) p.gaussian_init = *opts.gaussian_init;
  return p;
}
OUMeanFieldParams ou_params(const ModelOptions& opts, const ParamVector* theta) {
  return apply_overrides(OUMeanFieldParams{}, ou_fields(), opts, theta);
}
LinearGaussianParams linear_gaussian_params(const ModelOptions& opts, const ParamVector* theta) {
  return apply_overrides(LinearGaussianParams{}, lg_fields(), opts, theta);
}

double model_coordinate(const std::string& model, const ModelOptions& opts, const std::string& name) {
  if (model == "neuron3d") return neuron_params(opts).*(find_field(neuron_fields(), name).ptr);
  if (model == "ou-meanfield") return ou_params(opts).*(find_field(ou_fields(), name).ptr);
  if (model == "linear-gaussian") return linear_gaussian_params(opts).*(find_field(lg_fields(), name).ptr);
  throw Error(ErrorKind::Config, "config", "unknown model '" + model + "'");
}

std::vector<std::string> registered_models() { return {"neuron3d", "ou-meanfield", "linear-gaussian"}; }

std::unique_ptr<Model> make_model(const std::string& name, const ModelOptions& opts) {
  try {
    if (name == "neuron3d") {
      const auto free = opts.free.value_or(
          std::vector<std::string>{"I", "J", "c", "lambda", "b_ext", "Gamma", "sigma1", "sigma2", "sigma3"});
      return std::make_unique<StructModel<NeuronParams>>(name, 3, 3, neuron_params(opts), neuron_fields(), free,
                                                         opts.priors, &make_neuron_dynamics);
    }
    if (opts.gaussian_init) throw Error(ErrorKind::Config, "config", "gaussian_init applies to neuron3d only");
    if (name == "ou-meanfield") {
      const auto free = opts.free.value_or(std::vector<std::string>{"theta_pull", "sigma"});
      return std::make_unique<StructModel<OUMeanFieldParams>>(name, 1, 1, ou_params(opts), ou_fields(), free,
                                                              opts.priors, &make_ou_dynamics);
    }
    if (name == "linear-gaussian") {
      const auto free = opts.free.value_or(std::vector<std::string>{"mu"});
      return std::make_unique<StructModel<LinearGaussianParams>>(name, 1, 1, linear_gaussian_params(opts), lg_fields(),
                                                                 free, opts.priors, &make_linear_gaussian_dynamics);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Domain) throw Error(ErrorKind::Config, "config", e.what());
    throw;
  }
  throw Error(ErrorKind::Config, "config", "unknown model '" + name + "'");
}

}  // namespace mvpmcmc
