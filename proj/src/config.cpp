#include "mvpmcmc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "mvpmcmc/error.hpp"
#include "mvpmcmc/io.hpp"

namespace mvpmcmc {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::Config, "config", msg); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) bad("unknown key '" + k + "' in " + where);
  }
}

template <class T>
T get(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    bad(std::string("key '") + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (it->is_number_integer() && it->get<long long>() >= 0) return it->get<std::size_t>();
  if (it->is_number_float()) {
    const double v = it->get<double>();
    if (v >= 0 && v == std::floor(v) && v < 1e15) return static_cast<std::size_t>(v);
  }
  bad(std::string("key '") + key + "' must be a nonnegative integer");
}

std::vector<std::size_t> get_counts(const json& obj, const char* key) {
  std::vector<std::size_t> out;
  const auto it = obj.find(key);
  if (it == obj.end()) return out;
  if (!it->is_array()) bad(std::string("key '") + key + "' must be an array");
  for (const auto& v : *it) {
    json wrap = {{"v", v}};
    out.push_back(get_count(wrap, "v", 0));
  }
  return out;
}

std::map<std::string, double> get_named(const json& obj, const char* key) {
  std::map<std::string, double> out;
  const auto it = obj.find(key);
  if (it == obj.end()) return out;
  if (!it->is_object()) bad(std::string("key '") + key + "' must map names to numbers");
  for (const auto& [k, v] : it->items()) {
    if (!v.is_number()) bad(std::string("'") + key + "." + k + "' must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

ParamVector named_to_params(const Model& model, const std::map<std::string, double>& named, const char* what) {
  const auto names = model.param_names();
  for (const auto& [k, v] : named) {
    if (std::find(names.begin(), names.end(), k) == names.end()) {
      bad(std::string(what) + " names '" + k + "', which is not an inferred coordinate");
    }
  }
  std::vector<double> values;
  for (const auto& n : names) {
    const auto it = named.find(n);
    if (it == named.end()) bad(std::string(what) + " is missing '" + n + "'");
    values.push_back(it->second);
  }
  return model.make_params(values);
}

BenchmarkConfig parse_benchmark(const json& j) {
  check_keys(j, {"epsilons", "replicates", "algorithms", "single_level", "reference"}, "benchmark");
  BenchmarkConfig b;
  b.epsilons = get<std::vector<double>>(j, "epsilons", {});
  b.replicates = get_count(j, "replicates", b.replicates);
  b.algorithms = get<std::vector<std::string>>(j, "algorithms", b.algorithms);
  for (const auto& a : b.algorithms) {
    if (a != "pmcmc" && a != "mlpmcmc") bad("benchmark algorithm must be pmcmc or mlpmcmc");
  }
  if (b.replicates < 1) bad("benchmark.replicates must be >= 1");
  for (double e : b.epsilons) {
    if (!(e > 0 && e < 1)) bad("benchmark epsilons must lie in (0, 1)");
  }
  if (auto it = j.find("single_level"); it != j.end()) {
    check_keys(*it, {"c_K", "c_N", "l_min"}, "benchmark.single_level");
    b.sl_c_K = get<double>(*it, "c_K", b.sl_c_K);
    b.sl_c_N = get<double>(*it, "c_N", b.sl_c_N);
    b.sl_min_level = get<int>(*it, "l_min", b.sl_min_level);
  }
  if (auto it = j.find("reference"); it != j.end()) {
    check_keys(*it, {"method", "grid_points", "l", "N", "M", "K"}, "benchmark.reference");
    auto& r = b.reference;
    r.method = get<std::string>(*it, "method", r.method);
    if (r.method != "auto" && r.method != "quadrature" && r.method != "long-run") {
      bad("benchmark.reference.method must be auto, quadrature or long-run");
    }
    r.grid_points = get_count(*it, "grid_points", r.grid_points);
    r.level = get<int>(*it, "l", r.level);
    r.N = get_count(*it, "N", r.N);
    r.M = get_count(*it, "M", r.M);
    r.K = get_count(*it, "K", r.K);
  }
  return b;
}

}  // namespace

Prior parse_prior(const json& j) {
  check_keys(j, {"kind", "mean", "sd", "log_mean", "log_sd", "lower", "upper"}, "prior");
  const auto kind = get<std::string>(j, "kind", "");
  Prior p;
  if (kind == "normal") {
    p = {PriorKind::Normal, get<double>(j, "mean", 0.0), get<double>(j, "sd", 1.0)};
  } else if (kind == "lognormal") {
    p = {PriorKind::LogNormal, get<double>(j, "log_mean", 0.0), get<double>(j, "log_sd", 1.0)};
  } else if (kind == "uniform") {
    p = {PriorKind::Uniform, get<double>(j, "lower", 0.0), get<double>(j, "upper", 1.0)};
    if (!(p.b > p.a)) bad("uniform prior needs lower < upper");
    return p;
  } else if (kind == "flat") {
    return {PriorKind::Flat, 0.0, 1.0};
  } else {
    bad("prior kind must be normal, lognormal, uniform or flat");
  }
  if (!(p.b > 0)) bad("prior spread must be positive");
  return p;
}

json prior_to_json(const Prior& p) {
  switch (p.kind) {
    case PriorKind::Normal:
      return {{"kind", "normal"}, {"mean", p.a}, {"sd", p.b}};
    case PriorKind::LogNormal:
      return {{"kind", "lognormal"}, {"log_mean", p.a}, {"log_sd", p.b}};
    case PriorKind::Uniform:
      return {{"kind", "uniform"}, {"lower", p.a}, {"upper", p.b}};
    case PriorKind::Flat:
      break;
  }
  return {{"kind", "flat"}};
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  static const std::set<std::string> keys = {
      "model", "params", "free", "priors", "gaussian_init", "theta_true", "theta0", "T", "data", "observations",
      "sim_level", "sim_N", "algorithm", "l", "N", "M", "K", "burn_in", "burn_in_fraction", "l_star", "L", "N_l",
      "K_l", "epsilon", "c_K", "c_N", "proposal", "seed", "functionals", "resampling", "max_failure_rate",
      "benchmark", "comment"};
  check_keys(doc, keys, "config");

  ExperimentConfig c;
  c.raw = doc;
  c.model = get<std::string>(doc, "model", "");
  if (c.model.empty()) bad("config needs a 'model'");
  c.model_options.params = get_named(doc, "params");
  if (doc.contains("free")) c.model_options.free = get<std::vector<std::string>>(doc, "free", {});
  if (auto it = doc.find("priors"); it != doc.end()) {
    if (!it->is_object()) bad("'priors' must map names to prior objects");
    for (const auto& [k, v] : it->items()) c.model_options.priors[k] = parse_prior(v);
  }
  if (doc.contains("gaussian_init")) c.model_options.gaussian_init = get<bool>(doc, "gaussian_init", true);
  c.theta_true = get_named(doc, "theta_true");
  c.theta0 = get_named(doc, "theta0");

  c.T = get_count(doc, "T", c.T);
  if (doc.contains("data") && doc.contains("observations")) bad("give either 'data' or 'observations', not both");
  if (auto it = doc.find("data"); it != doc.end()) {
    if (!it->is_string()) bad("'data' must be a CSV path");
    std::filesystem::path p = it->get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.data = read_dataset_csv(p);
  }
  if (auto it = doc.find("observations"); it != doc.end()) {
    Dataset d;
    try {
      for (const auto& row : *it) {
        d.observations.push_back(row.is_array() ? row.get<std::vector<double>>() : std::vector<double>{row.get<double>()});
      }
    } catch (const json::exception&) {
      bad("'observations' must be an array of numbers or of number arrays");
    }
    c.data = std::move(d);
  }
  if (c.data) {
    if (doc.contains("T") && c.T != c.data->horizon()) bad("'T' disagrees with the number of observations");
    c.T = c.data->horizon();
  }
  if (c.T < 1) bad("T must be >= 1");

  c.sim_level = get<int>(doc, "sim_level", c.sim_level);
  c.sim_N = get_count(doc, "sim_N", c.sim_N);
  c.algorithm = get<std::string>(doc, "algorithm", c.algorithm);
  if (c.algorithm != "pmcmc" && c.algorithm != "mlpmcmc") bad("algorithm must be pmcmc or mlpmcmc");

  c.l = get<int>(doc, "l", c.l);
  c.N = get_count(doc, "N", c.N);
  c.M = get_count(doc, "M", c.M);
  c.K = get_count(doc, "K", c.K);
  if (doc.contains("burn_in")) c.burn_in = get_count(doc, "burn_in", 0);
  c.burn_in_fraction = get<double>(doc, "burn_in_fraction", c.burn_in_fraction);
  if (!(c.burn_in_fraction >= 0 && c.burn_in_fraction < 1)) bad("burn_in_fraction must lie in [0, 1)");
  c.l_star = get<int>(doc, "l_star", c.l_star);
  if (doc.contains("L")) c.L = get<int>(doc, "L", 0);
  c.N_l = get_counts(doc, "N_l");
  c.K_l = get_counts(doc, "K_l");
  if (doc.contains("epsilon")) c.epsilon = get<double>(doc, "epsilon", 0.0);
  c.c_K = get<double>(doc, "c_K", c.c_K);
  c.c_N = get<double>(doc, "c_N", c.c_N);
  if (c.l < 0 || c.l_star < 0 || c.sim_level < 0) bad("levels must be nonnegative");
  if (c.N < 1 || c.M < 1 || c.K < 1 || c.sim_N < 1) bad("N, M, K and sim_N must be >= 1");

  if (auto it = doc.find("proposal"); it != doc.end()) {
    check_keys(*it, {"step_scales"}, "proposal");
    if (auto s = it->find("step_scales"); s != it->end()) {
      if (s->is_array()) {
        c.step_scale_list = get<std::vector<double>>(*it, "step_scales", {});
      } else {
        c.step_scales = get_named(*it, "step_scales");
      }
    }
  }

  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      bad("seed must be an unsigned 64-bit integer");
    }
    c.seed = it->get<std::uint64_t>();
  }
  c.functionals = get<std::vector<std::string>>(doc, "functionals", {});
  const auto rs = get<std::string>(doc, "resampling", "multinomial");
  if (rs == "multinomial") {
    c.resampling = Resampling::Multinomial;
  } else if (rs == "systematic") {
    c.resampling = Resampling::Systematic;
  } else {
    bad("resampling must be multinomial or systematic");
  }
  c.max_failure_rate = get<double>(doc, "max_failure_rate", c.max_failure_rate);
  if (auto it = doc.find("benchmark"); it != doc.end()) c.benchmark = parse_benchmark(*it);

  // Fail early on model-level problems.
  const auto model = c.build_model();
  c.test_functionals(*model);
  c.proposal(*model);
  if (!c.theta_true.empty()) c.true_theta(*model);
  if (!c.theta0.empty()) c.start_theta(*model);
  if (c.data) c.data->validate(model->obs_dim());
  if (c.algorithm == "mlpmcmc") c.level_plan();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    bad("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

std::unique_ptr<Model> ExperimentConfig::build_model() const { return make_model(model, model_options); }

ParamVector ExperimentConfig::true_theta(const Model& m) const {
  if (!theta_true.empty()) return named_to_params(m, theta_true, "theta_true");
  // Stored coordinate values of the model (overrides applied).
  std::map<std::string, double> named;
  for (const auto& n : m.param_names()) named[n] = model_coordinate(model, model_options, n);
  return named_to_params(m, named, "model values");
}

std::optional<ParamVector> ExperimentConfig::start_theta(const Model& m) const {
  if (theta0.empty()) return std::nullopt;
  return named_to_params(m, theta0, "theta0");
}

ProposalConfig ExperimentConfig::proposal(const Model& m) const {
  ProposalConfig p;
  const auto names = m.param_names();
  if (!step_scale_list.empty()) {
    if (step_scale_list.size() != names.size()) bad("proposal.step_scales needs one entry per inferred coordinate");
    p.step_scales = step_scale_list;
  } else if (!step_scales.empty()) {
    p.step_scales = named_to_params(m, step_scales, "proposal.step_scales").values;
  } else {
    p.step_scales.assign(names.size(), 0.1);
  }
  for (double s : p.step_scales) {
    if (!(s >= 0) || !std::isfinite(s)) bad("step scales must be finite and >= 0");
  }
  return p;
}

std::vector<TestFunctional> ExperimentConfig::test_functionals(const Model& m) const {
  const auto names = m.param_names();
  std::vector<TestFunctional> out;
  if (functionals.empty()) {
    for (const auto& n : names) out.push_back(parameter_functional(names, n));
  } else {
    for (const auto& f : functionals) {
      auto tf = parse_functional(names, f);
      if (f.rfind("state:", 0) == 0) {
        const auto t = std::stoul(f.substr(6, f.find(':', 6) - 6));
        const auto coord = std::stoul(f.substr(f.find(':', 6) + 1));
        if (t > T || coord >= m.state_dim()) bad("state functional '" + f + "' is out of range");
      }
      out.push_back(std::move(tf));
    }
  }
  return out;
}

LevelPlan ExperimentConfig::level_plan() const {
  LevelPlan plan;
  if (!N_l.empty() || !K_l.empty()) {
    if (!L) bad("explicit N_l / K_l need 'L'");
    plan.l_star = l_star;
    plan.L = *L;
    plan.N = N_l;
    plan.K = K_l;
    plan.M = M;
  } else if (epsilon) {
    if (!(*epsilon > 0 && *epsilon < 1)) bad("epsilon must lie in (0, 1)");
    plan = allocate_levels(*epsilon, l_star, c_K, c_N, M);
    if (L && *L != plan.L) bad("'L' disagrees with the level count allocated from epsilon");
  } else {
    bad("mlpmcmc needs either epsilon or L with N_l and K_l");
  }
  plan.validate();
  return plan;
}

std::size_t ExperimentConfig::burn_in_for_chain(std::size_t K_) const {
  if (burn_in) {
    if (*burn_in >= K_) bad("burn_in must be smaller than K");
    return *burn_in;
  }
  return mvpmcmc::burn_in_for(K_, burn_in_fraction);
}

ChainConfig ExperimentConfig::chain_config(const Model& m, int level, std::size_t N_, std::size_t K_) const {
  ChainConfig cc;
  cc.iterations = K_;
  cc.burn_in = burn_in_for_chain(K_);
  cc.level = Level{level};
  cc.law_particles = N_;
  cc.filter_particles = M;
  cc.proposal = proposal(m);
  cc.theta0 = start_theta(m);
  cc.filter.resampling = resampling;
  cc.max_failure_rate = max_failure_rate;
  return cc;
}

}  // namespace mvpmcmc
