#include "mvpmcmc/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "mvpmcmc/error.hpp"
#include "mvpmcmc/io.hpp"
#include "mvpmcmc/law.hpp"

namespace mvpmcmc {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::string> labels_of(const std::vector<TestFunctional>& fs) {
  std::vector<std::string> out;
  for (const auto& f : fs) out.push_back(f.label);
  return out;
}

json stats_json(const ChainStats& s) {
  return {{"proposals", s.proposals},
          {"accepted", s.accepted},
          {"acceptance_rate", s.acceptance_rate()},
          {"failures", s.failures},
          {"out_of_support", s.out_of_support}};
}

template <class Sample>
json parameter_ess(const std::vector<Sample>& samples, std::size_t burn_in) {
  json out = json::object();
  if (samples.empty()) return out;
  const auto& names = samples.front().theta.names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> series;
    for (std::size_t k = burn_in; k < samples.size(); ++k) series.push_back(samples[k].theta[i]);
    out[names[i]] = effective_sample_size(series);
  }
  return out;
}

template <class Sample>
void write_trace(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  std::vector<std::string> header{"iteration"};
  for (const auto& n : samples.front().theta.names) header.push_back(n);
  header.push_back("log_lik");
  header.push_back("accepted");
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    row.insert(row.end(), samples[k].theta.values.begin(), samples[k].theta.values.end());
    row.push_back(samples[k].log_lik);
    row.push_back(samples[k].accepted ? 1.0 : 0.0);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

std::string level_file(const char* stem, int l) { return std::string(stem) + "_level_" + std::to_string(l) + ".csv"; }

RandStream chain_stream(const RandStream& root, int level) { return root.child("level", level).child("chain", 0); }

void limit_omp_threads(std::size_t workers) {
  if (workers > 1) omp_set_num_threads(std::max(1, omp_get_num_procs() / static_cast<int>(workers)));
}

}  // namespace

SimulatedData generate_data(const Model& model, const ParamVector& theta, std::size_t T, int sim_level,
                            std::size_t sim_N, const RandStream& stream) {
  if (T < 1) throw Error(ErrorKind::Config, "config", "T must be >= 1");
  const auto dyn = model.bind(theta);
  const auto laws = propagate_laws(*dyn, sim_N, T, Level{sim_level}, stream.child("laws", 0));
  SimulatedData out;
  StateVec x(dyn->dim());
  RandStream x0 = stream.child("x0", 0);
  dyn->initial_state(x0, x);
  RandStream path = stream.child("latent", 0);
  for (std::size_t t = 1; t <= T; ++t) {
    try {
      x = sample_transition_path(*dyn, x, laws[t - 1], path).end;
    } catch (const Error& e) {
      throw Error(e.kind(), e.code(), "latent path failed in interval " + std::to_string(t), static_cast<long>(t));
    }
    out.latent.push_back(x);
    StateVec y(dyn->obs_dim());
    RandStream ys = stream.child("obs", t);
    dyn->sample_obs(x, ys, y);
    out.data.observations.push_back(std::move(y));
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        limit_omp_threads(workers);
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

SimulatedData experiment_data(const ExperimentConfig& cfg, const Model& model) {
  if (cfg.data) return {*cfg.data, {}};
  return generate_data(model, cfg.true_theta(model), cfg.T, cfg.sim_level, cfg.sim_N,
                       RandStream(StreamKey(cfg.seed).derive("data", 0)));
}

EstimatorOutput run_single_level(const ExperimentConfig& cfg, const Model& model, const Dataset& data, int level,
                                 std::size_t N, std::size_t K, const RandStream& stream, const RunOptions& opts) {
  const auto functionals = cfg.test_functionals(model);
  const ChainConfig cc = cfg.chain_config(model, level, N, K);
  const auto t0 = Clock::now();
  const auto chain = run_pmcmc_chain(model, data, cc, chain_stream(stream, level));

  EstimatorOutput out;
  out.timing["chain_level_" + std::to_string(level)] = seconds_since(t0);
  json est = json::object();
  for (const auto& f : functionals) {
    out.values.push_back(estimate_base(chain.samples, f, cc.burn_in));
    est[f.label] = out.values.back();
  }
  LevelPlan plan;
  plan.l_star = plan.L = level;
  plan.N = {N};
  plan.K = {K};
  plan.M = cc.filter_particles;
  out.summary = {{"algorithm", "pmcmc"},
                 {"estimates", est},
                 {"cost", plan_cost(plan, data.horizon())},
                 {"chain",
                  {{"level", level},
                   {"N", N},
                   {"M", cc.filter_particles},
                   {"K", K},
                   {"burn_in", cc.burn_in},
                   {"stats", stats_json(chain.stats)},
                   {"ess", parameter_ess(chain.samples, cc.burn_in)}}}};
  if (!opts.out_dir.empty()) write_trace(opts.out_dir / level_file("trace", level), chain.samples);
  return out;
}

EstimatorOutput run_multilevel(const ExperimentConfig& cfg, const Model& model, const Dataset& data,
                               const LevelPlan& plan, const RandStream& stream, const RunOptions& opts) {
  plan.validate();
  const auto functionals = cfg.test_functionals(model);
  const std::size_t F = functionals.size();
  const std::size_t n_levels = plan.levels();

  struct LevelResult {
    std::vector<double> values;  // base means or increments
    double ess_fine = 0.0, ess_coarse = 0.0;
    std::size_t burn_in = 0;
    ChainStats stats;
    json ess;
    double seconds = 0.0;
  };
  std::vector<LevelResult> results(n_levels);

  parallel_for(n_levels, opts.workers, [&](std::size_t i) {
    const int l = plan.l_star + static_cast<int>(i);
    ChainConfig cc = cfg.chain_config(model, l, plan.N[i], plan.K[i]);
    cc.filter_particles = plan.M;
    auto& r = results[i];
    r.burn_in = cc.burn_in;
    const auto t0 = Clock::now();
    if (i == 0) {
      const auto chain = run_pmcmc_chain(model, data, cc, chain_stream(stream, l));
      for (const auto& f : functionals) r.values.push_back(estimate_base(chain.samples, f, cc.burn_in));
      r.stats = chain.stats;
      r.ess = parameter_ess(chain.samples, cc.burn_in);
      if (!opts.out_dir.empty()) write_trace(opts.out_dir / level_file("trace", l), chain.samples);
    } else {
      const auto chain = run_bilevel_chain(model, data, cc, chain_stream(stream, l));
      const auto w = increment_weights(chain.samples, model, data, cc.burn_in);
      std::vector<std::string> header{"iteration", "log_w_fine", "log_w_coarse"};
      for (const auto& f : functionals) {
        header.push_back("phi_fine:" + f.label);
        header.push_back("phi_coarse:" + f.label);
      }
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < w.log_fine.size(); ++k) {
        const auto& s = chain.samples[cc.burn_in + k];
        std::vector<double> row{static_cast<double>(cc.burn_in + k), w.log_fine[k], w.log_coarse[k]};
        for (const auto& f : functionals) {
          row.push_back(f(s.theta, s.fine_trajectory));
          row.push_back(f(s.theta, s.coarse_trajectory));
        }
        rows.push_back(std::move(row));
      }
      for (const auto& f : functionals) {
        const auto inc = weighted_increment(chain.samples, w, f);
        r.values.push_back(inc.value);
        r.ess_fine = inc.ess_fine;
        r.ess_coarse = inc.ess_coarse;
      }
      r.stats = chain.stats;
      r.ess = parameter_ess(chain.samples, cc.burn_in);
      if (!opts.out_dir.empty()) {
        write_trace(opts.out_dir / level_file("trace", l), chain.samples);
        write_csv(opts.out_dir / level_file("coupled", l), header, rows);
      }
    }
    r.seconds = seconds_since(t0);
  });

  EstimatorOutput out;
  json est = json::object(), base = json::object(), incs = json::object();
  std::vector<MLEstimate> per_f;
  for (std::size_t j = 0; j < F; ++j) {
    std::vector<double> increments;
    for (std::size_t i = 1; i < n_levels; ++i) increments.push_back(results[i].values[j]);
    const auto ml = combine_ml_estimate(results[0].values[j], increments);
    out.values.push_back(ml.value);
    est[functionals[j].label] = ml.value;
    base[functionals[j].label] = ml.base_term;
    incs[functionals[j].label] = ml.increments;
  }

  json levels = json::array();
  for (std::size_t i = 0; i < n_levels; ++i) {
    const int l = plan.l_star + static_cast<int>(i);
    json lv = {{"level", l},
               {"kind", i == 0 ? "base" : "increment"},
               {"N", plan.N[i]},
               {"K", plan.K[i]},
               {"burn_in", results[i].burn_in},
               {"stats", stats_json(results[i].stats)},
               {"ess", results[i].ess}};
    if (i > 0) {
      lv["weight_ess_fine"] = results[i].ess_fine;
      lv["weight_ess_coarse"] = results[i].ess_coarse;
    }
    levels.push_back(lv);
    out.timing["chain_level_" + std::to_string(l)] = results[i].seconds;
  }

  if (!opts.out_dir.empty()) {
    std::vector<std::string> header{"level"};
    for (const auto& f : functionals) header.push_back("increment:" + f.label);
    header.push_back("ess_fine");
    header.push_back("ess_coarse");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < n_levels; ++i) {
      std::vector<double> row{static_cast<double>(plan.l_star + static_cast<int>(i))};
      row.insert(row.end(), results[i].values.begin(), results[i].values.end());
      row.push_back(results[i].ess_fine);
      row.push_back(results[i].ess_coarse);
      rows.push_back(std::move(row));
    }
    write_csv(opts.out_dir / "increments.csv", header, rows);
  }

  json plan_json = {{"l_star", plan.l_star}, {"L", plan.L}, {"N_l", plan.N}, {"K_l", plan.K}, {"M", plan.M}};
  if (plan.epsilon) plan_json["epsilon"] = *plan.epsilon;
  out.summary = {{"algorithm", "mlpmcmc"},
                 {"estimates", est},
                 {"base", base},
                 {"increments", incs},
                 {"plan", plan_json},
                 {"cost", plan_cost(plan, data.horizon())},
                 {"levels", levels}};
  return out;
}

json run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto t0 = Clock::now();
  const auto model = cfg.build_model();
  const auto sim = experiment_data(cfg, *model);
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    write_text(opts.out_dir / "config.json", cfg.raw.dump(2) + "\n");
    if (!cfg.data) {
      std::vector<std::string> yh, xh;
      for (std::size_t i = 0; i < model->obs_dim(); ++i) yh.push_back("y" + std::to_string(i + 1));
      for (std::size_t i = 0; i < model->state_dim(); ++i) xh.push_back("x" + std::to_string(i + 1));
      write_csv(opts.out_dir / "data.csv", yh, sim.data.observations);
      write_csv(opts.out_dir / "latent.csv", xh, sim.latent);
    }
  }

  const RandStream root(StreamKey(cfg.seed).derive("run", 0));
  EstimatorOutput est = cfg.algorithm == "pmcmc"
                            ? run_single_level(cfg, *model, sim.data, cfg.l, cfg.N, cfg.K, root, opts)
                            : run_multilevel(cfg, *model, sim.data, cfg.level_plan(), root, opts);

  json summary = est.summary;
  summary["model"] = cfg.model;
  summary["seed"] = cfg.seed;
  summary["T"] = sim.data.horizon();
  summary["functionals"] = labels_of(cfg.test_functionals(*model));
  summary["parameters"] = model->param_names();
  if (!opts.out_dir.empty()) {
    write_text(opts.out_dir / "summary.json", summary.dump(2) + "\n");
    json timing = est.timing;
    timing["total_seconds"] = seconds_since(t0);
    timing["workers"] = opts.workers;
    write_text(opts.out_dir / "timing.json", timing.dump(2) + "\n");
  }
  return summary;
}

std::vector<double> quadrature_reference(const ExperimentConfig& cfg, const Model& model, const Dataset& data,
                                         const std::vector<TestFunctional>& functionals, std::size_t grid_points) {
  if (cfg.model != "ou-meanfield" && cfg.model != "linear-gaussian") {
    throw Error(ErrorKind::Config, "config", "quadrature reference needs a linear model");
  }
  const auto names = model.param_names();
  // Parameter coordinates map to their index; "state:<t>:0" maps to d + t - 1.
  const std::size_t d = names.size();
  const std::size_t T = data.horizon();
  std::vector<std::size_t> fidx;
  bool need_states = false;
  for (const auto& f : functionals) {
    const auto it = std::find(names.begin(), names.end(), f.label);
    if (it != names.end()) {
      fidx.push_back(static_cast<std::size_t>(it - names.begin()));
      continue;
    }
    std::size_t t = 0, c = 0;
    if (std::sscanf(f.label.c_str(), "state:%zu:%zu", &t, &c) != 2 || t < 1 || t > T || c != 0) {
      throw Error(ErrorKind::Config, "config", "quadrature reference covers parameter and state:<t>:0 functionals only");
    }
    fidx.push_back(d + t - 1);
    need_states = true;
  }
  if (d == 0 || grid_points < 3) throw Error(ErrorKind::Config, "config", "quadrature needs inferred coordinates and >= 3 points");
  const double total = std::pow(static_cast<double>(grid_points), static_cast<double>(d));
  if (total > 2e7) throw Error(ErrorKind::Config, "config", "quadrature grid too large; use a long-run reference");

  const ParamTransform tr = model.transform();
  const auto& free = model.free_params();

  auto linear_params = [&](const ParamVector& theta) {
    if (cfg.model == "ou-meanfield") {
      const auto o = ou_params(cfg.model_options, &theta);
      // Mean-field limit keeps the law mean at m0, so the focal particle is a plain OU process.
      return LinearGaussianParams{o.theta_pull, o.m0, o.sigma, o.m0, o.sigma_obs};
    }
    return linear_gaussian_params(cfg.model_options, &theta);
  };
  // Log target on the unconstrained scale: likelihood x prior x Jacobian.
  auto log_target = [&](const std::vector<double>& v) {
    const ParamVector theta = tr.from_unconstrained(v, names);
    const double lp = model.log_prior(theta);
    if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
    double ll;
    try {
      ll = kalman_loglik(linear_params(theta), data, -1);
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
    return ll + lp + tr.log_jacobian(theta);
  };

  std::vector<double> lo(d), hi(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto& pr = free[i].prior;
    const bool logc = free[i].transform == Transform::Log;
    switch (pr.kind) {
      case PriorKind::Normal:
        if (logc) throw Error(ErrorKind::Config, "config", "normal prior on a log coordinate is not supported by quadrature");
        lo[i] = pr.a - 8 * pr.b;
        hi[i] = pr.a + 8 * pr.b;
        break;
      case PriorKind::LogNormal:
        if (!logc) throw Error(ErrorKind::Config, "config", "lognormal prior on an identity coordinate");
        lo[i] = pr.a - 8 * pr.b;
        hi[i] = pr.a + 8 * pr.b;
        break;
      case PriorKind::Uniform:
        lo[i] = logc ? std::log(std::max(pr.a, 1e-300)) : pr.a;
        hi[i] = logc ? std::log(pr.b) : pr.b;
        break;
      case PriorKind::Flat:
        throw Error(ErrorKind::Config, "config", "quadrature needs proper priors");
    }
  }

  struct Moments {
    std::vector<double> mean_v, sd_v, mean_theta, mean_state;
  };
  auto integrate = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t G = grid_points;
    const auto n = static_cast<std::size_t>(total);
    std::vector<double> logw(n);
    std::vector<double> v(d);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t rem = k;
      for (std::size_t i = 0; i < d; ++i) {
        v[i] = a[i] + (b[i] - a[i]) * static_cast<double>(rem % G) / static_cast<double>(G - 1);
        rem /= G;
      }
      logw[k] = log_target(v);
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    if (!std::isfinite(mx)) throw Error(ErrorKind::Numeric, "numeric overflow", "posterior vanishes on the grid");
    Moments m{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
              std::vector<double>(T, 0.0)};
    std::vector<double> m2(d, 0.0);
    double z = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = std::exp(logw[k] - mx);
      if (w == 0.0) continue;
      std::size_t rem = k;
      for (std::size_t i = 0; i < d; ++i) {
        v[i] = a[i] + (b[i] - a[i]) * static_cast<double>(rem % G) / static_cast<double>(G - 1);
        rem /= G;
      }
      const ParamVector theta = tr.from_unconstrained(v, names);
      z += w;
      for (std::size_t i = 0; i < d; ++i) {
        m.mean_v[i] += w * v[i];
        m2[i] += w * v[i] * v[i];
        m.mean_theta[i] += w * theta[i];
      }
      if (need_states) {
        const auto xs = kalman_smoothed_means(linear_params(theta), data, -1);
        for (std::size_t t = 0; t < T; ++t) m.mean_state[t] += w * xs[t];
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      m.mean_v[i] /= z;
      m.mean_theta[i] /= z;
      m.sd_v[i] = std::sqrt(std::max(0.0, m2[i] / z - m.mean_v[i] * m.mean_v[i]));
    }
    for (double& x : m.mean_state) x /= z;
    return m;
  };

  const auto coarse = integrate(lo, hi);
  std::vector<double> a(d), b(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double half = 10.0 * std::max(coarse.sd_v[i], 1e-6 * (hi[i] - lo[i]));
    a[i] = std::max(lo[i], coarse.mean_v[i] - half);
    b[i] = std::min(hi[i], coarse.mean_v[i] + half);
  }
  const auto fine = integrate(a, b);
  std::vector<double> out;
  for (std::size_t j : fidx) out.push_back(j < d ? fine.mean_theta[j] : fine.mean_state[j - d]);
  return out;
}

SlopeReport fit_points(const std::vector<BenchmarkPoint>& points) {
  SlopeReport rep;
  std::vector<double> cost, mse;
  for (const auto& p : points) {
    cost.push_back(p.cost);
    mse.push_back(p.mse);
  }
  rep.fit = fit_loglog_slope(cost, mse);
  rep.rate = 1.0 / rep.fit.slope;
  if (!points.empty()) {
    for (std::size_t j = 0; j < points.front().mse_per_functional.size(); ++j) {
      std::vector<double> mj;
      for (const auto& p : points) mj.push_back(p.mse_per_functional[j]);
      rep.per_functional.push_back(fit_loglog_slope(cost, mj));
    }
  }
  return rep;
}

BenchmarkResult benchmark_cost_mse(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (!cfg.benchmark) throw Error(ErrorKind::Config, "config", "config has no 'benchmark' section");
  const auto& bc = *cfg.benchmark;
  if (bc.replicates < 3) throw Error(ErrorKind::Config, "config", "benchmark needs at least 3 replicates");
  auto distinct = bc.epsilons;
  std::sort(distinct.begin(), distinct.end());
  if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
    throw Error(ErrorKind::Config, "insufficient points", "benchmark needs at least two distinct budgets");
  }
  const auto t0 = Clock::now();
  const auto model = cfg.build_model();
  const auto sim = experiment_data(cfg, *model);
  const auto functionals = cfg.test_functionals(*model);
  const std::size_t F = functionals.size();
  const std::size_t T = sim.data.horizon();

  BenchmarkResult res;
  json ref_json;
  const bool quad_ok = cfg.model == "ou-meanfield" || cfg.model == "linear-gaussian";
  if (bc.reference.method == "quadrature" || (bc.reference.method == "auto" && quad_ok)) {
    res.reference = quadrature_reference(cfg, *model, sim.data, functionals, bc.reference.grid_points);
    res.reference_method = "quadrature";
    ref_json = {{"method", "quadrature"}, {"grid_points", bc.reference.grid_points}, {"likelihood", "continuous-time Kalman"}};
  } else {
    const RandStream rs(StreamKey(cfg.seed).derive("reference", 0));
    ExperimentConfig rc = cfg;
    rc.M = bc.reference.M;
    const auto ro = run_single_level(rc, *model, sim.data, bc.reference.level, bc.reference.N, bc.reference.K, rs, {});
    res.reference = ro.values;
    res.reference_method = "long-run";
    ref_json = {{"method", "long-run"},
                {"l", bc.reference.level},
                {"N", bc.reference.N},
                {"M", bc.reference.M},
                {"K", bc.reference.K}};
  }
  for (std::size_t j = 0; j < F; ++j) ref_json["values"][functionals[j].label] = res.reference[j];

  struct Task {
    std::size_t alg, eps, rep;
  };
  std::vector<Task> tasks;
  for (std::size_t a = 0; a < bc.algorithms.size(); ++a) {
    for (std::size_t e = 0; e < bc.epsilons.size(); ++e) {
      for (std::size_t r = 0; r < bc.replicates; ++r) tasks.push_back({a, e, r});
    }
  }
  auto plan_for = [&](std::size_t a, std::size_t e) {
    const double eps = bc.epsilons[e];
    if (bc.algorithms[a] == "mlpmcmc") return allocate_levels(eps, cfg.l_star, cfg.c_K, cfg.c_N, cfg.M);
    return allocate_single_level(eps, bc.sl_c_K, bc.sl_c_N, cfg.M, bc.sl_min_level);
  };

  std::vector<std::vector<double>> estimates(tasks.size());
  std::vector<double> task_seconds(tasks.size());
  RunOptions inner;  // replicate runs write no files and run their levels serially
  inner.workers = 1;
  parallel_for(tasks.size(), opts.workers, [&](std::size_t i) {
    const auto& t = tasks[i];
    const auto plan = plan_for(t.alg, t.eps);
    const RandStream rs = RandStream(StreamKey(cfg.seed).derive("bench", 0))
                              .child(bc.algorithms[t.alg], 0)
                              .child("eps", t.eps)
                              .child("rep", t.rep);
    const auto ts = Clock::now();
    if (bc.algorithms[t.alg] == "mlpmcmc") {
      estimates[i] = run_multilevel(cfg, *model, sim.data, plan, rs, inner).values;
    } else {
      estimates[i] = run_single_level(cfg, *model, sim.data, plan.L, plan.N[0], plan.K[0], rs, inner).values;
    }
    task_seconds[i] = seconds_since(ts);
  });

  json alg_json = json::object();
  json timing = json::object();
  for (std::size_t a = 0; a < bc.algorithms.size(); ++a) {
    const auto& name = bc.algorithms[a];
    std::vector<BenchmarkPoint> pts;
    std::vector<std::vector<double>> rep_rows, point_rows;
    for (std::size_t e = 0; e < bc.epsilons.size(); ++e) {
      BenchmarkPoint p;
      p.algorithm = name;
      p.epsilon = bc.epsilons[e];
      p.cost = plan_cost(plan_for(a, e), T);
      p.replicates = bc.replicates;
      p.mse_per_functional.assign(F, 0.0);
      double secs = 0.0;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].alg != a || tasks[i].eps != e) continue;
        std::vector<double> row{p.epsilon, static_cast<double>(tasks[i].rep)};
        for (std::size_t j = 0; j < F; ++j) {
          const double err = estimates[i][j] - res.reference[j];
          p.mse_per_functional[j] += err * err / static_cast<double>(bc.replicates);
          row.push_back(estimates[i][j]);
        }
        rep_rows.push_back(std::move(row));
        secs += task_seconds[i];
      }
      for (double m : p.mse_per_functional) p.mse += m / static_cast<double>(F);
      std::vector<double> prow{p.epsilon, p.cost, p.mse};
      prow.insert(prow.end(), p.mse_per_functional.begin(), p.mse_per_functional.end());
      point_rows.push_back(std::move(prow));
      timing[name]["eps_" + format_double(p.epsilon)] = secs;
      pts.push_back(std::move(p));
    }
    const auto rep = fit_points(pts);
    res.slopes[name] = rep;
    res.points.insert(res.points.end(), pts.begin(), pts.end());

    json pj = json::array();
    for (const auto& p : pts) {
      json mf = json::object();
      for (std::size_t j = 0; j < F; ++j) mf[functionals[j].label] = p.mse_per_functional[j];
      pj.push_back({{"epsilon", p.epsilon}, {"cost", p.cost}, {"mse", p.mse}, {"mse_per_functional", mf}});
    }
    json pf = json::object();
    for (std::size_t j = 0; j < F; ++j) {
      pf[functionals[j].label] = {{"slope", rep.per_functional[j].slope},
                                  {"rate", 1.0 / rep.per_functional[j].slope},
                                  {"r2", rep.per_functional[j].r2}};
    }
    alg_json[name] = {{"points", pj},
                      {"slope_log_mse_vs_log_cost", rep.fit.slope},
                      {"intercept", rep.fit.intercept},
                      {"r2", rep.fit.r2},
                      {"rate", rep.rate},
                      {"per_functional", pf}};

    if (!opts.out_dir.empty()) {
      std::vector<std::string> h{"epsilon", "cost", "mse"};
      for (const auto& f : functionals) h.push_back("mse:" + f.label);
      write_csv(opts.out_dir / ("benchmark_" + name + ".csv"), h, point_rows);
      std::vector<std::string> hr{"epsilon", "replicate"};
      for (const auto& f : functionals) hr.push_back("estimate:" + f.label);
      write_csv(opts.out_dir / ("replicates_" + name + ".csv"), hr, rep_rows);
    }
  }

  res.summary = {{"model", cfg.model},
                 {"seed", cfg.seed},
                 {"T", T},
                 {"replicates", bc.replicates},
                 {"epsilons", bc.epsilons},
                 {"functionals", labels_of(functionals)},
                 {"reference", ref_json},
                 {"algorithms", alg_json},
                 {"rate_definition", "rate = 1 / slope of log(MSE) on log(COST)"}};
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    write_text(opts.out_dir / "config.json", cfg.raw.dump(2) + "\n");
    write_text(opts.out_dir / "benchmark.json", res.summary.dump(2) + "\n");
    timing["total_seconds"] = seconds_since(t0);
    timing["workers"] = opts.workers;
    write_text(opts.out_dir / "timing.json", timing.dump(2) + "\n");
  }
  return res;
}

}  // namespace mvpmcmc
