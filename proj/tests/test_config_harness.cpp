#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mvpmcmc/config.hpp"
#include "mvpmcmc/error.hpp"
#include "mvpmcmc/harness.hpp"
#include "mvpmcmc/io.hpp"
#include "mvpmcmc/models.hpp"

using namespace mvpmcmc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mvpmcmc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json ou_doc() {
  return {{"model", "ou-meanfield"},
          {"free", {"theta_pull"}},
          {"theta0", {{"theta_pull", 1.0}}},
          {"T", 5},
          {"sim_level", 5},
          {"sim_N", 50},
          {"l", 2},
          {"N", 10},
          {"M", 10},
          {"K", 10},
          {"proposal", {{"step_scales", {{"theta_pull", 0.3}}}}},
          {"seed", 3}};
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(ou_doc());
  CHECK(c.model == "ou-meanfield");
  CHECK(c.T == 5);
  CHECK(c.K == 10);
  CHECK(c.seed == 3);
  const auto m = c.build_model();
  CHECK(c.proposal(*m).step_scales == std::vector<double>{0.3});
  CHECK(c.start_theta(*m)->values == std::vector<double>{1.0});
  CHECK(c.true_theta(*m).values == std::vector<double>{1.0});

  auto d = ou_doc();
  d["bogus"] = 1;
  CHECK_THROWS_AS(parse_config(d), Error);
  d = ou_doc();
  d["K"] = "ten";
  CHECK_THROWS_AS(parse_config(d), Error);
  d = ou_doc();
  d["model"] = "nope";
  CHECK_THROWS_AS(parse_config(d), Error);
  d = ou_doc();
  d["theta0"] = {{"sigma", 1.0}};
  CHECK_THROWS_AS(parse_config(d), Error);
  d = ou_doc();
  d["algorithm"] = "mlpmcmc";
  d["epsilon"] = 0.25;
  d["l_star"] = 1;
  const auto ml = parse_config(d);
  const auto plan = ml.level_plan();
  CHECK(plan.L == 2);
  CHECK(plan.levels() == 2);
  d["L"] = 3;
  d["N_l"] = {5, 4, 3};
  d["K_l"] = {20, 10};
  CHECK_THROWS_AS(parse_config(d), Error);

  for (const auto& pj : {json{{"kind", "normal"}, {"mean", 1}, {"sd", 2}}, json{{"kind", "lognormal"}, {"log_mean", 0}, {"log_sd", 1}},
                         json{{"kind", "uniform"}, {"lower", 0}, {"upper", 3}}, json{{"kind", "flat"}}}) {
    CHECK(prior_to_json(parse_prior(pj)) == pj);
  }
  CHECK_THROWS_AS(parse_prior(json{{"kind", "normal"}, {"mean", 0}, {"sd", -1}}), Error);

  d = ou_doc();
  d["observations"] = {0.1, 0.2};
  d.erase("T");
  CHECK(parse_config(d).T == 2);
}

TEST_CASE("synthetic data") {
  auto doc = ou_doc();
  doc["params"] = {{"sigma_obs", 1e-12}};
  const auto c = parse_config(doc);
  const auto m = c.build_model();
  const auto sim = experiment_data(c, *m);
  REQUIRE(sim.data.horizon() == 5);
  REQUIRE(sim.latent.size() == 5);
  for (std::size_t t = 0; t < 5; ++t) CHECK(std::abs(sim.data.observations[t][0] - sim.latent[t][0]) < 1e-10);
  const auto again = experiment_data(c, *m);
  CHECK(again.data.observations == sim.data.observations);
  CHECK(again.latent == sim.latent);
}

TEST_CASE("neuron observation residuals have the nominal spread") {
  const auto m = make_model("neuron3d");
  const ParamVector truth = parse_config({{"model", "neuron3d"}}).true_theta(*m);
  const auto sim = generate_data(*m, truth, 50, 4, 50, RandStream{StreamKey(21)});
  const double sig[3] = {0.2, 0.1, 0.02};
  for (std::size_t i = 0; i < 3; ++i) {
    double chi2 = 0.0;
    for (std::size_t t = 0; t < 50; ++t) {
      const double r = (sim.data.observations[t][i] - sim.latent[t][i]) / sig[i];
      chi2 += r * r;
    }
    CHECK(std::abs(chi2 - 50.0) < 3 * std::sqrt(100.0));
  }
}

TEST_CASE("run_experiment outputs") {
  const auto dir = scratch("run");
  auto c = parse_config(ou_doc());
  const auto s = run_experiment(c, {dir / "a", 1});
  CHECK(read_numeric_csv(dir / "a" / "trace_level_2.csv").size() == 11);
  CHECK(fs::exists(dir / "a" / "summary.json"));
  CHECK(fs::exists(dir / "a" / "timing.json"));
  run_experiment(c, {dir / "b", 1});
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));
  CHECK(slurp(dir / "a" / "trace_level_2.csv") == slurp(dir / "b" / "trace_level_2.csv"));

  // Degenerate hierarchy: L = l_star gives the base estimate.
  auto d = ou_doc();
  d["algorithm"] = "mlpmcmc";
  d["l_star"] = 2;
  d["L"] = 2;
  d["N_l"] = {10};
  d["K_l"] = {10};
  const auto ml = run_experiment(parse_config(d), {dir / "c", 1});
  CHECK(ml["estimates"]["theta_pull"] == s["estimates"]["theta_pull"]);
  CHECK(ml["increments"]["theta_pull"].empty());
  CHECK(read_numeric_csv(dir / "c" / "increments.csv").empty());

  // Summary value = base + increments read back from the CSV.
  d["L"] = 4;
  d["N_l"] = {10, 8, 6};
  d["K_l"] = {10, 8, 6};
  const auto full = run_experiment(parse_config(d), {dir / "d", 2});
  std::vector<std::string> header;
  const auto inc = read_numeric_csv(dir / "d" / "increments.csv", &header);
  REQUIRE(inc.size() == 2);
  CHECK(header[1] == "increment:theta_pull");
  double v = full["base"]["theta_pull"].get<double>();
  for (const auto& r : inc) v += r[1];
  CHECK(full["estimates"]["theta_pull"].get<double>() == doctest::Approx(v).epsilon(1e-15));
  CHECK(read_numeric_csv(dir / "d" / "trace_level_4.csv").size() == 7);
  // K = 6 with burn-in floor(0.6) = 0 keeps all 7 coupled samples.
  CHECK(read_numeric_csv(dir / "d" / "coupled_level_4.csv").size() == 7);
  fs::remove_all(dir);
}

TEST_CASE("parallel_for rethrows the lowest failing task") {
  std::vector<int> hit(20, 0);
  parallel_for(20, 4, [&](std::size_t i) { hit[i] = 1; });
  for (int h : hit) CHECK(h == 1);
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 7 || i == 4) throw Error(ErrorKind::Numeric, "x", std::to_string(i), static_cast<long>(i));
    });
    FAIL("expected a failure");
  } catch (const Error& e) {
    CHECK(e.index() == 4);
  }
}

TEST_CASE("quadrature reference matches the conjugate posterior") {
  // The linear-Gaussian likelihood is quadratic in mu, so the posterior under a
  // normal prior is normal with moments read off three evaluations.
  json doc = {{"model", "linear-gaussian"},
              {"params", {{"kappa", 0.8}, {"sigma", 0.6}, {"sigma_obs", 0.4}, {"x0", 0.0}}},
              {"priors", {{"mu", {{"kind", "normal"}, {"mean", 0.0}, {"sd", 2.0}}}}},
              {"observations", {0.3, 0.9, 1.2, 0.8, 1.4, 1.1}}};
  const auto c = parse_config(doc);
  const auto m = c.build_model();
  auto ll = [&](double mu) {
    auto p = linear_gaussian_params(c.model_options);
    p.mu = mu;
    return kalman_loglik(p, *c.data, -1);
  };
  const double l0 = ll(0), l1 = ll(1), lm = ll(-1);
  const double a = 0.5 * (l1 + lm) - l0;  // ll = a mu^2 + b mu + const
  const double b = 0.5 * (l1 - lm);
  const double prec = -2 * a + 1 / 4.0;
  const double post_mean = b / prec;
  std::vector<TestFunctional> fs = c.test_functionals(*m);
  fs.push_back(state_functional(3, 0));
  const auto q = quadrature_reference(c, *m, *c.data, fs, 201);
  CHECK(q[0] == doctest::Approx(post_mean).epsilon(1e-6));
  // Smoothed means are affine in mu, so E[x_3 | y] is the smoothed mean at the posterior mean of mu.
  auto p = linear_gaussian_params(c.model_options);
  p.mu = post_mean;
  CHECK(q[1] == doctest::Approx(kalman_smoothed_means(p, *c.data, -1)[2]).epsilon(1e-6));
  fs.back() = state_functional(3, 1);
  CHECK_THROWS_AS(quadrature_reference(c, *m, *c.data, fs, 51), Error);
}

TEST_CASE("benchmark sweep bookkeeping") {
  const auto dir = scratch("bench");
  json doc = {{"model", "linear-gaussian"},
              {"observations", {0.3, 0.9, 1.2}},
              {"theta0", {{"mu", 0.5}}},
              {"M", 4},
              {"l_star", 0},
              {"proposal", {{"step_scales", {0.8}}}},
              {"benchmark",
               {{"epsilons", {0.5, 0.35}},
                {"replicates", 3},
                {"single_level", {{"c_K", 10.0}, {"c_N", 0.5}}},
                {"reference", {{"method", "quadrature"}, {"grid_points", 101}}}}},
              {"c_K", 10.0},
              {"c_N", 0.5}};
  const auto c = parse_config(doc);
  const auto r = benchmark_cost_mse(c, {dir, 2});
  CHECK(r.reference_method == "quadrature");
  CHECK(r.points.size() == 4);
  for (const auto& p : r.points) {
    CHECK(p.cost > 0);
    CHECK(p.mse > 0);
    CHECK(p.replicates == 3);
  }
  CHECK(r.slopes.count("mlpmcmc") == 1);
  CHECK(fs::exists(dir / "benchmark.json"));
  CHECK(read_numeric_csv(dir / "replicates_pmcmc.csv").size() == 6);
  const auto r2 = benchmark_cost_mse(c, {dir / "again", 1});
  CHECK(r2.summary == r.summary);

  doc["benchmark"]["epsilons"] = {0.5, 0.5};
  CHECK_THROWS_WITH_AS(benchmark_cost_mse(parse_config(doc), {}), doctest::Contains("insufficient points"), Error);
  doc["benchmark"]["epsilons"] = {0.5, 0.4};
  doc["benchmark"]["replicates"] = 2;
  CHECK_THROWS_AS(benchmark_cost_mse(parse_config(doc), {}), Error);

  // Exact synthetic lines.
  std::vector<BenchmarkPoint> pts;
  for (double cst : {10.0, 100.0, 1000.0}) pts.push_back({"x", 0.1, cst, std::pow(cst, -3.0), {std::pow(cst, -3.0)}, 3});
  const auto rep = fit_points(pts);
  CHECK(rep.fit.slope == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(rep.rate == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  fs::remove_all(dir);
}

TEST_CASE("command line exit codes and error records") {
  const auto dir = scratch("cli");
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"model": "ou-meanfield", "K": -3})";
  }
  const std::string cli = MVPMCMC_CLI;
  const auto rc = std::system((cli + " run --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string() + " 2>/dev/null").c_str());
  CHECK(WEXITSTATUS(rc) == 2);
  CHECK(fs::exists(dir / "o" / "error.json"));
  const auto err = json::parse(slurp(dir / "o" / "error.json"));
  CHECK(err["error"] == "config");
  CHECK(err["exit_code"] == 2);

  {
    std::ofstream f(dir / "ok.json");
    f << ou_doc().dump();
  }
  const auto ok = std::system((cli + " run --config " + (dir / "ok.json").string() + " --out " + (dir / "r").string() + " > /dev/null").c_str());
  CHECK(WEXITSTATUS(ok) == 0);
  const auto diag = std::system((cli + " diagnose --out " + (dir / "r").string() + " > /dev/null").c_str());
  CHECK(WEXITSTATUS(diag) == 0);
  CHECK(fs::exists(dir / "r" / "diagnostics.json"));
  const auto sim = std::system((cli + " simulate --config " + (dir / "ok.json").string() + " --seed 9 --out " + (dir / "s").string() + " > /dev/null").c_str());
  CHECK(WEXITSTATUS(sim) == 0);
  CHECK(read_dataset_csv(dir / "s" / "data.csv").horizon() == 5);
  fs::remove_all(dir);
}

TEST_CASE("shipped configs parse") {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(MVPMCMC_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(load_config(e.path()));
    ++n;
  }
  CHECK(n >= 4);
}
