#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>

#include "mvpmcmc/config.hpp"
#include "mvpmcmc/error.hpp"
#include "mvpmcmc/harness.hpp"
#include "mvpmcmc/io.hpp"
#include "mvpmcmc/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mvpmcmc;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::string out = "out";
};

ExperimentConfig load(const Common& c) {
  auto cfg = load_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.raw["seed"] = *c.seed;
  }
  return cfg;
}

int cmd_simulate(const Common& c) {
  const auto cfg = load(c);
  const auto model = cfg.build_model();
  const auto sim = experiment_data(cfg, *model);
  fs::create_directories(c.out);
  std::vector<std::string> yh, xh;
  for (std::size_t i = 0; i < model->obs_dim(); ++i) yh.push_back("y" + std::to_string(i + 1));
  for (std::size_t i = 0; i < model->state_dim(); ++i) xh.push_back("x" + std::to_string(i + 1));
  write_csv(fs::path(c.out) / "data.csv", yh, sim.data.observations);
  if (!sim.latent.empty()) write_csv(fs::path(c.out) / "latent.csv", xh, sim.latent);
  write_text(fs::path(c.out) / "config.json", cfg.raw.dump(2) + "\n");
  std::cout << "wrote " << sim.data.horizon() << " observations to " << c.out << "\n";
  return 0;
}

int cmd_run(const Common& c) {
  const auto cfg = load(c);
  const auto summary = run_experiment(cfg, {c.out, c.workers});
  std::cout << summary["estimates"].dump(2) << "\n";
  return 0;
}

int cmd_benchmark(const Common& c) {
  const auto cfg = load(c);
  const auto res = benchmark_cost_mse(cfg, {c.out, c.workers});
  for (const auto& [alg, rep] : res.slopes) {
    std::cout << alg << ": log-mse slope " << rep.fit.slope << ", rate " << rep.rate << " (r2 " << rep.fit.r2
              << ")\n";
  }
  return 0;
}

// Summaries of the trace and increment files a `run` left behind.
int cmd_diagnose(const Common& c) {
  const fs::path dir = c.out;
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Config, "config", "no run directory at " + dir.string());
  std::size_t burn_in = 0;
  double fraction = 0.1;
  if (!c.config.empty()) {
    const auto cfg = load(c);
    fraction = cfg.burn_in_fraction;
    if (cfg.burn_in) burn_in = *cfg.burn_in;
  }
  std::vector<fs::path> traces;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (std::regex_match(e.path().filename().string(), std::regex("trace_level_[0-9]+\\.csv"))) traces.push_back(e.path());
  }
  std::sort(traces.begin(), traces.end());
  if (traces.empty()) throw Error(ErrorKind::Config, "config", "no trace files in " + dir.string());

  json report = json::object();
  for (const auto& p : traces) {
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(p, &header);
    const std::size_t b = burn_in ? std::min(burn_in, rows.size() - 1) : burn_in_for(rows.size() - 1, fraction);
    json t;
    t["rows"] = rows.size();
    t["burn_in"] = b;
    double acc = 0.0;
    for (std::size_t k = 1; k < rows.size(); ++k) acc += rows[k].back();
    t["acceptance_rate"] = rows.size() > 1 ? acc / static_cast<double>(rows.size() - 1) : 0.0;
    for (std::size_t j = 1; j + 1 < header.size(); ++j) {
      std::vector<double> col;
      for (std::size_t k = b; k < rows.size(); ++k) col.push_back(rows[k][j]);
      t["columns"][header[j]] = {{"mean", mean(col)},
                                 {"sd", std::sqrt(variance(col))},
                                 {"iact", integrated_autocorr_time(col)},
                                 {"ess", effective_sample_size(col)},
                                 {"mcse", batch_means_stderr(col)}};
    }
    report["traces"][p.filename().string()] = t;
  }

  const fs::path inc = dir / "increments.csv";
  if (fs::exists(inc)) {
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(inc, &header);
    std::vector<std::vector<double>> out_rows(rows.size());
    std::vector<std::string> out_header{"level"};
    for (std::size_t j = 1; j < header.size(); ++j) {
      if (header[j].rfind("increment:", 0) != 0) continue;
      out_header.push_back("running_mean:" + header[j].substr(10));
      std::vector<double> col;
      for (const auto& r : rows) col.push_back(r[j]);
      const auto rm = running_mean(col);
      for (std::size_t k = 0; k < rows.size(); ++k) out_rows[k].push_back(rm[k]);
    }
    for (std::size_t k = 0; k < rows.size(); ++k) out_rows[k].insert(out_rows[k].begin(), rows[k][0]);
    if (!rows.empty()) write_csv(dir / "increments_running_mean.csv", out_header, out_rows);
    report["increment_levels"] = rows.size();
  }
  write_text(dir / "diagnostics.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

int fail(const std::string& out, ErrorKind kind, const std::string& code, const std::string& message, long index) {
  json rec = {{"error", std::string(to_string(kind))}, {"code", code}, {"message", message}, {"exit_code", exit_code(kind)}};
  if (index >= 0) rec["index"] = index;
  std::cerr << rec.dump() << "\n";
  if (!out.empty()) {
    try {
      fs::create_directories(out);
      write_text(fs::path(out) / "error.json", rec.dump(2) + "\n");
    } catch (...) {
    }
  }
  return exit_code(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle MCMC for partially observed McKean-Vlasov SDEs"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "override the config seed");
    sub->add_option("--workers", c.workers, "concurrent chains / replicates")->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out, "output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "synthesize observations and the latent path");
  auto* run = app.add_subcommand("run", "run PMCMC or MLPMCMC");
  auto* bench = app.add_subcommand("benchmark", "cost-MSE sweep with slope regression");
  auto* diagnose = app.add_subcommand("diagnose", "ESS, IACT and running means of a finished run in --out");
  add_common(simulate, true);
  add_common(run, true);
  add_common(bench, true);
  add_common(diagnose, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fail("", ErrorKind::Config, "usage", e.what(), -1);
  }

  try {
    if (*simulate) return cmd_simulate(c);
    if (*run) return cmd_run(c);
    if (*bench) return cmd_benchmark(c);
    return cmd_diagnose(c);
  } catch (const Error& e) {
    return fail(c.out, e.kind(), e.code(), e.what(), e.index());
  } catch (const json::exception& e) {
    return fail(c.out, ErrorKind::Config, "config", e.what(), -1);
  } catch (const std::exception& e) {
    return fail(c.out, ErrorKind::Numeric, "internal", e.what(), -1);
  }
}
