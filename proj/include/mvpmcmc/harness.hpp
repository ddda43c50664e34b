#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvpmcmc/config.hpp"
#include "mvpmcmc/stats.hpp"

namespace mvpmcmc {

struct SimulatedData {
  Dataset data;
  Trajectory latent;
};

/// One latent path driven through a sim_N-particle law approximation at
/// sim_level, observed through g at t = 1..T.
SimulatedData generate_data(const Model& model, const ParamVector& theta, std::size_t T, int sim_level,
                            std::size_t sim_N, const RandStream& stream);

/// Runs fn(0..n-1) on up to `workers` threads. Exceptions are collected and the
/// one from the lowest task index is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct RunOptions {
  std::filesystem::path out_dir;  // empty: write nothing
  std::size_t workers = 1;
};

/// Dataset of an experiment: inline/loaded data, or synthesized from the seed.
SimulatedData experiment_data(const ExperimentConfig& cfg, const Model& model);

struct EstimatorOutput {
  std::vector<double> values;  // one per functional
  nlohmann::json summary;
  std::map<std::string, double> timing;  // wall seconds, reported separately
};

EstimatorOutput run_single_level(const ExperimentConfig& cfg, const Model& model, const Dataset& data, int level,
                                 std::size_t N, std::size_t K, const RandStream& stream, const RunOptions& opts);
EstimatorOutput run_multilevel(const ExperimentConfig& cfg, const Model& model, const Dataset& data,
                               const LevelPlan& plan, const RandStream& stream, const RunOptions& opts);

/// Executes the configured algorithm and writes traces, coupled samples,
/// increments, summary.json (deterministic) and timing.json into opts.out_dir.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

/// Posterior means of parameter functionals by grid quadrature of the exact
/// continuous-time likelihood. Available for the linear models only; throws a
/// config error otherwise.
std::vector<double> quadrature_reference(const ExperimentConfig& cfg, const Model& model, const Dataset& data,
                                         const std::vector<TestFunctional>& functionals, std::size_t grid_points);

struct BenchmarkPoint {
  std::string algorithm;
  double epsilon = 0.0;
  double cost = 0.0;
  double mse = 0.0;  // averaged over functionals
  std::vector<double> mse_per_functional;
  std::size_t replicates = 0;
};

struct SlopeReport {
  LogLogFit fit;      // log mse on log cost
  double rate = 0.0;  // d log cost / d log mse = 1 / fit.slope
  std::vector<LogLogFit> per_functional;
};

struct BenchmarkResult {
  std::vector<double> reference;
  std::string reference_method;
  std::vector<BenchmarkPoint> points;
  std::map<std::string, SlopeReport> slopes;
  nlohmann::json summary;
};

/// Cost-MSE sweep over the configured epsilons and algorithms.
BenchmarkResult benchmark_cost_mse(const ExperimentConfig& cfg, const RunOptions& opts);

/// Fit of one algorithm's points; throws "insufficient points" for fewer than two distinct costs.
SlopeReport fit_points(const std::vector<BenchmarkPoint>& points);

}  // namespace mvpmcmc
