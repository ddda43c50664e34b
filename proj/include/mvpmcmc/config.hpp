#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvpmcmc/core.hpp"
#include "mvpmcmc/filters.hpp"
#include "mvpmcmc/mcmc.hpp"
#include "mvpmcmc/models.hpp"
#include "mvpmcmc/multilevel.hpp"

namespace mvpmcmc {

/// Where benchmark MSEs are measured against.
struct ReferenceConfig {
  /// "auto": exact grid quadrature when the model admits it, else a long run.
  /// "quadrature" or "long-run" force one of the two.
  std::string method = "auto";
  std::size_t grid_points = 201;  // per inferred coordinate
  // Long-run reference (single-level PMCMC).
  int level = 8;
  std::size_t N = 500;
  std::size_t M = 100;
  std::size_t K = 20000;
};

struct BenchmarkConfig {
  std::vector<double> epsilons;
  std::size_t replicates = 5;
  std::vector<std::string> algorithms = {"mlpmcmc", "pmcmc"};
  // Single-level allocation constants (K = c_K eps^-2, N = c_N eps^-2).
  double sl_c_K = 1.0;
  double sl_c_N = 1.0;
  int sl_min_level = 0;
  ReferenceConfig reference;
};

struct ExperimentConfig {
  std::string model;
  ModelOptions model_options;
  std::map<std::string, double> theta_true;  // empty: the model's stored values
  std::map<std::string, double> theta0;      // empty: draw from the prior

  std::size_t T = 10;
  std::optional<Dataset> data;  // inline or loaded; synthesized when absent
  int sim_level = 10;
  std::size_t sim_N = 1000;

  std::string algorithm = "pmcmc";
  // Single-level chain.
  int l = 4;
  std::size_t N = 100;
  std::size_t M = 50;
  std::size_t K = 1000;
  std::optional<std::size_t> burn_in;
  double burn_in_fraction = 0.1;
  // Multilevel plan: explicit N_l/K_l or allocated from epsilon.
  int l_star = 0;
  std::optional<int> L;
  std::vector<std::size_t> N_l;
  std::vector<std::size_t> K_l;
  std::optional<double> epsilon;
  double c_K = 1.0;
  double c_N = 1.0;

  std::map<std::string, double> step_scales;
  std::vector<double> step_scale_list;
  std::uint64_t seed = 1;
  std::vector<std::string> functionals;  // empty: every inferred coordinate
  Resampling resampling = Resampling::Multinomial;
  double max_failure_rate = 0.5;

  std::optional<BenchmarkConfig> benchmark;

  nlohmann::json raw;  // the parsed document, persisted next to outputs

  std::unique_ptr<Model> build_model() const;
  ParamVector true_theta(const Model& model) const;
  std::optional<ParamVector> start_theta(const Model& model) const;
  ProposalConfig proposal(const Model& model) const;
  std::vector<TestFunctional> test_functionals(const Model& model) const;
  /// Resolved multilevel plan (explicit lists take precedence over epsilon).
  LevelPlan level_plan() const;
  ChainConfig chain_config(const Model& model, int level, std::size_t N_, std::size_t K_) const;
  std::size_t burn_in_for_chain(std::size_t K_) const;
};

/// Throws a config error on unknown keys, wrong types or invalid values.
/// Relative data paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

Prior parse_prior(const nlohmann::json& j);
nlohmann::json prior_to_json(const Prior& p);

}  // namespace mvpmcmc
