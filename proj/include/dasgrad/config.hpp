#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dasgrad/optimizer.hpp"
#include "dasgrad/problem.hpp"

namespace dasgrad {

/// Which examples the accuracy column is measured on.
enum class EvalSet { train, test };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::centroid;
  /// Dense CSV or sparse file; empty means synthesize.
  std::string data_path;
  bool sparse_format = false;
  std::size_t n = 200;
  std::size_t d = 10;
  int classes = 2;
  double sigma = 1.0;
  double margin = 4.0;
  double sparsity = 0.0;
  std::uint64_t data_seed = 1;
  double l2_lambda = 0.0;
  /// Held-out examples drawn from the same synthetic distribution (balanced).
  std::size_t test_n = 0;
  std::set<int> drop_labels;
  double keep_fraction = 1.0;
  std::uint64_t unbalance_seed = 1;
  EvalSet eval = EvalSet::train;
};

/// Selects how the optimizer weights sampled gradients.
enum class WeightMode { training, target };

struct NamedOptimizer {
  std::string label;
  OptimizerConfig config;
  WeightMode weights = WeightMode::training;
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<NamedOptimizer> optimizers;
  std::size_t steps = 1000;
  std::vector<std::uint64_t> seeds;
  std::size_t metric_tick = 10;
  std::filesystem::path output = "out";
  std::size_t threads = 1;
  double reference_tol = 1e-8;
  std::size_t reference_max_iters = 100000;
  /// Optimizer the comparison file measures the others against; empty picks
  /// the first optimizer using the dasgrad method.
  std::string compare_against;

  /// Throws ConfigError when the config cannot run.
  void validate() const;
};

/// Hyperparameters shipped for the convex presets: beta1 = 0.9, beta2 = 0.99,
/// batch 32, refresh every 10 steps.
OptimizerConfig preset_optimizer(Method method, double alpha = 0.01);

/// Parses the flat `key = value` format with `[optimizer.<label>]` sections and
/// `#` comments. `source` names the text in error messages.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// "1,2,5" or ranges "1..100" (inclusive), mixable: "1..3,7".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace dasgrad
