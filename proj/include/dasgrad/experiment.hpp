#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "dasgrad/config.hpp"
#include "dasgrad/dataset.hpp"
#include "dasgrad/metrics.hpp"
#include "dasgrad/problem.hpp"
#include "dasgrad/trace.hpp"

namespace dasgrad {

/// Training problem, optional held-out set, and the reference optimum shared
/// by every run of an experiment.
struct PreparedProblem {
  Problem problem;
  std::vector<Example> test_set;
  std::vector<std::size_t> test_label_counts;
  ReferenceSolution reference;
  std::string provenance;
};

PreparedProblem prepare_problem(const ProblemSpec& spec, double reference_tol,
                                std::size_t reference_max_iters);

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::vector<TraceRow> rows;
};

struct OptimizerRuns {
  std::string label;
  NamedOptimizer optimizer;
  std::vector<SeedRun> runs;

  /// Runs that finished without diverging.
  std::vector<const SeedRun*> successful() const;
};

/// Builds the optimizer config actually run on `prepared`: fills target label
/// counts and expands scalar box bounds to the parameter dimension.
OptimizerConfig resolve_optimizer(const NamedOptimizer& opt, const PreparedProblem& prepared);

/// One (optimizer, seed) run with metrics at every tick: the full objective,
/// accuracy on the eval set, instantaneous and cumulative regret (the running
/// sum over recorded ticks) and the gradient-norm variance, all at theta_t.
SeedRun run_seed(const PreparedProblem& prepared, const NamedOptimizer& opt, EvalSet eval,
                 std::uint64_t seed, std::size_t steps, std::size_t metric_tick);

struct ComparisonRow {
  std::size_t step;
  std::string baseline;
  /// baseline - reference for loss, reference - baseline for accuracy.
  Interval loss_unpaired;
  Interval loss_paired;
  std::optional<Interval> accuracy_unpaired;
  std::optional<Interval> accuracy_paired;
  std::size_t n_pairs;
};

/// Improvement of `reference` over `baseline` per tick over the seeds both
/// finished.
std::vector<ComparisonRow> compare_runs(const OptimizerRuns& reference,
                                        const OptimizerRuns& baseline);

struct ExperimentResult {
  double f_star = 0.0;
  bool reference_converged = true;
  std::string provenance;
  std::vector<OptimizerRuns> optimizers;
  std::vector<std::filesystem::path> files;
};

/// Runs every (optimizer, seed) pair. With write_files, emits into
/// config.output:
///   <label>_seed<seed>.csv   per-run trace
///   <label>_aggregate.csv    mean and 95% CI per tick over successful seeds
///   comparison.csv           improvement of the reference optimizer
///   runs.csv                 status of each run
///   metadata.txt             provenance and reference solution
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files = true);

/// Per-tick aggregate of one trace column across the successful seeds.
AggregateTrace aggregate_column(const OptimizerRuns& runs, double TraceRow::*column);

struct SweepOptions {
  std::vector<double> sigmas{0.1, 1.0, 10.0};
  std::size_t seeds = 100;
  std::size_t steps = 500;
  std::size_t n = 200;
  std::size_t d = 10;
  std::uint64_t data_seed = 1;
  double alpha = 0.01;
  std::size_t batch_size = 4;
  std::size_t refresh_period = 1;
  std::size_t metric_tick = 1;
  std::size_t threads = 1;
  std::filesystem::path output = "out/sweep";
};

struct SweepPoint {
  double sigma = 0.0;
  double amsgrad_final_regret = 0.0;
  double dasgrad_final_regret = 0.0;
  /// Paired per-seed AMSGrad - DASGrad final cumulative regret.
  Interval gap{};
  ExperimentResult result;
};

/// Online centroid learning at several feature scales, AMSGrad vs DASGrad.
/// Writes sigma_<s>_aggregate.csv per scale plus summary.csv.
std::vector<SweepPoint> sweep_variance(const SweepOptions& options, bool write_files = true);

struct MatchingOptions {
  std::size_t n = 2000;
  std::size_t d = 20;
  int classes = 4;
  double margin = 2.0;
  double l2_lambda = 1e-3;
  std::size_t test_n = 2000;
  std::set<int> drop_labels{1, 3};
  double keep_fraction = 0.1;
  std::size_t seeds = 20;
  std::size_t steps = 2000;
  std::size_t metric_tick = 100;
  double alpha = 0.01;
  std::uint64_t data_seed = 1;
  std::size_t threads = 1;
  std::filesystem::path output = "out/matching";
};

struct MatchingResult {
  /// Paired per-seed test accuracy of target-weighted minus training-weighted
  /// DASGrad at the final tick.
  Interval improvement{};
  double weighted_accuracy = 0.0;
  double unweighted_accuracy = 0.0;
  ExperimentResult result;
};

/// Distribution matching on an unbalanced synthetic problem with a balanced
/// test set. Writes the experiment files plus matching_summary.csv.
MatchingResult distribution_matching(const MatchingOptions& options, bool write_files = true);

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

/// Fast self-verification: gradient checks, sampler law, unbiasedness and the
/// optimal-sampling identity.
std::vector<CheckResult> self_check(std::uint64_t seed = 2024);

}  // namespace dasgrad
