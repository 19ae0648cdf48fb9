#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dasgrad/moments.hpp"
#include "dasgrad/problem.hpp"
#include "dasgrad/rng.hpp"
#include "dasgrad/sampling.hpp"
#include "dasgrad/vector.hpp"

namespace dasgrad {

enum class Method { sgd, ap_sgd, adagrad, rmsprop, adam, amsgrad, dasgrad };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

/// Which per-example direction drives the adaptive sampling scores.
enum class ScoreMode { gradient, momentum };

/// Axis-aligned feasible set [lo, hi].
struct Box {
  DenseVector lo;
  DenseVector hi;
};

/// Reweight the sampled gradients toward a test label distribution instead of
/// the uniform training average. label_counts[c] is the number of test
/// examples with label c out of m.
struct TargetDistribution {
  std::vector<std::size_t> label_counts;
  std::size_t m = 0;
};

struct OptimizerConfig {
  Method method = Method::amsgrad;
  double alpha = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  /// beta1_t = beta1 * beta1_decay^(t-1); 1 keeps beta1_t constant.
  double beta1_decay = 1.0;
  double epsilon_div = 1e-8;
  double epsilon_prob = 1e-8;
  std::size_t refresh_period = 10;
  std::size_t batch_size = 32;
  std::optional<Box> projection;
  std::optional<TargetDistribution> target;
  ScoreMode score_mode = ScoreMode::momentum;
  /// Keep the sampling distribution at exactly 1/n, skipping every refresh.
  bool frozen_uniform = false;

  /// Throws ConfigError on out-of-range values, including beta1/sqrt(beta2) >= 1
  /// for the Adam family.
  void validate() const;

  bool adapts_probabilities() const noexcept {
    return (method == Method::ap_sgd || method == Method::dasgrad) && !frozen_uniform;
  }
  double beta1_at(std::size_t t) const;
};

/// Half-width of the default feasible box used when no projection is set.
inline constexpr double kDefaultBoxRadius = 1e6;

/// alpha / sqrt(t), t >= 1.
double step_size(double alpha, std::size_t t);

/// Coordinatewise clamp into [lo, hi]. For a box this is the projection under
/// every positive diagonal metric, since the weighted distance separates per
/// coordinate.
DenseVector project_box(std::span<const double> theta, std::span<const double> lo,
                        std::span<const double> hi);

struct StepResult {
  DenseVector theta;
  std::vector<std::size_t> sampled;
};

/// One iteration of the general stochastic gradient method.
///
/// Samples batch_size indices i.i.d. from `tree`, folds the batch-mean gradient
/// into `state`, then moves along
///   u = (1/B) sum_b w_b m_b / sqrt(V)
/// where m_b is the method's direction for sample b (the gradient, or
/// beta1_t m_prev + (1 - beta1_t) g_b for the Adam family), V the method's
/// preconditioner, and w_b the importance or target weight of sample b. The
/// result is projected onto the feasible box. Throws DivergenceError on a
/// non-finite iterate.
StepResult step_general(const Problem& problem, std::span<const double> theta, MomentState& state,
                        const SamplingDistribution& probs, const SamplingTree& tree, Rng& rng,
                        const OptimizerConfig& config, std::size_t t);

/// Recomputes the adaptive scores at theta, normalizes them with epsilon_prob,
/// writes every leaf of `tree` and returns the new distribution.
SamplingDistribution refresh_probabilities(const Problem& problem, std::span<const double> theta,
                                           const MomentState& state,
                                           const OptimizerConfig& config, SamplingTree& tree,
                                           std::size_t t);

/// True when the schedule calls for a refresh before step t.
bool refresh_due(const OptimizerConfig& config, std::size_t t);

struct StepRecord {
  std::size_t t = 0;
  std::vector<std::size_t> sampled_indices;
  /// Full objective at theta_t, filled on metric ticks.
  std::optional<double> loss_full;
};

/// View handed to a run observer before step t is applied.
struct StepView {
  std::size_t t;
  std::span<const double> theta;
  const MomentState& state;
  const SamplingDistribution& probs;
  /// Full objective at theta on metric ticks.
  std::optional<double> loss_full;
};

struct RunOptions {
  std::size_t steps = 1;
  std::uint64_t seed = 0;
  std::size_t metric_tick = 10;
  std::optional<DenseVector> initial_theta;
  /// Called before every step with the iterate that step starts from.
  std::function<void(const StepView&)> observer;
};

struct RunResult {
  std::vector<StepRecord> records;
  DenseVector final_theta;
  MomentState final_state;
};

/// Executes steps t = 1..T from theta_1 (zeros unless given). Deterministic
/// for a given (config, seed). Divergence propagates as DivergenceError.
RunResult run(const Problem& problem, const OptimizerConfig& config, const RunOptions& options);

}  // namespace dasgrad
