#include "dasgrad/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dasgrad/errors.hpp"

namespace dasgrad {

namespace {

bool is_adam_family(Method m) {
  return m == Method::rmsprop || m == Method::adam || m == Method::amsgrad ||
         m == Method::dasgrad;
}

// beta1_t actually used by the recursion; RMSProp has no first moment.
double effective_beta1(const OptimizerConfig& config, std::size_t t) {
  if (!is_adam_family(config.method) || config.method == Method::rmsprop) return 0.0;
  return config.beta1_at(t);
}

bool uses_max(Method m) { return m == Method::amsgrad || m == Method::dasgrad; }

std::vector<std::size_t> training_label_counts(const Problem& problem) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(problem.num_classes()), 0);
  for (const auto& ex : problem.examples()) ++counts[static_cast<std::size_t>(ex.label)];
  return counts;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::sgd: return "sgd";
    case Method::ap_sgd: return "ap_sgd";
    case Method::adagrad: return "adagrad";
    case Method::rmsprop: return "rmsprop";
    case Method::adam: return "adam";
    case Method::amsgrad: return "amsgrad";
    case Method::dasgrad: return "dasgrad";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::sgd, Method::ap_sgd, Method::adagrad, Method::rmsprop, Method::adam,
                   Method::amsgrad, Method::dasgrad}) {
    if (name == to_string(m)) return m;
  }
  if (name == "ap-sgd") return Method::ap_sgd;
  throw ConfigError("unknown optimizer method '" + std::string(name) + "'");
}

void OptimizerConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(beta1_decay > 0.0 && beta1_decay <= 1.0)) throw ConfigError("beta1_decay must lie in (0, 1]");
  if (!(epsilon_div > 0.0)) throw ConfigError("epsilon_div must be positive");
  if (!(epsilon_prob > 0.0)) throw ConfigError("epsilon_prob must be positive");
  if (refresh_period < 1) throw ConfigError("refresh_period must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (is_adam_family(method) && method != Method::rmsprop) {
    // gamma = beta1 / sqrt(beta2) < 1
    if (!(beta1 < std::sqrt(beta2))) {
      throw ConfigError("beta1 / sqrt(beta2) must be below 1 (beta1=" + std::to_string(beta1) +
                        ", beta2=" + std::to_string(beta2) + ")");
    }
  }
  if (projection) {
    if (projection->lo.size() != projection->hi.size()) {
      throw ConfigError("projection bounds differ in dimension");
    }
    for (std::size_t j = 0; j < projection->lo.size(); ++j) {
      if (projection->lo[j] > projection->hi[j]) throw ConfigError("projection has lo > hi");
    }
  }
  if (target && target->m == 0) throw ConfigError("target distribution needs m > 0");
}

double OptimizerConfig::beta1_at(std::size_t t) const {
  if (beta1_decay == 1.0 || t <= 1) return beta1;
  return beta1 * std::pow(beta1_decay, static_cast<double>(t - 1));
}

double step_size(double alpha, std::size_t t) {
  if (t == 0) throw PreconditionError("step_size: t must be at least 1");
  if (!(alpha > 0.0)) throw PreconditionError("step_size: alpha must be positive");
  return alpha / std::sqrt(static_cast<double>(t));
}

DenseVector project_box(std::span<const double> theta, std::span<const double> lo,
                        std::span<const double> hi) {
  if (lo.size() != theta.size() || hi.size() != theta.size()) {
    throw PreconditionError("project_box: dimension mismatch");
  }
  DenseVector out(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (lo[j] > hi[j]) {
      throw PreconditionError("project_box: lo > hi at coordinate " + std::to_string(j));
    }
    out[j] = std::clamp(theta[j], lo[j], hi[j]);
  }
  return out;
}

StepResult step_general(const Problem& problem, std::span<const double> theta, MomentState& state,
                        const SamplingDistribution& probs, const SamplingTree& tree, Rng& rng,
                        const OptimizerConfig& config, std::size_t t) {
  const std::size_t n = problem.size();
  const std::size_t dim = problem.param_dim();
  const std::size_t batch = config.batch_size;
  if (t == 0) throw PreconditionError("step_general: t must be at least 1");
  if (theta.size() != dim || state.dim() != dim) {
    throw PreconditionError("step_general: dimension mismatch");
  }
  if (probs.size() != n || tree.size() != n) {
    throw PreconditionError("step_general: sampler size differs from problem size");
  }

  StepResult result;
  result.sampled.resize(batch);
  for (auto& idx : result.sampled) idx = tree.sample(rng);

  std::vector<double> weights(batch, 1.0);
  const bool adaptive = config.method == Method::ap_sgd || config.method == Method::dasgrad;
  if (config.target) {
    const auto train_counts = training_label_counts(problem);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t i = result.sampled[b];
      const auto c = static_cast<std::size_t>(problem.example(i).label);
      if (c >= config.target->label_counts.size()) {
        throw PreconditionError("target distribution has no count for label " +
                                std::to_string(c));
      }
      const double p = adaptive ? probs[i] : 1.0 / static_cast<double>(n);
      weights[b] = target_weight(p, config.target->label_counts[c], config.target->m) /
                   static_cast<double>(train_counts[c]);
    }
  } else if (adaptive) {
    for (std::size_t b = 0; b < batch; ++b) {
      weights[b] = importance_weight(probs[result.sampled[b]], n);
    }
  }

  std::vector<DenseVector> grads(batch, DenseVector(dim, 0.0));
  DenseVector mean_grad(dim, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    problem.add_example_gradient(result.sampled[b], theta, 1.0, grads[b]);
    for (std::size_t h = 0; h < dim; ++h) mean_grad[h] += weights[b] * grads[b][h];
  }
  for (double& x : mean_grad) x /= static_cast<double>(batch);

  const double beta1_t = effective_beta1(config, t);
  const DenseVector m_prev = state.m;
  moment_update(state, mean_grad, beta1_t, config.beta2, uses_max(config.method));

  DenseVector denom(dim, 1.0);
  switch (config.method) {
    case Method::sgd:
    case Method::ap_sgd: break;
    case Method::adagrad:
      for (std::size_t h = 0; h < dim; ++h) {
        denom[h] = std::sqrt(state.adagrad_sum[h] / static_cast<double>(state.t)) +
                   config.epsilon_div;
      }
      break;
    default:
      for (std::size_t h = 0; h < dim; ++h) {
        denom[h] = std::sqrt(state.v_hat[h]) + config.epsilon_div;
      }
      break;
  }

  const bool momentum = is_adam_family(config.method);
  DenseVector direction(dim, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const double w = weights[b];
    const DenseVector& g = grads[b];
    for (std::size_t h = 0; h < dim; ++h) {
      const double m_b = momentum ? beta1_t * m_prev[h] + (1.0 - beta1_t) * g[h] : g[h];
      direction[h] += w * m_b;
    }
  }

  const double alpha_t = step_size(config.alpha, t);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  result.theta.resize(dim);
  for (std::size_t h = 0; h < dim; ++h) {
    result.theta[h] = theta[h] - alpha_t * (direction[h] * inv_batch) / denom[h];
  }
  if (config.projection) {
    result.theta = project_box(result.theta, config.projection->lo, config.projection->hi);
  } else {
    for (double& x : result.theta) x = std::clamp(x, -kDefaultBoxRadius, kDefaultBoxRadius);
  }
  if (!all_finite(result.theta) || !all_finite(state.v_hat)) {
    throw DivergenceError(t, "non-finite iterate (method " + std::string(to_string(config.method)) +
                                 ")");
  }
  return result;
}

bool refresh_due(const OptimizerConfig& config, std::size_t t) {
  if (!config.adapts_probabilities()) return false;
  if (config.method == Method::ap_sgd && t == 1) return true;
  return t % config.refresh_period == 0;
}

SamplingDistribution refresh_probabilities(const Problem& problem, std::span<const double> theta,
                                           const MomentState& state,
                                           const OptimizerConfig& config, SamplingTree& tree,
                                           std::size_t t) {
  if (tree.size() != problem.size()) {
    throw PreconditionError("refresh_probabilities: tree size differs from problem size");
  }
  std::vector<double> scores;
  if (config.method == Method::ap_sgd) {
    scores = scores_apsgd(problem, theta);
  } else {
    const double beta1_t =
        config.score_mode == ScoreMode::momentum ? effective_beta1(config, std::max<std::size_t>(t, 1)) : 0.0;
    scores = scores_dasgrad(problem, theta, state, beta1_t, config.epsilon_div);
  }
  if (config.target) {
    // Variance-optimal sampling for the target estimator scales each score by
    // the example's target mass relative to uniform.
    const auto mass = target_example_mass(problem, config.target->label_counts, config.target->m);
    const double n = static_cast<double>(problem.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] *= n * mass[i];
  }
  SamplingDistribution dist = normalize_scores(scores, config.epsilon_prob);
  for (std::size_t i = 0; i < dist.size(); ++i) tree.update(i, dist[i]);
  return dist;
}

RunResult run(const Problem& problem, const OptimizerConfig& config, const RunOptions& options) {
  config.validate();
  if (options.steps < 1) throw PreconditionError("run: at least one step required");
  if (options.metric_tick < 1) throw PreconditionError("run: metric_tick must be at least 1");
  const std::size_t dim = problem.param_dim();
  if (config.projection && config.projection->lo.size() != dim) {
    throw ConfigError("projection dimension differs from parameter dimension");
  }

  RunResult result;
  DenseVector theta = options.initial_theta.value_or(DenseVector(dim, 0.0));
  if (theta.size() != dim) throw PreconditionError("run: initial theta has wrong dimension");
  MomentState state(dim);
  SamplingDistribution probs = SamplingDistribution::uniform(problem.size());
  SamplingTree tree(probs.probs());
  Rng rng(options.seed);

  result.records.reserve(options.steps);
  for (std::size_t t = 1; t <= options.steps; ++t) {
    if (refresh_due(config, t)) probs = refresh_probabilities(problem, theta, state, config, tree, t);
    StepRecord record;
    record.t = t;
    if (t % options.metric_tick == 0) record.loss_full = problem.full_objective(theta);
    if (options.observer) options.observer(StepView{t, theta, state, probs, record.loss_full});
    StepResult step = step_general(problem, theta, state, probs, tree, rng, config, t);
    theta = std::move(step.theta);
    record.sampled_indices = std::move(step.sampled);
    result.records.push_back(std::move(record));
  }
  result.final_theta = std::move(theta);
  result.final_state = std::move(state);
  return result;
}

}  // namespace dasgrad
