#include "dasgrad/sampling.hpp"

#include <cmath>
#include <string>

#include "dasgrad/errors.hpp"

namespace dasgrad {

void moment_update(MomentState& state, std::span<const double> g, double beta1_t, double beta2,
                   bool use_max) {
  if (g.size() != state.dim()) throw PreconditionError("moment_update: dimension mismatch");
  if (!(beta1_t >= 0.0 && beta1_t < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw PreconditionError("moment_update: betas must lie in [0, 1)");
  }
  for (std::size_t h = 0; h < g.size(); ++h) {
    const double g2 = g[h] * g[h];
    state.m[h] = beta1_t * state.m[h] + (1.0 - beta1_t) * g[h];
    state.v[h] = beta2 * state.v[h] + (1.0 - beta2) * g2;
    state.v_hat[h] = use_max ? std::max(state.v_hat[h], state.v[h]) : state.v[h];
    state.adagrad_sum[h] += g2;
  }
  ++state.t;
}

SamplingTree::SamplingTree(std::span<const double> weights) : n_(weights.size()) {
  if (weights.empty()) throw PreconditionError("sampling tree needs at least one weight");
  capacity_ = 1;
  while (capacity_ < n_) capacity_ <<= 1;
  nodes_.assign(2 * capacity_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw PreconditionError("sampling tree weight " + std::to_string(i) +
                              " is negative or not finite");
    }
    nodes_[capacity_ + i] = weights[i];
  }
  for (std::size_t k = capacity_ - 1; k >= 1; --k) nodes_[k] = nodes_[2 * k] + nodes_[2 * k + 1];
  if (!(total() > 0.0)) throw PreconditionError("sampling tree weights are all zero");
}

double SamplingTree::weight(std::size_t i) const {
  if (i >= n_) throw PreconditionError("sampling tree index out of range");
  return nodes_[capacity_ + i];
}

void SamplingTree::update(std::size_t i, double w) {
  if (i >= n_) {
    throw PreconditionError("sampling tree index " + std::to_string(i) + " out of range");
  }
  if (!(w >= 0.0) || !std::isfinite(w)) {
    throw PreconditionError("sampling tree weight is negative or not finite");
  }
  std::size_t k = capacity_ + i;
  nodes_[k] = w;
  for (k >>= 1; k >= 1; k >>= 1) nodes_[k] = nodes_[2 * k] + nodes_[2 * k + 1];
}

std::size_t SamplingTree::find(double u) const {
  if (!(total() > 0.0)) throw SamplingError("cannot sample from a tree with zero total weight");
  std::size_t k = 1;
  while (k < capacity_) {
    const double left = nodes_[2 * k];
    const double right = nodes_[2 * k + 1];
    // Rounding can leave u at or past the node sum; never step into an empty
    // subtree so the walk always ends on a positive leaf.
    if (u < left || !(right > 0.0)) {
      k = 2 * k;
    } else {
      u -= left;
      k = 2 * k + 1;
    }
  }
  return k - capacity_;
}

std::size_t SamplingTree::sample(Rng& rng) const { return find(rng.uniform() * total()); }

SamplingDistribution::SamplingDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw PreconditionError("distribution over zero entries");
  double sum = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] > 0.0)) {
      throw PreconditionError("probability " + std::to_string(i) + " is not positive");
    }
    sum += probs_[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw PreconditionError("probabilities sum to " + std::to_string(sum));
  }
}

SamplingDistribution SamplingDistribution::uniform(std::size_t n) {
  return SamplingDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

SamplingDistribution normalize_scores(std::span<const double> scores, double epsilon) {
  if (scores.empty()) throw PreconditionError("normalize_scores: no scores");
  if (!(epsilon > 0.0)) throw PreconditionError("normalize_scores: epsilon must be positive");
  std::vector<double> probs(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0) || !std::isfinite(scores[i])) {
      throw PreconditionError("normalize_scores: score " + std::to_string(i) +
                              " is negative or not finite");
    }
    probs[i] = scores[i] + epsilon;
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return SamplingDistribution(std::move(probs));
}

double importance_weight(double p_i, std::size_t n) {
  if (!(p_i > 0.0)) throw PreconditionError("importance_weight: probability must be positive");
  if (n == 0) throw PreconditionError("importance_weight: n must be positive");
  return (1.0 / static_cast<double>(n)) / p_i;
}

double target_weight(double p_i, std::size_t label_count, std::size_t m) {
  if (!(p_i > 0.0)) throw PreconditionError("target_weight: probability must be positive");
  if (m == 0) throw PreconditionError("target_weight: m must be positive");
  if (label_count > m) throw PreconditionError("target_weight: label count exceeds m");
  return (static_cast<double>(label_count) / static_cast<double>(m)) / p_i;
}

std::vector<double> target_example_mass(const Problem& problem,
                                        std::span<const std::size_t> test_label_counts,
                                        std::size_t m) {
  if (m == 0) throw PreconditionError("target_example_mass: m must be positive");
  const auto k = static_cast<std::size_t>(problem.num_classes());
  if (test_label_counts.size() != k) {
    throw PreconditionError("target_example_mass: expected " + std::to_string(k) +
                            " label counts");
  }
  std::vector<std::size_t> train_counts(k, 0);
  for (const auto& ex : problem.examples()) ++train_counts[static_cast<std::size_t>(ex.label)];
  std::vector<double> mass(problem.size());
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto c = static_cast<std::size_t>(problem.example(i).label);
    mass[i] = static_cast<double>(test_label_counts[c]) / static_cast<double>(m) /
              static_cast<double>(train_counts[c]);
  }
  return mass;
}

std::vector<double> scores_apsgd(const Problem& problem, std::span<const double> theta) {
  std::vector<double> scores(problem.size());
  DenseVector g(problem.param_dim());
  for (std::size_t i = 0; i < problem.size(); ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    problem.add_example_gradient(i, theta, 1.0, g);
    scores[i] = norm2(g);
  }
  return scores;
}

std::vector<double> scores_dasgrad(const Problem& problem, std::span<const double> theta,
                                   const MomentState& moments, double beta1_t,
                                   double epsilon_div) {
  const std::size_t dim = problem.param_dim();
  if (moments.dim() != dim) throw PreconditionError("scores_dasgrad: moment dimension mismatch");
  if (!(beta1_t >= 0.0 && beta1_t < 1.0)) {
    throw PreconditionError("scores_dasgrad: beta1_t must lie in [0, 1)");
  }
  // ||m / v_hat^{1/4}||^2 = sum_h m_h^2 / sqrt(v_hat_h)
  DenseVector inv_denom(dim);
  for (std::size_t h = 0; h < dim; ++h) {
    const double vh = moments.v_hat[h];
    inv_denom[h] = 1.0 / (vh > 0.0 ? std::sqrt(vh) : epsilon_div);
  }
  std::vector<double> scores(problem.size());
  DenseVector g(dim);
  for (std::size_t i = 0; i < problem.size(); ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    problem.add_example_gradient(i, theta, 1.0, g);
    double s = 0.0;
    for (std::size_t h = 0; h < dim; ++h) {
      const double mh = beta1_t * moments.m[h] + (1.0 - beta1_t) * g[h];
      s += mh * mh * inv_denom[h];
    }
    scores[i] = std::sqrt(s);
  }
  return scores;
}

double expected_weighted_second_moment(const SamplingDistribution& probs,
                                       std::span<const double> norms, std::size_t n) {
  if (probs.size() != norms.size() || norms.size() != n) {
    throw PreconditionError("expected_weighted_second_moment: dimension mismatch");
  }
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += norms[i] * norms[i] / (n2 * probs[i]);
  return total;
}

}  // namespace dasgrad
