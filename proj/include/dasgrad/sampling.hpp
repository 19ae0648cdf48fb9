#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dasgrad/moments.hpp"
#include "dasgrad/problem.hpp"
#include "dasgrad/rng.hpp"
#include "dasgrad/vector.hpp"

namespace dasgrad {

/// Sum tree over n nonnegative leaf weights.
///
/// Nodes live in a flat array of 2 * capacity entries with the root at index 1
/// and leaf i at capacity + i. Capacity is the smallest power of two >= n; the
/// padding leaves hold zero. Every internal node is recomputed as the sum of
/// its children on update (no incremental deltas), so the sum invariant holds
/// to rounding of a single addition per level.
class SamplingTree {
 public:
  explicit SamplingTree(std::span<const double> weights);

  std::size_t size() const noexcept { return n_; }
  std::size_t capacity() const noexcept { return capacity_; }
  double total() const noexcept { return nodes_[1]; }
  double weight(std::size_t i) const;
  /// Whole node array; index 0 is unused.
  std::span<const double> nodes() const noexcept { return nodes_; }

  /// Sets leaf i to w and refreshes its ancestors. O(log n).
  void update(std::size_t i, double w);

  /// Leaf reached by descending with u in [0, total()): go left when u is
  /// strictly below the left sum, otherwise subtract it and go right.
  std::size_t find(double u) const;

  /// Draws index i with probability weight(i) / total(). O(log n).
  std::size_t sample(Rng& rng) const;

 private:
  std::size_t n_;
  std::size_t capacity_;
  std::vector<double> nodes_;
};

/// Strictly positive probabilities over n entries summing to one.
class SamplingDistribution {
 public:
  /// Validates positivity and |sum - 1| <= 1e-12.
  explicit SamplingDistribution(std::vector<double> probs);
  static SamplingDistribution uniform(std::size_t n);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

/// probs_i = (scores_i + epsilon) / sum_j (scores_j + epsilon).
SamplingDistribution normalize_scores(std::span<const double> scores, double epsilon);

/// (1/n) / p_i: the weight that keeps a p-sampled gradient unbiased for the
/// uniform training average.
double importance_weight(double p_i, std::size_t n);

/// (label_count / m) / p_i: reweights toward the test label frequency of the
/// sampled example's class.
double target_weight(double p_i, std::size_t label_count, std::size_t m);

/// Per-example target mass q_i = (test_count[y_i] / m) / train_count[y_i].
/// Sums to one over the training set whenever every test label occurs in
/// training; used to normalize target_weight into a proper density ratio.
std::vector<double> target_example_mass(const Problem& problem,
                                        std::span<const std::size_t> test_label_counts,
                                        std::size_t m);

/// ||grad f_i(theta)||_2 for every i (one pass over the data).
std::vector<double> scores_apsgd(const Problem& problem, std::span<const double> theta);

/// Norm of the preconditioned candidate direction for every i:
///   m_i = beta1_t m + (1 - beta1_t) grad f_i(theta),  score_i = ||m_i / v_hat^{1/4}||_2,
/// all against the shared moment state. Coordinates with v_hat = 0 divide the
/// squared entry by epsilon_div instead of sqrt(v_hat).
std::vector<double> scores_dasgrad(const Problem& problem, std::span<const double> theta,
                                   const MomentState& moments, double beta1_t,
                                   double epsilon_div = 1e-8);

/// sum_i norms_i^2 / (n^2 probs_i): the second moment of the importance-weighted
/// gradient norm. Minimized over the simplex by probs proportional to norms.
double expected_weighted_second_moment(const SamplingDistribution& probs,
                                       std::span<const double> norms, std::size_t n);

}  // namespace dasgrad
