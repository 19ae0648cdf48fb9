#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dasgrad/vector.hpp"

namespace dasgrad {

enum class ProblemKind { centroid, binary_logistic, multiclass_logistic };

std::string_view to_string(ProblemKind kind);
/// Accepts "centroid", "binary-logistic", "multiclass-logistic".
ProblemKind parse_problem_kind(std::string_view name);

struct Example {
  Features features;
  int label = 0;
};

/// Finite-sum objective F(theta) = (1/n) sum_i f_i(theta).
///
///  centroid:             f_i = 1/2 ||theta - x_i||^2
///  binary-logistic:      f_i = log(1 + exp(-y <theta, x_i>)) + lambda/2 ||theta||^2,
///                        y = +1 for label 1 and -1 for label 0
///  multiclass-logistic:  f_i = -log softmax(Theta x_i)[y_i] + lambda/2 ||Theta||^2
///
/// Multiclass parameters are a K x d matrix flattened row-major (row k holds the
/// weights of class k). The regularizer covers every parameter; add a constant
/// feature column if an intercept is wanted.
///
/// Immutable after construction; all member functions are safe to call
/// concurrently.
class Problem {
 public:
  Problem(ProblemKind kind, std::vector<Example> examples, double l2_lambda = 0.0,
          int num_classes = 1);

  ProblemKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return examples_.size(); }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t param_dim() const noexcept;
  double l2_lambda() const noexcept { return l2_lambda_; }
  int num_classes() const noexcept { return num_classes_; }
  const Example& example(std::size_t i) const { return examples_.at(i); }
  const std::vector<Example>& examples() const noexcept { return examples_; }
  bool is_classification() const noexcept { return kind_ != ProblemKind::centroid; }

  double example_loss(std::size_t i, std::span<const double> theta) const;
  DenseVector example_gradient(std::size_t i, std::span<const double> theta) const;
  /// out += scale * grad f_i(theta); `out` must have param_dim() entries.
  void add_example_gradient(std::size_t i, std::span<const double> theta, double scale,
                            std::span<double> out) const;

  double full_objective(std::span<const double> theta) const;
  DenseVector full_gradient(std::span<const double> theta) const;

  /// Class scores for `x`: K logits for multiclass, a single margin <theta, x>
  /// for binary. Not defined for centroid.
  std::vector<double> class_scores(const Features& x, std::span<const double> theta) const;

 private:
  void check_index(std::size_t i) const;
  void check_theta(std::span<const double> theta) const;
  double regularizer(std::span<const double> theta) const;

  ProblemKind kind_;
  std::vector<Example> examples_;
  double l2_lambda_;
  int num_classes_;
  std::size_t feature_dim_ = 0;
};

/// Max over coordinates of |a - b| / max(1, |a|, |b|) between full_gradient and
/// the central difference (F(theta + h e_j) - F(theta - h e_j)) / 2h.
double finite_difference_check(const Problem& problem, std::span<const double> theta, double h);

}  // namespace dasgrad
