#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dasgrad/problem.hpp"
#include "dasgrad/vector.hpp"

namespace dasgrad {

struct ReferenceSolution {
  DenseVector theta_star;
  double f_star = 0.0;
  double grad_norm_at_star = 0.0;
  std::size_t solver_iterations = 0;
  bool converged = true;
};

/// Minimizer of the full objective. Centroid uses the closed form (the mean);
/// logistic kinds run full-batch gradient descent with Armijo backtracking
/// (constant 1e-4, halving) until ||grad F|| <= tol or max_iters. An
/// unconverged solve returns the best iterate with converged = false.
ReferenceSolution solve_reference(const Problem& problem, double tol = 1e-8,
                                  std::size_t max_iters = 100000);

/// Same solver applied to any problem, including centroid. Used to cross-check
/// the closed form.
ReferenceSolution solve_by_descent(const Problem& problem, double tol, std::size_t max_iters);

/// F(theta_t) - f_star.
double instantaneous_regret(const Problem& problem, std::span<const double> theta_t,
                            double f_star);

/// Per-step regret trace; cumulative is the running sum of the recorded
/// instantaneous values.
class RegretLedger {
 public:
  struct Entry {
    std::size_t t;
    double instantaneous;
    double cumulative;
  };

  void record(std::size_t t, double instantaneous);
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  double cumulative() const noexcept { return entries_.empty() ? 0.0 : entries_.back().cumulative; }

 private:
  std::vector<Entry> entries_;
};

/// ||grad f_i(theta)||_2 for every example.
std::vector<double> gradient_norms(const Problem& problem, std::span<const double> theta);

/// Population variance over i of ||grad f_i(theta)||_2, E[s^2] - (E s)^2
/// clamped at zero.
double gradient_norm_variance(const Problem& problem, std::span<const double> theta);
double population_variance(std::span<const double> values);

/// Fraction of eval_set whose predicted class equals the label. Binary
/// predicts 1 when <theta, x> > 0; multiclass takes the argmax. Ties go to the
/// lowest class index. Throws PreconditionError for the centroid kind.
double accuracy(const Problem& problem, std::span<const double> theta,
                std::span<const Example> eval_set);

/// Mean of per-class accuracies over the classes present in eval_set.
double balanced_accuracy(const Problem& problem, std::span<const double> theta,
                         std::span<const Example> eval_set);

int predict(const Problem& problem, const Features& x, std::span<const double> theta);

/// One metric over the tick grid of a single seed.
struct MetricTrace {
  std::vector<std::size_t> steps;
  std::vector<double> values;
};

struct AggregateRow {
  std::size_t t;
  double mean;
  double ci_low;
  double ci_high;
  std::size_t n_seeds;
};

using AggregateTrace = std::vector<AggregateRow>;

inline constexpr double kNormalQuantile975 = 1.96;

/// Per tick: mean and mean +- 1.96 s / sqrt(k), s the sample standard deviation
/// (k - 1 denominator). A single trace yields a zero-width interval. Throws
/// PreconditionError on an empty input or mismatched tick grids.
AggregateTrace aggregate_runs(std::span<const MetricTrace> traces);

struct Interval {
  double mean;
  double low;
  double high;
};

/// mean +- 1.96 s / sqrt(k) of a sample.
Interval normal_interval(std::span<const double> sample);
/// Per-seed differences a_k - b_k (paired by index).
Interval paired_difference(std::span<const double> a, std::span<const double> b);
/// Difference of means with the Welch standard error, unpaired.
Interval unpaired_difference(std::span<const double> a, std::span<const double> b);

/// Least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

}  // namespace dasgrad
