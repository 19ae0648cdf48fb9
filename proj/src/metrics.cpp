#include "dasgrad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dasgrad/errors.hpp"

namespace dasgrad {

ReferenceSolution solve_by_descent(const Problem& problem, double tol, std::size_t max_iters) {
  if (!(tol > 0.0)) throw PreconditionError("solve_reference: tol must be positive");
  constexpr double kArmijo = 1e-4;
  const std::size_t dim = problem.param_dim();

  DenseVector theta(dim, 0.0);
  double f = problem.full_objective(theta);
  DenseVector grad = problem.full_gradient(theta);
  double gnorm = norm2(grad);

  ReferenceSolution best{theta, f, gnorm, 0, gnorm <= tol};
  double trial = 1.0;
  DenseVector candidate(dim);
  std::size_t iter = 0;
  for (; iter < max_iters && gnorm > tol; ++iter) {
    double step = trial;
    double f_new = 0.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 80; ++halvings) {
      for (std::size_t j = 0; j < dim; ++j) candidate[j] = theta[j] - step * grad[j];
      f_new = problem.full_objective(candidate);
      if (f_new <= f - kArmijo * step * gnorm * gnorm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no decrease representable at this precision

    DenseVector grad_new = problem.full_gradient(candidate);
    // Barzilai-Borwein trial step for the next line search.
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double s = candidate[j] - theta[j];
      const double y = grad_new[j] - grad[j];
      ss += s * s;
      sy += s * y;
    }
    trial = sy > 0.0 ? ss / sy : 2.0 * step;

    theta.swap(candidate);
    grad = std::move(grad_new);
    f = f_new;
    gnorm = norm2(grad);
    if (f <= best.f_star) {
      best.theta_star = theta;
      best.f_star = f;
      best.grad_norm_at_star = gnorm;
    }
  }
  best.solver_iterations = iter;
  best.converged = best.grad_norm_at_star <= tol;
  return best;
}

ReferenceSolution solve_reference(const Problem& problem, double tol, std::size_t max_iters) {
  if (!(tol > 0.0)) throw PreconditionError("solve_reference: tol must be positive");
  if (problem.kind() != ProblemKind::centroid) return solve_by_descent(problem, tol, max_iters);

  DenseVector mean(problem.param_dim(), 0.0);
  for (const auto& ex : problem.examples()) ex.features.axpy_into(1.0, mean);
  for (double& x : mean) x /= static_cast<double>(problem.size());
  ReferenceSolution ref;
  ref.f_star = problem.full_objective(mean);
  ref.grad_norm_at_star = norm2(problem.full_gradient(mean));
  ref.theta_star = std::move(mean);
  ref.solver_iterations = 0;
  ref.converged = true;
  return ref;
}

double instantaneous_regret(const Problem& problem, std::span<const double> theta_t,
                            double f_star) {
  return problem.full_objective(theta_t) - f_star;
}

void RegretLedger::record(std::size_t t, double instantaneous) {
  if (!entries_.empty() && t <= entries_.back().t) {
    throw PreconditionError("regret ledger steps must increase");
  }
  entries_.push_back({t, instantaneous, cumulative() + instantaneous});
}

std::vector<double> gradient_norms(const Problem& problem, std::span<const double> theta) {
  std::vector<double> norms(problem.size());
  DenseVector g(problem.param_dim());
  for (std::size_t i = 0; i < problem.size(); ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    problem.add_example_gradient(i, theta, 1.0, g);
    norms[i] = norm2(g);
  }
  return norms;
}

double population_variance(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("variance of an empty sample");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double s : values) {
    sum += s;
    sum_sq += s * s;
  }
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  return std::max(0.0, sum_sq / n - mean * mean);
}

double gradient_norm_variance(const Problem& problem, std::span<const double> theta) {
  return population_variance(gradient_norms(problem, theta));
}

int predict(const Problem& problem, const Features& x, std::span<const double> theta) {
  if (!problem.is_classification()) {
    throw PreconditionError("prediction is unsupported for the centroid problem");
  }
  const auto scores = problem.class_scores(x, theta);
  if (problem.kind() == ProblemKind::binary_logistic) return scores[0] > 0.0 ? 1 : 0;
  // max_element returns the first maximum, i.e. the lowest tied class.
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

double accuracy(const Problem& problem, std::span<const double> theta,
                std::span<const Example> eval_set) {
  if (!problem.is_classification()) {
    throw PreconditionError("accuracy is unsupported for the centroid problem");
  }
  if (eval_set.empty()) throw PreconditionError("accuracy: empty evaluation set");
  std::size_t correct = 0;
  for (const auto& ex : eval_set) correct += predict(problem, ex.features, theta) == ex.label;
  return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

double balanced_accuracy(const Problem& problem, std::span<const double> theta,
                         std::span<const Example> eval_set) {
  if (!problem.is_classification()) {
    throw PreconditionError("accuracy is unsupported for the centroid problem");
  }
  const auto k = static_cast<std::size_t>(problem.num_classes());
  std::vector<std::size_t> seen(k, 0);
  std::vector<std::size_t> hit(k, 0);
  for (const auto& ex : eval_set) {
    const auto c = static_cast<std::size_t>(ex.label);
    ++seen[c];
    hit[c] += predict(problem, ex.features, theta) == ex.label;
  }
  double total = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (seen[c] == 0) continue;
    total += static_cast<double>(hit[c]) / static_cast<double>(seen[c]);
    ++classes;
  }
  if (classes == 0) throw PreconditionError("balanced_accuracy: empty evaluation set");
  return total / static_cast<double>(classes);
}

Interval normal_interval(std::span<const double> sample) {
  if (sample.empty()) throw PreconditionError("interval of an empty sample");
  const double k = static_cast<double>(sample.size());
  double mean = 0.0;
  for (double x : sample) mean += x;
  mean /= k;
  if (sample.size() == 1) return {mean, mean, mean};
  double ss = 0.0;
  for (double x : sample) ss += (x - mean) * (x - mean);
  const double half = kNormalQuantile975 * std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
  return {mean, mean - half, mean + half};
}

Interval paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw PreconditionError("paired samples differ in size");
  std::vector<double> diff(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) diff[k] = a[k] - b[k];
  return normal_interval(diff);
}

Interval unpaired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw PreconditionError("difference of an empty sample");
  auto moments = [](std::span<const double> s) {
    double mean = 0.0;
    for (double x : s) mean += x;
    mean /= static_cast<double>(s.size());
    double ss = 0.0;
    for (double x : s) ss += (x - mean) * (x - mean);
    const double var = s.size() > 1 ? ss / static_cast<double>(s.size() - 1) : 0.0;
    return std::pair{mean, var / static_cast<double>(s.size())};
  };
  const auto [mean_a, se2_a] = moments(a);
  const auto [mean_b, se2_b] = moments(b);
  const double diff = mean_a - mean_b;
  const double half = kNormalQuantile975 * std::sqrt(se2_a + se2_b);
  return {diff, diff - half, diff + half};
}

AggregateTrace aggregate_runs(std::span<const MetricTrace> traces) {
  if (traces.empty()) throw PreconditionError("aggregate_runs: no traces");
  const auto& grid = traces.front().steps;
  for (const auto& tr : traces) {
    if (tr.steps != grid || tr.values.size() != grid.size()) {
      throw PreconditionError("aggregate_runs: traces have mismatched tick grids");
    }
  }
  AggregateTrace out;
  out.reserve(grid.size());
  std::vector<double> column(traces.size());
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t s = 0; s < traces.size(); ++s) column[s] = traces[s].values[r];
    const Interval ci = normal_interval(column);
    out.push_back({grid[r], ci.mean, ci.low, ci.high, traces.size()});
  }
  return out;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw PreconditionError("least_squares_slope needs two or more paired points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (sxx == 0.0) throw PreconditionError("least_squares_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace dasgrad
