#include "dasgrad/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dasgrad/errors.hpp"

namespace dasgrad {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double signed_label(int label) { return label == 1 ? 1.0 : -1.0; }

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::centroid: return "centroid";
    case ProblemKind::binary_logistic: return "binary-logistic";
    case ProblemKind::multiclass_logistic: return "multiclass-logistic";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "centroid") return ProblemKind::centroid;
  if (name == "binary-logistic") return ProblemKind::binary_logistic;
  if (name == "multiclass-logistic") return ProblemKind::multiclass_logistic;
  throw ConfigError("unknown problem kind '" + std::string(name) + "'");
}

Problem::Problem(ProblemKind kind, std::vector<Example> examples, double l2_lambda,
                 int num_classes)
    : kind_(kind), examples_(std::move(examples)), l2_lambda_(l2_lambda),
      num_classes_(num_classes) {
  if (examples_.empty()) throw PreconditionError("problem needs at least one example");
  if (!(l2_lambda_ >= 0.0)) throw PreconditionError("l2_lambda must be nonnegative");
  switch (kind_) {
    case ProblemKind::centroid: num_classes_ = 1; break;
    case ProblemKind::binary_logistic:
      if (num_classes_ != 2) throw PreconditionError("binary-logistic requires 2 classes");
      break;
    case ProblemKind::multiclass_logistic:
      if (num_classes_ < 2) throw PreconditionError("multiclass-logistic requires K >= 2");
      break;
  }
  feature_dim_ = examples_.front().features.dim();
  if (feature_dim_ == 0) throw PreconditionError("feature dimension must be positive");
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const auto& ex = examples_[i];
    if (ex.features.dim() != feature_dim_) {
      throw PreconditionError("example " + std::to_string(i) + " has dimension " +
                              std::to_string(ex.features.dim()) + ", expected " +
                              std::to_string(feature_dim_));
    }
    if (ex.label < 0 || ex.label >= num_classes_) {
      throw PreconditionError("example " + std::to_string(i) + " has label " +
                              std::to_string(ex.label) + " outside [0, " +
                              std::to_string(num_classes_) + ")");
    }
  }
}

std::size_t Problem::param_dim() const noexcept {
  return kind_ == ProblemKind::multiclass_logistic
             ? static_cast<std::size_t>(num_classes_) * feature_dim_
             : feature_dim_;
}

void Problem::check_index(std::size_t i) const {
  if (i >= examples_.size()) {
    throw PreconditionError("example index " + std::to_string(i) + " out of range [0, " +
                            std::to_string(examples_.size()) + ")");
  }
}

void Problem::check_theta(std::span<const double> theta) const {
  if (theta.size() != param_dim()) {
    throw PreconditionError("theta has dimension " + std::to_string(theta.size()) +
                            ", expected " + std::to_string(param_dim()));
  }
}

double Problem::regularizer(std::span<const double> theta) const {
  return l2_lambda_ == 0.0 ? 0.0 : 0.5 * l2_lambda_ * squared_norm(theta);
}

std::vector<double> Problem::class_scores(const Features& x,
                                          std::span<const double> theta) const {
  if (kind_ == ProblemKind::centroid) {
    throw PreconditionError("class scores are undefined for the centroid problem");
  }
  if (kind_ == ProblemKind::binary_logistic) return {x.dot(theta)};
  std::vector<double> logits(static_cast<std::size_t>(num_classes_));
  for (std::size_t k = 0; k < logits.size(); ++k) {
    logits[k] = x.dot(theta.subspan(k * feature_dim_, feature_dim_));
  }
  return logits;
}

double Problem::example_loss(std::size_t i, std::span<const double> theta) const {
  check_index(i);
  check_theta(theta);
  const Example& ex = examples_[i];
  switch (kind_) {
    case ProblemKind::centroid: {
      // 1/2 ||theta - x||^2 = 1/2 (||theta||^2 - 2<theta, x> + ||x||^2) loses
      // precision near the optimum, so expand the difference explicitly.
      if (ex.features.is_sparse()) {
        DenseVector diff(theta.begin(), theta.end());
        ex.features.axpy_into(-1.0, diff);
        return 0.5 * squared_norm(diff);
      }
      const auto& x = ex.features.dense();
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double r = theta[j] - x[j];
        s += r * r;
      }
      return 0.5 * s;
    }
    case ProblemKind::binary_logistic: {
      const double margin = signed_label(ex.label) * ex.features.dot(theta);
      return softplus(-margin) + regularizer(theta);
    }
    case ProblemKind::multiclass_logistic: {
      const auto logits = class_scores(ex.features, theta);
      const double shift = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      for (double z : logits) sum += std::exp(z - shift);
      const double log_partition = shift + std::log(sum);
      return log_partition - logits[static_cast<std::size_t>(ex.label)] + regularizer(theta);
    }
  }
  return 0.0;
}

void Problem::add_example_gradient(std::size_t i, std::span<const double> theta, double scale,
                                   std::span<double> out) const {
  check_index(i);
  check_theta(theta);
  if (out.size() != param_dim()) throw PreconditionError("gradient buffer has wrong dimension");
  const Example& ex = examples_[i];
  switch (kind_) {
    case ProblemKind::centroid:
      for (std::size_t j = 0; j < theta.size(); ++j) out[j] += scale * theta[j];
      ex.features.axpy_into(-scale, out);
      return;
    case ProblemKind::binary_logistic: {
      const double y = signed_label(ex.label);
      const double margin = y * ex.features.dot(theta);
      ex.features.axpy_into(-scale * y * sigmoid(-margin), out);
      break;
    }
    case ProblemKind::multiclass_logistic: {
      auto probs = class_scores(ex.features, theta);
      const double shift = *std::max_element(probs.begin(), probs.end());
      double sum = 0.0;
      for (double& z : probs) {
        z = std::exp(z - shift);
        sum += z;
      }
      for (std::size_t k = 0; k < probs.size(); ++k) {
        double coeff = probs[k] / sum;
        if (static_cast<int>(k) == ex.label) coeff -= 1.0;
        ex.features.axpy_into(scale * coeff, out.subspan(k * feature_dim_, feature_dim_));
      }
      break;
    }
  }
  if (l2_lambda_ != 0.0) {
    for (std::size_t j = 0; j < theta.size(); ++j) out[j] += scale * l2_lambda_ * theta[j];
  }
}

DenseVector Problem::example_gradient(std::size_t i, std::span<const double> theta) const {
  DenseVector g(param_dim(), 0.0);
  add_example_gradient(i, theta, 1.0, g);
  return g;
}

double Problem::full_objective(std::span<const double> theta) const {
  double total = 0.0;
  for (std::size_t i = 0; i < examples_.size(); ++i) total += example_loss(i, theta);
  return total / static_cast<double>(examples_.size());
}

DenseVector Problem::full_gradient(std::span<const double> theta) const {
  check_theta(theta);
  DenseVector total(param_dim(), 0.0);
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    DenseVector g = example_gradient(i, theta);
    for (std::size_t j = 0; j < g.size(); ++j) total[j] += g[j];
  }
  const double inv_n = 1.0 / static_cast<double>(examples_.size());
  for (double& v : total) v *= inv_n;
  return total;
}

double finite_difference_check(const Problem& problem, std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw PreconditionError("finite difference step must be positive");
  const DenseVector analytic = problem.full_gradient(theta);
  DenseVector probe(theta.begin(), theta.end());
  double worst = 0.0;
  for (std::size_t j = 0; j < probe.size(); ++j) {
    const double saved = probe[j];
    probe[j] = saved + h;
    const double up = problem.full_objective(probe);
    probe[j] = saved - h;
    const double down = problem.full_objective(probe);
    probe[j] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[j];
    const double err =
        std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace dasgrad
