#include <cmath>
#include <sstream>

#include "dasgrad/experiment.hpp"
#include "dasgrad/optimizer.hpp"
#include "dasgrad/sampling.hpp"

namespace dasgrad {

namespace {

std::string describe(const char* what, double value, double bound) {
  std::ostringstream s;
  s << what << " = " << value << " (bound " << bound << ")";
  return s.str();
}

Problem random_problem(ProblemKind kind, Rng& rng) {
  const std::size_t n = 20;
  const std::size_t d = 6;
  const int k = kind == ProblemKind::multiclass_logistic ? 4 : kind == ProblemKind::binary_logistic ? 2 : 1;
  std::vector<Example> examples;
  for (std::size_t i = 0; i < n; ++i) {
    DenseVector x(d);
    for (double& v : x) v = rng.normal();
    examples.push_back({Features(std::move(x)), static_cast<int>(i % static_cast<std::size_t>(k))});
  }
  return Problem(kind, std::move(examples), kind == ProblemKind::centroid ? 0.0 : 0.1, k);
}

}  // namespace

std::vector<CheckResult> self_check(std::uint64_t seed) {
  std::vector<CheckResult> results;
  Rng rng(seed);

  for (ProblemKind kind :
       {ProblemKind::centroid, ProblemKind::binary_logistic, ProblemKind::multiclass_logistic}) {
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      const Problem p = random_problem(kind, rng);
      DenseVector theta(p.param_dim());
      for (double& v : theta) v = rng.normal();
      worst = std::max(worst, finite_difference_check(p, theta, 1e-6));
    }
    results.push_back({"gradient check (" + std::string(to_string(kind)) + ")", worst < 1e-5,
                       describe("max relative error", worst, 1e-5)});
  }

  {
    const std::size_t n = 64;
    const std::size_t draws = 200000;
    std::vector<double> w(n);
    for (double& x : w) x = rng.uniform() + 0.01;
    const SamplingTree tree(w);
    std::vector<std::size_t> hits(n, 0);
    for (std::size_t k = 0; k < draws; ++k) ++hits[tree.sample(rng)];
    double worst_z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = w[i] / tree.total();
      const double freq = static_cast<double>(hits[i]) / static_cast<double>(draws);
      worst_z = std::max(worst_z, std::abs(freq - p) / std::sqrt(p * (1 - p) / static_cast<double>(draws)));
    }
    results.push_back({"sampler law", worst_z <= 4.0, describe("max |z|", worst_z, 4.0)});
  }

  {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 30);
      std::vector<double> scores(n);
      for (double& s : scores) s = rng.uniform();
      const auto p = normalize_scores(scores, 1e-3);
      std::vector<double> g(n);
      for (double& x : g) x = rng.normal();
      double weighted = 0.0;
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        weighted += p[i] * importance_weight(p[i], n) * g[i];
        mean += g[i];
      }
      worst = std::max(worst, std::abs(weighted - mean / static_cast<double>(n)));
    }
    results.push_back({"unbiased importance weights", worst <= 1e-12,
                       describe("max deviation", worst, 1e-12)});
  }

  {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = 50;
      std::vector<double> norms(n);
      for (double& s : norms) s = rng.uniform() * 5.0;
      const auto p = normalize_scores(norms, 1e-12);
      const double value = expected_weighted_second_moment(p, norms, n);
      double mean = 0.0;
      double mean_sq = 0.0;
      for (double s : norms) {
        mean += s;
        mean_sq += s * s;
      }
      mean /= static_cast<double>(n);
      mean_sq /= static_cast<double>(n);
      const double via_variance = mean_sq - population_variance(norms);
      worst = std::max({worst, std::abs(value - mean * mean) / (mean * mean),
                        std::abs(value - via_variance) / via_variance});
    }
    results.push_back({"optimal sampling second moment", worst <= 1e-9,
                       describe("max relative error", worst, 1e-9)});
  }

  {
    Rng data_rng(seed + 1);
    const Problem p = random_problem(ProblemKind::binary_logistic, data_rng);
    auto ams = preset_optimizer(Method::amsgrad);
    ams.batch_size = 4;
    auto das = ams;
    das.method = Method::dasgrad;
    das.frozen_uniform = true;
    RunOptions opts;
    opts.steps = 50;
    opts.seed = seed;
    const auto a = run(p, ams, opts).final_theta;
    const auto b = run(p, das, opts).final_theta;
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
    results.push_back({"uniform DASGrad equals AMSGrad", worst <= 1e-12,
                       describe("max coordinate gap", worst, 1e-12)});
  }
  return results;
}

}  // namespace dasgrad
