#include <doctest.h>

#include <cmath>
#include <random>

#include "dasgrad/errors.hpp"
#include "dasgrad/problem.hpp"
#include "support.hpp"

using namespace dasgrad;
using testing::centroid_of;
using testing::random_problem;
using testing::random_vector;

namespace {

// Plain-formula losses, written without the library's stabilized helpers.
double naive_loss(const Problem& p, std::size_t i, const DenseVector& theta) {
  const auto x = p.example(i).features.to_dense();
  const std::size_t d = x.size();
  double reg = 0.0;
  for (double t : theta) reg += t * t;
  reg *= 0.5 * p.l2_lambda();
  switch (p.kind()) {
    case ProblemKind::centroid: {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (theta[j] - x[j]) * (theta[j] - x[j]);
      return 0.5 * s;
    }
    case ProblemKind::binary_logistic: {
      double z = 0.0;
      for (std::size_t j = 0; j < d; ++j) z += theta[j] * x[j];
      const double y = p.example(i).label == 1 ? 1.0 : -1.0;
      return std::log(1.0 + std::exp(-y * z)) + reg;
    }
    case ProblemKind::multiclass_logistic: {
      const int k = p.num_classes();
      double denom = 0.0;
      double own = 0.0;
      for (int c = 0; c < k; ++c) {
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) z += theta[c * d + j] * x[j];
        denom += std::exp(z);
        if (c == p.example(i).label) own = std::exp(z);
      }
      return -std::log(own / denom) + reg;
    }
  }
  return 0.0;
}

const ProblemKind kKinds[] = {ProblemKind::centroid, ProblemKind::binary_logistic,
                              ProblemKind::multiclass_logistic};

}  // namespace

TEST_CASE("example_loss on hand instances") {
  auto p = centroid_of({{3.0, 4.0}});
  CHECK(p.example_loss(0, DenseVector{3.0, 4.0}) == 0.0);
  CHECK(p.example_loss(0, DenseVector{0.0, 0.0}) == doctest::Approx(12.5).epsilon(1e-15));

  Problem b(ProblemKind::binary_logistic, {{DenseVector{0.3, -2.0}, 1}}, 0.0, 2);
  CHECK(b.example_loss(0, DenseVector{0.0, 0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("example_gradient on hand instances") {
  auto p = centroid_of({{3.0, 4.0}});
  const auto g = p.example_gradient(0, DenseVector{1.0, 1.0});
  CHECK(g == DenseVector{-2.0, -3.0});

  Problem b(ProblemKind::binary_logistic, {{DenseVector{1.0, 0.0}, 1}}, 0.0, 2);
  const auto gb = b.example_gradient(0, DenseVector{0.0, 0.0});
  CHECK(gb[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(gb[1] == 0.0);
}

TEST_CASE("losses match plain formulas on random instances") {
  std::mt19937_64 gen(11);
  for (auto kind : kKinds) {
    const auto p = random_problem(gen, kind, 12, 5, 4, 0.3);
    const auto theta = random_vector(gen, p.param_dim(), 0.5);
    double mean = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double want = naive_loss(p, i, theta);
      CHECK(p.example_loss(i, theta) == doctest::Approx(want).epsilon(1e-12));
      mean += want;
    }
    mean /= static_cast<double>(p.size());
    CHECK(std::abs(p.full_objective(theta) - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
  }
}

TEST_CASE("multiclass loss survives huge logits") {
  Problem p(ProblemKind::multiclass_logistic, {{DenseVector{1.0}, 0}}, 0.0, 2);
  const double loss = p.example_loss(0, DenseVector{1000.0, 0.0});
  CHECK(std::isfinite(loss));
  CHECK(loss >= 0.0);
  CHECK(p.example_loss(0, DenseVector{0.0, 1000.0}) == doctest::Approx(1000.0));
}

TEST_CASE("full_objective and full_gradient on hand instances") {
  auto p = centroid_of({{0.0}, {2.0}});
  CHECK(p.full_objective(DenseVector{1.0}) == 0.5);

  auto q = centroid_of({{0.0}, {4.0}});
  CHECK(q.full_gradient(DenseVector{1.0}) == DenseVector{-1.0});
  CHECK(q.full_gradient(DenseVector{2.0}) == DenseVector{0.0});

  std::mt19937_64 gen(3);
  for (auto kind : kKinds) {
    const auto one = random_problem(gen, kind, 1, 4);
    const auto theta = random_vector(gen, one.param_dim());
    CHECK(one.full_objective(theta) == one.example_loss(0, theta));
  }
}

TEST_CASE("full_gradient is the mean of example gradients") {
  std::mt19937_64 gen(5);
  for (auto kind : kKinds) {
    const auto p = random_problem(gen, kind, 30, 6);
    const auto theta = random_vector(gen, p.param_dim());
    DenseVector mean(p.param_dim(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto g = p.example_gradient(i, theta);
      for (std::size_t h = 0; h < g.size(); ++h) mean[h] += g[h];
    }
    const auto full = p.full_gradient(theta);
    for (std::size_t h = 0; h < mean.size(); ++h) {
      CHECK(std::abs(full[h] - mean[h] / 30.0) <= 1e-12);
    }
  }
}

TEST_CASE("centroid gradient vanishes at the mean") {
  std::mt19937_64 gen(17);
  std::vector<DenseVector> pts;
  DenseVector mean(3, 0.0);
  for (int i = 0; i < 10000; ++i) {
    pts.push_back(random_vector(gen, 3, 300.0));
    for (auto& x : pts.back()) x = std::clamp(x, -1000.0, 1000.0);
    for (int h = 0; h < 3; ++h) mean[h] += pts.back()[h];
  }
  for (auto& m : mean) m /= 10000.0;
  const auto g = centroid_of(pts).full_gradient(mean);
  for (double x : g) CHECK(std::abs(x) < 1e-10);
}

TEST_CASE("finite difference check per kind") {
  std::mt19937_64 gen(23);
  const auto c = random_problem(gen, ProblemKind::centroid, 10, 4);
  CHECK(finite_difference_check(c, random_vector(gen, 4), 1e-6) < 1e-9);
  for (int rep = 0; rep < 20; ++rep) {
    for (auto kind : {ProblemKind::binary_logistic, ProblemKind::multiclass_logistic}) {
      const auto p = random_problem(gen, kind, 8, 5, 3, testing::unif(gen, 0.0, 0.5));
      CHECK(finite_difference_check(p, random_vector(gen, p.param_dim()), 1e-6) < 1e-5);
    }
  }
}

TEST_CASE("losses are nonnegative and the objective is convex") {
  std::mt19937_64 gen(29);
  for (auto kind : kKinds) {
    const auto p = random_problem(gen, kind, 10, 4);
    for (int rep = 0; rep < 100; ++rep) {
      const auto a = random_vector(gen, p.param_dim(), 2.0);
      const auto b = random_vector(gen, p.param_dim(), 2.0);
      const double w = testing::unif(gen);
      DenseVector mix(a.size());
      for (std::size_t h = 0; h < a.size(); ++h) mix[h] = w * a[h] + (1 - w) * b[h];
      CHECK(p.example_loss(rep % p.size(), a) >= 0.0);
      CHECK(p.full_objective(mix) <= w * p.full_objective(a) + (1 - w) * p.full_objective(b) + 1e-9);
    }
  }
}

TEST_CASE("precondition violations throw") {
  auto p = centroid_of({{1.0, 2.0}});
  CHECK_THROWS_AS(p.example_loss(1, DenseVector{0.0, 0.0}), PreconditionError);
  CHECK_THROWS_AS(p.example_loss(0, DenseVector{0.0}), PreconditionError);
  CHECK_THROWS_AS(p.example_gradient(0, DenseVector{0.0, 0.0, 0.0}), PreconditionError);
  CHECK_THROWS_AS(Problem(ProblemKind::centroid, {}), PreconditionError);
  CHECK_THROWS_AS(Problem(ProblemKind::multiclass_logistic, {{DenseVector{1.0}, 3}}, 0.0, 2),
                  PreconditionError);
  CHECK_THROWS_AS(SparseVector({2, 1}, {1.0, 1.0}, 3), PreconditionError);
  CHECK_THROWS_AS(SparseVector({0}, {0.0}, 3), PreconditionError);
  CHECK_THROWS_AS(SparseVector({3}, {1.0}, 3), PreconditionError);
}

TEST_CASE("parameter dimension and kind names") {
  std::mt19937_64 gen(1);
  CHECK(random_problem(gen, ProblemKind::multiclass_logistic, 6, 5, 3).param_dim() == 15);
  CHECK(random_problem(gen, ProblemKind::binary_logistic, 6, 5).param_dim() == 5);
  CHECK(parse_problem_kind("binary-logistic") == ProblemKind::binary_logistic);
  CHECK(to_string(ProblemKind::multiclass_logistic) == "multiclass-logistic");
  CHECK_THROWS(parse_problem_kind("svm"));
}
