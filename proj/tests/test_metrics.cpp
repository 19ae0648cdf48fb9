#include <doctest.h>

#include <cmath>
#include <random>

#include "dasgrad/errors.hpp"
#include "dasgrad/metrics.hpp"
#include "dasgrad/sampling.hpp"
#include "support.hpp"

using namespace dasgrad;
using testing::centroid_of;
using testing::random_problem;
using testing::random_vector;
using testing::rel_err;

TEST_CASE("solve_reference on the centroid pair") {
  auto p = centroid_of({{0.0}, {4.0}});
  const auto ref = solve_reference(p);
  CHECK(ref.theta_star == DenseVector{2.0});
  CHECK(ref.f_star == 2.0);
  CHECK(ref.converged);
}

TEST_CASE("closed form agrees with the iterative solver") {
  std::mt19937_64 gen(101);
  const auto p = random_problem(gen, ProblemKind::centroid, 40, 4);
  const auto closed = solve_reference(p, 1e-10);
  const auto iter = solve_by_descent(p, 1e-10, 10000);
  CHECK(iter.converged);
  for (std::size_t h = 0; h < 4; ++h) {
    CHECK(std::abs(closed.theta_star[h] - iter.theta_star[h]) <= 1e-9);
  }
  CHECK(std::abs(closed.f_star - iter.f_star) <= 1e-12);
}

TEST_CASE("logistic reference beats random probes") {
  std::mt19937_64 gen(103);
  for (auto kind : {ProblemKind::binary_logistic, ProblemKind::multiclass_logistic}) {
    const auto p = random_problem(gen, kind, 30, 4, 3, 0.1);
    const auto ref = solve_reference(p, 1e-8);
    CHECK(ref.converged);
    CHECK(ref.grad_norm_at_star <= 1e-8);
    for (int k = 0; k < 100; ++k) {
      CHECK(ref.f_star <= p.full_objective(random_vector(gen, p.param_dim(), 0.3)));
    }
    CHECK(std::abs(instantaneous_regret(p, ref.theta_star, ref.f_star)) <= 1e-8);
  }
}

TEST_CASE("unconverged solve is flagged") {
  std::mt19937_64 gen(107);
  const auto p = random_problem(gen, ProblemKind::multiclass_logistic, 30, 4, 3, 1e-3);
  const auto ref = solve_reference(p, 1e-14, 3);
  CHECK_FALSE(ref.converged);
  CHECK(ref.solver_iterations <= 3);
}

TEST_CASE("instantaneous_regret and the ledger") {
  auto p = centroid_of({{0.0}, {4.0}});
  CHECK(instantaneous_regret(p, DenseVector{0.0}, 2.0) == 2.0);
  CHECK(instantaneous_regret(p, DenseVector{2.0}, 2.0) == 0.0);

  RegretLedger ledger;
  const std::vector<double> inst{2.0, 1.0, 0.5, 0.25};
  double sum = 0.0;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    ledger.record(k + 1, inst[k]);
    sum += inst[k];
    CHECK(std::abs(ledger.entries().back().cumulative - sum) <= 1e-9);
  }
  CHECK(ledger.cumulative() == 3.75);
}

TEST_CASE("gradient_norm_variance") {
  auto same = centroid_of({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}});
  CHECK(gradient_norm_variance(same, DenseVector{0.0, 0.0}) == 0.0);
  auto pair = centroid_of({{1.0}, {3.0}});
  CHECK(gradient_norm_variance(pair, DenseVector{0.0}) == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 gen(109);
  const auto p = random_problem(gen, ProblemKind::multiclass_logistic, 50, 5);
  const auto theta = random_vector(gen, p.param_dim());
  const auto s = gradient_norms(p, theta);
  double mean = 0.0;
  for (double x : s) mean += x / s.size();
  double var = 0.0;
  for (double x : s) var += (x - mean) * (x - mean) / s.size();
  CHECK(rel_err(gradient_norm_variance(p, theta), var) <= 1e-10);
  CHECK(gradient_norm_variance(p, theta) >= 0.0);
}

TEST_CASE("optimal sampling error plus variance equals the raw second moment") {
  std::mt19937_64 gen(113);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = random_problem(gen, ProblemKind::binary_logistic, 40, 4);
    const auto theta = random_vector(gen, p.param_dim());
    const auto s = gradient_norms(p, theta);
    double e2 = 0.0;
    for (double x : s) e2 += x * x / s.size();
    const double opt = expected_weighted_second_moment(normalize_scores(s, 1e-12), s, s.size());
    CHECK(rel_err(opt + gradient_norm_variance(p, theta), e2) <= 1e-9);
  }
}

TEST_CASE("accuracy") {
  std::vector<Example> ex{{DenseVector{1.0}, 0}, {DenseVector{2.0}, 1}, {DenseVector{-1.0}, 0},
                          {DenseVector{3.0}, 0}};
  Problem b(ProblemKind::binary_logistic, ex, 0.0, 2);
  CHECK(accuracy(b, DenseVector{0.0}, ex) == 0.75);
  CHECK(accuracy(b, DenseVector{1.0}, std::span<const Example>(ex).subspan(1, 1)) == 1.0);

  Problem m(ProblemKind::multiclass_logistic, ex, 0.0, 3);
  CHECK(accuracy(m, DenseVector(3, 0.0), ex) == 0.75);
  CHECK(balanced_accuracy(m, DenseVector(3, 0.0), ex) == 0.5);

  // Separable: class c sits at 5 e_c in 3 dimensions.
  std::vector<Example> sep;
  std::mt19937_64 gen(127);
  for (int i = 0; i < 60; ++i) {
    DenseVector x = random_vector(gen, 3, 0.3);
    x[i % 3] += 5.0;
    sep.push_back({x, i % 3});
  }
  Problem ps(ProblemKind::multiclass_logistic, sep, 1e-4, 3);
  const auto ref = solve_reference(ps, 1e-8, 20000);
  CHECK(accuracy(ps, ref.theta_star, sep) == 1.0);

  auto c = centroid_of({{1.0}});
  CHECK_THROWS_AS(accuracy(c, DenseVector{0.0}, c.examples()), PreconditionError);
}

TEST_CASE("aggregate_runs") {
  MetricTrace a{{1, 2}, {0.0, 5.0}}, b{{1, 2}, {2.0, 5.0}};
  const std::vector<MetricTrace> two{a, b};
  const auto agg = aggregate_runs(two);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].mean == 1.0);
  CHECK(agg[0].ci_low == doctest::Approx(1.0 - 1.96).epsilon(1e-15));
  CHECK(agg[0].ci_high == doctest::Approx(1.0 + 1.96).epsilon(1e-15));
  CHECK(agg[1].ci_low == agg[1].ci_high);
  CHECK(agg[0].n_seeds == 2);

  MetricTrace shifted{{1, 3}, {0.0, 0.0}};
  CHECK_THROWS_AS(aggregate_runs(std::vector<MetricTrace>{a, shifted}), PreconditionError);
  CHECK_THROWS_AS(aggregate_runs(std::vector<MetricTrace>{}), PreconditionError);

  // k copies of each seed: same mean, half-width scaled by sqrt((n-1)/(kn-1)).
  std::mt19937_64 gen(131);
  std::vector<MetricTrace> base;
  for (int s = 0; s < 5; ++s) base.push_back({{10}, {testing::gauss(gen)}});
  const auto once = aggregate_runs(base);
  for (std::size_t k : {2, 4}) {
    std::vector<MetricTrace> rep;
    for (std::size_t c = 0; c < k; ++c) rep.insert(rep.end(), base.begin(), base.end());
    const auto many = aggregate_runs(rep);
    CHECK(std::abs(many[0].mean - once[0].mean) <= 1e-12);
    const double n = 5.0, kn = n * k;
    const double factor = std::sqrt((n - 1) / (kn - 1));
    const double h1 = once[0].ci_high - once[0].mean, hk = many[0].ci_high - many[0].mean;
    CHECK(std::abs(hk - h1 * factor) <= 1e-12);
  }
}

TEST_CASE("interval helpers") {
  const std::vector<double> a{3, 5, 7}, b{1, 2, 3};
  const auto pd = paired_difference(a, b);
  CHECK(pd.mean == 3.0);
  // Differences 2, 3, 4: sd 1.
  CHECK(pd.high - pd.mean == doctest::Approx(1.96 / std::sqrt(3.0)).epsilon(1e-15));
  const auto ud = unpaired_difference(a, b);
  CHECK(ud.mean == 3.0);
  CHECK(ud.high - ud.mean == doctest::Approx(1.96 * std::sqrt(4.0 / 3 + 1.0 / 3)).epsilon(1e-14));

  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  CHECK(least_squares_slope(x, y) == doctest::Approx(2.0).epsilon(1e-15));
}
