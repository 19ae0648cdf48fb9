#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dasgrad/errors.hpp"
#include "dasgrad/sampling.hpp"
#include "support.hpp"

using namespace dasgrad;
using testing::centroid_of;
using testing::random_problem;
using testing::random_vector;
using testing::rel_err;

namespace {

void check_tree_sums(const SamplingTree& tree) {
  const auto nodes = tree.nodes();
  for (std::size_t k = 1; k < tree.capacity(); ++k) {
    const double want = nodes[2 * k] + nodes[2 * k + 1];
    CHECK(std::abs(nodes[k] - want) <= 1e-9 * std::max(1.0, std::abs(want)));
  }
}

std::vector<double> random_simplex(std::mt19937_64& gen, std::size_t n) {
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += x = -std::log(1.0 - testing::unif(gen)) + 1e-6;
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace

TEST_CASE("tree_build") {
  const std::vector<double> w{1, 2, 3, 4};
  SamplingTree t(w);
  CHECK(t.total() == 10.0);
  CHECK(t.capacity() == 4);

  const std::vector<double> single{5};
  SamplingTree s(single);
  CHECK(s.total() == 5.0);
  CHECK(s.capacity() == 1);

  std::mt19937_64 gen(7);
  std::vector<double> many(1000);
  for (auto& x : many) x = testing::unif(gen, 0.0, 10.0);
  SamplingTree big(many);
  double direct = 0.0;
  for (double x : many) direct += x;
  CHECK(rel_err(big.total(), direct) <= 1e-9);
  CHECK(big.capacity() == 1024);
  for (std::size_t i = 1000; i < 1024; ++i) CHECK(big.nodes()[1024 + i] == 0.0);
  check_tree_sums(big);

  CHECK_THROWS_AS(SamplingTree(std::vector<double>{}), PreconditionError);
  CHECK_THROWS_AS(SamplingTree(std::vector<double>{1, -1}), PreconditionError);
  CHECK_THROWS_AS(SamplingTree(std::vector<double>{0, 0}), PreconditionError);
}

TEST_CASE("tree_update") {
  const std::vector<double> w{1, 2, 3, 4};
  SamplingTree t(w);
  t.update(1, 5.0);
  CHECK(t.total() == 13.0);
  const std::vector<double> before(t.nodes().begin(), t.nodes().end());
  t.update(2, 3.0);
  CHECK(std::vector<double>(t.nodes().begin(), t.nodes().end()) == before);
  CHECK_THROWS_AS(t.update(4, 1.0), PreconditionError);
  CHECK_THROWS_AS(t.update(0, -1.0), PreconditionError);

  std::mt19937_64 gen(9);
  std::vector<double> many(1000, 1.0);
  SamplingTree big(many);
  for (int k = 0; k < 10000; ++k) {
    const std::size_t i = gen() % 1000;
    many[i] = testing::unif(gen, 0.0, 100.0);
    big.update(i, many[i]);
  }
  check_tree_sums(big);
  double direct = 0.0;
  for (double x : many) direct += x;
  CHECK(rel_err(big.total(), direct) <= 1e-9);
}

TEST_CASE("tree_sample descent") {
  const std::vector<double> w{1, 2, 3, 4};
  SamplingTree t(w);
  // Prefix sums 1, 3, 6, 10.
  CHECK(t.find(5.5) == 2);
  CHECK(t.find(0.0) == 0);
  CHECK(t.find(0.999) == 0);
  CHECK(t.find(1.0) == 1);
  CHECK(t.find(3.0) == 2);
  CHECK(t.find(9.999) == 3);

  const std::vector<double> point{0, 0, 7, 0};
  SamplingTree p(point);
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) CHECK(p.sample(rng) == 2);
  for (double u : {0.0, 3.5, 6.999}) CHECK(p.find(u) == 2);
}

TEST_CASE("tree_sample frequencies") {
  const std::vector<double> w{1, 2, 3, 4};
  SamplingTree t(w);
  Rng rng(42);
  std::vector<double> count(4, 0.0);
  const int draws = 1000000;
  for (int k = 0; k < draws; ++k) count[t.sample(rng)] += 1.0;
  for (int i = 0; i < 4; ++i) CHECK(std::abs(count[i] / draws - w[i] / 10.0) < 0.01);
}

TEST_CASE("sampling from an emptied tree fails") {
  const std::vector<double> w{1, 2};
  SamplingTree t(w);
  t.update(0, 0.0);
  t.update(1, 0.0);
  Rng rng(1);
  CHECK_THROWS_AS(t.sample(rng), SamplingError);
}

TEST_CASE("normalize_scores") {
  const std::vector<double> a{3, 1};
  const auto pa = normalize_scores(a, 1e-12);
  CHECK(pa[0] == doctest::Approx(0.75).epsilon(1e-11));
  CHECK(pa[1] == doctest::Approx(0.25).epsilon(1e-11));

  const std::vector<double> eq(7, 2.5);
  const auto pe = normalize_scores(eq, 1e-8);
  for (double p : pe.probs()) CHECK(p == doctest::Approx(1.0 / 7).epsilon(1e-15));

  const std::vector<double> b{0, 0, 2};
  const auto pb = normalize_scores(b, 1.0);
  CHECK(pb[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(pb[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(pb[2] == doctest::Approx(0.6).epsilon(1e-15));

  CHECK_THROWS_AS(normalize_scores(std::vector<double>{1, -1}, 1e-8), PreconditionError);
  CHECK_THROWS_AS(normalize_scores(a, 0.0), PreconditionError);
}

TEST_CASE("normalize_scores is scale invariant") {
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(20);
    for (auto& x : s) x = testing::unif(gen, 0.0, 5.0);
    const double c = std::exp(testing::unif(gen, -5.0, 5.0));
    std::vector<double> scaled(s);
    for (auto& x : scaled) x *= c;
    const auto p = normalize_scores(s, 0.01);
    const auto q = normalize_scores(scaled, 0.01 * c);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-12);
  }
}

TEST_CASE("SamplingDistribution validation") {
  CHECK_THROWS_AS(SamplingDistribution({0.5, 0.6}), PreconditionError);
  CHECK_THROWS_AS(SamplingDistribution({1.0, 0.0}), PreconditionError);
  const auto u = SamplingDistribution::uniform(4);
  for (double p : u.probs()) CHECK(p == 0.25);
}

TEST_CASE("importance_weight") {
  CHECK(importance_weight(1.0 / 8, 8) == 1.0);
  CHECK(importance_weight(0.25, 2) == 2.0);
  CHECK_THROWS_AS(importance_weight(0.0, 2), PreconditionError);

  std::mt19937_64 gen(37);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + gen() % 50;
    const auto p = random_simplex(gen, n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i] * importance_weight(p[i], n);
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("target_weight") {
  CHECK(target_weight(0.1, 1, 10) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(target_weight(0.1, 2, 10) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(target_weight(0.0, 1, 10), PreconditionError);
  CHECK_THROWS_AS(target_weight(0.1, 1, 0), PreconditionError);
}

TEST_CASE("target weights recover the test label mix on a 3-class toy set") {
  // Training counts 1, 2, 3; balanced test set of 6 (2 per class).
  std::vector<Example> ex;
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k <= c; ++k) ex.push_back({DenseVector{double(c), double(k)}, c});
  }
  Problem p(ProblemKind::multiclass_logistic, ex, 0.0, 3);
  const std::vector<std::size_t> test_counts{2, 2, 2};
  const auto q = target_example_mass(p, test_counts, 6);
  // Class c carries test mass 1/3 spread over its c+1 training copies.
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int c = p.example(i).label;
    CHECK(q[i] == doctest::Approx(1.0 / (3.0 * (c + 1))).epsilon(1e-15));
  }
  const double n = 6.0;
  std::vector<double> class_mass(3, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int c = p.example(i).label;
    const double w = target_weight(1.0 / n, test_counts[c], 6) / (c + 1.0);
    class_mass[c] += (1.0 / n) * w;
  }
  for (double m : class_mass) CHECK(m == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("scores_apsgd") {
  auto p = centroid_of({{2.0, 1.0}, {0.0, 0.0}});
  auto s = scores_apsgd(p, DenseVector{2.0, 1.0});
  CHECK(s[0] == 0.0);
  auto q = centroid_of({{0.0}, {3.0}});
  CHECK(scores_apsgd(q, DenseVector{1.0}) == std::vector<double>{1.0, 2.0});

  std::mt19937_64 gen(41);
  const auto r = random_problem(gen, ProblemKind::multiclass_logistic, 20, 5);
  const auto theta = random_vector(gen, r.param_dim());
  const auto sr = scores_apsgd(r, theta);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto g = r.example_gradient(i, theta);
    double ss = 0.0;
    for (double x : g) ss += x * x;
    CHECK(std::abs(sr[i] - std::sqrt(ss)) <= 1e-12 * std::max(1.0, sr[i]));
  }
}

TEST_CASE("scores_dasgrad") {
  std::mt19937_64 gen(43);
  const auto p = random_problem(gen, ProblemKind::binary_logistic, 25, 6);
  const auto theta = random_vector(gen, p.param_dim());
  MomentState st(p.param_dim());
  st.v_hat.assign(p.param_dim(), 1.0);
  CHECK(scores_dasgrad(p, theta, st, 0.0) == scores_apsgd(p, theta));

  st.v_hat.assign(p.param_dim(), 16.0);
  const auto scaled = scores_dasgrad(p, theta, st, 0.0);
  const auto plain = scores_apsgd(p, theta);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(scaled[i] == doctest::Approx(plain[i] / 2.0).epsilon(1e-14));
  }
  const auto pa = normalize_scores(scaled, 1e-12);
  const auto pb = normalize_scores(plain, 1e-12);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(pa[i] - pb[i]) <= 1e-10);

  // General state, including a coordinate with v_hat = 0.
  st.m = random_vector(gen, p.param_dim());
  for (auto& v : st.v_hat) v = testing::unif(gen, 0.1, 3.0);
  st.v_hat[2] = 0.0;
  const double b1 = 0.9;
  const double eps = 1e-8;
  const auto got = scores_dasgrad(p, theta, st, b1, eps);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto g = p.example_gradient(i, theta);
    double ss = 0.0;
    for (std::size_t h = 0; h < g.size(); ++h) {
      const double m = b1 * st.m[h] + (1 - b1) * g[h];
      const double denom = st.v_hat[h] > 0 ? std::sqrt(st.v_hat[h]) : eps;
      ss += m * m / denom;
    }
    CHECK(rel_err(got[i], std::sqrt(ss)) <= 1e-12);
  }
}

TEST_CASE("expected_weighted_second_moment") {
  const std::vector<double> norms{3, 1};
  CHECK(expected_weighted_second_moment(SamplingDistribution({0.75, 0.25}), norms, 2) ==
        doctest::Approx(4.0).epsilon(1e-15));
  CHECK(expected_weighted_second_moment(SamplingDistribution::uniform(2), norms, 2) ==
        doctest::Approx(5.0).epsilon(1e-15));

  std::mt19937_64 gen(47);
  const auto best = expected_weighted_second_moment(normalize_scores(norms, 1e-12), norms, 2);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto p = random_simplex(gen, 2);
    CHECK(best <= expected_weighted_second_moment(SamplingDistribution(p), norms, 2) + 1e-12);
  }
  CHECK_THROWS_AS(expected_weighted_second_moment(SamplingDistribution::uniform(3), norms, 2),
                  PreconditionError);
}

TEST_CASE("unbiased weighted gradient by exhaustive summation") {
  std::mt19937_64 gen(53);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = random_problem(gen, ProblemKind::multiclass_logistic, 15, 4);
    const auto theta = random_vector(gen, p.param_dim());
    const auto probs = random_simplex(gen, p.size());
    DenseVector acc(p.param_dim(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double w = importance_weight(probs[i], p.size());
      p.add_example_gradient(i, theta, probs[i] * w, acc);
    }
    const auto full = p.full_gradient(theta);
    for (std::size_t h = 0; h < acc.size(); ++h) CHECK(std::abs(acc[h] - full[h]) <= 1e-12);
  }
}
