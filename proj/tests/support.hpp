#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dasgrad/problem.hpp"

namespace testing {

using dasgrad::DenseVector;
using dasgrad::Example;
using dasgrad::Problem;
using dasgrad::ProblemKind;

inline double gauss(std::mt19937_64& gen, double sd = 1.0) {
  return std::normal_distribution<double>(0.0, sd)(gen);
}

inline double unif(std::mt19937_64& gen, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline DenseVector random_vector(std::mt19937_64& gen, std::size_t d, double sd = 1.0) {
  DenseVector v(d);
  for (auto& x : v) x = gauss(gen, sd);
  return v;
}

inline int classes_for(ProblemKind kind, int k) {
  if (kind == ProblemKind::centroid) return 1;
  if (kind == ProblemKind::binary_logistic) return 2;
  return k;
}

/// Random instance; every third example stored sparse for the logistic kinds.
inline Problem random_problem(std::mt19937_64& gen, ProblemKind kind, std::size_t n, std::size_t d,
                              int k = 3, double lambda = 0.1) {
  const int classes = classes_for(kind, k);
  std::vector<Example> examples;
  for (std::size_t i = 0; i < n; ++i) {
    DenseVector x = random_vector(gen, d);
    Example ex;
    ex.label = static_cast<int>(i % static_cast<std::size_t>(classes));
    if (kind != ProblemKind::centroid && i % 3 == 2) {
      for (std::size_t j = 0; j < d; j += 2) x[j] = 0.0;
      ex.features = dasgrad::SparseVector::from_dense(x);
    } else {
      ex.features = x;
    }
    examples.push_back(std::move(ex));
  }
  return Problem(kind, std::move(examples), kind == ProblemKind::centroid ? 0.0 : lambda, classes);
}

inline Problem centroid_of(const std::vector<DenseVector>& points) {
  std::vector<Example> examples;
  for (const auto& p : points) examples.push_back({p, 0});
  return Problem(ProblemKind::centroid, std::move(examples));
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dasgrad_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)});
}

}  // namespace testing
