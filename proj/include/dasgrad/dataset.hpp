#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "dasgrad/problem.hpp"

namespace dasgrad {

struct Dataset {
  std::vector<Example> examples;
  std::size_t dim = 0;
  int num_classes = 1;
  /// File path or synthesis recipe with its seed.
  std::string provenance;

  std::size_t size() const noexcept { return examples.size(); }
  std::vector<std::size_t> label_counts() const;
};

/// Rows of "label,x_1,...,x_d", no header. d comes from the first row and K is
/// max(label) + 1 unless `num_classes` is given.
Dataset load_dense_csv(const std::filesystem::path& path, int num_classes = 0);
/// Inverse of load_dense_csv; values use 17 significant digits.
void write_dense_csv(const Dataset& data, const std::filesystem::path& path);

/// First line "#d=<dim> #k=<classes>", then one "label idx:val ..." row per
/// example with 0-based strictly increasing indices.
Dataset load_sparse(const std::filesystem::path& path);
void write_sparse(const Dataset& data, const std::filesystem::path& path);

/// x_i ~ N(0, sigma^2 I_d), labels all 0.
Dataset synth_centroid(std::size_t n, std::size_t d, double sigma, std::uint64_t seed);

/// K Gaussian blobs (unit covariance) around centers at pairwise distance >=
/// margin; each coordinate is zeroed independently with probability
/// `sparsity`. Labels cycle 0, 1, ..., K-1. With sparsity > 0 the features are
/// stored sparse.
Dataset synth_classification(std::size_t n, std::size_t d, int num_classes, double margin,
                             double sparsity, std::uint64_t seed);

/// Keeps each example whose label is in `drop_labels` with probability
/// keep_fraction; other examples are untouched. Survivors keep their order.
Dataset unbalance(const Dataset& data, const std::set<int>& drop_labels, double keep_fraction,
                  std::uint64_t seed);

Problem make_problem(const Dataset& data, ProblemKind kind, double l2_lambda);

}  // namespace dasgrad
