#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace dasgrad {

using DenseVector = std::vector<double>;

/// Compressed vector: strictly increasing 0-based indices, no stored zeros.
class SparseVector {
 public:
  SparseVector() = default;

  /// Validates the invariants; throws PreconditionError on violation.
  SparseVector(std::vector<std::size_t> indices, std::vector<double> values, std::size_t dim);

  /// Keeps the nonzero entries of a dense vector.
  static SparseVector from_dense(std::span<const double> dense);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nnz() const noexcept { return indices_.size(); }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  const std::vector<double>& values() const noexcept { return values_; }

  DenseVector to_dense() const;

 private:
  std::vector<std::size_t> indices_;
  std::vector<double> values_;
  std::size_t dim_ = 0;
};

/// Feature vector of one example, stored dense or sparse.
class Features {
 public:
  Features() = default;
  Features(DenseVector dense) : storage_(std::move(dense)) {}  // NOLINT implicit
  Features(SparseVector sparse) : storage_(std::move(sparse)) {}  // NOLINT implicit

  std::size_t dim() const noexcept;
  bool is_sparse() const noexcept { return std::holds_alternative<SparseVector>(storage_); }
  const DenseVector& dense() const { return std::get<DenseVector>(storage_); }
  const SparseVector& sparse() const { return std::get<SparseVector>(storage_); }
  DenseVector to_dense() const;

  /// <w, x> where w has at least dim() entries.
  double dot(std::span<const double> w) const;
  /// out += scale * x
  void axpy_into(double scale, std::span<double> out) const;
  double squared_norm() const;

 private:
  std::variant<DenseVector, SparseVector> storage_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double norm2(std::span<const double> a);
bool all_finite(std::span<const double> a);

}  // namespace dasgrad
