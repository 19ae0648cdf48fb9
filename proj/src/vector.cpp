#include "dasgrad/vector.hpp"

#include <cmath>
#include <string>

#include "dasgrad/errors.hpp"

namespace dasgrad {

SparseVector::SparseVector(std::vector<std::size_t> indices, std::vector<double> values,
                           std::size_t dim)
    : indices_(std::move(indices)), values_(std::move(values)), dim_(dim) {
  if (indices_.size() != values_.size()) {
    throw PreconditionError("sparse vector: index and value counts differ");
  }
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] >= dim_) {
      throw PreconditionError("sparse vector: index " + std::to_string(indices_[k]) +
                              " out of range for dimension " + std::to_string(dim_));
    }
    if (k > 0 && indices_[k] <= indices_[k - 1]) {
      throw PreconditionError("sparse vector: indices not strictly increasing");
    }
    if (values_[k] == 0.0) {
      throw PreconditionError("sparse vector: stored zero at index " +
                              std::to_string(indices_[k]));
    }
  }
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  std::vector<std::size_t> idx;
  std::vector<double> val;
  for (std::size_t j = 0; j < dense.size(); ++j) {
    if (dense[j] != 0.0) {
      idx.push_back(j);
      val.push_back(dense[j]);
    }
  }
  return SparseVector(std::move(idx), std::move(val), dense.size());
}

DenseVector SparseVector::to_dense() const {
  DenseVector out(dim_, 0.0);
  for (std::size_t k = 0; k < indices_.size(); ++k) out[indices_[k]] = values_[k];
  return out;
}

std::size_t Features::dim() const noexcept {
  return std::visit([](const auto& v) -> std::size_t {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, DenseVector>) {
      return v.size();
    } else {
      return v.dim();
    }
  }, storage_);
}

DenseVector Features::to_dense() const {
  return is_sparse() ? sparse().to_dense() : dense();
}

double Features::dot(std::span<const double> w) const {
  double s = 0.0;
  if (is_sparse()) {
    const auto& sv = sparse();
    for (std::size_t k = 0; k < sv.nnz(); ++k) s += sv.values()[k] * w[sv.indices()[k]];
  } else {
    const auto& dv = dense();
    for (std::size_t j = 0; j < dv.size(); ++j) s += dv[j] * w[j];
  }
  return s;
}

void Features::axpy_into(double scale, std::span<double> out) const {
  if (is_sparse()) {
    const auto& sv = sparse();
    for (std::size_t k = 0; k < sv.nnz(); ++k) out[sv.indices()[k]] += scale * sv.values()[k];
  } else {
    const auto& dv = dense();
    for (std::size_t j = 0; j < dv.size(); ++j) out[j] += scale * dv[j];
  }
}

double Features::squared_norm() const {
  return is_sparse() ? dasgrad::squared_norm(sparse().values()) : dasgrad::squared_norm(dense());
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm2(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

bool all_finite(std::span<const double> a) {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace dasgrad
