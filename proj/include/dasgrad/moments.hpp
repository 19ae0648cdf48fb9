#pragma once

#include <cstddef>
#include <span>

#include "dasgrad/vector.hpp"

namespace dasgrad {

/// Exponential-average state of the Adam family plus the running squared
/// gradient sum used by ADAGrad. Starts at zero.
struct MomentState {
  DenseVector m;            // first moment
  DenseVector v;            // second moment
  DenseVector v_hat;        // running coordinatewise max of v (or v itself without the max)
  DenseVector adagrad_sum;  // sum of squared gradients
  std::size_t t = 0;

  MomentState() = default;
  explicit MomentState(std::size_t dim)
      : m(dim, 0.0), v(dim, 0.0), v_hat(dim, 0.0), adagrad_sum(dim, 0.0) {}

  std::size_t dim() const noexcept { return m.size(); }
};

/// m <- beta1_t m + (1 - beta1_t) g;  v <- beta2 v + (1 - beta2) g^2;
/// v_hat <- max(v_hat, v) when use_max, else v_hat <- v. Also accumulates
/// adagrad_sum += g^2 and increments t.
void moment_update(MomentState& state, std::span<const double> g, double beta1_t, double beta2,
                   bool use_max);

}  // namespace dasgrad
