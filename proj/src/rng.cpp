#include "dasgrad/rng.hpp"

#include <cmath>
#include <numbers>

namespace dasgrad {

double Rng::normal() {
  if (spare_normal_) {
    double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  // 1 - u lies in (0, 1], keeping the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

}  // namespace dasgrad
