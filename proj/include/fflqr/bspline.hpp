#pragma once

#include <vector>

#include "fflqr/grid.hpp"

namespace fflqr {

/// Clamped B-spline basis on [a, b] with uniformly spaced interior knots.
/// `order` is polynomial degree + 1 (4 = cubic).
class BsplineBasis {
 public:
  BsplineBasis(double a, double b, int n_basis, int order);

  int n_basis() const noexcept { return n_basis_; }
  int order() const noexcept { return order_; }
  double lower() const noexcept { return a_; }
  double upper() const noexcept { return b_; }
  const std::vector<double>& knots() const noexcept { return knots_; }

  /// All basis values at x (Cox-de Boor recursion); x outside [a, b] is clamped.
  Vector evaluate(double x) const;

  /// p x n_basis matrix of basis values at the grid points.
  Matrix evaluate(const Grid& grid) const;

 private:
  double a_;
  double b_;
  int n_basis_;
  int order_;
  std::vector<double> knots_;
};

}  // namespace fflqr
