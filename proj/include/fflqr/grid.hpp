#pragma once

#include <Eigen/Dense>

namespace fflqr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Ordered evaluation points on a closed interval together with quadrature
/// weights. Weights are trapezoidal unless supplied explicitly.
class Grid {
 public:
  Grid() = default;

  /// Validates that points are strictly increasing (at least two of them),
  /// weights are nonnegative and sum to the interval length.
  Grid(Vector points, Vector weights);

  /// Trapezoidal weights on arbitrary strictly increasing points.
  static Grid trapezoid(Vector points);

  const Vector& points() const noexcept { return points_; }
  const Vector& weights() const noexcept { return weights_; }
  Index size() const noexcept { return points_.size(); }
  double lower() const { return points_(0); }
  double upper() const { return points_(points_.size() - 1); }
  double length() const { return upper() - lower(); }

  /// Pointwise comparison of points and weights within `tol`.
  bool matches(const Grid& other, double tol = 1e-12) const;

 private:
  Vector points_;
  Vector weights_;
};

Grid make_uniform_grid(int n_points, double a, double b);

/// Quadrature approximation of the integral of f*g.
double inner_product(const Vector& f, const Vector& g, const Grid& grid);

/// Quadrature L2 norm, sqrt(sum_j w_j f_j^2).
double l2_norm(const Vector& f, const Grid& grid);

}  // namespace fflqr
