#include "fflqr/grid.hpp"

#include <cmath>
#include <string>

#include "fflqr/errors.hpp"

namespace fflqr {

Grid::Grid(Vector points, Vector weights) : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.size() < 2) throw ConfigError("grid needs at least 2 points");
  if (weights_.size() != points_.size()) throw ConfigError("grid weights and points differ in length");
  for (Index j = 0; j < points_.size(); ++j) {
    if (!std::isfinite(points_(j)) || !std::isfinite(weights_(j)))
      throw ConfigError("grid contains non-finite values");
    if (j > 0 && !(points_(j) > points_(j - 1)))
      throw ConfigError("grid points must be strictly increasing (index " + std::to_string(j) + ")");
    if (weights_(j) < 0.0) throw ConfigError("grid weights must be nonnegative");
  }
  const double len = length();
  if (std::abs(weights_.sum() - len) > 1e-12 * std::max(1.0, len))
    throw ConfigError("grid weights must sum to the interval length");
}

Grid Grid::trapezoid(Vector points) {
  const Index p = points.size();
  if (p < 2) throw ConfigError("grid needs at least 2 points");
  Vector w = Vector::Zero(p);
  for (Index j = 0; j + 1 < p; ++j) {
    const double h = points(j + 1) - points(j);
    w(j) += 0.5 * h;
    w(j + 1) += 0.5 * h;
  }
  return Grid(std::move(points), std::move(w));
}

bool Grid::matches(const Grid& other, double tol) const {
  if (size() != other.size()) return false;
  return ((points_ - other.points_).cwiseAbs().maxCoeff() <= tol) &&
         ((weights_ - other.weights_).cwiseAbs().maxCoeff() <= tol);
}

Grid make_uniform_grid(int n_points, double a, double b) {
  if (n_points < 2) throw ConfigError("make_uniform_grid: n_points must be >= 2");
  if (!(a < b)) throw ConfigError("make_uniform_grid: require a < b");
  const double h = (b - a) / (n_points - 1);
  Vector pts(n_points);
  for (int j = 0; j < n_points; ++j) pts(j) = a + h * j;
  pts(n_points - 1) = b;
  Vector w = Vector::Constant(n_points, h);
  w(0) = w(n_points - 1) = 0.5 * h;
  return Grid(std::move(pts), std::move(w));
}

double inner_product(const Vector& f, const Vector& g, const Grid& grid) {
  if (f.size() != grid.size() || g.size() != grid.size())
    throw DataError("inner_product: vector length does not match grid");
  return (grid.weights().array() * f.array() * g.array()).sum();
}

double l2_norm(const Vector& f, const Grid& grid) { return std::sqrt(inner_product(f, f, grid)); }

}  // namespace fflqr
