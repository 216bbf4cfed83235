#include "fflqr/bspline.hpp"

#include <algorithm>

#include "fflqr/errors.hpp"

namespace fflqr {

BsplineBasis::BsplineBasis(double a, double b, int n_basis, int order)
    : a_(a), b_(b), n_basis_(n_basis), order_(order) {
  if (!(a < b)) throw ConfigError("bspline: require a < b");
  if (order < 2) throw ConfigError("bspline: order must be >= 2");
  if (n_basis < order) throw ConfigError("bspline: n_basis must be >= order");
  const int interior = n_basis - order;
  knots_.reserve(static_cast<std::size_t>(n_basis + order));
  for (int k = 0; k < order; ++k) knots_.push_back(a);
  for (int j = 1; j <= interior; ++j) knots_.push_back(a + (b - a) * j / (interior + 1));
  for (int k = 0; k < order; ++k) knots_.push_back(b);
}

Vector BsplineBasis::evaluate(double x) const {
  x = std::clamp(x, a_, b_);
  const int degree = order_ - 1;
  // Knot span: knots_[span] <= x < knots_[span + 1], with x == b mapped to the last span.
  int span = n_basis_ - 1;
  if (x < b_) {
    const auto it = std::upper_bound(knots_.begin() + order_ - 1, knots_.begin() + n_basis_ + 1, x);
    span = static_cast<int>(it - knots_.begin()) - 1;
  }

  // Triangular Cox-de Boor table for the order_ nonzero functions on the span.
  std::vector<double> values(static_cast<std::size_t>(order_), 0.0);
  std::vector<double> left(static_cast<std::size_t>(order_), 0.0);
  std::vector<double> right(static_cast<std::size_t>(order_), 0.0);
  values[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = denom == 0.0 ? 0.0 : values[static_cast<std::size_t>(r)] / denom;
      values[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    values[static_cast<std::size_t>(j)] = saved;
  }

  Vector out = Vector::Zero(n_basis_);
  for (int r = 0; r <= degree; ++r) out(span - degree + r) = values[static_cast<std::size_t>(r)];
  return out;
}

Matrix BsplineBasis::evaluate(const Grid& grid) const {
  Matrix out(grid.size(), n_basis_);
  for (Index j = 0; j < grid.size(); ++j) out.row(j) = evaluate(grid.points()(j)).transpose();
  return out;
}

}  // namespace fflqr
