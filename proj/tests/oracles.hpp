#pragma once

// Test-only reference computations. Nothing here calls into the library's
// solver or decomposition paths.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace fflqr::oracle {

inline double rho(double u, double tau) { return u >= 0 ? tau * u : (tau - 1.0) * u; }

inline double check_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& b,
                              double tau) {
  double s = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += rho(y(i) - x.row(i).dot(b), tau);
  return s;
}

/// Exhaustive vertex enumeration: a linear quantile regression optimum is
/// attained where q observations are interpolated (full-rank design), so the
/// minimum over all q-subsets is the exact optimum. Practical for q <= 3, n <= 50.
inline double vertex_enumeration_optimum(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau) {
  const Eigen::Index n = x.rows(), q = x.cols();
  double best = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(q));
  // iterate q-combinations of {0..n-1}
  for (Eigen::Index k = 0; k < q; ++k) idx[static_cast<std::size_t>(k)] = k;
  while (true) {
    Eigen::MatrixXd xh(q, q);
    Eigen::VectorXd yh(q);
    for (Eigen::Index k = 0; k < q; ++k) {
      xh.row(k) = x.row(idx[static_cast<std::size_t>(k)]);
      yh(k) = y(idx[static_cast<std::size_t>(k)]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xh);
    if (lu.isInvertible()) best = std::min(best, check_objective(x, y, lu.solve(yh), tau));
    Eigen::Index pos = q - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - q + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (Eigen::Index k = pos + 1; k < q; ++k)
      idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
  }
  return best;
}

/// Minimizes the intercept-only objective over a fine grid of candidate b.
inline double brute_force_location(const Eigen::VectorXd& y, double tau, double lo, double hi, int steps) {
  double best_b = lo, best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= steps; ++k) {
    const double b = lo + (hi - lo) * k / steps;
    double s = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) s += rho(y(i) - b, tau);
    if (s < best - 1e-15) {
      best = s;
      best_b = b;
    }
  }
  return best_b;
}

/// Random smooth curves: sums of a few random sinusoids plus a random slope.
inline Eigen::MatrixXd smooth_curves(const Eigen::VectorXd& t, int n, std::mt19937_64& rng, int harmonics = 6) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd out(n, t.size());
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd c(harmonics);
    for (int h = 0; h < harmonics; ++h) c(h) = nd(rng) / (1.0 + h);
    const double slope = nd(rng);
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      double v = slope * t(j);
      for (int h = 0; h < harmonics; ++h) v += c(h) * std::sin((h + 1) * M_PI * t(j) + 0.3 * h);
      out(i, j) = v;
    }
  }
  return out;
}

}  // namespace fflqr::oracle
