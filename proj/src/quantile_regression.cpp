#include "fflqr/quantile_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fflqr/errors.hpp"

namespace fflqr {

double check_loss(double u, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("check_loss: tau must lie in (0, 1)");
  return u >= 0.0 ? u * tau : u * (tau - 1.0);
}

namespace {

double objective_unchecked(const Matrix& x, const Vector& y, const Vector& b, double tau) {
  const Vector r = y - x * b;
  double total = 0.0;
  for (Index i = 0; i < r.size(); ++i) total += r(i) >= 0.0 ? r(i) * tau : r(i) * (tau - 1.0);
  return total;
}

// Largest step in [0, 1] keeping v + alpha * dv >= 0.
double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

struct InteriorPointResult {
  Vector coefficients;
  Vector dual_weights;  // in [0, 1]; fractional entries mark interpolated rows
  int iterations = 0;
};

// Mehrotra predictor-corrector on the bounded dual
//   min -y^T a  s.t.  X^T a = (1 - tau) X^T 1,  0 <= a <= 1,
// whose equality multiplier is minus the regression coefficient vector.
// The start point is primal and dual feasible, and Newton steps preserve both.
InteriorPointResult solve_interior_point(const Matrix& x_design, const Vector& y, double tau, const QrOptions& opt) {
  const Index n = x_design.rows();
  const Vector c = -y;

  Vector a = Vector::Constant(n, 1.0 - tau);
  Vector s = Vector::Constant(n, tau);
  const Vector rhs_eq = x_design.transpose() * a;

  Vector lambda = -x_design.colPivHouseholderQr().solve(y);
  const Vector r0 = c - x_design * lambda;
  const double shift = std::max(0.1 * r0.cwiseAbs().mean(), 1e-3);
  Vector z = r0.cwiseMax(0.0).array() + shift;
  Vector w = (-r0).cwiseMax(0.0).array() + shift;

  for (int it = 0; it < opt.max_iterations; ++it) {
    const double gap = a.dot(z) + s.dot(w);
    const double objective = objective_unchecked(x_design, y, -lambda, tau);
    if (gap < opt.gap_tolerance_abs || gap < opt.gap_tolerance_rel * std::abs(objective))
      return {-lambda, a, it};

    const Vector r_eq = rhs_eq - x_design.transpose() * a;
    const Vector r_dual = c - x_design * lambda - z + w;
    const Vector d = ((z.array() / a.array()) + (w.array() / s.array())).inverse();

    const Matrix normal = x_design.transpose() * d.asDiagonal() * x_design;
    Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success) throw SolverError("qr_fit: normal equations could not be factored", objective);

    auto newton = [&](const Vector& r_az, const Vector& r_sw, Vector& da, Vector& dlambda, Vector& dz, Vector& dw) {
      const Vector rhat = r_az.cwiseQuotient(a) - r_sw.cwiseQuotient(s) - r_dual;
      dlambda = ldlt.solve(r_eq - x_design.transpose() * d.cwiseProduct(rhat));
      da = d.cwiseProduct(x_design * dlambda + rhat);
      dz = (r_az - z.cwiseProduct(da)).cwiseQuotient(a);
      dw = (r_sw + w.cwiseProduct(da)).cwiseQuotient(s);
    };

    // Affine-scaling predictor.
    Vector da, dlambda, dz, dw;
    newton(-a.cwiseProduct(z), -s.cwiseProduct(w), da, dlambda, dz, dw);
    Vector ds = -da;
    double alpha_p = std::min(max_step(a, da), max_step(s, ds));
    double alpha_d = std::min(max_step(z, dz), max_step(w, dw));
    const double mu_aff = (a + alpha_p * da).dot(z + alpha_d * dz) + (s + alpha_p * ds).dot(w + alpha_d * dw);
    const double sigma = std::pow(mu_aff / gap, 3);
    const double mu = sigma * gap / (2.0 * static_cast<double>(n));

    // Centering-corrector.
    const Vector r_az = (Vector::Constant(n, mu) - a.cwiseProduct(z) - da.cwiseProduct(dz));
    const Vector r_sw = (Vector::Constant(n, mu) - s.cwiseProduct(w) - ds.cwiseProduct(dw));
    newton(r_az, r_sw, da, dlambda, dz, dw);
    ds = -da;
    alpha_p = std::min(1.0, opt.step_damping * std::min(max_step(a, da), max_step(s, ds)));
    alpha_d = std::min(1.0, opt.step_damping * std::min(max_step(z, dz), max_step(w, dw)));

    a += alpha_p * da;
    s += alpha_p * ds;
    lambda += alpha_d * dlambda;
    z += alpha_d * dz;
    w += alpha_d * dw;
  }
  throw SolverError("qr_fit: interior point did not converge in " + std::to_string(opt.max_iterations) +
                        " iterations",
                    objective_unchecked(x_design, y, -lambda, tau));
}

// Picks q linearly independent rows following `order` and interpolates them.
bool basic_solution(const Matrix& x_design, const Vector& y, const std::vector<Index>& order, Vector& out) {
  const Index q = x_design.cols();
  Matrix basis(q, q);  // orthonormal rows spanning the chosen design rows
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(q));
  for (Index i : order) {
    if (static_cast<Index>(chosen.size()) == q) break;
    Vector v = x_design.row(i).transpose();
    const double norm0 = v.norm();
    if (norm0 == 0.0) continue;
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      const Index kk = static_cast<Index>(k);
      v -= basis.row(kk).dot(v) * basis.row(kk).transpose();
    }
    const double norm1 = v.norm();
    if (norm1 <= 1e-8 * norm0) continue;
    basis.row(static_cast<Index>(chosen.size())) = (v / norm1).transpose();
    chosen.push_back(i);
  }
  if (static_cast<Index>(chosen.size()) < q) return false;
  Matrix xh(q, q);
  Vector yh(q);
  for (Index k = 0; k < q; ++k) {
    xh.row(k) = x_design.row(chosen[static_cast<std::size_t>(k)]);
    yh(k) = y(chosen[static_cast<std::size_t>(k)]);
  }
  out = xh.fullPivLu().solve(yh);
  return out.allFinite();
}

}  // namespace

void QrProblem::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("qr problem: tau must lie in (0, 1)");
  if (design.rows() != response.size()) throw DataError("qr problem: design rows differ from response length");
  if (design.cols() < 1) throw DataError("qr problem: design has no columns");
  if (design.rows() < design.cols()) throw DataError("qr problem: fewer observations than coefficients");
  if (!design.allFinite() || !response.allFinite()) throw DataError("qr problem: non-finite entries");
}

QrSolution qr_fit(const QrProblem& problem, const QrOptions& options) {
  problem.validate();
  const Index n = problem.design.rows();
  const Index q = problem.design.cols();
  const double tau = problem.tau;

  QrSolution sol;
  sol.coefficients = Vector::Zero(q);

  // Rank detection; dependent columns are dropped and get zero coefficients.
  Eigen::ColPivHouseholderQR<Matrix> pivoted(problem.design);
  pivoted.setThreshold(options.rank_threshold);
  const Index rank = pivoted.rank();
  std::vector<Index> kept;
  for (Index k = 0; k < rank; ++k) kept.push_back(pivoted.colsPermutation().indices()(k));
  std::sort(kept.begin(), kept.end());
  if (rank < q) {
    sol.rank_deficient = true;
    for (Index k = 0; k < q; ++k)
      if (!std::binary_search(kept.begin(), kept.end(), k)) sol.dropped_columns.push_back(k);
  }

  const double scale = problem.response.cwiseAbs().maxCoeff();
  if (rank == 0 || scale == 0.0) {
    sol.objective = objective_unchecked(problem.design, problem.response, sol.coefficients, tau);
    sol.vertex = scale == 0.0;
    return sol;
  }

  Matrix x_reduced(n, rank);
  for (Index k = 0; k < rank; ++k) x_reduced.col(k) = problem.design.col(kept[static_cast<std::size_t>(k)]);
  const Vector y = problem.response / scale;

  InteriorPointResult ipm = solve_interior_point(x_reduced, y, tau, options);
  sol.iterations = ipm.iterations;
  Vector best = ipm.coefficients;
  double best_obj = objective_unchecked(x_reduced, y, best, tau);

  if (options.polish_to_vertex) {
    const Vector resid = y - x_reduced * best;
    std::vector<Index> by_residual(static_cast<std::size_t>(n));
    std::iota(by_residual.begin(), by_residual.end(), Index{0});
    std::vector<Index> by_dual = by_residual;
    std::stable_sort(by_residual.begin(), by_residual.end(),
                     [&](Index i, Index j) { return std::abs(resid(i)) < std::abs(resid(j)); });
    std::stable_sort(by_dual.begin(), by_dual.end(), [&](Index i, Index j) {
      return std::abs(ipm.dual_weights(i) - 0.5) < std::abs(ipm.dual_weights(j) - 0.5);
    });
    for (const auto* order : {&by_residual, &by_dual}) {
      Vector candidate;
      if (!basic_solution(x_reduced, y, *order, candidate)) continue;
      const double obj = objective_unchecked(x_reduced, y, candidate, tau);
      if (obj <= best_obj + 1e-9 * std::max(best_obj, 1e-3)) {
        best = candidate;
        best_obj = obj;
        sol.vertex = true;
        break;
      }
    }
  }

  for (Index k = 0; k < rank; ++k) sol.coefficients(kept[static_cast<std::size_t>(k)]) = best(k) * scale;
  sol.objective = objective_unchecked(problem.design, problem.response, sol.coefficients, tau);
  return sol;
}

QrCoefMatrix qr_fit_multi(const Matrix& design, const Matrix& responses, double tau, bool includes_intercept,
                          const QrOptions& options) {
  if (design.rows() != responses.rows()) throw DataError("qr_fit_multi: design rows differ from response rows");
  QrCoefMatrix out;
  out.coefficients = Matrix::Zero(design.cols(), responses.cols());
  out.tau = tau;
  out.includes_intercept = includes_intercept;
  for (Index k = 0; k < responses.cols(); ++k) {
    try {
      QrSolution sol = qr_fit(QrProblem{design, responses.col(k), tau}, options);
      out.coefficients.col(k) = sol.coefficients;
      out.rank_deficient = out.rank_deficient || sol.rank_deficient;
    } catch (const SolverError& e) {
      throw SolverError("response column " + std::to_string(k) + ": " + e.what(), e.final_objective());
    } catch (const NumericalError& e) {
      throw NumericalError("response column " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

Vector qr_objective(const Matrix& design, const Matrix& responses, const QrCoefMatrix& coefs) {
  if (design.cols() != coefs.coefficients.rows() || responses.cols() != coefs.coefficients.cols() ||
      design.rows() != responses.rows())
    throw DataError("qr_objective: dimension mismatch");
  const Matrix resid = responses - design * coefs.coefficients;
  Vector out(resid.cols());
  for (Index k = 0; k < resid.cols(); ++k) {
    double total = 0.0;
    for (Index i = 0; i < resid.rows(); ++i) total += check_loss(resid(i, k), coefs.tau);
    out(k) = total;
  }
  return out;
}

double qr_objective(const Matrix& design, const Vector& response, const Vector& coefficients, double tau) {
  if (design.cols() != coefficients.size() || design.rows() != response.size())
    throw DataError("qr_objective: dimension mismatch");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("qr_objective: tau must lie in (0, 1)");
  return objective_unchecked(design, response, coefficients, tau);
}

}  // namespace fflqr
