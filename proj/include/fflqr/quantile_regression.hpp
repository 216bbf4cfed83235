#pragma once

#include <vector>

#include "fflqr/grid.hpp"

namespace fflqr {

/// rho_tau(u) = u * (tau - 1{u < 0}).
double check_loss(double u, double tau);

/// Linear quantile regression problem: minimize sum_i rho_tau(y_i - x_i^T b).
struct QrProblem {
  Matrix design;    // n x q
  Vector response;  // n
  double tau = 0.5;

  /// Throws ConfigError/DataError when the problem invariants do not hold.
  void validate() const;
};

struct QrOptions {
  int max_iterations = 200;
  double gap_tolerance_abs = 1e-10;
  double gap_tolerance_rel = 1e-9;
  double step_damping = 0.99995;
  /// Pivoted-QR threshold (relative to the largest pivot) for rank detection.
  double rank_threshold = 1e-10;
  /// Snap the interior-point iterate to an optimal basic solution when possible.
  bool polish_to_vertex = true;
};

struct QrSolution {
  Vector coefficients;
  double objective = 0.0;
  int iterations = 0;
  bool rank_deficient = false;
  std::vector<Index> dropped_columns;
  bool vertex = false;  // true when the returned point interpolates q observations
};

/// Frisch-Newton (Mehrotra predictor-corrector) interior-point solve of the
/// dual LP, followed by an optional snap to an optimal vertex. Throws
/// SolverError when the iteration cap is hit.
QrSolution qr_fit(const QrProblem& problem, const QrOptions& options = {});

/// Score-space coefficient matrix, one column per response coordinate.
struct QrCoefMatrix {
  Matrix coefficients;  // q x K_Y
  double tau = 0.5;
  bool includes_intercept = true;
  bool rank_deficient = false;
};

/// Column k of the result solves qr_fit against column k of `responses`.
QrCoefMatrix qr_fit_multi(const Matrix& design, const Matrix& responses, double tau, bool includes_intercept = true,
                          const QrOptions& options = {});

/// Entry k is sum_i rho_tau of the residuals of response column k.
Vector qr_objective(const Matrix& design, const Matrix& responses, const QrCoefMatrix& coefs);

/// Check-loss objective of a single coefficient vector.
double qr_objective(const Matrix& design, const Vector& response, const Vector& coefficients, double tau);

}  // namespace fflqr
