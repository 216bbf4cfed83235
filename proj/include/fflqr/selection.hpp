#pragma once

#include <limits>
#include <string>
#include <vector>

#include "fflqr/model.hpp"

namespace fflqr {

/// Floor applied to the pointwise loss before taking logs.
inline constexpr double kLossFloor = 1e-300;

/// One evaluated candidate. `stage` is 0 for truncation search and 1, 2, ...
/// for forward-selection steps.
struct BicTraceEntry {
  int stage = 0;
  std::string candidate;
  std::vector<int> predictor_ids;
  Index k_y = 0;
  Index k_x = 0;
  double bic = std::numeric_limits<double>::quiet_NaN();
  bool accepted = false;
  std::string note;  // failure message when the candidate could not be fitted
};

struct TruncationResult {
  Index k_y = 0;
  Index k_x = 0;
  double bic = 0.0;
  std::vector<BicTraceEntry> trace;
};

struct SelectionResult {
  Index chosen_k_y = 0;
  Index chosen_k_x = 0;
  std::vector<int> chosen_predictors;  // ascending
  std::vector<BicTraceEntry> trace;    // forward steps, then the truncation grid
};

/// L(t) = sum_i rho_tau(Y_i(t) - Yhat_i(t)) for the quantile estimator and
/// sum_i (Y_i(t) - Yhat_i(t))^2 for least squares.
Vector pointwise_loss(const FunctionalSample& y, const FunctionalSample& fitted, Estimator estimator, double tau);

/// || ln max(L, floor) ||_{L2} on the response grid, negated when the
/// integral of the log-loss is negative.
double log_loss_norm(const Vector& loss, const Grid& grid);

/// loss_norm + (K_Y + K_X) ln n
double truncation_bic(double loss_norm, Index k_y, Index k_x, Index n);

/// loss_norm + size ln(n) / (2n)
double candidate_bic(double loss_norm, std::size_t size, Index n);

/// Truncation BIC: log-loss norm + (K_Y + K_X) ln n.
double bic_truncation(const FunctionalSample& y, const PredictorList& x, double tau, Index k_y, Index k_x,
                      Estimator estimator = Estimator::quantile);

/// Predictor-set BIC at fixed truncation: log-loss norm + |D| ln(n) / (2n).
/// `x_subset` holds exactly the candidate predictors.
double bic_candidate(const FunctionalSample& y, const PredictorList& x_subset, double tau, Index fixed_k = 2,
                     Estimator estimator = Estimator::quantile);

/// Exhaustive search over K_Y in 1..k_y_max and K_X in 1..k_x_max (each
/// clipped to the admissible rank). Ties go to smaller K_Y + K_X, then K_Y.
TruncationResult select_truncation(const FunctionalSample& y, const PredictorList& x, double tau, Index k_y_max,
                                   Index k_x_max, Estimator estimator = Estimator::quantile,
                                   std::vector<int> predictor_ids = {});

struct ForwardSelectionOptions {
  double ratio_threshold = 0.95;
  Index fixed_k = 2;
  Index k_y_max = 5;
  Index k_x_max = 5;
  Estimator estimator = Estimator::quantile;
};

/// Stepwise forward predictor selection with the BIC ratio rule, followed by
/// truncation tuning on the chosen set.
SelectionResult forward_select(const FunctionalSample& y, const PredictorList& x, double tau,
                               const ForwardSelectionOptions& options = {});

}  // namespace fflqr
