#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fflqr/model.hpp"

namespace fflqr {

/// Pointwise prediction band for n_test curves.
struct PredictionBand {
  Matrix lower;  // n_test x p_t
  Matrix upper;
  double alpha = 0.05;
  Grid grid;
  Index crossings = 0;       // direct bands: points where the two quantile fits crossed
  int replicates_used = 0;   // bootstrap bands
  int replicates_failed = 0;
};

/// Evaluation metrics of one method on one replicate.
struct MetricsReport {
  std::string method;
  std::string model;
  std::string scenario;
  int replicate = 0;
  std::uint64_t seed = 0;
  double mspe = 0.0;
  std::optional<double> cpd;
  std::optional<double> score;
};

/// Mean over curves of the squared quadrature L2 distance.
double mspe(const FunctionalSample& y_true, const FunctionalSample& y_pred);

/// Linear interpolation between order statistics (R's type 7) of sorted data.
double quantile_type7(std::span<const double> sorted, double prob);

/// Refits `spec` on R case-resampled copies of the training data and
/// predicts `x_test` with each refit. Replicate r draws its rows from
/// split_seed(seed, r). Failed refits are skipped and counted; fewer than R/2
/// successes is a NumericalError.
struct BootstrapReplicates {
  std::vector<Matrix> predictions;  // successful replicates, in replicate order
  Grid grid;
  int failed = 0;
};

BootstrapReplicates bootstrap_predictions(const ModelSpec& spec, const FunctionalSample& y_train,
                                          const PredictorList& x_train, const PredictorList& x_test, int replicates,
                                          std::uint64_t seed, int threads = 1);

/// Pointwise alpha/2 and 1 - alpha/2 type-7 quantiles over the replicates.
PredictionBand band_from_replicates(const BootstrapReplicates& reps, double alpha);

PredictionBand bootstrap_band(const ModelSpec& spec, const FunctionalSample& y_train, const PredictorList& x_train,
                              const PredictorList& x_test, double alpha, int replicates, std::uint64_t seed,
                              int threads = 1);

/// Quantile fits at alpha/2 and 1 - alpha/2; crossed points are swapped.
PredictionBand direct_band(const FunctionalSample& y_train, const PredictorList& x_train,
                           const PredictorList& x_test, double alpha, Index k_y, Index k_x,
                           std::vector<int> predictor_ids = {});

/// Fraction of (curve, grid point) pairs with lower <= y <= upper.
double coverage(const PredictionBand& band, const FunctionalSample& y_true);

/// |(1 - alpha) - coverage|
double cpd(const PredictionBand& band, const FunctionalSample& y_true, double alpha);

/// Mean over curves of the L2 norm of width + (2/alpha) * exceedance.
double interval_score(const PredictionBand& band, const FunctionalSample& y_true, double alpha);

}  // namespace fflqr
