#include "fflqr/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fflqr/errors.hpp"
#include "fflqr/parallel.hpp"

namespace fflqr {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

void check_band_shape(const PredictionBand& band, const FunctionalSample& y) {
  if (band.lower.rows() != y.n() || band.lower.cols() != y.p() || band.upper.rows() != y.n() ||
      band.upper.cols() != y.p())
    throw DataError("band and response shapes differ");
}

}  // namespace

double mspe(const FunctionalSample& y_true, const FunctionalSample& y_pred) {
  if (y_true.n() != y_pred.n() || y_true.p() != y_pred.p()) throw DataError("mspe: shape mismatch");
  if (!y_true.grid().matches(y_pred.grid(), 1e-10)) throw DataError("mspe: grids differ");
  if (y_true.n() == 0) throw DataError("mspe: empty sample");
  const Matrix diff = y_true.values() - y_pred.values();
  const Vector per_curve = diff.cwiseAbs2() * y_true.grid().weights();
  return per_curve.mean();
}

double quantile_type7(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw DataError("quantile of empty data");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ConfigError("quantile probability outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootstrapReplicates bootstrap_predictions(const ModelSpec& spec, const FunctionalSample& y_train,
                                          const PredictorList& x_train, const PredictorList& x_test, int replicates,
                                          std::uint64_t seed, int threads) {
  if (replicates < 2) throw ConfigError("bootstrap needs R >= 2");
  const Index n = y_train.n();
  std::vector<std::optional<Matrix>> slots(static_cast<std::size_t>(replicates));

  parallel_for(slots.size(), threads, [&](std::size_t r) {
    std::mt19937_64 rng(split_seed(seed, r));
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& i : rows) i = pick(rng);
    try {
      PredictorList xb;
      xb.reserve(x_train.size());
      for (const auto& xm : x_train) xb.push_back(xm.rows(rows));
      const FittedModel model = fit_model(spec, y_train.rows(rows), xb);
      slots[r] = predict(model, x_test).values();
    } catch (const NumericalError&) {
      // counted below
    } catch (const ConfigError&) {
      // e.g. a resample whose rank is below the requested truncation
    }
  });

  BootstrapReplicates out;
  out.grid = y_train.grid();
  for (auto& s : slots) {
    if (s)
      out.predictions.push_back(std::move(*s));
    else
      ++out.failed;
  }
  if (2 * static_cast<int>(out.predictions.size()) < replicates)
    throw NumericalError("bootstrap: only " + std::to_string(out.predictions.size()) + " of " +
                         std::to_string(replicates) + " replicates could be refitted");
  return out;
}

PredictionBand band_from_replicates(const BootstrapReplicates& reps, double alpha) {
  check_alpha(alpha);
  if (reps.predictions.empty()) throw DataError("no bootstrap replicates");
  const Index rows = reps.predictions.front().rows();
  const Index cols = reps.predictions.front().cols();
  PredictionBand band;
  band.alpha = alpha;
  band.grid = reps.grid;
  band.lower.resize(rows, cols);
  band.upper.resize(rows, cols);
  band.replicates_used = static_cast<int>(reps.predictions.size());
  band.replicates_failed = reps.failed;
  std::vector<double> buf(reps.predictions.size());
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      for (std::size_t r = 0; r < buf.size(); ++r) buf[r] = reps.predictions[r](i, j);
      std::sort(buf.begin(), buf.end());
      band.lower(i, j) = quantile_type7(buf, alpha / 2.0);
      band.upper(i, j) = quantile_type7(buf, 1.0 - alpha / 2.0);
    }
  }
  return band;
}

PredictionBand bootstrap_band(const ModelSpec& spec, const FunctionalSample& y_train, const PredictorList& x_train,
                              const PredictorList& x_test, double alpha, int replicates, std::uint64_t seed,
                              int threads) {
  check_alpha(alpha);
  return band_from_replicates(bootstrap_predictions(spec, y_train, x_train, x_test, replicates, seed, threads), alpha);
}

PredictionBand direct_band(const FunctionalSample& y_train, const PredictorList& x_train,
                           const PredictorList& x_test, double alpha, Index k_y, Index k_x,
                           std::vector<int> predictor_ids) {
  check_alpha(alpha);
  const FflqrFit lo_fit = fit_fflqr(y_train, x_train, alpha / 2.0, k_y, k_x, predictor_ids);
  const FflqrFit hi_fit = fit_fflqr(y_train, x_train, 1.0 - alpha / 2.0, k_y, k_x, predictor_ids);
  PredictionBand band;
  band.alpha = alpha;
  band.grid = y_train.grid();
  band.lower = predict(lo_fit, x_test).values();
  band.upper = predict(hi_fit, x_test).values();
  for (Index i = 0; i < band.lower.rows(); ++i) {
    for (Index j = 0; j < band.lower.cols(); ++j) {
      if (band.lower(i, j) > band.upper(i, j)) {
        std::swap(band.lower(i, j), band.upper(i, j));
        ++band.crossings;
      }
    }
  }
  return band;
}

double coverage(const PredictionBand& band, const FunctionalSample& y_true) {
  check_band_shape(band, y_true);
  const auto& y = y_true.values();
  const auto inside = (band.lower.array() <= y.array() && y.array() <= band.upper.array()).count();
  return static_cast<double>(inside) / static_cast<double>(y.size());
}

double cpd(const PredictionBand& band, const FunctionalSample& y_true, double alpha) {
  check_alpha(alpha);
  return std::abs((1.0 - alpha) - coverage(band, y_true));
}

double interval_score(const PredictionBand& band, const FunctionalSample& y_true, double alpha) {
  check_alpha(alpha);
  check_band_shape(band, y_true);
  const auto& y = y_true.values();
  const double k = 2.0 / alpha;
  double total = 0.0;
  for (Index i = 0; i < y.rows(); ++i) {
    Vector f(y.cols());
    for (Index j = 0; j < y.cols(); ++j) {
      const double lo = band.lower(i, j), hi = band.upper(i, j), v = y(i, j);
      f(j) = (hi - lo) + (v < lo ? k * (lo - v) : 0.0) + (v > hi ? k * (v - hi) : 0.0);
    }
    total += l2_norm(f, y_true.grid());
  }
  return total / static_cast<double>(y.rows());
}

}  // namespace fflqr
