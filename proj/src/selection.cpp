#include "fflqr/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fflqr/errors.hpp"

namespace fflqr {

namespace {

std::string describe_set(const std::vector<int>& ids) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < ids.size(); ++k) os << (k ? "," : "") << ids[k];
  os << '}';
  return os.str();
}

// In-sample fitted curves from cached scores (training projections).
FunctionalSample fitted_from_cache(const ScoreCache& cache, const FflqrFit& fit, const std::vector<std::size_t>& use) {
  const Index n = cache.response.scores.rows();
  Matrix design(n, fit.coefs.coefficients.rows());
  design.col(0).setOnes();
  Index col = 1;
  for (std::size_t b = 0; b < use.size(); ++b) {
    const Index k = fit.predictor_bases[b].components();
    design.middleCols(col, k) = cache.predictors[use[b]].scores.leftCols(k);
    col += k;
  }
  return reconstruct(fit.response_basis, design * fit.coefs.coefficients);
}

double loss_term(const FunctionalSample& y, const ScoreCache& cache, Estimator estimator, double tau, Index k_y,
                 Index k_x, const std::vector<std::size_t>& use, const std::vector<int>& ids) {
  const FflqrFit fit = fit_from_cache(cache, estimator, tau, k_y, k_x, use, ids);
  return log_loss_norm(pointwise_loss(y, fitted_from_cache(cache, fit, use), estimator, tau), y.grid());
}

Index admissible_k(const PredictorList& x, Index k_max) {
  Index k = k_max;
  for (const auto& xm : x) k = std::min(k, max_components(xm));
  return k;
}

std::vector<std::size_t> positions(std::size_t m) {
  std::vector<std::size_t> use(m);
  std::iota(use.begin(), use.end(), std::size_t{0});
  return use;
}

}  // namespace

Vector pointwise_loss(const FunctionalSample& y, const FunctionalSample& fitted, Estimator estimator, double tau) {
  if (y.n() != fitted.n() || y.p() != fitted.p()) throw DataError("pointwise_loss: shape mismatch");
  const Matrix r = y.values() - fitted.values();
  if (estimator == Estimator::least_squares) return r.colwise().squaredNorm().transpose();
  Vector out = Vector::Zero(r.cols());
  for (Index j = 0; j < r.cols(); ++j)
    for (Index i = 0; i < r.rows(); ++i) out(j) += check_loss(r(i, j), tau);
  return out;
}

double log_loss_norm(const Vector& loss, const Grid& grid) {
  const Vector logs = loss.cwiseMax(kLossFloor).array().log().matrix();
  const double norm = l2_norm(logs, grid);
  return grid.weights().dot(logs) < 0.0 ? -norm : norm;
}

double truncation_bic(double loss_norm, Index k_y, Index k_x, Index n) {
  return loss_norm + static_cast<double>(k_y + k_x) * std::log(static_cast<double>(n));
}

double candidate_bic(double loss_norm, std::size_t size, Index n) {
  const double nn = static_cast<double>(n);
  return loss_norm + static_cast<double>(size) * std::log(nn) / (2.0 * nn);
}

double bic_truncation(const FunctionalSample& y, const PredictorList& x, double tau, Index k_y, Index k_x,
                      Estimator estimator) {
  const ScoreCache cache = ScoreCache::build(y, x, k_y, k_x);
  const auto use = positions(x.size());
  return truncation_bic(loss_term(y, cache, estimator, tau, k_y, k_x, use, all_predictor_ids(x.size())), k_y, k_x,
                        y.n());
}

double bic_candidate(const FunctionalSample& y, const PredictorList& x_subset, double tau, Index fixed_k,
                     Estimator estimator) {
  if (x_subset.empty()) throw ConfigError("bic_candidate: empty predictor set");
  const ScoreCache cache = ScoreCache::build(y, x_subset, fixed_k, fixed_k);
  const auto use = positions(x_subset.size());
  return candidate_bic(loss_term(y, cache, estimator, tau, fixed_k, fixed_k, use, all_predictor_ids(x_subset.size())),
                       x_subset.size(), y.n());
}

TruncationResult select_truncation(const FunctionalSample& y, const PredictorList& x, double tau, Index k_y_max,
                                   Index k_x_max, Estimator estimator, std::vector<int> predictor_ids) {
  if (k_y_max < 1 || k_x_max < 1) throw ConfigError("select_truncation: maxima must be >= 1");
  if (x.empty()) throw ConfigError("select_truncation: no predictors");
  if (predictor_ids.empty()) predictor_ids = all_predictor_ids(x.size());
  const Index ky = std::min(k_y_max, max_components(y));
  const Index kx = admissible_k(x, k_x_max);
  const ScoreCache cache = ScoreCache::build(y, x, ky, kx);
  const auto use = positions(x.size());

  TruncationResult result;
  bool found = false;
  for (Index a = 1; a <= ky; ++a) {
    for (Index b = 1; b <= kx; ++b) {
      BicTraceEntry e;
      e.stage = 0;
      e.predictor_ids = predictor_ids;
      e.candidate = "K_Y=" + std::to_string(a) + ",K_X=" + std::to_string(b);
      e.k_y = a;
      e.k_x = b;
      try {
        e.bic = truncation_bic(loss_term(y, cache, estimator, tau, a, b, use, predictor_ids), a, b, y.n());
      } catch (const std::exception& ex) {
        e.note = ex.what();
      }
      if (std::isfinite(e.bic)) {
        const bool better = !found || e.bic < result.bic ||
                            (e.bic == result.bic && (a + b < result.k_y + result.k_x ||
                                                     (a + b == result.k_y + result.k_x && a < result.k_y)));
        if (better) {
          result.k_y = a;
          result.k_x = b;
          result.bic = e.bic;
          found = true;
        }
      }
      result.trace.push_back(std::move(e));
    }
  }
  if (!found) throw NumericalError("select_truncation: every candidate failed to fit");
  for (auto& e : result.trace) e.accepted = (e.k_y == result.k_y && e.k_x == result.k_x);
  return result;
}

SelectionResult forward_select(const FunctionalSample& y, const PredictorList& x, double tau,
                               const ForwardSelectionOptions& options) {
  const std::size_t m_total = x.size();
  if (m_total == 0) throw ConfigError("forward_select: no predictors");
  const Index k = std::min({options.fixed_k, max_components(y), admissible_k(x, options.fixed_k)});
  const ScoreCache cache = ScoreCache::build(y, x, k, k);

  SelectionResult result;
  std::vector<int> chosen;
  std::vector<bool> used(m_total, false);
  double prev_bic = 0.0;

  for (int stage = 1; static_cast<std::size_t>(stage) <= m_total; ++stage) {
    int best_id = -1;
    double best_bic = std::numeric_limits<double>::infinity();
    std::size_t best_entry = 0;
    for (std::size_t m = 0; m < m_total; ++m) {
      if (used[m]) continue;
      std::vector<int> ids = chosen;
      ids.push_back(static_cast<int>(m + 1));
      std::sort(ids.begin(), ids.end());
      std::vector<std::size_t> use;
      for (int id : ids) use.push_back(static_cast<std::size_t>(id - 1));

      BicTraceEntry e;
      e.stage = stage;
      e.predictor_ids = ids;
      e.candidate = describe_set(ids);
      e.k_y = k;
      e.k_x = k;
      try {
        e.bic = candidate_bic(loss_term(y, cache, options.estimator, tau, k, k, use, ids), ids.size(), y.n());
      } catch (const std::exception& ex) {
        e.note = ex.what();
      }
      if (std::isfinite(e.bic) && e.bic < best_bic) {
        best_bic = e.bic;
        best_id = static_cast<int>(m + 1);
        best_entry = result.trace.size();
      }
      result.trace.push_back(std::move(e));
    }
    if (best_id < 0) {
      if (stage == 1) throw NumericalError("forward_select: no single-predictor model could be fitted");
      break;
    }
    bool accept = stage == 1;
    if (!accept) {
      accept = prev_bic > 0.0 ? best_bic / prev_bic < options.ratio_threshold
                              : prev_bic - best_bic > (1.0 - options.ratio_threshold) * std::abs(prev_bic);
    }
    if (!accept) break;
    result.trace[best_entry].accepted = true;
    chosen.push_back(best_id);
    used[static_cast<std::size_t>(best_id - 1)] = true;
    prev_bic = best_bic;
  }

  std::sort(chosen.begin(), chosen.end());
  result.chosen_predictors = chosen;
  TruncationResult trunc = select_truncation(y, select_predictors(x, chosen), tau, options.k_y_max,
                                             options.k_x_max, options.estimator, chosen);
  result.chosen_k_y = trunc.k_y;
  result.chosen_k_x = trunc.k_x;
  for (auto& e : trunc.trace) result.trace.push_back(std::move(e));
  return result;
}

}  // namespace fflqr
