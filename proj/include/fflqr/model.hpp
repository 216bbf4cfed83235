#pragma once

#include <string>
#include <variant>
#include <vector>

#include "fflqr/bspline.hpp"
#include "fflqr/fpca.hpp"
#include "fflqr/quantile_regression.hpp"

namespace fflqr {

/// How the score-space coefficient matrix is estimated.
enum class Estimator { quantile, least_squares };

/// Fitted function-on-function model in FPC score space.
///
/// Row 0 of `coefs.coefficients` holds the intercept scores g_k; the
/// following rows are the stacked K_X-row blocks for each predictor in
/// `predictor_ids` order. Columns index the K_Y response components.
/// The same struct carries the FPC least-squares baseline
/// (`estimator == least_squares`), in which case `tau` is not used.
struct FflqrFit {
  Estimator estimator = Estimator::quantile;
  double tau = 0.5;
  FpcBasis response_basis;
  std::vector<FpcBasis> predictor_bases;
  QrCoefMatrix coefs;
  std::vector<int> predictor_ids;  // 1-based positions in the original predictor list

  Index k_y() const noexcept { return response_basis.components(); }
  Index k_x(std::size_t m) const { return predictor_bases.at(m).components(); }
  bool rank_deficient() const noexcept { return coefs.rank_deficient; }
};

/// Bivariate coefficient surface; values(j, i) is the surface at (s_j, t_i).
struct CoefficientSurface {
  Matrix values;
  Grid s_grid;
  Grid t_grid;
  int predictor_id = 0;
  double tau = 0.5;
};

/// FPC decompositions of a response and its predictors at their largest
/// requested truncation. Fits at smaller truncations reuse the leading
/// components, which are identical to a fresh decomposition at that size.
struct ScoreCache {
  FpcDecomposition response;
  std::vector<FpcDecomposition> predictors;

  static ScoreCache build(const FunctionalSample& y, const PredictorList& x, Index k_y_max, Index k_x_max);
};

/// Fit from cached decompositions using the predictors at positions `use`
/// (0-based into the cache), labelled by `predictor_ids`.
FflqrFit fit_from_cache(const ScoreCache& cache, Estimator estimator, double tau, Index k_y, Index k_x,
                        const std::vector<std::size_t>& use, const std::vector<int>& predictor_ids);

/// Quantile-regression fit at level tau with K_Y response and K_X predictor
/// components. Predictor ids default to 1..M.
FflqrFit fit_fflqr(const FunctionalSample& y, const PredictorList& x, double tau, Index k_y, Index k_x,
                   std::vector<int> predictor_ids = {});

/// Same pipeline with ordinary least squares per response coordinate.
FflqrFit fit_fpc_ls(const FunctionalSample& y, const PredictorList& x, Index k_y, Index k_x,
                    std::vector<int> predictor_ids = {});

/// Score-space design [1 | zeta_1 | ... | zeta_M] for new predictor curves.
Matrix score_design(const FflqrFit& fit, const PredictorList& x);

/// Response-space prediction (conditional quantile, or conditional mean for
/// the least-squares estimator).
FunctionalSample predict(const FflqrFit& fit, const PredictorList& x_new);

/// In-sample check-loss objective per response coordinate in score space.
Vector in_sample_objective(const FflqrFit& fit, const FunctionalSample& y, const PredictorList& x);

/// Surface of the predictor with the given id.
CoefficientSurface coefficient_surface(const FflqrFit& fit, int predictor_id);

/// beta_0(t) such that prediction(t) = beta_0(t) + sum_m int X_m(s) beta_m(s, t) ds
/// with the surfaces of `coefficient_surface`.
Vector intercept_function(const FflqrFit& fit);

/// Function-on-function least squares in a clamped B-spline basis.
struct BsplineLsFit {
  int n_basis = 20;
  int order = 4;
  Grid response_grid;
  std::vector<Grid> predictor_grids;
  Matrix coefficients;  // (1 + M * n_basis) x n_basis
  std::vector<int> predictor_ids;
  bool rank_deficient = false;
};

BsplineLsFit fit_bspline_ls(const FunctionalSample& y, const PredictorList& x, int n_basis = 20, int order = 4,
                            std::vector<int> predictor_ids = {});

FunctionalSample predict(const BsplineLsFit& fit, const PredictorList& x_new);

/// Least-squares coefficients of each curve in `basis` (rows = curves).
/// Throws NumericalError when the basis is rank deficient on the grid.
Matrix bspline_coefficients(const BsplineBasis& basis, const FunctionalSample& sample);

// ---------------------------------------------------------------------------
// Uniform front end over the three estimators.

enum class Method { fflqr, fpc_ls, bspline_ls };

std::string to_string(Method m);
Method parse_method(const std::string& name);

struct ModelSpec {
  Method method = Method::fflqr;
  double tau = 0.5;
  Index k_y = 2;
  Index k_x = 2;
  int n_basis = 20;
  int order = 4;
  std::vector<int> predictor_ids;  // labels for the predictors handed to fit_model
};

using FittedModel = std::variant<FflqrFit, BsplineLsFit>;

/// `x` holds exactly the predictors used by the model, in `spec.predictor_ids` order.
FittedModel fit_model(const ModelSpec& spec, const FunctionalSample& y, const PredictorList& x);

FunctionalSample predict(const FittedModel& model, const PredictorList& x_new);

const std::vector<int>& predictor_ids(const FittedModel& model);

/// Subset of `x_all` by 1-based ids.
PredictorList select_predictors(const PredictorList& x_all, const std::vector<int>& ids);

/// 1..m
std::vector<int> all_predictor_ids(std::size_t m);

}  // namespace fflqr
