#include "fflqr/model.hpp"

#include <numeric>
#include <string>

#include "fflqr/errors.hpp"

namespace fflqr {

namespace {

void check_samples(const FunctionalSample& y, const PredictorList& x, const std::vector<int>& ids) {
  if (x.empty()) throw ConfigError("model needs at least one functional predictor");
  for (std::size_t m = 0; m < x.size(); ++m)
    if (x[m].n() != y.n())
      throw DataError("predictor " + std::to_string(m + 1) + " has " + std::to_string(x[m].n()) +
                      " curves but the response has " + std::to_string(y.n()));
  if (ids.size() != x.size()) throw ConfigError("predictor id list does not match the number of predictors");
}

std::vector<int> ids_or_default(std::vector<int> ids, std::size_t m) {
  return ids.empty() ? all_predictor_ids(m) : ids;
}

Matrix solve_least_squares(const Matrix& design, const Matrix& responses, bool& rank_deficient) {
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  rank_deficient = qr.rank() < design.cols();
  return qr.solve(responses);
}

}  // namespace

std::vector<int> all_predictor_ids(std::size_t m) {
  std::vector<int> ids(m);
  std::iota(ids.begin(), ids.end(), 1);
  return ids;
}

PredictorList select_predictors(const PredictorList& x_all, const std::vector<int>& ids) {
  PredictorList out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 1 || static_cast<std::size_t>(id) > x_all.size())
      throw ConfigError("predictor id " + std::to_string(id) + " outside 1.." + std::to_string(x_all.size()));
    out.push_back(x_all[static_cast<std::size_t>(id - 1)]);
  }
  return out;
}

ScoreCache ScoreCache::build(const FunctionalSample& y, const PredictorList& x, Index k_y_max, Index k_x_max) {
  ScoreCache cache;
  cache.response = fpc_decompose(y, k_y_max);
  cache.predictors.reserve(x.size());
  for (const auto& xm : x) {
    if (xm.n() != y.n()) throw DataError("predictor and response sample sizes differ");
    cache.predictors.push_back(fpc_decompose(xm, k_x_max));
  }
  return cache;
}

FflqrFit fit_from_cache(const ScoreCache& cache, Estimator estimator, double tau, Index k_y, Index k_x,
                        const std::vector<std::size_t>& use, const std::vector<int>& predictor_ids) {
  if (use.empty()) throw ConfigError("model needs at least one functional predictor");
  if (use.size() != predictor_ids.size()) throw ConfigError("predictor id list does not match the predictors");
  if (k_y < 1 || k_y > cache.response.basis.components())
    throw ConfigError("K_Y=" + std::to_string(k_y) + " outside the available response components");
  if (estimator == Estimator::quantile && !(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");

  const Index n = cache.response.scores.rows();
  const Index q = 1 + static_cast<Index>(use.size()) * k_x;
  Matrix design(n, q);
  design.col(0).setOnes();

  FflqrFit fit;
  fit.estimator = estimator;
  fit.tau = tau;
  fit.response_basis = cache.response.basis.truncated(k_y);
  fit.predictor_ids = predictor_ids;
  for (std::size_t b = 0; b < use.size(); ++b) {
    const FpcDecomposition& dec = cache.predictors.at(use[b]);
    if (k_x < 1 || k_x > dec.basis.components())
      throw ConfigError("K_X=" + std::to_string(k_x) + " outside the available predictor components");
    design.middleCols(1 + static_cast<Index>(b) * k_x, k_x) = dec.scores.leftCols(k_x);
    fit.predictor_bases.push_back(dec.basis.truncated(k_x));
  }
  if (n < q) throw ConfigError("more score-space coefficients (" + std::to_string(q) + ") than curves");

  const Matrix responses = cache.response.scores.leftCols(k_y);
  if (estimator == Estimator::quantile) {
    fit.coefs = qr_fit_multi(design, responses, tau, true);
  } else {
    fit.coefs.tau = tau;
    fit.coefs.includes_intercept = true;
    fit.coefs.coefficients = solve_least_squares(design, responses, fit.coefs.rank_deficient);
  }
  return fit;
}

FflqrFit fit_fflqr(const FunctionalSample& y, const PredictorList& x, double tau, Index k_y, Index k_x,
                   std::vector<int> predictor_ids) {
  predictor_ids = ids_or_default(std::move(predictor_ids), x.size());
  check_samples(y, x, predictor_ids);
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  const ScoreCache cache = ScoreCache::build(y, x, k_y, k_x);
  std::vector<std::size_t> use(x.size());
  std::iota(use.begin(), use.end(), std::size_t{0});
  return fit_from_cache(cache, Estimator::quantile, tau, k_y, k_x, use, predictor_ids);
}

FflqrFit fit_fpc_ls(const FunctionalSample& y, const PredictorList& x, Index k_y, Index k_x,
                    std::vector<int> predictor_ids) {
  predictor_ids = ids_or_default(std::move(predictor_ids), x.size());
  check_samples(y, x, predictor_ids);
  const ScoreCache cache = ScoreCache::build(y, x, k_y, k_x);
  std::vector<std::size_t> use(x.size());
  std::iota(use.begin(), use.end(), std::size_t{0});
  return fit_from_cache(cache, Estimator::least_squares, 0.5, k_y, k_x, use, predictor_ids);
}

Matrix score_design(const FflqrFit& fit, const PredictorList& x) {
  if (x.size() != fit.predictor_bases.size())
    throw DataError("model uses " + std::to_string(fit.predictor_bases.size()) + " predictors but " +
                    std::to_string(x.size()) + " were supplied");
  const Index n = x.empty() ? 0 : x.front().n();
  Index q = 1;
  for (const auto& b : fit.predictor_bases) q += b.components();
  Matrix design(n, q);
  design.col(0).setOnes();
  Index col = 1;
  for (std::size_t m = 0; m < x.size(); ++m) {
    if (x[m].n() != n) throw DataError("predictor samples differ in size");
    if (!x[m].grid().matches(fit.predictor_bases[m].grid, 1e-10))
      throw DataError("grid of predictor " + std::to_string(fit.predictor_ids[m]) +
                      " does not match the grid the model was fitted on");
    const Index k = fit.predictor_bases[m].components();
    design.middleCols(col, k) = project(fit.predictor_bases[m], x[m]);
    col += k;
  }
  return design;
}

FunctionalSample predict(const FflqrFit& fit, const PredictorList& x_new) {
  const Matrix scores = score_design(fit, x_new) * fit.coefs.coefficients;
  return reconstruct(fit.response_basis, scores);
}

Vector in_sample_objective(const FflqrFit& fit, const FunctionalSample& y, const PredictorList& x) {
  const Matrix design = score_design(fit, x);
  const Matrix responses = project(fit.response_basis, y);
  QrCoefMatrix coefs = fit.coefs;
  if (fit.estimator == Estimator::least_squares) coefs.tau = 0.5;
  return qr_objective(design, responses, coefs);
}

CoefficientSurface coefficient_surface(const FflqrFit& fit, int predictor_id) {
  Index row = 1;
  for (std::size_t m = 0; m < fit.predictor_ids.size(); ++m) {
    const FpcBasis& psi = fit.predictor_bases[m];
    if (fit.predictor_ids[m] == predictor_id) {
      const Matrix block = fit.coefs.coefficients.middleRows(row, psi.components());
      CoefficientSurface out;
      out.values = psi.eigenfunctions.transpose() * block * fit.response_basis.eigenfunctions;
      out.s_grid = psi.grid;
      out.t_grid = fit.response_basis.grid;
      out.predictor_id = predictor_id;
      out.tau = fit.tau;
      return out;
    }
    row += psi.components();
  }
  throw ConfigError("predictor id " + std::to_string(predictor_id) + " is not part of the model");
}

Vector intercept_function(const FflqrFit& fit) {
  const Matrix& phi = fit.response_basis.eigenfunctions;
  Vector out = fit.response_basis.mean + phi.transpose() * fit.coefs.coefficients.row(0).transpose();
  Index row = 1;
  for (const auto& psi : fit.predictor_bases) {
    const Matrix block = fit.coefs.coefficients.middleRows(row, psi.components());
    // int mean_X(s) beta(s, t) ds = (mean^T W Psi^T) B Phi
    const Vector mean_scores = psi.eigenfunctions * psi.grid.weights().cwiseProduct(psi.mean);
    out -= phi.transpose() * (block.transpose() * mean_scores);
    row += psi.components();
  }
  return out;
}

// ---------------------------------------------------------------------------

Matrix bspline_coefficients(const BsplineBasis& basis, const FunctionalSample& sample) {
  const Matrix theta = basis.evaluate(sample.grid());
  Eigen::ColPivHouseholderQR<Matrix> qr(theta);
  qr.setThreshold(1e-12);
  if (qr.rank() < theta.cols())
    throw NumericalError("B-spline Gram matrix is singular on this grid (n_basis " +
                         std::to_string(basis.n_basis()) + ", " + std::to_string(theta.rows()) + " points)");
  return qr.solve(sample.values().transpose()).transpose();
}

namespace {

BsplineBasis basis_on(const Grid& g, int n_basis, int order) {
  return BsplineBasis(g.lower(), g.upper(), n_basis, order);
}

Matrix bspline_design(const BsplineLsFit& fit, const PredictorList& x) {
  if (x.size() != fit.predictor_grids.size())
    throw DataError("model uses " + std::to_string(fit.predictor_grids.size()) + " predictors but " +
                    std::to_string(x.size()) + " were supplied");
  const Index n = x.empty() ? 0 : x.front().n();
  const Index nb = fit.n_basis;
  Matrix design(n, 1 + static_cast<Index>(x.size()) * nb);
  design.col(0).setOnes();
  for (std::size_t m = 0; m < x.size(); ++m) {
    if (x[m].n() != n) throw DataError("predictor samples differ in size");
    if (!x[m].grid().matches(fit.predictor_grids[m], 1e-10))
      throw DataError("grid of predictor " + std::to_string(fit.predictor_ids[m]) +
                      " does not match the grid the model was fitted on");
    const BsplineBasis basis = basis_on(fit.predictor_grids[m], fit.n_basis, fit.order);
    const Matrix theta = basis.evaluate(x[m].grid());
    const Matrix gram = theta.transpose() * x[m].grid().weights().asDiagonal() * theta;
    design.middleCols(1 + static_cast<Index>(m) * nb, nb) = bspline_coefficients(basis, x[m]) * gram;
  }
  return design;
}

}  // namespace

BsplineLsFit fit_bspline_ls(const FunctionalSample& y, const PredictorList& x, int n_basis, int order,
                            std::vector<int> predictor_ids) {
  predictor_ids = ids_or_default(std::move(predictor_ids), x.size());
  check_samples(y, x, predictor_ids);
  if (order < 2 || n_basis < order) throw ConfigError("bspline_ls: require n_basis >= order >= 2");
  if (n_basis > y.p()) throw ConfigError("bspline_ls: n_basis exceeds response grid size");
  for (const auto& xm : x)
    if (n_basis > xm.p()) throw ConfigError("bspline_ls: n_basis exceeds predictor grid size");

  BsplineLsFit fit;
  fit.n_basis = n_basis;
  fit.order = order;
  fit.response_grid = y.grid();
  fit.predictor_ids = predictor_ids;
  for (const auto& xm : x) fit.predictor_grids.push_back(xm.grid());

  const Matrix design = bspline_design(fit, x);
  const Matrix response_coefs = bspline_coefficients(basis_on(y.grid(), n_basis, order), y);
  fit.coefficients = solve_least_squares(design, response_coefs, fit.rank_deficient);
  return fit;
}

FunctionalSample predict(const BsplineLsFit& fit, const PredictorList& x_new) {
  const Matrix theta_t = basis_on(fit.response_grid, fit.n_basis, fit.order).evaluate(fit.response_grid);
  Matrix values = bspline_design(fit, x_new) * fit.coefficients * theta_t.transpose();
  return FunctionalSample(std::move(values), fit.response_grid);
}

// ---------------------------------------------------------------------------

std::string to_string(Method m) {
  switch (m) {
    case Method::fflqr:
      return "fflqr";
    case Method::fpc_ls:
      return "fpc_ls";
    case Method::bspline_ls:
      return "bspline_ls";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "fflqr") return Method::fflqr;
  if (name == "fpc_ls") return Method::fpc_ls;
  if (name == "bspline_ls") return Method::bspline_ls;
  throw ConfigError("unknown method '" + name + "' (expected fflqr, fpc_ls or bspline_ls)");
}

FittedModel fit_model(const ModelSpec& spec, const FunctionalSample& y, const PredictorList& x) {
  std::vector<int> ids = spec.predictor_ids.empty() ? all_predictor_ids(x.size()) : spec.predictor_ids;
  switch (spec.method) {
    case Method::fflqr:
      return fit_fflqr(y, x, spec.tau, spec.k_y, spec.k_x, ids);
    case Method::fpc_ls:
      return fit_fpc_ls(y, x, spec.k_y, spec.k_x, ids);
    case Method::bspline_ls:
      return fit_bspline_ls(y, x, spec.n_basis, spec.order, ids);
  }
  throw ConfigError("unknown method");
}

FunctionalSample predict(const FittedModel& model, const PredictorList& x_new) {
  return std::visit([&](const auto& fit) { return predict(fit, x_new); }, model);
}

const std::vector<int>& predictor_ids(const FittedModel& model) {
  return std::visit([](const auto& fit) -> const std::vector<int>& { return fit.predictor_ids; }, model);
}

}  // namespace fflqr
