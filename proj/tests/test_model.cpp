#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fflqr/errors.hpp"
#include "fflqr/model.hpp"
#include "oracles.hpp"

using namespace fflqr;

namespace {

FunctionalSample random_smooth(int n, const Grid& g, std::uint64_t seed, int harmonics = 8) {
  std::mt19937_64 rng(seed);
  return FunctionalSample(oracle::smooth_curves(g.points(), n, rng, harmonics), g);
}

// Y_i(t) = int X_i(s) beta(s, t) ds with beta = sum_lk psi_l(s) b_lk phi_k(t),
// psi the leading K_X eigenfunctions of X and phi orthonormal on the t grid.
struct Representable {
  FunctionalSample y;
  PredictorList x;
  Matrix beta;  // p_s x p_t
};

Representable representable(int n, Index kx, Index ky, std::uint64_t seed) {
  const Grid gs = make_uniform_grid(61, 0.0, 1.0);
  const Grid gt = make_uniform_grid(41, 0.0, 1.0);
  FunctionalSample x = random_smooth(n, gs, seed);
  const FpcBasis psi = fpc_decompose(x, kx).basis;
  const FpcBasis phi = fpc_decompose(random_smooth(30, gt, seed + 1), ky).basis;
  std::mt19937_64 rng(seed + 2);
  std::normal_distribution<double> nd;
  Matrix b(kx, ky);
  for (Index l = 0; l < kx; ++l)
    for (Index k = 0; k < ky; ++k) b(l, k) = nd(rng);
  Matrix beta = psi.eigenfunctions.transpose() * b * phi.eigenfunctions;
  Matrix yv = x.values() * gs.weights().asDiagonal() * beta;
  return {FunctionalSample(yv, gt), {x}, beta};
}

double rel_l2(const Matrix& a, const Matrix& b, const Grid& gs, const Grid& gt) {
  auto sq = [&](const Matrix& m) { return (gs.weights().transpose() * m.cwiseAbs2() * gt.weights())(0); };
  return std::sqrt(sq(a - b) / sq(b));
}

}  // namespace

TEST(FitFflqr, NoiselessRepresentableModelIsExact) {
  auto d = representable(80, 3, 2, 5);
  auto fit = fit_fflqr(d.y, d.x, 0.5, 2, 3);
  EXPECT_EQ(fit.coefs.coefficients.rows(), 4);
  EXPECT_EQ(fit.coefs.coefficients.cols(), 2);
  const Vector obj = in_sample_objective(fit, d.y, d.x);
  for (Index k = 0; k < obj.size(); ++k) EXPECT_LT(obj(k), 1e-6);
}

TEST(FitFflqr, SurfaceRecoversTrueCoefficient) {
  auto d = representable(80, 3, 2, 9);
  auto fit = fit_fflqr(d.y, d.x, 0.5, 2, 3);
  auto surf = coefficient_surface(fit, 1);
  EXPECT_LT(rel_l2(surf.values, d.beta, surf.s_grid, surf.t_grid), 0.05);
}

TEST(FitFflqr, IndependentPredictorGivesMedianCurve) {
  const Grid g = make_uniform_grid(50, 0.0, 1.0);
  FunctionalSample y = random_smooth(201, g, 21);
  FunctionalSample x = random_smooth(201, g, 22);
  auto fit = fit_fflqr(y, {x}, 0.5, 4, 1);
  FunctionalSample pred = predict(fit, {random_smooth(50, g, 23)});

  Vector median(g.size());
  std::vector<double> col(static_cast<std::size_t>(y.n()));
  for (Index j = 0; j < g.size(); ++j) {
    for (Index i = 0; i < y.n(); ++i) col[static_cast<std::size_t>(i)] = y.values()(i, j);
    std::nth_element(col.begin(), col.begin() + 100, col.end());
    median(j) = col[100];
  }
  double pred_err = 0.0;
  for (Index i = 0; i < pred.n(); ++i) pred_err += std::pow(l2_norm(pred.values().row(i).transpose() - median, g), 2);
  pred_err /= static_cast<double>(pred.n());
  double curve_err = 0.0;
  for (Index i = 0; i < y.n(); ++i) curve_err += std::pow(l2_norm(y.values().row(i).transpose() - median, g), 2);
  curve_err /= static_cast<double>(y.n());
  EXPECT_LT(pred_err, curve_err);
}

TEST(FitFflqr, ScalarReduction) {
  const Grid g = make_uniform_grid(40, 0.0, 1.0);
  FunctionalSample y = random_smooth(25, g, 31);
  FunctionalSample x = random_smooth(25, g, 32);
  for (double tau : {0.25, 0.5, 0.8}) {
    auto fit = fit_fflqr(y, {x}, tau, 1, 1);
    ASSERT_EQ(fit.coefs.coefficients.rows(), 2);
    ASSERT_EQ(fit.coefs.coefficients.cols(), 1);
    const Matrix xi = fpc_decompose(y, 1).scores;
    const Matrix zeta = fpc_decompose(x, 1).scores;
    Matrix design(25, 2);
    design.col(0).setOnes();
    design.col(1) = zeta.col(0);
    const double best = oracle::vertex_enumeration_optimum(design, xi.col(0), tau);
    EXPECT_NEAR(oracle::check_objective(design, xi.col(0), fit.coefs.coefficients.col(0), tau), best,
                1e-8 * std::max(1.0, best));
  }
}

TEST(FitFflqr, PredictOnTrainingInputsReproducesFittedCurves) {
  auto d = representable(60, 2, 2, 41);
  FunctionalSample noisy(d.y.values() + 0.1 * random_smooth(60, d.y.grid(), 42).values(), d.y.grid());
  auto fit = fit_fflqr(noisy, d.x, 0.3, 2, 2);
  const Matrix fitted_scores = score_design(fit, d.x) * fit.coefs.coefficients;
  const Matrix expected = (fitted_scores * fit.response_basis.eigenfunctions).rowwise() +
                          fit.response_basis.mean.transpose();
  EXPECT_LT((predict(fit, d.x).values() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(predict(fit, d.x).values(), predict(fit, d.x).values());
}

TEST(FitFflqr, PredictAtPredictorMeanGivesInterceptCurve) {
  auto d = representable(60, 3, 2, 43);
  auto fit = fit_fflqr(d.y, d.x, 0.5, 2, 3);
  Matrix at_mean = fit.predictor_bases[0].mean.transpose();
  FunctionalSample pred = predict(fit, {FunctionalSample(at_mean, d.x[0].grid())});
  const Vector expected = fit.response_basis.mean +
                          fit.response_basis.eigenfunctions.transpose() * fit.coefs.coefficients.row(0).transpose();
  EXPECT_LT((pred.values().row(0).transpose() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitFflqr, InterceptAndSurfaceReproducePrediction) {
  const Grid gs = make_uniform_grid(45, 0.0, 1.0);
  const Grid gt = make_uniform_grid(35, 0.0, 2.0);
  PredictorList x{random_smooth(70, gs, 51), random_smooth(70, gs, 52)};
  FunctionalSample y = random_smooth(70, gt, 53);
  auto fit = fit_fflqr(y, x, 0.6, 3, 4);
  PredictorList x_new{random_smooth(10, gs, 54), random_smooth(10, gs, 55)};
  const Matrix pred = predict(fit, x_new).values();
  const Vector b0 = intercept_function(fit);
  Matrix manual = b0.transpose().replicate(10, 1);
  for (int id : {1, 2}) {
    auto surf = coefficient_surface(fit, id);
    manual += x_new[static_cast<std::size_t>(id - 1)].values() * gs.weights().asDiagonal() * surf.values;
  }
  EXPECT_LT((manual - pred).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitFflqr, ObjectiveNonincreasingInKx) {
  const Grid g = make_uniform_grid(50, 0.0, 1.0);
  FunctionalSample y = random_smooth(60, g, 61);
  PredictorList x{random_smooth(60, g, 62)};
  double prev = std::numeric_limits<double>::infinity();
  for (Index kx = 1; kx <= 5; ++kx) {
    const double obj = in_sample_objective(fit_fflqr(y, x, 0.4, 3, kx), y, x).sum();
    EXPECT_LE(obj, prev + 1e-8 * std::max(1.0, prev));
    prev = obj;
  }
}

TEST(FitFflqr, ResidualSignFractionMatchesTau) {
  const Grid g = make_uniform_grid(40, 0.0, 1.0);
  PredictorList x{random_smooth(90, g, 71), random_smooth(90, g, 72)};
  FunctionalSample y = random_smooth(90, g, 73);
  for (double tau : {0.1, 0.5, 0.75}) {
    auto fit = fit_fflqr(y, x, tau, 3, 2);
    const Matrix design = score_design(fit, x);
    const Matrix xi = project(fit.response_basis, y);
    const Matrix resid = xi - design * fit.coefs.coefficients;
    const double q = static_cast<double>(design.cols());
    const double n = static_cast<double>(design.rows());
    for (Index k = 0; k < resid.cols(); ++k) {
      const double neg = static_cast<double>((resid.col(k).array() < -1e-9).count()) / n;
      EXPECT_GE(neg, tau - (q + 1) / n);
      EXPECT_LE(neg, tau + (q + 1) / n);
    }
  }
}

TEST(FitFflqr, RejectsInconsistentInputs) {
  const Grid g = make_uniform_grid(30, 0.0, 1.0);
  FunctionalSample y = random_smooth(20, g, 81);
  EXPECT_THROW(fit_fflqr(y, {random_smooth(19, g, 82)}, 0.5, 2, 2), DataError);
  EXPECT_THROW(fit_fflqr(y, {random_smooth(20, g, 82)}, 0.5, 25, 2), ConfigError);
  EXPECT_THROW(fit_fflqr(y, {random_smooth(20, g, 82)}, 1.5, 2, 2), ConfigError);
  auto fit = fit_fflqr(y, {random_smooth(20, g, 82)}, 0.5, 2, 2);
  EXPECT_THROW(predict(fit, {random_smooth(5, make_uniform_grid(31, 0.0, 1.0), 83)}), DataError);
  EXPECT_THROW(predict(fit, {random_smooth(5, g, 83), random_smooth(5, g, 84)}), DataError);
  EXPECT_THROW(coefficient_surface(fit, 7), ConfigError);
}

TEST(CoefficientSurface, ZeroBlockAndRankOne) {
  const Grid g = make_uniform_grid(30, 0.0, 1.0);
  FunctionalSample y = random_smooth(20, g, 91);
  PredictorList x{random_smooth(20, g, 92)};
  auto fit = fit_fflqr(y, x, 0.5, 1, 1);
  fit.coefs.coefficients(1, 0) = 0.0;
  EXPECT_EQ(coefficient_surface(fit, 1).values.cwiseAbs().maxCoeff(), 0.0);
  fit.coefs.coefficients(1, 0) = 1.0;
  const Matrix outer = fit.predictor_bases[0].eigenfunctions.row(0).transpose() *
                       fit.response_basis.eigenfunctions.row(0);
  EXPECT_LT((coefficient_surface(fit, 1).values - outer).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FitFpcLs, SimpleRegressionSlope) {
  const Grid g = make_uniform_grid(40, 0.0, 1.0);
  FunctionalSample y = random_smooth(30, g, 101);
  FunctionalSample x = random_smooth(30, g, 102);
  auto fit = fit_fpc_ls(y, {x}, 1, 1);
  const Vector xi = fpc_decompose(y, 1).scores.col(0);
  const Vector zeta = fpc_decompose(x, 1).scores.col(0);
  const double zm = zeta.mean(), xm = xi.mean();
  const double cov = ((zeta.array() - zm) * (xi.array() - xm)).sum();
  const double var = (zeta.array() - zm).square().sum();
  const double slope = cov / var;
  EXPECT_NEAR(fit.coefs.coefficients(1, 0), slope, 1e-10);
  EXPECT_NEAR(fit.coefs.coefficients(0, 0), xm - slope * zm, 1e-10);
}

TEST(FitFpcLs, AgreesWithMedianFitOnNoiselessData) {
  auto d = representable(80, 3, 2, 111);
  auto q = coefficient_surface(fit_fflqr(d.y, d.x, 0.5, 2, 3), 1);
  auto l = coefficient_surface(fit_fpc_ls(d.y, d.x, 2, 3), 1);
  EXPECT_LT(rel_l2(q.values, l.values, q.s_grid, q.t_grid), 1e-3);
}

TEST(FitFpcLs, DuplicatedPredictorFlagsRankDeficiency) {
  const Grid g = make_uniform_grid(40, 0.0, 1.0);
  FunctionalSample y = random_smooth(30, g, 121);
  FunctionalSample x = random_smooth(30, g, 122);
  EXPECT_TRUE(fit_fpc_ls(y, {x, x}, 2, 2).rank_deficient());
  EXPECT_TRUE(fit_fflqr(y, {x, x}, 0.5, 2, 2).rank_deficient());
  EXPECT_FALSE(fit_fpc_ls(y, {x}, 2, 2).rank_deficient());
}

TEST(Bspline, PartitionOfUnity) {
  for (int order : {2, 3, 4, 5}) {
    BsplineBasis b(0.0, 2.0, 12, order);
    const Matrix v = b.evaluate(make_uniform_grid(101, 0.0, 2.0));
    for (Index j = 0; j < v.rows(); ++j) EXPECT_NEAR(v.row(j).sum(), 1.0, 1e-12);
    EXPECT_GE(v.minCoeff(), 0.0);
  }
}

TEST(Bspline, BasisElementProjectsToUnitVector) {
  const Grid g = make_uniform_grid(100, 0.0, 1.0);
  BsplineBasis b(0.0, 1.0, 20, 4);
  const Matrix theta = b.evaluate(g);
  FunctionalSample s(theta.col(7).transpose(), g);
  Vector expected = Vector::Zero(20);
  expected(7) = 1.0;
  EXPECT_LT((bspline_coefficients(b, s).row(0).transpose() - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Bspline, RejectsBadArguments) {
  EXPECT_THROW(BsplineBasis(0.0, 1.0, 3, 4), ConfigError);
  EXPECT_THROW(BsplineBasis(1.0, 1.0, 6, 4), ConfigError);
  EXPECT_THROW(BsplineBasis(0.0, 1.0, 6, 1), ConfigError);
  BsplineBasis b(0.0, 1.0, 20, 4);
  EXPECT_THROW(bspline_coefficients(b, FunctionalSample(Matrix::Ones(2, 5), make_uniform_grid(5, 0.0, 1.0))),
               NumericalError);
}

TEST(FitBsplineLs, NoiselessRepresentableResidualNearZero) {
  const Grid gs = make_uniform_grid(80, 0.0, 1.0);
  const Grid gt = make_uniform_grid(60, 0.0, 1.0);
  BsplineBasis b(0.0, 1.0, 8, 4);
  const Matrix ts = b.evaluate(gs), tt = b.evaluate(gt);
  std::mt19937_64 rng(131);
  std::normal_distribution<double> nd;
  Matrix c(60, 8), beta(8, 8);
  for (Index i = 0; i < c.size(); ++i) c(i) = nd(rng);
  for (Index i = 0; i < beta.size(); ++i) beta(i) = nd(rng);
  FunctionalSample x(c * ts.transpose(), gs);
  Matrix yv = x.values() * gs.weights().asDiagonal() * ts * beta * tt.transpose();
  yv.array() += 2.0;
  FunctionalSample y(yv, gt);
  auto fit = fit_bspline_ls(y, {x}, 8, 4);
  const double rel = (predict(fit, {x}).values() - y.values()).norm() / y.values().norm();
  EXPECT_LT(rel, 1e-8);
}

TEST(FitModel, DispatchesOnMethod) {
  const Grid g = make_uniform_grid(40, 0.0, 1.0);
  FunctionalSample y = random_smooth(40, g, 141);
  PredictorList x{random_smooth(40, g, 142), random_smooth(40, g, 143)};
  ModelSpec spec;
  spec.predictor_ids = {3, 5};
  for (Method m : {Method::fflqr, Method::fpc_ls, Method::bspline_ls}) {
    spec.method = m;
    spec.n_basis = 10;
    auto model = fit_model(spec, y, x);
    EXPECT_EQ(predictor_ids(model), (std::vector<int>{3, 5}));
    EXPECT_EQ(predict(model, x).n(), 40);
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("fpls"), ConfigError);
}

TEST(SelectPredictors, ByOneBasedId) {
  const Grid g = make_uniform_grid(10, 0.0, 1.0);
  PredictorList x{random_smooth(3, g, 1), random_smooth(3, g, 2), random_smooth(3, g, 3)};
  auto s = select_predictors(x, {3, 1});
  EXPECT_EQ(s[0].values(), x[2].values());
  EXPECT_EQ(s[1].values(), x[0].values());
  EXPECT_THROW(select_predictors(x, {4}), ConfigError);
  EXPECT_EQ(all_predictor_ids(3), (std::vector<int>{1, 2, 3}));
}
