#include <gtest/gtest.h>

#include <random>

#include "fflqr/errors.hpp"
#include "fflqr/selection.hpp"
#include "fflqr/simulation.hpp"
#include "fflqr/uncertainty.hpp"
#include "oracles.hpp"

using namespace fflqr;

namespace {

FunctionalSample random_smooth(int n, const Grid& g, std::uint64_t seed, int harmonics = 8) {
  std::mt19937_64 rng(seed);
  return FunctionalSample(oracle::smooth_curves(g.points(), n, rng, harmonics), g);
}

PredictionBand band_of(const Matrix& lo, const Matrix& hi, const Grid& g, double alpha) {
  PredictionBand b;
  b.lower = lo;
  b.upper = hi;
  b.grid = g;
  b.alpha = alpha;
  return b;
}

struct Data {
  FunctionalSample y;
  PredictorList x;
  PredictorList x_test;
};

Data noisy_linear(int n, std::uint64_t seed) {
  const Grid g = make_uniform_grid(30, 0.0, 1.0);
  FunctionalSample x = random_smooth(n, g, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> nd(0.0, 0.3);
  Matrix y = 0.5 * x.values();
  for (Index i = 0; i < y.size(); ++i) y(i) += nd(rng);
  return {FunctionalSample(y, g), {x}, {random_smooth(15, g, seed + 2)}};
}

}  // namespace

TEST(Mspe, HandCases) {
  const Grid g = make_uniform_grid(51, 0.0, 1.0);
  FunctionalSample y = random_smooth(4, g, 1);
  EXPECT_EQ(mspe(y, y), 0.0);
  FunctionalSample shifted(y.values().array() + 0.7, g);
  EXPECT_NEAR(mspe(y, shifted), 0.49, 1e-12);
}

TEST(Mspe, MatchesDoubleLoopQuadrature) {
  const Grid g = make_uniform_grid(37, -1.0, 2.0);
  FunctionalSample a = random_smooth(6, g, 2), b = random_smooth(6, g, 3);
  double total = 0.0;
  for (Index i = 0; i < 6; ++i) {
    double s = 0.0;
    for (Index j = 0; j + 1 < 37; ++j) {
      const double d0 = a.values()(i, j) - b.values()(i, j);
      const double d1 = a.values()(i, j + 1) - b.values()(i, j + 1);
      s += 0.5 * (g.points()(j + 1) - g.points()(j)) * (d0 * d0 + d1 * d1);
    }
    total += s;
  }
  EXPECT_NEAR(mspe(a, b), total / 6.0, 1e-12);
  EXPECT_THROW(mspe(a, random_smooth(5, g, 4)), DataError);
}

TEST(Cpd, HandCases) {
  const Grid g = make_uniform_grid(2, 0.0, 1.0);
  Matrix y(2, 2);
  y << 0, 0, 0, 0;
  FunctionalSample ys(y, g);
  EXPECT_NEAR(cpd(band_of(Matrix::Constant(2, 2, -1), Matrix::Constant(2, 2, 1), g, 0.05), ys, 0.05), 0.05, 1e-12);
  EXPECT_NEAR(cpd(band_of(Matrix::Constant(2, 2, 1), Matrix::Constant(2, 2, 2), g, 0.05), ys, 0.05), 0.95, 1e-12);
  Matrix lo(2, 2), hi(2, 2);
  lo << -1, 1, -1, 1;
  hi << 1, 2, 1, 2;
  EXPECT_NEAR(cpd(band_of(lo, hi, g, 0.1), ys, 0.1), 0.40, 1e-12);
}

TEST(IntervalScore, HandCases) {
  const Grid g = make_uniform_grid(101, 0.0, 1.0);
  FunctionalSample y(Matrix::Zero(3, 101), g);
  EXPECT_NEAR(interval_score(band_of(Matrix::Constant(3, 101, -0.25), Matrix::Constant(3, 101, 0.5), g, 0.05), y,
                             0.05),
              0.75, 1e-12);
  EXPECT_NEAR(interval_score(band_of(Matrix::Zero(3, 101), Matrix::Zero(3, 101), g, 0.05), y, 0.05), 0.0, 1e-12);
}

TEST(IntervalScore, ExceedanceRegionMatchesPointwiseFormula) {
  const Grid g = make_uniform_grid(41, 0.0, 1.0);
  const double alpha = 0.2;
  Matrix yv(1, 41), lo = Matrix::Constant(1, 41, -1.0), hi = Matrix::Constant(1, 41, 1.0);
  for (Index j = 0; j < 41; ++j) yv(0, j) = 3.0 * g.points()(j) - 1.0;  // exceeds above t = 2/3
  double sq = 0.0;
  Vector f(41);
  for (Index j = 0; j < 41; ++j) f(j) = 2.0 + (yv(0, j) > 1.0 ? (2.0 / alpha) * (yv(0, j) - 1.0) : 0.0);
  for (Index j = 0; j + 1 < 41; ++j) sq += 0.5 * (g.points()(j + 1) - g.points()(j)) * (f(j) * f(j) + f(j + 1) * f(j + 1));
  EXPECT_NEAR(interval_score(band_of(lo, hi, g, alpha), FunctionalSample(yv, g), alpha), std::sqrt(sq), 1e-12);
}

TEST(IntervalScore, BoundedBelowByWidthAndImprovesTowardBand) {
  const Grid g = make_uniform_grid(21, 0.0, 1.0);
  Matrix lo = Matrix::Constant(1, 21, -1.0), hi = Matrix::Constant(1, 21, 1.0);
  auto band = band_of(lo, hi, g, 0.1);
  double prev = std::numeric_limits<double>::infinity();
  for (double level : {4.0, 3.0, 2.0, 1.5}) {
    const double s = interval_score(band, FunctionalSample(Matrix::Constant(1, 21, level), g), 0.1);
    EXPECT_GE(s, 2.0 - 1e-12);
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(Quantile, TypeSeven) {
  const std::vector<double> two{1.0, 3.0};
  EXPECT_DOUBLE_EQ(quantile_type7(two, 0.25), 1.5);
  EXPECT_DOUBLE_EQ(quantile_type7(two, 0.75), 2.5);
  const std::vector<double> five{1, 2, 3, 4, 10};
  EXPECT_DOUBLE_EQ(quantile_type7(five, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_type7(five, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(quantile_type7(five, 0.9), 7.6);
}

TEST(BandFromReplicates, TwoReplicates) {
  BootstrapReplicates reps;
  reps.grid = make_uniform_grid(2, 0.0, 1.0);
  reps.predictions = {Matrix::Constant(1, 2, 0.0), Matrix::Constant(1, 2, 4.0)};
  auto band = band_from_replicates(reps, 0.5);
  EXPECT_DOUBLE_EQ(band.lower(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(band.upper(0, 1), 3.0);
}

TEST(BootstrapBand, DeterministicForFixedSeed) {
  auto d = noisy_linear(40, 11);
  ModelSpec spec;
  spec.k_y = 2;
  spec.k_x = 2;
  auto a = bootstrap_band(spec, d.y, d.x, d.x_test, 0.05, 30, 7);
  auto b = bootstrap_band(spec, d.y, d.x, d.x_test, 0.05, 30, 7, 3);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
  auto c = bootstrap_band(spec, d.y, d.x, d.x_test, 0.05, 30, 8);
  EXPECT_NE(a.lower, c.lower);
  EXPECT_EQ(a.replicates_used + a.replicates_failed, 30);
}

TEST(BootstrapBand, NarrowerBandNestedInWider) {
  auto d = noisy_linear(40, 13);
  for (Method m : {Method::fflqr, Method::fpc_ls, Method::bspline_ls}) {
    ModelSpec spec;
    spec.method = m;
    spec.n_basis = 8;
    auto reps = bootstrap_predictions(spec, d.y, d.x, d.x_test, 40, 3);
    auto wide = band_from_replicates(reps, 0.05);
    auto narrow = band_from_replicates(reps, 0.2);
    EXPECT_TRUE((narrow.lower.array() >= wide.lower.array()).all());
    EXPECT_TRUE((narrow.upper.array() <= wide.upper.array()).all());
    EXPECT_TRUE((wide.lower.array() <= wide.upper.array()).all());
  }
}

TEST(BootstrapBand, IdenticalTrainingRowsGiveZeroWidth) {
  const Grid g = make_uniform_grid(20, 0.0, 1.0);
  Matrix xv = random_smooth(1, g, 17).values().replicate(12, 1);
  Matrix yv = random_smooth(1, g, 18).values().replicate(12, 1);
  ModelSpec spec;
  spec.method = Method::bspline_ls;
  spec.n_basis = 6;
  PredictorList x_test{FunctionalSample(xv.topRows(3), g)};
  auto band = bootstrap_band(spec, FunctionalSample(yv, g), {FunctionalSample(xv, g)}, x_test, 0.05, 10, 1);
  EXPECT_LT((band.upper - band.lower).cwiseAbs().maxCoeff(), 1e-10);
  const Matrix common = predict(fit_model(spec, FunctionalSample(yv, g), {FunctionalSample(xv, g)}), x_test).values();
  EXPECT_LT((band.lower - common).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BootstrapBand, RejectsBadArguments) {
  auto d = noisy_linear(20, 19);
  ModelSpec spec;
  EXPECT_THROW(bootstrap_band(spec, d.y, d.x, d.x_test, 0.05, 1, 1), ConfigError);
  EXPECT_THROW(bootstrap_band(spec, d.y, d.x, d.x_test, 1.0, 10, 1), ConfigError);
}

TEST(DirectBand, OrderedAndCoversMostPointsOnDeskData) {
  SimConfig config;
  const SimulatedData d = simulate_dataset(config, 2024);
  const std::vector<int> ids{2, 4, 5};
  const PredictorList x = select_predictors(d.x_train, ids);
  const auto k = select_truncation(d.y_train, x, 0.5, 5, 5, Estimator::quantile, ids);
  auto band = direct_band(d.y_train, x, select_predictors(d.x_test, ids), 0.05, k.k_y, k.k_x, ids);
  EXPECT_TRUE((band.lower.array() <= band.upper.array()).all());
  EXPECT_GE(coverage(band, d.y_test), 0.8);
}

TEST(DirectBand, NoiselessDataGivesNarrowBand) {
  const Grid g = make_uniform_grid(30, 0.0, 1.0);
  FunctionalSample x = random_smooth(60, g, 37);
  const FpcBasis psi = fpc_decompose(x, 2).basis;
  FunctionalSample y(x.values() * g.weights().asDiagonal() * psi.eigenfunctions.transpose() * psi.eigenfunctions, g);
  auto band = direct_band(y, {x}, {random_smooth(10, g, 38)}, 0.1, 2, 2);
  EXPECT_LT((band.upper - band.lower).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Cpd, RangeProperty) {
  const Grid g = make_uniform_grid(15, 0.0, 1.0);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix lo(4, 15), hi(4, 15), y(4, 15);
    for (Index i = 0; i < lo.size(); ++i) {
      const double a = nd(rng), b = nd(rng);
      lo(i) = std::min(a, b);
      hi(i) = std::max(a, b);
      y(i) = nd(rng);
    }
    for (double alpha : {0.05, 0.3}) {
      const double v = cpd(band_of(lo, hi, g, alpha), FunctionalSample(y, g), alpha);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, std::max(1.0 - alpha, alpha));
    }
  }
}
