#include "fflqr/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fflqr/errors.hpp"

namespace fflqr {

namespace {

constexpr double kRelativeEigenFloor = 1e-10;

// Flip so that the entry of largest magnitude is positive.
void fix_sign(Eigen::Ref<Vector> v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
}

}  // namespace

FpcBasis FpcBasis::truncated(Index k) const {
  if (k < 0 || k > components()) throw ConfigError("FpcBasis::truncated: k out of range");
  FpcBasis out{mean, eigenfunctions.topRows(k), eigenvalues.head(k), grid, false};
  out.beyond_numerical_rank = (k > 0) && (eigenvalues.head(k).array() <= 0.0).any();
  return out;
}

Index max_components(const FunctionalSample& sample) { return std::min(sample.n() - 1, sample.p()); }

FpcDecomposition fpc_decompose(const FunctionalSample& sample, Index k) {
  const Index n = sample.n();
  const Index p = sample.p();
  if (n < 2) throw DataError("fpc_decompose: need at least 2 curves");
  if (k < 1 || k > max_components(sample))
    throw ConfigError("fpc_decompose: K=" + std::to_string(k) + " outside [1, min(n-1, p)=" +
                      std::to_string(max_components(sample)) + "]");
  const Vector& w = sample.grid().weights();
  if ((w.array() <= 0.0).any()) throw DataError("fpc_decompose: quadrature weights must be positive");

  auto [centered, mean] = center(sample);
  const Vector sqrt_w = w.cwiseSqrt();

  // Z^T Z = W^{1/2} C W^{1/2} with C the 1/n covariance; its right singular
  // vectors are the symmetrized eigenvectors of the covariance operator.
  const Matrix z = (centered.values() * sqrt_w.asDiagonal()) / std::sqrt(static_cast<double>(n));
  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();

  FpcBasis basis;
  basis.mean = mean;
  basis.grid = sample.grid();
  basis.eigenfunctions.resize(k, p);
  basis.eigenvalues.resize(k);

  const double leading = sv.size() > 0 ? sv(0) * sv(0) : 0.0;
  for (Index c = 0; c < k; ++c) {
    Vector phi = svd.matrixV().col(c).cwiseQuotient(sqrt_w);
    fix_sign(phi);
    basis.eigenfunctions.row(c) = phi.transpose();
    double lambda = sv(c) * sv(c);
    if (!(lambda >= kRelativeEigenFloor * leading) || leading <= 0.0) {
      lambda = 0.0;
      basis.beyond_numerical_rank = true;
    }
    basis.eigenvalues(c) = lambda;
  }

  ScoreMatrix scores = centered.values() * w.asDiagonal() * basis.eigenfunctions.transpose();
  return {std::move(basis), std::move(scores)};
}

ScoreMatrix project(const FpcBasis& basis, const FunctionalSample& sample) {
  if (!sample.grid().matches(basis.grid, 1e-10))
    throw DataError("project: sample grid does not match the basis grid");
  const Matrix centered = sample.values().rowwise() - basis.mean.transpose();
  return centered * basis.grid.weights().asDiagonal() * basis.eigenfunctions.transpose();
}

FunctionalSample reconstruct(const FpcBasis& basis, const ScoreMatrix& scores) {
  if (scores.cols() != basis.components())
    throw DataError("reconstruct: score columns (" + std::to_string(scores.cols()) +
                    ") differ from basis components (" + std::to_string(basis.components()) + ")");
  Matrix values = scores * basis.eigenfunctions;
  values.rowwise() += basis.mean.transpose();
  return FunctionalSample(std::move(values), basis.grid);
}

}  // namespace fflqr
