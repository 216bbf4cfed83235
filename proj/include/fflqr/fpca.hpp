#pragma once

#include "fflqr/functional_sample.hpp"

namespace fflqr {

/// Functional principal component basis of a sample covariance.
///
/// Eigenfunctions are stored one per row and are orthonormal under the
/// grid's quadrature weights. Eigenvalues are nonincreasing; values below
/// 1e-10 times the leading eigenvalue are clamped to zero, and
/// `beyond_numerical_rank` is set when any retained component was clamped.
struct FpcBasis {
  Vector mean;
  Matrix eigenfunctions;  // K x p
  Vector eigenvalues;     // K
  Grid grid;
  bool beyond_numerical_rank = false;

  Index components() const noexcept { return eigenfunctions.rows(); }

  /// The leading `k` components.
  FpcBasis truncated(Index k) const;
};

/// Scores of each curve (rows) on each component (columns).
using ScoreMatrix = Matrix;

struct FpcDecomposition {
  FpcBasis basis;
  ScoreMatrix scores;
};

/// Decomposes the discretized covariance (1/n normalization) of `sample` and
/// keeps `k` components. Requires n >= 2 and k <= min(n - 1, p).
FpcDecomposition fpc_decompose(const FunctionalSample& sample, Index k);

/// Largest admissible component count for a sample: min(n - 1, p).
Index max_components(const FunctionalSample& sample);

/// Scores of (possibly new) curves after centering with the basis mean.
ScoreMatrix project(const FpcBasis& basis, const FunctionalSample& sample);

/// mean + scores * eigenfunctions.
FunctionalSample reconstruct(const FpcBasis& basis, const ScoreMatrix& scores);

}  // namespace fflqr
