#pragma once

#include <utility>
#include <vector>

#include "fflqr/grid.hpp"

namespace fflqr {

/// n curves evaluated on a shared grid, one curve per row.
class FunctionalSample {
 public:
  FunctionalSample() = default;
  FunctionalSample(Matrix values, Grid grid);

  const Matrix& values() const noexcept { return values_; }
  const Grid& grid() const noexcept { return grid_; }
  Index n() const noexcept { return values_.rows(); }
  Index p() const noexcept { return values_.cols(); }

  /// Rows picked by index, duplicates allowed (bootstrap resampling).
  FunctionalSample rows(const std::vector<Index>& idx) const;

  /// Contiguous block of rows [first, first + count).
  FunctionalSample slice(Index first, Index count) const;

 private:
  Matrix values_;
  Grid grid_;
};

using PredictorList = std::vector<FunctionalSample>;

/// Removes the pointwise sample mean. Returns the centered sample and the mean.
std::pair<FunctionalSample, Vector> center(const FunctionalSample& sample);

}  // namespace fflqr
