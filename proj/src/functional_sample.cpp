#include "fflqr/functional_sample.hpp"

#include <string>

#include "fflqr/errors.hpp"

namespace fflqr {

FunctionalSample::FunctionalSample(Matrix values, Grid grid) : values_(std::move(values)), grid_(std::move(grid)) {
  if (values_.cols() != grid_.size())
    throw DataError("functional sample has " + std::to_string(values_.cols()) + " columns but grid has " +
                    std::to_string(grid_.size()) + " points");
  if (!values_.allFinite()) throw DataError("functional sample contains non-finite values");
}

FunctionalSample FunctionalSample::rows(const std::vector<Index>& idx) const {
  Matrix out(static_cast<Index>(idx.size()), p());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= n()) throw DataError("row index out of range");
    out.row(static_cast<Index>(r)) = values_.row(idx[r]);
  }
  return FunctionalSample(std::move(out), grid_);
}

FunctionalSample FunctionalSample::slice(Index first, Index count) const {
  if (first < 0 || count < 0 || first + count > n()) throw DataError("row slice out of range");
  return FunctionalSample(values_.middleRows(first, count), grid_);
}

std::pair<FunctionalSample, Vector> center(const FunctionalSample& sample) {
  if (sample.n() < 1) throw DataError("center: empty sample");
  Vector mean = sample.values().colwise().mean().transpose();
  Matrix centered = sample.values().rowwise() - mean.transpose();
  return {FunctionalSample(std::move(centered), sample.grid()), std::move(mean)};
}

}  // namespace fflqr
