#pragma once

#include "flowgrad/field/grid.hpp"

namespace flowgrad {

/// Pearson outcome with the degenerate (zero-variance) case flagged instead
/// of raised: constant prediction or constant error fields occur routinely
/// on synthetic inputs and early training snapshots.
struct CorrResult {
  double value = 0.0;
  bool degenerate = false;
};

/// Pearson correlation of two equally sized series.
CorrResult pearson(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b);

/// Correlation between the spatial gradient magnitude of the absolute
/// prediction error and the predicted speed. Error per node is the magnitude
/// of the velocity-vector error; its gradient uses one-sided nearest-neighbor
/// differences (forward everywhere, backward at the trailing face).
CorrResult error_gradient_corr(const VectorField3& pred,
                               const VectorField3& target);

}  // namespace flowgrad
