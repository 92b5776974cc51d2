#include "flowgrad/surrogate/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace flowgrad {

CorrResult pearson(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("pearson: series lengths differ, " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  if (a.size() < 2)
    throw std::invalid_argument("pearson: need at least 2 points");
  const Eigen::ArrayXd da = a - a.mean();
  const Eigen::ArrayXd db = b - b.mean();
  const double va = (da * da).sum();
  const double vb = (db * db).sum();
  if (va == 0.0 || vb == 0.0) return {0.0, true};
  return {(da * db).sum() / std::sqrt(va * vb), false};
}

CorrResult error_gradient_corr(const VectorField3& pred,
                               const VectorField3& target) {
  if (pred.spec != target.spec)
    throw std::invalid_argument(
        "error_gradient_corr: prediction and target grids differ");
  const GridSpec& spec = pred.spec;
  const std::int64_t nx = spec.dims.x(), ny = spec.dims.y(),
                     nz = spec.dims.z();
  if (nx < 2 || ny < 2 || nz < 2)
    throw std::invalid_argument(
        "error_gradient_corr: need at least 2 nodes per axis, got grid " +
        std::to_string(nx) + "x" + std::to_string(ny) + "x" +
        std::to_string(nz));

  const Eigen::ArrayXd err =
      (target.values - pred.values).colwise().norm().transpose();

  // One-sided difference along one axis: forward everywhere, backward at the
  // last node so every node gets a nearest-neighbor slope.
  auto one_sided = [&](std::int64_t i, std::int64_t n, std::int64_t stride,
                       std::int64_t at, double spacing) {
    if (i + 1 < n) return (err[at + stride] - err[at]) / spacing;
    return (err[at] - err[at - stride]) / spacing;
  };

  Eigen::ArrayXd grad_mag(spec.node_count());
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::int64_t at = spec.index(i, j, k);
        const double gx = one_sided(i, nx, 1, at, spec.spacing.x());
        const double gy = one_sided(j, ny, nx, at, spec.spacing.y());
        const double gz = one_sided(k, nz, nx * ny, at, spec.spacing.z());
        grad_mag[at] = std::sqrt(gx * gx + gy * gy + gz * gz);
      }

  const Eigen::ArrayXd speed = pred.values.colwise().norm().transpose();
  return pearson(grad_mag, speed);
}

}  // namespace flowgrad
