#pragma once

#include <cmath>

#include "flowgrad/field/component.hpp"
#include "flowgrad/surrogate/unet.hpp"

namespace flowgrad {

/// Obstacle-mask value for one SDF sample: hard threshold or the sigmoid
/// relaxation m = sigma(-sdf/k) = 1/(1 + e^{sdf/k}).
inline double mask_value(double sdf, MaskMode mode, double k) {
  if (mode == MaskMode::hard) return sdf < 0.0 ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(sdf / k));
}

/// d mask / d sdf; identically zero in hard mode (the step's subgradient).
inline double mask_derivative(double sdf, MaskMode mode, double k) {
  if (mode == MaskMode::hard) return 0.0;
  const double m = mask_value(sdf, mode, k);
  return -m * (1.0 - m) / k;
}

/// Fills the 8-channel enriched encoding of one SDF window into `out`
/// (channel-major, each channel in grid layout, 8*nx*ny*nz values total):
/// scaled SDF, sin/cos positional channels per axis with normalized node
/// coordinate in [0,1], and the obstacle mask.
template <typename S>
void fill_enriched_input(const double* sdf, const Vec3i& dims,
                         double sdf_scale, MaskMode mode, double k, S* out) {
  const std::int64_t nx = dims.x(), ny = dims.y(), nz = dims.z();
  const std::int64_t n = nx * ny * nz;
  const double inv_scale = 1.0 / sdf_scale;
  auto coord = [](std::int64_t i, std::int64_t dim) {
    return dim > 1 ? 2.0 * M_PI * static_cast<double>(i) /
                         static_cast<double>(dim - 1)
                   : 0.0;
  };
  std::int64_t at = 0;
  for (std::int64_t kk = 0; kk < nz; ++kk)
    for (std::int64_t j = 0; j < ny; ++j)
      for (std::int64_t i = 0; i < nx; ++i, ++at) {
        out[at] = static_cast<S>(sdf[at] * inv_scale);
        out[1 * n + at] = static_cast<S>(std::sin(coord(i, nx)));
        out[2 * n + at] = static_cast<S>(std::cos(coord(i, nx)));
        out[3 * n + at] = static_cast<S>(std::sin(coord(j, ny)));
        out[4 * n + at] = static_cast<S>(std::cos(coord(j, ny)));
        out[5 * n + at] = static_cast<S>(std::sin(coord(kk, nz)));
        out[6 * n + at] = static_cast<S>(std::cos(coord(kk, nz)));
        out[7 * n + at] = static_cast<S>(mask_value(sdf[at], mode, k));
      }
}

/// Differentiable stage mapping a window SDF (shape {nx,ny,nz}) to the
/// 8-channel enriched network input (shape {8,nx,ny,nz}, channel-major).
/// Only the SDF and mask channels carry gradient; the positional encodings
/// are constants of the window geometry.
class BuildInputComponent final : public DiffComponent {
 public:
  BuildInputComponent(Vec3i window_dims, double sdf_scale, MaskMode mode,
                      double mask_temperature);

  const std::string& name() const override { return name_; }
  std::vector<int> input_shape() const override;
  std::vector<int> output_shape() const override;

  Signal forward(const Signal& in) const override;
  Signal vjp(const Signal& in, const Signal& cotangent) const override;

  double sdf_scale() const { return sdf_scale_; }

 private:
  Vec3i dims_;
  double sdf_scale_;
  MaskMode mode_;
  double k_;
  std::string name_ = "build-input";
};

}  // namespace flowgrad
