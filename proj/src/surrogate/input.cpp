#include "flowgrad/surrogate/input.hpp"

#include <stdexcept>

namespace flowgrad {

BuildInputComponent::BuildInputComponent(Vec3i window_dims, double sdf_scale,
                                         MaskMode mode,
                                         double mask_temperature)
    : dims_(window_dims),
      sdf_scale_(sdf_scale),
      mode_(mode),
      k_(mask_temperature) {
  if (!(sdf_scale > 0.0))
    throw std::invalid_argument("build-input: sdf scale must be > 0, got " +
                                std::to_string(sdf_scale));
  if (mode == MaskMode::sigmoid && !(mask_temperature > 0.0))
    throw std::invalid_argument(
        "build-input: sigmoid mask needs temperature > 0, got " +
        std::to_string(mask_temperature));
}

std::vector<int> BuildInputComponent::input_shape() const {
  return {static_cast<int>(dims_.x()), static_cast<int>(dims_.y()),
          static_cast<int>(dims_.z())};
}

std::vector<int> BuildInputComponent::output_shape() const {
  return {UNetConfig::kInputChannels, static_cast<int>(dims_.x()),
          static_cast<int>(dims_.y()), static_cast<int>(dims_.z())};
}

Signal BuildInputComponent::forward(const Signal& in) const {
  check_input(in);
  const std::int64_t n = in.size();
  Eigen::VectorXd out(UNetConfig::kInputChannels * n);
  fill_enriched_input<double>(in.values.data(), dims_, sdf_scale_, mode_, k_,
                              out.data());
  return Signal(output_shape(), std::move(out));
}

Signal BuildInputComponent::vjp(const Signal& in,
                                const Signal& cotangent) const {
  check_input(in);
  check_cotangent(cotangent);
  const std::int64_t n = in.size();
  Eigen::VectorXd grad(n);
  for (std::int64_t at = 0; at < n; ++at)
    grad[at] = cotangent.values[at] / sdf_scale_ +
               cotangent.values[7 * n + at] *
                   mask_derivative(in.values[at], mode_, k_);
  return Signal(input_shape(), std::move(grad));
}

}  // namespace flowgrad
