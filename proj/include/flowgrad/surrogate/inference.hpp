#pragma once

#include <filesystem>
#include <memory>

#include "flowgrad/field/component.hpp"
#include "flowgrad/surrogate/unet.hpp"

namespace flowgrad {

/// Trained network as a differentiable stage: enriched input (shape
/// {8,nx,ny,nz}, channel-major) to a de-normalized velocity field (shape
/// {nx,ny,nz,3}, 3-interleaved per node). The vjp replays the forward pass
/// on a fresh tape and backpropagates the cotangent to the input channels;
/// network weights are frozen (no gradient state is touched), so one
/// instance can serve concurrent calls. Checkpoints load as float; the
/// double instantiation backs 64-bit finite-difference tests.
template <typename S>
class NetComponentT final : public DiffComponent {
 public:
  NetComponentT(std::shared_ptr<const UNet<S>> net, Vec3i window_dims,
                double v_max);

  const std::string& name() const override { return name_; }
  std::vector<int> input_shape() const override;
  std::vector<int> output_shape() const override;

  Signal forward(const Signal& in) const override;
  Signal vjp(const Signal& in, const Signal& cotangent) const override;

  double v_max() const { return v_max_; }

 private:
  std::shared_ptr<const UNet<S>> net_;
  Vec3i dims_;
  double v_max_;
  std::string name_ = "unet-inference";
};

using NetComponent = NetComponentT<float>;

extern template class NetComponentT<float>;
extern template class NetComponentT<double>;

/// Everything loaded from a training checkpoint, ready to assemble into
/// pipelines.
struct LoadedSurrogate {
  UNetConfig config;
  std::shared_ptr<const UNet<float>> net;
  double v_max = 0.0;
  double sdf_scale = 0.0;
  std::uint64_t split_seed = 0;
};

LoadedSurrogate load_surrogate(const std::filesystem::path& checkpoint_path);

/// SDF window -> velocity window: the enriched-input builder chained with
/// the frozen network.
DiffComponentPtr inference_component(const LoadedSurrogate& surrogate,
                                     const Vec3i& window_dims);

}  // namespace flowgrad
