#include "flowgrad/surrogate/inference.hpp"

#include "flowgrad/nn/checkpoint.hpp"
#include "flowgrad/surrogate/input.hpp"

namespace flowgrad {

namespace {

// Freezing the weights keeps backward passes from allocating or mutating
// gradient buffers on the shared network, which both skips useless work and
// makes concurrent vjp calls safe.
void freeze(UNet<float>& net) {
  for (const auto& p : net.parameters()) p->requires_grad = false;
}

}  // namespace

template <typename S>
NetComponentT<S>::NetComponentT(std::shared_ptr<const UNet<S>> net,
                                Vec3i window_dims, double v_max)
    : net_(std::move(net)), dims_(window_dims), v_max_(v_max) {
  if (!net_) throw std::invalid_argument("unet-inference: null network");
  if (!(v_max > 0.0))
    throw std::invalid_argument("unet-inference: v_max must be > 0, got " +
                                std::to_string(v_max));
  for (const auto& p : net_->parameters())
    if (p->requires_grad)
      throw std::invalid_argument(
          "unet-inference: network weights must be frozen");
}

template <typename S>
std::vector<int> NetComponentT<S>::input_shape() const {
  return {UNetConfig::kInputChannels, static_cast<int>(dims_.x()),
          static_cast<int>(dims_.y()), static_cast<int>(dims_.z())};
}

template <typename S>
std::vector<int> NetComponentT<S>::output_shape() const {
  return {static_cast<int>(dims_.x()), static_cast<int>(dims_.y()),
          static_cast<int>(dims_.z()), 3};
}

template <typename S>
Signal NetComponentT<S>::forward(const Signal& in) const {
  check_input(in);
  const std::int64_t n =
      static_cast<std::int64_t>(dims_.x()) * dims_.y() * dims_.z();
  auto input = nn::make_tensor<S>(
      {1, UNetConfig::kInputChannels, static_cast<int>(dims_.z()),
       static_cast<int>(dims_.y()), static_cast<int>(dims_.x())},
      in.values.cast<S>().array());
  nn::Tape<S> tape;
  auto out = net_->forward(tape, input);

  Eigen::VectorXd velocity(3 * n);
  for (int c = 0; c < 3; ++c)
    for (std::int64_t at = 0; at < n; ++at)
      velocity[3 * at + c] =
          static_cast<double>(out->values[c * n + at]) * v_max_;
  return Signal(output_shape(), std::move(velocity));
}

template <typename S>
Signal NetComponentT<S>::vjp(const Signal& in, const Signal& cotangent) const {
  check_input(in);
  check_cotangent(cotangent);
  const std::int64_t n =
      static_cast<std::int64_t>(dims_.x()) * dims_.y() * dims_.z();
  auto input = nn::make_tensor<S>(
      {1, UNetConfig::kInputChannels, static_cast<int>(dims_.z()),
       static_cast<int>(dims_.y()), static_cast<int>(dims_.x())},
      in.values.cast<S>().array(), /*requires_grad=*/true);
  nn::Tape<S> tape;
  auto out = net_->forward(tape, input);

  typename nn::Tensor<S>::Array seed(3 * n);
  for (int c = 0; c < 3; ++c)
    for (std::int64_t at = 0; at < n; ++at)
      seed[c * n + at] = static_cast<S>(cotangent.values[3 * at + c] * v_max_);
  tape.backward(out, &seed);

  return Signal(input_shape(),
                input->grad.template cast<double>().matrix());
}

template class NetComponentT<float>;
template class NetComponentT<double>;

LoadedSurrogate load_surrogate(const std::filesystem::path& checkpoint_path) {
  const nn::Checkpoint ckpt = nn::read_checkpoint(checkpoint_path);
  LoadedSurrogate out;
  out.config = ckpt.config.at("unet").get<UNetConfig>();
  out.v_max = ckpt.config.at("v_max").get<double>();
  out.sdf_scale = ckpt.config.at("sdf_scale").get<double>();
  out.split_seed = ckpt.config.value("split_seed", std::uint64_t{0});
  auto net = std::make_shared<UNet<float>>(make_unet<float>(out.config, 0));
  load_parameters(*net, ckpt.tensors);
  freeze(*net);
  out.net = net;
  return out;
}

DiffComponentPtr inference_component(const LoadedSurrogate& surrogate,
                                     const Vec3i& window_dims) {
  auto builder = std::make_shared<BuildInputComponent>(
      window_dims, surrogate.sdf_scale, surrogate.config.mask_mode,
      surrogate.config.mask_temperature);
  auto net = std::make_shared<NetComponent>(surrogate.net, window_dims,
                                            surrogate.v_max);
  return chain({builder, net});
}

}  // namespace flowgrad
