#include "flowgrad/field/component.hpp"

#include <cmath>
#include <stdexcept>

#include "flowgrad/field/crop.hpp"

namespace flowgrad {

void DiffComponent::check_input(const Signal& in) const {
  if (in.size() != shape_numel(input_shape()))
    throw std::invalid_argument(name() + ": input has " +
                                std::to_string(in.size()) +
                                " values, expected shape " +
                                shape_to_string(input_shape()));
}

void DiffComponent::check_cotangent(const Signal& cot) const {
  if (cot.size() != shape_numel(output_shape()))
    throw std::invalid_argument(name() + ": cotangent has " +
                                std::to_string(cot.size()) +
                                " values, expected shape " +
                                shape_to_string(output_shape()));
}

ChainComponent::ChainComponent(std::vector<DiffComponentPtr> stages)
    : stages_(std::move(stages)) {
  if (stages_.empty())
    throw std::invalid_argument("chain: needs at least one component");
  name_ = "chain(";
  for (size_t i = 0; i < stages_.size(); ++i) {
    if (i) name_ += "|";
    name_ += stages_[i]->name();
  }
  name_ += ")";
}

std::vector<int> ChainComponent::input_shape() const {
  return stages_.front()->input_shape();
}

std::vector<int> ChainComponent::output_shape() const {
  return stages_.back()->output_shape();
}

Signal ChainComponent::forward(const Signal& in) const {
  Signal cur = in;
  for (const auto& stage : stages_) cur = stage->forward(cur);
  return cur;
}

Signal ChainComponent::vjp(const Signal& in, const Signal& cotangent) const {
  // Rebuild the primal trajectory, then pull the cotangent back stage by
  // stage in reverse.
  std::vector<Signal> inputs;
  inputs.reserve(stages_.size());
  Signal cur = in;
  for (const auto& stage : stages_) {
    inputs.push_back(cur);
    cur = stage->forward(cur);
  }
  Signal cot = cotangent;
  for (size_t i = stages_.size(); i-- > 0;)
    cot = stages_[i]->vjp(inputs[i], cot);
  return cot;
}

DiffComponentPtr chain(std::vector<DiffComponentPtr> components) {
  for (size_t i = 0; i + 1 < components.size(); ++i) {
    if (components[i]->output_shape() != components[i + 1]->input_shape())
      throw std::invalid_argument(
          "chain: shape mismatch between '" + components[i]->name() +
          "' (output " + shape_to_string(components[i]->output_shape()) +
          ") and '" + components[i + 1]->name() + "' (input " +
          shape_to_string(components[i + 1]->input_shape()) + ")");
  }
  return std::make_shared<ChainComponent>(std::move(components));
}

Vec3i negative_region_window(const ScalarField3& field,
                             const Vec3i& window_dims) {
  const Vec3i& dims = field.spec.dims;
  Eigen::Vector3d centroid_idx;
  std::int64_t count = 0;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  std::int64_t n = 0;
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i, ++n)
        if (field.values[n] < 0.0) {
          acc += Eigen::Vector3d(i, j, k);
          ++count;
        }
  if (count > 0)
    centroid_idx = acc / double(count);
  else
    centroid_idx = (dims.cast<double>() - Eigen::Vector3d::Ones()) / 2.0;

  Vec3i start;
  for (int a = 0; a < 3; ++a) {
    int c = int(std::lround(centroid_idx[a]));
    int s = c - window_dims[a] / 2;
    if (s < 0) s = 0;
    if (s + window_dims[a] > dims[a]) s = dims[a] - window_dims[a];
    if (s < 0)
      throw std::out_of_range("negative_region_window: window larger than grid on axis " +
                              std::to_string(a));
    start[a] = s;
  }
  return start;
}

CenteredCropComponent::CenteredCropComponent(Vec3i src_dims, Vec3i window_dims)
    : src_dims_(src_dims), window_dims_(window_dims) {
  for (int a = 0; a < 3; ++a)
    if (window_dims_[a] < 2 || window_dims_[a] > src_dims_[a])
      throw std::invalid_argument("centered-crop: window does not fit source grid");
}

std::vector<int> CenteredCropComponent::input_shape() const {
  return {src_dims_[0], src_dims_[1], src_dims_[2]};
}

std::vector<int> CenteredCropComponent::output_shape() const {
  return {window_dims_[0], window_dims_[1], window_dims_[2]};
}

Vec3i CenteredCropComponent::window_origin_for(const Signal& in) const {
  check_input(in);
  ScalarField3 f(GridSpec(Vec3::Zero(), Vec3::Ones(), src_dims_),
                 in.values.array());
  return negative_region_window(f, window_dims_);
}

Signal CenteredCropComponent::forward(const Signal& in) const {
  check_input(in);
  ScalarField3 f(GridSpec(Vec3::Zero(), Vec3::Ones(), src_dims_),
                 in.values.array());
  const Vec3i start = negative_region_window(f, window_dims_);
  ScalarField3 w = crop_to_window(f, start, window_dims_);
  return Signal(output_shape(), w.values.matrix());
}

Signal CenteredCropComponent::vjp(const Signal& in, const Signal& cotangent) const {
  check_input(in);
  check_cotangent(cotangent);
  ScalarField3 f(GridSpec(Vec3::Zero(), Vec3::Ones(), src_dims_),
                 in.values.array());
  const Vec3i start = negative_region_window(f, window_dims_);
  Eigen::ArrayXd scattered =
      crop_scatter(cotangent.values.array(), src_dims_, start, window_dims_);
  return Signal(input_shape(), scattered.matrix());
}

MeanComponentQoI::MeanComponentQoI(Vec3i dims, int component)
    : dims_(dims), component_(component) {
  if (component < 0 || component > 2)
    throw std::invalid_argument("mean-qoi: component must be 0, 1, or 2");
  name_ = std::string("mean-U") + "xyz"[component];
}

std::vector<int> MeanComponentQoI::input_shape() const {
  return {dims_[0], dims_[1], dims_[2], 3};
}

Signal MeanComponentQoI::forward(const Signal& in) const {
  check_input(in);
  const std::int64_t n = in.size() / 3;
  double acc = 0.0;
  for (std::int64_t node = 0; node < n; ++node)
    acc += in.values[3 * node + component_];
  return Signal::scalar(acc / double(n));
}

Signal MeanComponentQoI::vjp(const Signal& in, const Signal& cotangent) const {
  check_input(in);
  check_cotangent(cotangent);
  const std::int64_t n = in.size() / 3;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(in.size());
  const double g = cotangent.values[0] / double(n);
  for (std::int64_t node = 0; node < n; ++node)
    grad[3 * node + component_] = g;
  return Signal(input_shape(), std::move(grad));
}

}  // namespace flowgrad
