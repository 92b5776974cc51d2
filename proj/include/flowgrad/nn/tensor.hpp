#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowgrad::nn {

/// Dense n-dimensional array in row-major layout (last listed axis fastest),
/// templated on the arithmetic scalar: float for training, double for the
/// finite-difference test mode. Gradient storage is allocated lazily the
/// first time a backward pass reaches the tensor.
template <typename S>
struct Tensor {
  using Array = Eigen::Array<S, Eigen::Dynamic, 1>;

  std::vector<int> shape;
  Array values;
  Array grad;  // empty until ensure_grad(); same length as values afterwards
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<int> shape_, Array values_)
      : shape(std::move(shape_)), values(std::move(values_)) {
    if (values.size() != numel_of(shape))
      throw std::invalid_argument("Tensor: values length " +
                                  std::to_string(values.size()) +
                                  " does not match shape");
  }

  static std::int64_t numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim");
      n *= d;
    }
    return n;
  }

  std::int64_t numel() const { return values.size(); }
  int dim(int axis) const { return shape[static_cast<size_t>(axis)]; }

  void ensure_grad() {
    if (grad.size() != values.size()) grad = Array::Zero(values.size());
  }
};

template <typename S>
using TensorPtr = std::shared_ptr<Tensor<S>>;

template <typename S>
TensorPtr<S> make_tensor(std::vector<int> shape,
                         typename Tensor<S>::Array values,
                         bool requires_grad = false) {
  auto t = std::make_shared<Tensor<S>>(std::move(shape), std::move(values));
  t->requires_grad = requires_grad;
  return t;
}

template <typename S>
TensorPtr<S> zeros(std::vector<int> shape, bool requires_grad = false) {
  auto n = Tensor<S>::numel_of(shape);
  return make_tensor<S>(std::move(shape), Tensor<S>::Array::Zero(n),
                        requires_grad);
}

template <typename S>
TensorPtr<S> full(std::vector<int> shape, S value, bool requires_grad = false) {
  auto n = Tensor<S>::numel_of(shape);
  return make_tensor<S>(std::move(shape), Tensor<S>::Array::Constant(n, value),
                        requires_grad);
}

inline std::string shape_string(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

/// Ordered record of the primitive operations of one forward pass. Creation
/// order is a topological order (an op can only consume already existing
/// tensors), so the backward pass simply walks the record in reverse and
/// lets each entry accumulate into its inputs' gradients; fan-out adds up
/// naturally through repeated `+=`.
template <typename S>
class Tape {
 public:
  void record(std::function<void()> backward_fn) {
    entries_.push_back(std::move(backward_fn));
  }

  /// Seeds `output`'s gradient with `cotangent` (ones for a scalar loss when
  /// omitted) and runs every recorded backward step in reverse order.
  void backward(const TensorPtr<S>& output,
                const typename Tensor<S>::Array* cotangent = nullptr) {
    output->ensure_grad();
    if (cotangent) {
      if (cotangent->size() != output->numel())
        throw std::invalid_argument("Tape::backward: cotangent length " +
                                    std::to_string(cotangent->size()) +
                                    " vs output " +
                                    std::to_string(output->numel()));
      output->grad += *cotangent;
    } else {
      if (output->numel() != 1)
        throw std::invalid_argument(
            "Tape::backward: implicit seed requires a scalar output, got " +
            shape_string(output->shape));
      output->grad += Tensor<S>::Array::Ones(1);
    }
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  }

  void clear() { entries_.clear(); }
  size_t size() const { return entries_.size(); }

 private:
  std::vector<std::function<void()>> entries_;
};

}  // namespace flowgrad::nn
