#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "flowgrad/nn/tensor.hpp"

namespace flowgrad::nn {

/// Bias-corrected Adam over a fixed list of parameter tensors. Moments are
/// allocated on the first step and stay aligned with the parameter order.
template <typename S>
struct AdamState {
  S learning_rate = S(1.5e-4);
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  long t = 0;
  std::vector<typename Tensor<S>::Array> m, v;
};

template <typename S>
void adam_step(AdamState<S>& state, const std::vector<TensorPtr<S>>& params) {
  if (state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const auto& p : params) {
      state.m.push_back(Tensor<S>::Array::Zero(p->numel()));
      state.v.push_back(Tensor<S>::Array::Zero(p->numel()));
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state tracks " +
                                std::to_string(state.m.size()) +
                                " tensors, got " +
                                std::to_string(params.size()));
  ++state.t;
  const S c1 = S(1) - std::pow(state.beta1, S(state.t));
  const S c2 = S(1) - std::pow(state.beta2, S(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (state.m[i].size() != p.numel())
      throw std::invalid_argument("adam_step: tensor " + std::to_string(i) +
                                  " changed size");
    p.ensure_grad();  // an untouched gradient counts as zero
    state.m[i] = state.beta1 * state.m[i] + (S(1) - state.beta1) * p.grad;
    state.v[i] =
        state.beta2 * state.v[i] + (S(1) - state.beta2) * p.grad.square();
    p.values -= state.learning_rate * (state.m[i] / c1) /
                ((state.v[i] / c2).sqrt() + state.eps);
  }
}

}  // namespace flowgrad::nn
