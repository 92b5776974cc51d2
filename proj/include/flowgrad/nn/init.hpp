#pragma once

#include <cmath>
#include <random>

#include "flowgrad/nn/tensor.hpp"
#include "flowgrad/rng.hpp"

namespace flowgrad::nn {

/// Fan-in uniform initialization: draws from [-b, b] with b = sqrt(6/fan_in),
/// which reproduces the He variance 2/fan_in. The draw count and order are
/// part of the reproducibility contract, so all scalars come from the shared
/// portable generator.
template <typename S>
void fan_in_uniform(Tensor<S>& t, std::int64_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t.values[i] = static_cast<S>(bound * (2.0 * unit_draw(rng) - 1.0));
}

}  // namespace flowgrad::nn
