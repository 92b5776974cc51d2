#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowgrad/nn/init.hpp"
#include "flowgrad/nn/ops.hpp"

namespace flowgrad {

enum class MaskMode { hard, sigmoid };

/// Architecture and input-encoding settings of the velocity surrogate.
/// `channels` lists the feature width per encoder level, deepest last; the
/// decoder mirrors it. Presets: paper-scale 3 levels [64,128,512], desk scale
/// 2 levels [16,32].
struct UNetConfig {
  int levels = 2;
  std::vector<int> channels = {16, 32};
  bool attention = true;
  MaskMode mask_mode = MaskMode::sigmoid;
  double mask_temperature = 0.5;
  int blocks_per_level = 2;
  std::string input_layout = "sdf,sin_x,cos_x,sin_y,cos_y,sin_z,cos_z,mask";

  static constexpr int kInputChannels = 8;
  static constexpr int kOutputChannels = 3;

  void validate() const;
};

UNetConfig paper_unet_config();
UNetConfig desk_unet_config();

void to_json(nlohmann::json& j, const UNetConfig& cfg);
void from_json(const nlohmann::json& j, UNetConfig& cfg);

/// One convolution block: 3x3x3 conv + channel layer norm + GELU. The head
/// block leaves `gamma` null and skips normalization and activation so the
/// output can take either sign.
template <typename S>
struct ConvUnit {
  nn::TensorPtr<S> weight, bias, gamma, beta;
};

template <typename S>
struct UNet {
  UNetConfig cfg;
  std::vector<std::vector<ConvUnit<S>>> encoder;  // [level][block]
  std::vector<std::vector<ConvUnit<S>>> decoder;  // [level][block], < levels-1
  std::vector<nn::AttentionGate<S>> gates;        // per decoder level
  ConvUnit<S> head;

  std::vector<nn::TensorPtr<S>> parameters() const {
    std::vector<nn::TensorPtr<S>> out;
    for (const auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
  }

  std::vector<std::pair<std::string, nn::TensorPtr<S>>> named_parameters()
      const {
    std::vector<std::pair<std::string, nn::TensorPtr<S>>> out;
    auto push_unit = [&out](const std::string& prefix, const ConvUnit<S>& u) {
      out.emplace_back(prefix + ".weight", u.weight);
      out.emplace_back(prefix + ".bias", u.bias);
      if (u.gamma) {
        out.emplace_back(prefix + ".gamma", u.gamma);
        out.emplace_back(prefix + ".beta", u.beta);
      }
    };
    for (size_t l = 0; l < encoder.size(); ++l)
      for (size_t b = 0; b < encoder[l].size(); ++b)
        push_unit("enc" + std::to_string(l) + "." + std::to_string(b),
                  encoder[l][b]);
    for (size_t l = 0; l < decoder.size(); ++l)
      for (size_t b = 0; b < decoder[l].size(); ++b)
        push_unit("dec" + std::to_string(l) + "." + std::to_string(b),
                  decoder[l][b]);
    for (size_t l = 0; l < gates.size(); ++l) {
      const std::string g = "gate" + std::to_string(l);
      out.emplace_back(g + ".w_gate", gates[l].w_gate);
      out.emplace_back(g + ".w_skip", gates[l].w_skip);
      out.emplace_back(g + ".bias", gates[l].bias);
      out.emplace_back(g + ".psi_w", gates[l].psi_w);
      out.emplace_back(g + ".psi_b", gates[l].psi_b);
    }
    push_unit("head", head);
    return out;
  }

  /// Encoder/decoder pass over an [N,8,D,H,W] activation; returns
  /// [N,3,D,H,W]. Spatial dims must stay even through every pooling level.
  nn::TensorPtr<S> forward(nn::Tape<S>& tape, nn::TensorPtr<S> x) const {
    namespace n = nn;
    auto run_unit = [&tape](const ConvUnit<S>& u, const n::TensorPtr<S>& in) {
      auto y = n::conv3d(tape, in, u.weight, u.bias);
      if (u.gamma) y = n::gelu(tape, n::layer_norm(tape, y, u.gamma, u.beta));
      return y;
    };
    std::vector<n::TensorPtr<S>> skips;
    for (int l = 0; l < cfg.levels; ++l) {
      if (l > 0) {
        if (x->dim(2) % 2 || x->dim(3) % 2 || x->dim(4) % 2)
          throw std::invalid_argument(
              "UNet: spatial dims " + nn::shape_string(x->shape) +
              " not divisible by 2 at level " + std::to_string(l));
        skips.push_back(x);
        x = n::maxpool3d(tape, x);
      }
      for (const auto& unit : encoder[l]) x = run_unit(unit, x);
    }
    for (int l = cfg.levels - 2; l >= 0; --l) {
      auto up = n::nearest_upsample2(tape, x);
      auto skip = skips[static_cast<size_t>(l)];
      if (cfg.attention)
        skip = n::attention_gate(tape, gates[static_cast<size_t>(l)], up,
                                 skip);
      x = n::concat_channels(tape, up, skip);
      for (const auto& unit : decoder[static_cast<size_t>(l)])
        x = run_unit(unit, x);
    }
    return n::conv3d(tape, x, head.weight, head.bias);
  }
};

/// Builds a freshly initialized network: fan-in uniform conv weights, zero
/// biases, unit/zero norm parameters, all marked trainable. The draw order
/// follows named_parameters() order, making `seed` the full determinism key.
template <typename S>
UNet<S> make_unet(const UNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  auto conv_unit = [&rng](int c_in, int c_out, bool normed) {
    ConvUnit<S> u;
    u.weight = nn::zeros<S>({c_out, c_in, 3, 3, 3}, true);
    nn::fan_in_uniform(*u.weight, static_cast<std::int64_t>(c_in) * 27, rng);
    u.bias = nn::zeros<S>({c_out}, true);
    if (normed) {
      u.gamma = nn::full<S>({c_out}, S(1), true);
      u.beta = nn::zeros<S>({c_out}, true);
    }
    return u;
  };

  UNet<S> net;
  net.cfg = cfg;
  int c_prev = UNetConfig::kInputChannels;
  for (int l = 0; l < cfg.levels; ++l) {
    const int c = cfg.channels[static_cast<size_t>(l)];
    std::vector<ConvUnit<S>> blocks;
    for (int b = 0; b < cfg.blocks_per_level; ++b) {
      blocks.push_back(conv_unit(b == 0 ? c_prev : c, c, true));
    }
    net.encoder.push_back(std::move(blocks));
    c_prev = c;
  }
  for (int l = 0; l < cfg.levels - 1; ++l) {
    const int c = cfg.channels[static_cast<size_t>(l)];
    const int c_deep = cfg.channels[static_cast<size_t>(l) + 1];
    std::vector<ConvUnit<S>> blocks;
    for (int b = 0; b < cfg.blocks_per_level; ++b)
      blocks.push_back(conv_unit(b == 0 ? c_deep + c : c, c, true));
    net.decoder.push_back(std::move(blocks));
  }
  if (cfg.attention)
    for (int l = 0; l < cfg.levels - 1; ++l) {
      const int c = cfg.channels[static_cast<size_t>(l)];
      const int c_deep = cfg.channels[static_cast<size_t>(l) + 1];
      const int inter = std::max(1, c_deep / 2);
      nn::AttentionGate<S> gate;
      gate.w_gate = nn::zeros<S>({inter, c_deep}, true);
      nn::fan_in_uniform(*gate.w_gate, c_deep, rng);
      gate.w_skip = nn::zeros<S>({inter, c}, true);
      nn::fan_in_uniform(*gate.w_skip, c, rng);
      gate.bias = nn::zeros<S>({inter}, true);
      gate.psi_w = nn::zeros<S>({1, inter}, true);
      nn::fan_in_uniform(*gate.psi_w, inter, rng);
      gate.psi_b = nn::zeros<S>({1}, true);
      net.gates.push_back(std::move(gate));
    }
  // The decoder walks back to level 0, so the head always sees channels[0]
  // (with a single level there is no decoder and the encoder already ends
  // there).
  net.head =
      conv_unit(cfg.channels.front(), UNetConfig::kOutputChannels, false);
  return net;
}

/// Copies checkpoint tensors into a freshly built network by parameter name,
/// erroring on any mismatch between the stored and constructed shapes.
template <typename S>
void load_parameters(
    UNet<S>& net,
    const std::vector<std::pair<std::string, nn::TensorPtr<float>>>& stored) {
  auto named = net.named_parameters();
  if (named.size() != stored.size())
    throw std::runtime_error("load_parameters: checkpoint holds " +
                             std::to_string(stored.size()) +
                             " tensors, network needs " +
                             std::to_string(named.size()));
  for (size_t i = 0; i < named.size(); ++i) {
    if (named[i].first != stored[i].first)
      throw std::runtime_error("load_parameters: tensor " + std::to_string(i) +
                               " is '" + stored[i].first + "', expected '" +
                               named[i].first + "'");
    if (named[i].second->shape != stored[i].second->shape)
      throw std::runtime_error(
          "load_parameters: '" + named[i].first + "' has shape " +
          nn::shape_string(stored[i].second->shape) + ", expected " +
          nn::shape_string(named[i].second->shape));
    named[i].second->values =
        stored[i].second->values.template cast<S>();
  }
}

}  // namespace flowgrad
