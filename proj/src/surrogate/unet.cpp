#include "flowgrad/surrogate/unet.hpp"

#include <stdexcept>

namespace flowgrad {

void UNetConfig::validate() const {
  if (levels < 1)
    throw std::invalid_argument("UNetConfig: levels must be >= 1, got " +
                                std::to_string(levels));
  if (static_cast<int>(channels.size()) != levels)
    throw std::invalid_argument(
        "UNetConfig: channels lists " + std::to_string(channels.size()) +
        " entries for " + std::to_string(levels) + " levels");
  for (int c : channels)
    if (c < 1)
      throw std::invalid_argument("UNetConfig: non-positive channel count");
  if (blocks_per_level < 1)
    throw std::invalid_argument("UNetConfig: blocks_per_level must be >= 1");
  if (mask_mode == MaskMode::sigmoid && !(mask_temperature > 0.0))
    throw std::invalid_argument(
        "UNetConfig: sigmoid mask needs temperature > 0, got " +
        std::to_string(mask_temperature));
}

UNetConfig paper_unet_config() {
  UNetConfig cfg;
  cfg.levels = 3;
  cfg.channels = {64, 128, 512};
  cfg.attention = true;
  cfg.mask_mode = MaskMode::sigmoid;
  cfg.mask_temperature = 0.5;
  return cfg;
}

UNetConfig desk_unet_config() {
  UNetConfig cfg;
  cfg.levels = 2;
  cfg.channels = {16, 32};
  cfg.attention = true;
  cfg.mask_mode = MaskMode::sigmoid;
  cfg.mask_temperature = 0.5;
  return cfg;
}

void to_json(nlohmann::json& j, const UNetConfig& cfg) {
  j = nlohmann::json{
      {"levels", cfg.levels},
      {"channels", cfg.channels},
      {"attention", cfg.attention},
      {"mask_mode", cfg.mask_mode == MaskMode::hard ? "hard" : "sigmoid"},
      {"mask_temperature", cfg.mask_temperature},
      {"blocks_per_level", cfg.blocks_per_level},
      {"input_layout", cfg.input_layout}};
}

void from_json(const nlohmann::json& j, UNetConfig& cfg) {
  j.at("levels").get_to(cfg.levels);
  j.at("channels").get_to(cfg.channels);
  j.at("attention").get_to(cfg.attention);
  const auto mode = j.at("mask_mode").get<std::string>();
  if (mode == "hard")
    cfg.mask_mode = MaskMode::hard;
  else if (mode == "sigmoid")
    cfg.mask_mode = MaskMode::sigmoid;
  else
    throw std::invalid_argument("UNetConfig: unknown mask_mode '" + mode +
                                "'");
  j.at("mask_temperature").get_to(cfg.mask_temperature);
  j.at("blocks_per_level").get_to(cfg.blocks_per_level);
  j.at("input_layout").get_to(cfg.input_layout);
  cfg.validate();
}

}  // namespace flowgrad
