#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowgrad/nn/tensor.hpp"

namespace flowgrad::nn {

class CheckpointParseError : public std::runtime_error {
 public:
  CheckpointParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (byte offset " +
                           std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}
  std::size_t byte_offset;
};

/// Weight container as read back from disk: every named tensor plus the
/// free-form config block the writer embedded in the manifest.
struct Checkpoint {
  nlohmann::json config;
  std::vector<std::pair<std::string, TensorPtr<float>>> tensors;

  const TensorPtr<float>& find(const std::string& name) const;
};

// On-disk layout (all integers little-endian): magic "UNW1", u32 version,
// u64 manifest length, manifest JSON {"tensors":[{name,shape,offset}...],
// "config":{...}} with offsets counted in floats, then the raw float32 blob.
void write_checkpoint(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, TensorPtr<float>>>& tensors,
    const nlohmann::json& config);

Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace flowgrad::nn
