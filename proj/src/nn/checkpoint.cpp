#include "flowgrad/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

namespace flowgrad::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; add byte swapping before "
              "building on a big-endian target");

namespace {

constexpr char kMagic[4] = {'U', 'N', 'W', '1'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

const TensorPtr<float>& Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw std::out_of_range("Checkpoint: no tensor named '" + name + "'");
}

void write_checkpoint(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, TensorPtr<float>>>& tensors,
    const nlohmann::json& config) {
  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = config;
  manifest["tensors"] = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    manifest["tensors"].push_back(
        {{"name", name}, {"shape", t->shape}, {"offset", offset}});
    offset += t->numel();
  }
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("write_checkpoint: cannot open " + path.string());
  out.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t manifest_len = text.size();
  out.write(reinterpret_cast<const char*>(&manifest_len), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : tensors)
    out.write(reinterpret_cast<const char*>(t->values.data()),
              static_cast<std::streamsize>(t->numel() * sizeof(float)));
  if (!out)
    throw std::runtime_error("write_checkpoint: write failed for " +
                             path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("read_checkpoint: cannot open " + path.string());

  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != std::string(kMagic, 4))
    throw CheckpointParseError(
        "read_checkpoint: bad magic in " + path.string(), 0);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in || version != kVersion)
    throw CheckpointParseError("read_checkpoint: unsupported version " +
                                   std::to_string(version) + " in " +
                                   path.string(),
                               4);
  std::uint64_t manifest_len = 0;
  in.read(reinterpret_cast<char*>(&manifest_len), 8);
  if (!in)
    throw CheckpointParseError(
        "read_checkpoint: truncated header in " + path.string(), 8);
  std::string text(manifest_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(manifest_len));
  if (in.gcount() != static_cast<std::streamsize>(manifest_len))
    throw CheckpointParseError(
        "read_checkpoint: truncated manifest in " + path.string(),
        16 + static_cast<std::size_t>(in.gcount()));

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointParseError(std::string("read_checkpoint: ") + e.what() +
                                   " in " + path.string(),
                               16);
  }

  Checkpoint ckpt;
  ckpt.config = manifest.value("config", nlohmann::json::object());
  const std::size_t blob_start = 16 + manifest_len;
  std::int64_t expected_offset = 0;
  for (const auto& entry : manifest.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<int>>();
    const auto offset = entry.at("offset").get<std::int64_t>();
    if (offset != expected_offset)
      throw CheckpointParseError("read_checkpoint: tensor '" + name +
                                     "' offset " + std::to_string(offset) +
                                     " does not match blob position in " +
                                     path.string(),
                                 blob_start + offset * sizeof(float));
    auto t = zeros<float>(shape);
    in.read(reinterpret_cast<char*>(t->values.data()),
            static_cast<std::streamsize>(t->numel() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(t->numel() * sizeof(float)))
      throw CheckpointParseError(
          "read_checkpoint: truncated blob for tensor '" + name + "' in " +
              path.string(),
          blob_start + offset * sizeof(float) +
              static_cast<std::size_t>(in.gcount()));
    expected_offset += t->numel();
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  if (in.peek() != std::ifstream::traits_type::eof())
    throw CheckpointParseError(
        "read_checkpoint: trailing bytes in " + path.string(),
        blob_start + expected_offset * sizeof(float));
  return ckpt;
}

}  // namespace flowgrad::nn
