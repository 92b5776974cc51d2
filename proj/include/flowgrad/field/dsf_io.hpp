#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "flowgrad/field/grid.hpp"

namespace flowgrad {

/// Parse failure in a DSF1 stream; `byte_offset` points at the offending
/// position in the file.
class DsfParseError : public std::runtime_error {
 public:
  DsfParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (byte offset " +
                           std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}
  std::size_t byte_offset;
};

// DSF1: one ASCII header line
//   DSF1 <kind> <nx> <ny> <nz> <ox> <oy> <oz> <sx> <sy> <sz>\n
// with kind "scalar" or "vector", followed by raw little-endian 32-bit
// floats in grid layout order (3 per node for vector kind).

void write_dsf(const std::filesystem::path& path, const ScalarField3& field);
void write_dsf(const std::filesystem::path& path, const VectorField3& field);

enum class DsfKind { scalar, vector };

/// Reads just the header (kind + grid spec) without loading values.
DsfKind peek_dsf(const std::filesystem::path& path, GridSpec* spec = nullptr);

ScalarField3 read_dsf_scalar(const std::filesystem::path& path);
VectorField3 read_dsf_vector(const std::filesystem::path& path);

}  // namespace flowgrad
