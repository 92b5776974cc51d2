#pragma once

#include <filesystem>

#include "flowgrad/mesh/tri_mesh.hpp"

namespace flowgrad {

enum class MeshFormat { obj, stl_binary };

/// Wavefront OBJ: "v x y z" lines at 9 significant digits followed by
/// 1-based "f a b c" lines.
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);

/// Reads the v/f subset written by write_obj (triangles only).
TriMesh read_obj(const std::filesystem::path& path);

/// Binary STL, little-endian: 80-byte header, uint32 facet count, then per
/// facet a recomputed unit normal, three vertices (float32 each) and a zero
/// attribute word.
void write_stl(const std::filesystem::path& path, const TriMesh& mesh);

void export_mesh(const std::filesystem::path& path, const TriMesh& mesh,
                 MeshFormat format);

}  // namespace flowgrad
