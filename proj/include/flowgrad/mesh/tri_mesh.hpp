#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace flowgrad {

/// Indexed triangle surface. Triangles store vertex indices with a
/// consistent winding: seen from outside the enclosed region, vertices run
/// counterclockwise (normals point outward).
struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> triangles;

  std::int64_t vertex_count() const {
    return static_cast<std::int64_t>(vertices.size());
  }
  std::int64_t triangle_count() const {
    return static_cast<std::int64_t>(triangles.size());
  }
};

/// Edge-level connectivity audit. `watertight` requires every undirected
/// edge to be shared by exactly two triangles with opposite directions.
struct MeshTopology {
  std::int64_t vertex_count = 0;
  std::int64_t triangle_count = 0;
  std::int64_t edge_count = 0;
  std::int64_t boundary_edges = 0;     // used by exactly one triangle
  std::int64_t nonmanifold_edges = 0;  // used by three or more
  std::int64_t misoriented_edges = 0;  // used twice in the same direction

  bool watertight() const {
    return triangle_count > 0 && boundary_edges == 0 &&
           nonmanifold_edges == 0 && misoriented_edges == 0;
  }
  std::int64_t euler_characteristic() const {
    return vertex_count - edge_count + triangle_count;
  }
};

/// Throws std::invalid_argument on out-of-range indices or triangles with a
/// repeated vertex index; otherwise reports connectivity statistics.
MeshTopology analyze_topology(const TriMesh& mesh);

double mesh_area(const TriMesh& mesh);

/// Divergence-theorem volume; positive when triangle normals point outward.
double mesh_signed_volume(const TriMesh& mesh);

/// Uniform Laplacian smoothing: each iteration moves every vertex by
/// lambda * (mean of its 1-ring neighbors - vertex). Connectivity and
/// vertex/triangle counts are unchanged; lambda in (0, 1].
TriMesh laplacian_smooth(const TriMesh& mesh, int iterations, double lambda);

}  // namespace flowgrad
