#include "flowgrad/mesh/tri_mesh.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace flowgrad {

namespace {

std::uint64_t undirected_key(int a, int b) {
  const std::uint64_t lo = static_cast<std::uint32_t>(a < b ? a : b);
  const std::uint64_t hi = static_cast<std::uint32_t>(a < b ? b : a);
  return (hi << 32) | lo;
}

void check_indices(const TriMesh& mesh) {
  const std::int64_t n = mesh.vertex_count();
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Eigen::Vector3i& tri = mesh.triangles[t];
    for (int c = 0; c < 3; ++c)
      if (tri[c] < 0 || tri[c] >= n)
        throw std::invalid_argument("mesh: triangle " + std::to_string(t) +
                                    " references vertex " +
                                    std::to_string(tri[c]) + " of " +
                                    std::to_string(n));
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw std::invalid_argument("mesh: triangle " + std::to_string(t) +
                                  " repeats a vertex index");
  }
}

}  // namespace

MeshTopology analyze_topology(const TriMesh& mesh) {
  check_indices(mesh);

  struct EdgeUse {
    int count = 0;
    int forward = 0;  // directed uses a->b with a < b
  };
  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(mesh.triangles.size() * 3);
  for (const Eigen::Vector3i& tri : mesh.triangles) {
    for (int c = 0; c < 3; ++c) {
      const int a = tri[c];
      const int b = tri[(c + 1) % 3];
      EdgeUse& use = edges[undirected_key(a, b)];
      ++use.count;
      if (a < b) ++use.forward;
    }
  }

  MeshTopology topo;
  topo.vertex_count = mesh.vertex_count();
  topo.triangle_count = mesh.triangle_count();
  topo.edge_count = static_cast<std::int64_t>(edges.size());
  for (const auto& [key, use] : edges) {
    (void)key;
    if (use.count == 1) ++topo.boundary_edges;
    if (use.count > 2) ++topo.nonmanifold_edges;
    // A closed orientable surface uses each edge once per direction.
    if (use.count == 2 && use.forward != 1) ++topo.misoriented_edges;
  }
  return topo;
}

double mesh_area(const TriMesh& mesh) {
  double area = 0.0;
  for (const Eigen::Vector3i& tri : mesh.triangles) {
    const Eigen::Vector3d& a = mesh.vertices[tri[0]];
    const Eigen::Vector3d& b = mesh.vertices[tri[1]];
    const Eigen::Vector3d& c = mesh.vertices[tri[2]];
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

double mesh_signed_volume(const TriMesh& mesh) {
  double vol = 0.0;
  for (const Eigen::Vector3i& tri : mesh.triangles) {
    const Eigen::Vector3d& a = mesh.vertices[tri[0]];
    const Eigen::Vector3d& b = mesh.vertices[tri[1]];
    const Eigen::Vector3d& c = mesh.vertices[tri[2]];
    vol += a.dot(b.cross(c)) / 6.0;
  }
  return vol;
}

TriMesh laplacian_smooth(const TriMesh& mesh, int iterations, double lambda) {
  if (iterations < 0)
    throw std::invalid_argument("laplacian_smooth: iterations must be >= 0");
  if (!(lambda > 0.0) || lambda > 1.0)
    throw std::invalid_argument("laplacian_smooth: lambda must be in (0, 1]");
  check_indices(mesh);

  // 1-ring neighborhoods, deduplicated.
  std::vector<std::unordered_set<int>> ring(mesh.vertices.size());
  for (const Eigen::Vector3i& tri : mesh.triangles)
    for (int c = 0; c < 3; ++c) {
      ring[tri[c]].insert(tri[(c + 1) % 3]);
      ring[tri[c]].insert(tri[(c + 2) % 3]);
    }

  TriMesh out = mesh;
  std::vector<Eigen::Vector3d> next(out.vertices.size());
  for (int it = 0; it < iterations; ++it) {
    for (size_t v = 0; v < out.vertices.size(); ++v) {
      if (ring[v].empty()) {
        next[v] = out.vertices[v];
        continue;
      }
      Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
      for (int nb : ring[v]) centroid += out.vertices[nb];
      centroid /= double(ring[v].size());
      next[v] = out.vertices[v] + lambda * (centroid - out.vertices[v]);
    }
    out.vertices.swap(next);
  }
  return out;
}

}  // namespace flowgrad
