#include "flowgrad/mesh/marching_cubes.hpp"

#include <cstdint>
#include <stdexcept>
#include <unordered_map>

#include "mc_tables.hpp"

namespace flowgrad {

namespace {

// Corner offsets in the cube numbering the tables assume.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

// Each cell edge as a pair of corner numbers.
constexpr int kEdgeCorner[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0},
                                    {4, 5}, {5, 6}, {6, 7}, {7, 4},
                                    {0, 4}, {1, 5}, {2, 6}, {3, 7}};

bool inside(double value, double iso) { return value < iso; }

void check_boundary_untouched(const ScalarField3& field, double iso) {
  const Vec3i& d = field.spec.dims;
  auto on_boundary = [&](int i, int j, int k) {
    return i == 0 || j == 0 || k == 0 || i == d[0] - 1 || j == d[1] - 1 ||
           k == d[2] - 1;
  };
  // A crossing on any grid edge whose both endpoints lie on the outer
  // boundary means the isosurface pierces the box.
  auto check_edge = [&](int i0, int j0, int k0, int i1, int j1, int k1) {
    if (!on_boundary(i0, j0, k0) || !on_boundary(i1, j1, k1)) return;
    if (inside(field.at(i0, j0, k0), iso) != inside(field.at(i1, j1, k1), iso))
      throw std::runtime_error(
          "marching_cubes: isosurface touches the grid boundary near node (" +
          std::to_string(i0) + "," + std::to_string(j0) + "," +
          std::to_string(k0) + "); enlarge the grid");
  };
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        if (!on_boundary(i, j, k)) continue;
        if (i + 1 < d[0]) check_edge(i, j, k, i + 1, j, k);
        if (j + 1 < d[1]) check_edge(i, j, k, i, j + 1, k);
        if (k + 1 < d[2]) check_edge(i, j, k, i, j, k + 1);
      }
}

}  // namespace

TriMesh marching_cubes(const ScalarField3& field, double iso) {
  const GridSpec& spec = field.spec;
  spec.validate();
  check_boundary_untouched(field, iso);

  TriMesh mesh;
  // Welds vertices across cells: key = the ordered node-index pair of the
  // crossing's grid edge, which both adjacent cells compute identically.
  std::unordered_map<std::uint64_t, int> edge_vertex;

  auto weld = [&](std::int64_t na, std::int64_t nb, Vec3 pa, Vec3 pb,
                  double va, double vb) -> int {
    if (na > nb) {
      std::swap(na, nb);
      std::swap(pa, pb);
      std::swap(va, vb);
    }
    const std::uint64_t key =
        (static_cast<std::uint64_t>(na) << 32) | static_cast<std::uint64_t>(nb);
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const double t = (iso - va) / (vb - va);
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(pa + t * (pb - pa));
    edge_vertex.emplace(key, id);
    return id;
  };

  std::int64_t nodes[8];
  Vec3 pos[8];
  double val[8];
  int edge_ids[12];

  for (int k = 0; k + 1 < spec.dims[2]; ++k)
    for (int j = 0; j + 1 < spec.dims[1]; ++j)
      for (int i = 0; i + 1 < spec.dims[0]; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          const int ci = i + kCorner[c][0];
          const int cj = j + kCorner[c][1];
          const int ck = k + kCorner[c][2];
          nodes[c] = spec.index(ci, cj, ck);
          pos[c] = spec.position(ci, cj, ck);
          val[c] = field.values[nodes[c]];
          if (inside(val[c], iso)) cube |= 1 << c;
        }
        const int mask = detail::kEdgeTable[cube];
        if (mask == 0) continue;
        for (int e = 0; e < 12; ++e) {
          if (!(mask & (1 << e))) continue;
          const int a = kEdgeCorner[e][0];
          const int b = kEdgeCorner[e][1];
          edge_ids[e] = weld(nodes[a], nodes[b], pos[a], pos[b], val[a],
                             val[b]);
        }
        const int* tri = detail::kTriTable[cube];
        for (int t = 0; tri[t] != -1; t += 3) {
          // The tables wind triangles counterclockwise when seen from the
          // low-value (inside) region; flip so normals face positive values.
          mesh.triangles.emplace_back(edge_ids[tri[t]], edge_ids[tri[t + 2]],
                                      edge_ids[tri[t + 1]]);
        }
      }
  return mesh;
}

}  // namespace flowgrad
