#pragma once

#include "flowgrad/field/grid.hpp"
#include "flowgrad/mesh/tri_mesh.hpp"

namespace flowgrad {

/// Classic 256-case marching cubes with linear edge interpolation. Vertices
/// are welded on shared cell edges (exact node-pair keys), so the result is
/// an indexed mesh, watertight for isosurfaces closed inside the grid, with
/// normals pointing toward positive field values.
///
/// A crossing on the grid's outer boundary throws std::runtime_error: a
/// clipped isosurface cannot be represented as a closed mesh. An empty
/// isosurface (no crossings anywhere) yields an empty mesh.
TriMesh marching_cubes(const ScalarField3& field, double iso = 0.0);

}  // namespace flowgrad
