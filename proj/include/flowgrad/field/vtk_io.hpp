#pragma once

#include <filesystem>
#include <string>

#include "flowgrad/field/grid.hpp"

namespace flowgrad {

// Legacy VTK STRUCTURED_POINTS ASCII writers, for drag-and-drop inspection in
// ParaView. VTK's point ordering (x fastest) matches the field layout.

void write_vtk(const std::filesystem::path& path, const ScalarField3& field,
               const std::string& array_name = "value");
void write_vtk(const std::filesystem::path& path, const VectorField3& field,
               const std::string& array_name = "velocity");

}  // namespace flowgrad
