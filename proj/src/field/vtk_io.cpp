#include "flowgrad/field/vtk_io.hpp"

#include <fstream>

namespace flowgrad {

namespace {

std::ofstream open_vtk(const std::filesystem::path& path, const GridSpec& s,
                       const std::string& title) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_vtk: cannot open " + path.string());
  out.precision(9);
  out << "# vtk DataFile Version 3.0\n"
      << title << "\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << s.dims[0] << " " << s.dims[1] << " " << s.dims[2]
      << "\n"
      << "ORIGIN " << s.origin[0] << " " << s.origin[1] << " " << s.origin[2]
      << "\n"
      << "SPACING " << s.spacing[0] << " " << s.spacing[1] << " "
      << s.spacing[2] << "\n"
      << "POINT_DATA " << s.node_count() << "\n";
  return out;
}

}  // namespace

void write_vtk(const std::filesystem::path& path, const ScalarField3& field,
               const std::string& array_name) {
  auto out = open_vtk(path, field.spec, "flowgrad scalar field");
  out << "SCALARS " << array_name << " float 1\nLOOKUP_TABLE default\n";
  for (std::int64_t i = 0; i < field.values.size(); ++i)
    out << float(field.values[i]) << "\n";
  if (!out)
    throw std::runtime_error("write_vtk: write failed for " + path.string());
}

void write_vtk(const std::filesystem::path& path, const VectorField3& field,
               const std::string& array_name) {
  auto out = open_vtk(path, field.spec, "flowgrad vector field");
  out << "VECTORS " << array_name << " float\n";
  for (std::int64_t c = 0; c < field.values.cols(); ++c)
    out << float(field.values(0, c)) << " " << float(field.values(1, c)) << " "
        << float(field.values(2, c)) << "\n";
  if (!out)
    throw std::runtime_error("write_vtk: write failed for " + path.string());
}

}  // namespace flowgrad
