#include "flowgrad/mesh/mesh_io.hpp"

#include <Eigen/Geometry>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flowgrad {

static_assert(std::endian::native == std::endian::little,
              "STL writer assumes a little-endian host");

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  char line[128];
  for (const Eigen::Vector3d& v : mesh.vertices) {
    std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", v[0], v[1], v[2]);
    os << line;
  }
  for (const Eigen::Vector3i& t : mesh.triangles)
    os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

TriMesh read_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  TriMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ls >> v[0] >> v[1] >> v[2]))
        throw std::runtime_error("bad vertex at " + path.string() + ":" +
                                 std::to_string(lineno));
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      Eigen::Vector3i t;
      if (!(ls >> t[0] >> t[1] >> t[2]))
        throw std::runtime_error("bad face at " + path.string() + ":" +
                                 std::to_string(lineno));
      std::string extra;
      if (ls >> extra)
        throw std::runtime_error("only triangle faces supported at " +
                                 path.string() + ":" + std::to_string(lineno));
      mesh.triangles.push_back(t - Eigen::Vector3i::Ones());
    }
    // Other tags (normals, texture coords, groups) are ignored.
  }
  return mesh;
}

void write_stl(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());

  char header[80] = {};
  std::strncpy(header, "binary STL surface export", sizeof(header) - 1);
  os.write(header, sizeof(header));

  const std::uint32_t count = static_cast<std::uint32_t>(mesh.triangles.size());
  os.write(reinterpret_cast<const char*>(&count), 4);

  auto put3f = [&](const Eigen::Vector3d& v) {
    const float f[3] = {float(v[0]), float(v[1]), float(v[2])};
    os.write(reinterpret_cast<const char*>(f), 12);
  };
  for (const Eigen::Vector3i& t : mesh.triangles) {
    const Eigen::Vector3d& a = mesh.vertices[t[0]];
    const Eigen::Vector3d& b = mesh.vertices[t[1]];
    const Eigen::Vector3d& c = mesh.vertices[t[2]];
    Eigen::Vector3d n = (b - a).cross(c - a);
    const double len = n.norm();
    if (len > 0.0) n /= len;
    put3f(n);
    put3f(a);
    put3f(b);
    put3f(c);
    const std::uint16_t attribute = 0;
    os.write(reinterpret_cast<const char*>(&attribute), 2);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

void export_mesh(const std::filesystem::path& path, const TriMesh& mesh,
                 MeshFormat format) {
  switch (format) {
    case MeshFormat::obj:
      write_obj(path, mesh);
      return;
    case MeshFormat::stl_binary:
      write_stl(path, mesh);
      return;
  }
  throw std::invalid_argument("export_mesh: unknown format");
}

}  // namespace flowgrad
