#include "flowgrad/field/dsf_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "DSF1 I/O assumes a little-endian host");

namespace flowgrad {

namespace {

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string header_line(const char* kind, const GridSpec& s) {
  std::ostringstream os;
  os << "DSF1 " << kind << " " << s.dims[0] << " " << s.dims[1] << " "
     << s.dims[2];
  for (int a = 0; a < 3; ++a) os << " " << format_g17(s.origin[a]);
  for (int a = 0; a < 3; ++a) os << " " << format_g17(s.spacing[a]);
  os << "\n";
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& header,
                const std::vector<float>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("write_dsf: cannot open " + path.string());
  out.write(header.data(), std::streamsize(header.size()));
  out.write(reinterpret_cast<const char*>(data.data()),
            std::streamsize(data.size() * sizeof(float)));
  if (!out)
    throw std::runtime_error("write_dsf: write failed for " + path.string());
}

struct DsfHeader {
  DsfKind kind;
  GridSpec spec;
  std::size_t payload_offset;
};

DsfHeader read_header(std::ifstream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line))
    throw DsfParseError("read_dsf: empty file " + path.string(), 0);
  std::istringstream hs(line);
  std::string magic, kind;
  GridSpec spec;
  hs >> magic;
  if (magic != "DSF1")
    throw DsfParseError("read_dsf: bad magic '" + magic + "' in " +
                            path.string(),
                        0);
  hs >> kind;
  if (kind != "scalar" && kind != "vector")
    throw DsfParseError("read_dsf: unknown kind token '" + kind + "' in " +
                            path.string(),
                        5);
  long long d[3];
  double o[3], sp[3];
  if (!(hs >> d[0] >> d[1] >> d[2] >> o[0] >> o[1] >> o[2] >> sp[0] >> sp[1] >>
        sp[2]))
    throw DsfParseError("read_dsf: malformed header in " + path.string(),
                        std::size_t(hs.tellg() < 0 ? line.size()
                                                   : std::size_t(hs.tellg())));
  std::string extra;
  if (hs >> extra)
    throw DsfParseError("read_dsf: trailing tokens in header of " +
                            path.string(),
                        line.size());
  try {
    spec = GridSpec(Vec3(o[0], o[1], o[2]), Vec3(sp[0], sp[1], sp[2]),
                    Vec3i(int(d[0]), int(d[1]), int(d[2])));
  } catch (const std::invalid_argument& e) {
    throw DsfParseError(std::string("read_dsf: ") + e.what() + " in " +
                            path.string(),
                        5);
  }
  return {kind == "scalar" ? DsfKind::scalar : DsfKind::vector, spec,
          line.size() + 1};
}

std::vector<float> read_payload(std::ifstream& in,
                                const std::filesystem::path& path,
                                std::size_t offset, std::size_t count) {
  std::vector<float> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          std::streamsize(count * sizeof(float)));
  if (std::size_t(in.gcount()) != count * sizeof(float))
    throw DsfParseError("read_dsf: truncated payload in " + path.string(),
                        offset + std::size_t(in.gcount()));
  char probe;
  if (in.read(&probe, 1))
    throw DsfParseError("read_dsf: trailing bytes in " + path.string(),
                        offset + count * sizeof(float));
  return data;
}

}  // namespace

void write_dsf(const std::filesystem::path& path, const ScalarField3& field) {
  std::vector<float> data(std::size_t(field.values.size()));
  for (std::int64_t i = 0; i < field.values.size(); ++i)
    data[std::size_t(i)] = float(field.values[i]);
  write_file(path, header_line("scalar", field.spec), data);
}

void write_dsf(const std::filesystem::path& path, const VectorField3& field) {
  std::vector<float> data(std::size_t(field.values.size()));
  const double* src = field.values.data();  // column-major: 3 per node
  for (std::int64_t i = 0; i < field.values.size(); ++i)
    data[std::size_t(i)] = float(src[i]);
  write_file(path, header_line("vector", field.spec), data);
}

DsfKind peek_dsf(const std::filesystem::path& path, GridSpec* spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_dsf: cannot open " + path.string());
  DsfHeader h = read_header(in, path);
  if (spec) *spec = h.spec;
  return h.kind;
}

ScalarField3 read_dsf_scalar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_dsf: cannot open " + path.string());
  DsfHeader h = read_header(in, path);
  if (h.kind != DsfKind::scalar)
    throw DsfParseError("read_dsf: expected scalar kind in " + path.string(),
                        5);
  auto data = read_payload(in, path, h.payload_offset,
                           std::size_t(h.spec.node_count()));
  ScalarField3 f(h.spec);
  for (std::int64_t i = 0; i < f.values.size(); ++i)
    f.values[i] = data[std::size_t(i)];
  return f;
}

VectorField3 read_dsf_vector(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_dsf: cannot open " + path.string());
  DsfHeader h = read_header(in, path);
  if (h.kind != DsfKind::vector)
    throw DsfParseError("read_dsf: expected vector kind in " + path.string(),
                        5);
  auto data = read_payload(in, path, h.payload_offset,
                           std::size_t(h.spec.node_count()) * 3);
  VectorField3 f(h.spec);
  double* dst = f.values.data();
  for (std::size_t i = 0; i < data.size(); ++i) dst[i] = data[i];
  return f;
}

}  // namespace flowgrad
