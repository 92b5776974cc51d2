#include "flowgrad/geom/design.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "flowgrad/rng.hpp"

namespace flowgrad {

namespace {

double draw_in(std::mt19937_64& rng, const Interval& iv) {
  return iv.lo + (iv.hi - iv.lo) * unit_draw(rng);
}

std::string format_sig17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<DesignParams> sample_designs(const SamplingRanges& ranges,
                                         int count) {
  ranges.validate();
  if (count < 0) throw std::invalid_argument("sample_designs: count < 0");
  std::mt19937_64 rng(ranges.seed);
  std::vector<DesignParams> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    DesignParams p;
    // Draw order is part of the format: changing it changes every corpus.
    p.r_a = draw_in(rng, ranges.r_a);
    p.r_b = draw_in(rng, ranges.r_b);
    p.length = draw_in(rng, ranges.length);
    p.theta_x = draw_in(rng, ranges.theta_x);
    p.theta_y = draw_in(rng, ranges.theta_y);
    p.theta_z = draw_in(rng, ranges.theta_z);
    p.validate();
    out.push_back(p);
  }
  return out;
}

void write_designs_csv(const std::filesystem::path& path,
                       const std::vector<DesignParams>& designs) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "r_a,r_b,L,theta_x,theta_y,theta_z\n";
  for (const DesignParams& p : designs) {
    os << format_sig17(p.r_a) << ',' << format_sig17(p.r_b) << ','
       << format_sig17(p.length) << ',' << format_sig17(p.theta_x) << ','
       << format_sig17(p.theta_y) << ',' << format_sig17(p.theta_z) << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<DesignParams> read_designs_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("empty design file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "r_a,r_b,L,theta_x,theta_y,theta_z")
    throw std::runtime_error("unexpected design header in " + path.string() + ": \"" +
                             line + "\"");
  std::vector<DesignParams> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    double v[6];
    std::string cell;
    for (int i = 0; i < 6; ++i) {
      if (!std::getline(ls, cell, ','))
        throw std::runtime_error("short design row at " + path.string() + ":" +
                                 std::to_string(lineno));
      std::size_t used = 0;
      try {
        v[i] = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size())
        throw std::runtime_error("bad number \"" + cell + "\" at " +
                                 path.string() + ":" + std::to_string(lineno));
    }
    if (std::getline(ls, cell, ','))
      throw std::runtime_error("extra columns at " + path.string() + ":" +
                               std::to_string(lineno));
    DesignParams p{v[0], v[1], v[2], v[3], v[4], v[5]};
    p.validate();
    out.push_back(p);
  }
  return out;
}

}  // namespace flowgrad
