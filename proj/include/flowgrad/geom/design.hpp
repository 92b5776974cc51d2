#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace flowgrad {

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Design vector of the rounded-cone primitive: cap radii, axis length, and
/// intrinsic X-Y-Z Euler angles (radians). The body axis runs along +x from
/// the base cap center at the origin to the tip cap center at (length,0,0);
/// rotation is about the origin.
struct DesignParams {
  double r_a = 1.0;
  double r_b = 1.0;
  double length = 3.0;
  double theta_x = 0.0;
  double theta_y = 0.0;
  double theta_z = 0.0;

  DesignParams() = default;
  DesignParams(double ra, double rb, double len, double tx = 0.0,
               double ty = 0.0, double tz = 0.0)
      : r_a(ra), r_b(rb), length(len), theta_x(tx), theta_y(ty), theta_z(tz) {
    validate();
  }

  void validate() const {
    if (!(r_a > 0.0) || !(r_b > 0.0))
      throw std::invalid_argument("DesignParams: radii must be > 0");
    if (!(length >= 0.0))
      throw std::invalid_argument("DesignParams: length must be >= 0");
  }

  Vec6 as_vector() const {
    Vec6 v;
    v << r_a, r_b, length, theta_x, theta_y, theta_z;
    return v;
  }

  static DesignParams from_vector(const Vec6& v) {
    return DesignParams(v[0], v[1], v[2], v[3], v[4], v[5]);
  }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-parameter closed sampling intervals plus the RNG seed. Degenerate
/// intervals pin a parameter; the defaults sample radii, length and theta_z
/// and keep theta_x = theta_y = 0.
struct SamplingRanges {
  Interval r_a{0.5, 1.5};
  Interval r_b{0.5, 1.5};
  Interval length{2.0, 5.0};
  Interval theta_x{0.0, 0.0};
  Interval theta_y{0.0, 0.0};
  Interval theta_z{-0.5, 0.5};
  std::uint64_t seed = 42;

  void validate() const {
    for (const Interval* iv :
         {&r_a, &r_b, &length, &theta_x, &theta_y, &theta_z})
      if (!(iv->lo <= iv->hi))
        throw std::invalid_argument("SamplingRanges: lo must be <= hi");
  }
};

/// Uniform, seed-deterministic design sampling. Draw order per design is
/// fixed (r_a, r_b, length, theta_x, theta_y, theta_z) so sequences are
/// reproducible across runs and platforms.
std::vector<DesignParams> sample_designs(const SamplingRanges& ranges,
                                         int count);

// Design CSV: header "r_a,r_b,L,theta_x,theta_y,theta_z", one row per
// design, 17 significant digits.
void write_designs_csv(const std::filesystem::path& path,
                       const std::vector<DesignParams>& designs);
std::vector<DesignParams> read_designs_csv(const std::filesystem::path& path);

}  // namespace flowgrad
