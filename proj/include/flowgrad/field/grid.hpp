#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace flowgrad {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;

/// Geometry of a regular node grid. Node (i,j,k) sits at
/// origin + (i,j,k) .* spacing, and node data is stored x-fastest:
/// flat index = i + nx*(j + ny*k). This layout is fixed so that field
/// files written on one machine read back identically on another.
struct GridSpec {
  Vec3 origin{0.0, 0.0, 0.0};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3i dims{2, 2, 2};

  GridSpec() = default;
  GridSpec(const Vec3& origin_, const Vec3& spacing_, const Vec3i& dims_)
      : origin(origin_), spacing(spacing_), dims(dims_) {
    validate();
  }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (!(spacing[a] > 0.0))
        throw std::invalid_argument("GridSpec: spacing must be > 0 on axis " +
                                    std::to_string(a));
      if (dims[a] < 2)
        throw std::invalid_argument("GridSpec: dims must be >= 2 on axis " +
                                    std::to_string(a));
    }
  }

  std::int64_t node_count() const {
    return std::int64_t(dims[0]) * dims[1] * dims[2];
  }

  std::int64_t index(int i, int j, int k) const {
    return i + std::int64_t(dims[0]) * (j + std::int64_t(dims[1]) * k);
  }

  Vec3 position(int i, int j, int k) const {
    return origin + Vec3(i * spacing[0], j * spacing[1], k * spacing[2]);
  }

  /// Position of node dims-1 on each axis (bounding-box max corner).
  Vec3 max_corner() const {
    return position(dims[0] - 1, dims[1] - 1, dims[2] - 1);
  }

  bool operator==(const GridSpec& o) const {
    return origin == o.origin && spacing == o.spacing && dims == o.dims;
  }
  bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

/// Scalar values on the nodes of a regular grid (x-fastest order).
struct ScalarField3 {
  GridSpec spec;
  Eigen::ArrayXd values;

  ScalarField3() = default;
  explicit ScalarField3(const GridSpec& s)
      : spec(s), values(Eigen::ArrayXd::Zero(s.node_count())) {}
  ScalarField3(const GridSpec& s, Eigen::ArrayXd v)
      : spec(s), values(std::move(v)) {
    if (values.size() != spec.node_count())
      throw std::invalid_argument("ScalarField3: value count does not match dims");
  }

  double& at(int i, int j, int k) { return values[spec.index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[spec.index(i, j, k)]; }
};

/// 3-vectors on the nodes of a regular grid. Stored as a 3 x N matrix so the
/// column-major memory layout is exactly "3 components per node, x-fastest".
struct VectorField3 {
  GridSpec spec;
  Eigen::Matrix3Xd values;

  VectorField3() = default;
  explicit VectorField3(const GridSpec& s)
      : spec(s), values(Eigen::Matrix3Xd::Zero(3, s.node_count())) {}
  VectorField3(const GridSpec& s, Eigen::Matrix3Xd v)
      : spec(s), values(std::move(v)) {
    if (values.cols() != spec.node_count())
      throw std::invalid_argument("VectorField3: value count does not match dims");
  }

  Eigen::Matrix3Xd::ColXpr at(int i, int j, int k) {
    return values.col(spec.index(i, j, k));
  }
  Eigen::Matrix3Xd::ConstColXpr at(int i, int j, int k) const {
    return values.col(spec.index(i, j, k));
  }

  /// Per-node Euclidean magnitude.
  Eigen::ArrayXd magnitudes() const {
    return values.colwise().norm().transpose().array();
  }
};

}  // namespace flowgrad
