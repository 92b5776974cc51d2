#pragma once

#include "flowgrad/field/grid.hpp"

namespace flowgrad {

namespace detail {

inline void check_window(const Vec3i& src_dims, const Vec3i& window_origin,
                         const Vec3i& window_dims) {
  for (int a = 0; a < 3; ++a) {
    if (window_dims[a] < 2 || window_origin[a] < 0 ||
        window_origin[a] + window_dims[a] > src_dims[a]) {
      auto fmt = [](const Vec3i& v) {
        return "(" + std::to_string(v[0]) + "," + std::to_string(v[1]) + "," +
               std::to_string(v[2]) + ")";
      };
      throw std::out_of_range("crop_to_window: window origin " +
                              fmt(window_origin) + " dims " + fmt(window_dims) +
                              " does not fit source dims " + fmt(src_dims));
    }
  }
}

}  // namespace detail

/// Copies a node window out of a field. The result's origin is shifted to the
/// window's first node; spacing is unchanged.
inline ScalarField3 crop_to_window(const ScalarField3& field,
                                   const Vec3i& window_origin,
                                   const Vec3i& window_dims) {
  detail::check_window(field.spec.dims, window_origin, window_dims);
  GridSpec out_spec(
      field.spec.position(window_origin[0], window_origin[1], window_origin[2]),
      field.spec.spacing, window_dims);
  ScalarField3 out(out_spec);
  for (int k = 0; k < window_dims[2]; ++k)
    for (int j = 0; j < window_dims[1]; ++j)
      for (int i = 0; i < window_dims[0]; ++i)
        out.at(i, j, k) = field.at(window_origin[0] + i, window_origin[1] + j,
                                   window_origin[2] + k);
  return out;
}

inline VectorField3 crop_to_window(const VectorField3& field,
                                   const Vec3i& window_origin,
                                   const Vec3i& window_dims) {
  detail::check_window(field.spec.dims, window_origin, window_dims);
  GridSpec out_spec(
      field.spec.position(window_origin[0], window_origin[1], window_origin[2]),
      field.spec.spacing, window_dims);
  VectorField3 out(out_spec);
  for (int k = 0; k < window_dims[2]; ++k)
    for (int j = 0; j < window_dims[1]; ++j)
      for (int i = 0; i < window_dims[0]; ++i)
        out.at(i, j, k) = field.at(window_origin[0] + i, window_origin[1] + j,
                                   window_origin[2] + k);
  return out;
}

/// Adjoint of the window gather: scatters a window-shaped cotangent back into
/// a zero field of the source shape.
inline Eigen::ArrayXd crop_scatter(const Eigen::ArrayXd& window_cotangent,
                                   const Vec3i& src_dims,
                                   const Vec3i& window_origin,
                                   const Vec3i& window_dims) {
  detail::check_window(src_dims, window_origin, window_dims);
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(std::int64_t(src_dims[0]) *
                                            src_dims[1] * src_dims[2]);
  auto src_index = [&](int i, int j, int k) {
    return i + std::int64_t(src_dims[0]) * (j + std::int64_t(src_dims[1]) * k);
  };
  std::int64_t w = 0;
  for (int k = 0; k < window_dims[2]; ++k)
    for (int j = 0; j < window_dims[1]; ++j)
      for (int i = 0; i < window_dims[0]; ++i, ++w)
        out[src_index(window_origin[0] + i, window_origin[1] + j,
                      window_origin[2] + k)] = window_cotangent[w];
  return out;
}

/// Window start indices that center `window_dims` on the centroid of the
/// field's negative region, quantized to node indices and clamped so the
/// window stays inside the grid. Falls back to the grid center when the
/// field has no negative nodes.
Vec3i negative_region_window(const ScalarField3& field, const Vec3i& window_dims);

}  // namespace flowgrad
