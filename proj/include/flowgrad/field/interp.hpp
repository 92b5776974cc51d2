#pragma once

#include <algorithm>

#include "flowgrad/field/grid.hpp"

namespace flowgrad {

namespace detail {

struct TrilinearStencil {
  int base[3];     // lower cell corner (i0,j0,k0)
  double frac[3];  // fractional offsets in [0,1]
};

/// Locates the cell containing `point` and the blend fractions.
/// Throws std::out_of_range naming the offending axis if the point lies
/// outside the grid's bounding box; no clamped extrapolation.
inline TrilinearStencil locate(const GridSpec& spec, const Vec3& point) {
  TrilinearStencil st;
  for (int a = 0; a < 3; ++a) {
    double t = (point[a] - spec.origin[a]) / spec.spacing[a];
    const double limit = double(spec.dims[a] - 1);
    // Absorb roundoff so a point computed as the exact max corner stays
    // in bounds; anything materially outside is still an error.
    const double slack = 1e-9 * std::max(1.0, limit);
    if (t < -slack || t > limit + slack)
      throw std::out_of_range("trilinear_sample: point outside grid on axis " +
                              std::to_string(a) + " (t=" + std::to_string(t) +
                              ")");
    if (t < 0.0) t = 0.0;
    if (t > limit) t = limit;
    int c = int(t);
    if (c > spec.dims[a] - 2) c = spec.dims[a] - 2;
    st.base[a] = c;
    st.frac[a] = t - c;
  }
  return st;
}

}  // namespace detail

/// Standard trilinear blend of the 8 nodes surrounding `point`; exact at
/// nodes and linear in the field values.
inline double trilinear_sample(const ScalarField3& field, const Vec3& point) {
  const auto st = detail::locate(field.spec, point);
  const double fx = st.frac[0], fy = st.frac[1], fz = st.frac[2];
  double acc = 0.0;
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        const double w = (di ? fx : 1.0 - fx) * (dj ? fy : 1.0 - fy) *
                         (dk ? fz : 1.0 - fz);
        acc += w * field.at(st.base[0] + di, st.base[1] + dj, st.base[2] + dk);
      }
  return acc;
}

inline Vec3 trilinear_sample(const VectorField3& field, const Vec3& point) {
  const auto st = detail::locate(field.spec, point);
  const double fx = st.frac[0], fy = st.frac[1], fz = st.frac[2];
  Vec3 acc = Vec3::Zero();
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        const double w = (di ? fx : 1.0 - fx) * (dj ? fy : 1.0 - fy) *
                         (dk ? fz : 1.0 - fz);
        acc += w * field.at(st.base[0] + di, st.base[1] + dj, st.base[2] + dk);
      }
  return acc;
}

}  // namespace flowgrad
