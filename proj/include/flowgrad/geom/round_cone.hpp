#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>

#include "flowgrad/geom/design.hpp"

namespace flowgrad {

// Exact signed distance of the convex hull of two spheres (sphere A: radius
// r_a at the origin, sphere B: radius r_b at (len,0,0)), split into the cap
// A / cap B / lateral cone branches. When one sphere contains the other the
// hull degenerates to the containing sphere. Distance ties on the branch
// seams resolve to the lateral branch, giving a deterministic subgradient.

template <typename S>
S round_cone_sdf_body(S r_a, S r_b, S len, const Eigen::Matrix<S, 3, 1>& p) {
  using std::sqrt;
  const S x = p[0];
  const S rho = sqrt(p[1] * p[1] + p[2] * p[2]);

  if (len <= r_a - r_b) return sqrt(x * x + rho * rho) - r_a;
  if (len <= r_b - r_a) {
    const S dx = x - len;
    return sqrt(dx * dx + rho * rho) - r_b;
  }

  const S b = (r_a - r_b) / len;
  const S a = sqrt(S(1) - b * b);
  const S k = a * x - b * rho;
  if (k < S(0)) return sqrt(x * x + rho * rho) - r_a;
  if (k > a * len) {
    const S dx = x - len;
    return sqrt(dx * dx + rho * rho) - r_b;
  }
  return a * rho + b * x - r_a;
}

/// Partial derivatives of the signed distance at one point: with respect to
/// the six design parameters and to the world-frame query point.
struct SdfDerivatives {
  Vec6 params = Vec6::Zero();  // d/d(r_a, r_b, length, theta_x, theta_y, theta_z)
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

namespace detail {

/// Body-frame value plus derivatives w.r.t. (r_a, r_b, len) and the body
/// point. On the medial axis (rho = 0 inside the lateral region) the radial
/// subgradient is taken as zero, matching the symmetric central-difference
/// limit.
template <typename S>
S round_cone_sdf_body_grad(S r_a, S r_b, S len,
                           const Eigen::Matrix<S, 3, 1>& p, S* d_ra, S* d_rb,
                           S* d_len, Eigen::Matrix<S, 3, 1>* d_p) {
  using std::sqrt;
  const S x = p[0];
  const S rho2 = p[1] * p[1] + p[2] * p[2];
  const S rho = sqrt(rho2);

  auto cap = [&](S cx, S radius, S* d_r, bool tip) {
    const S dx = x - cx;
    const S dist = sqrt(dx * dx + rho2);
    *d_ra = 0;
    *d_rb = 0;
    *d_len = 0;
    *d_r = S(-1);
    if (dist > S(0)) {
      (*d_p)[0] = dx / dist;
      (*d_p)[1] = p[1] / dist;
      (*d_p)[2] = p[2] / dist;
      if (tip) *d_len = -dx / dist;
    } else {
      d_p->setZero();
    }
    return dist - radius;
  };

  if (len <= r_a - r_b) return cap(S(0), r_a, d_ra, false);
  if (len <= r_b - r_a) return cap(len, r_b, d_rb, true);

  const S b = (r_a - r_b) / len;
  const S a = sqrt(S(1) - b * b);
  const S k = a * x - b * rho;
  if (k < S(0)) return cap(S(0), r_a, d_ra, false);
  if (k > a * len) return cap(len, r_b, d_rb, true);

  // Lateral region: d = a*rho + b*x - r_a with b = (r_a - r_b)/len.
  const S db_dra = S(1) / len;
  const S da_db = -b / a;
  *d_ra = (rho * da_db + x) * db_dra - S(1);
  *d_rb = -(rho * da_db + x) * db_dra;
  const S db_dlen = -b / len;
  *d_len = (rho * da_db + x) * db_dlen;
  (*d_p)[0] = b;
  if (rho > S(0)) {
    (*d_p)[1] = a * p[1] / rho;
    (*d_p)[2] = a * p[2] / rho;
  } else {
    (*d_p)[1] = S(0);
    (*d_p)[2] = S(0);
  }
  return a * rho + b * x - r_a;
}

}  // namespace detail

/// Intrinsic X-Y-Z Euler rotation, R = Rx(tx) * Ry(ty) * Rz(tz). The body
/// frame is obtained from world coordinates via R^T.
inline Eigen::Matrix3d rotation_matrix(double tx, double ty, double tz) {
  return (Eigen::AngleAxisd(tx, Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(ty, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(tz, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

namespace detail {

inline Eigen::Matrix3d rot_x(double t) {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t);
  return m;
}
inline Eigen::Matrix3d rot_y(double t) {
  Eigen::Matrix3d m;
  m << std::cos(t), 0, std::sin(t), 0, 1, 0, -std::sin(t), 0, std::cos(t);
  return m;
}
inline Eigen::Matrix3d rot_z(double t) {
  Eigen::Matrix3d m;
  m << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
  return m;
}
inline Eigen::Matrix3d drot_x(double t) {
  Eigen::Matrix3d m;
  m << 0, 0, 0, 0, -std::sin(t), -std::cos(t), 0, std::cos(t), -std::sin(t);
  return m;
}
inline Eigen::Matrix3d drot_y(double t) {
  Eigen::Matrix3d m;
  m << -std::sin(t), 0, std::cos(t), 0, 0, 0, -std::cos(t), 0, -std::sin(t);
  return m;
}
inline Eigen::Matrix3d drot_z(double t) {
  Eigen::Matrix3d m;
  m << -std::sin(t), -std::cos(t), 0, std::cos(t), -std::sin(t), 0, 0, 0, 0;
  return m;
}

}  // namespace detail

/// d(R^T)/d(theta_x), d(R^T)/d(theta_y), d(R^T)/d(theta_z) for the intrinsic
/// X-Y-Z convention above.
inline void rotation_transpose_derivatives(double tx, double ty, double tz,
                                           Eigen::Matrix3d out[3]) {
  const Eigen::Matrix3d rxt = detail::rot_x(tx).transpose();
  const Eigen::Matrix3d ryt = detail::rot_y(ty).transpose();
  const Eigen::Matrix3d rzt = detail::rot_z(tz).transpose();
  out[0] = rzt * ryt * detail::drot_x(tx).transpose();
  out[1] = rzt * detail::drot_y(ty).transpose() * rxt;
  out[2] = detail::drot_z(tz).transpose() * ryt * rxt;
}

/// Signed distance from `point` (world frame) to the rotated rounded cone.
inline double sdf_point(const DesignParams& params, const Vec3& point) {
  const Eigen::Matrix3d rt =
      rotation_matrix(params.theta_x, params.theta_y, params.theta_z)
          .transpose();
  const Eigen::Vector3d pb = rt * point;
  return round_cone_sdf_body<double>(params.r_a, params.r_b, params.length,
                                     pb);
}

/// Signed distance plus exact derivatives w.r.t. the design parameters and
/// the world-frame point.
inline double sdf_point_grad(const DesignParams& params, const Vec3& point,
                             SdfDerivatives& grad) {
  const Eigen::Matrix3d r =
      rotation_matrix(params.theta_x, params.theta_y, params.theta_z);
  const Eigen::Vector3d pb = r.transpose() * point;

  double d_ra, d_rb, d_len;
  Eigen::Vector3d d_pb;
  const double d = detail::round_cone_sdf_body_grad<double>(
      params.r_a, params.r_b, params.length, pb, &d_ra, &d_rb, &d_len, &d_pb);

  Eigen::Matrix3d drt[3];
  rotation_transpose_derivatives(params.theta_x, params.theta_y,
                                 params.theta_z, drt);

  grad.params[0] = d_ra;
  grad.params[1] = d_rb;
  grad.params[2] = d_len;
  for (int a = 0; a < 3; ++a) grad.params[3 + a] = d_pb.dot(drt[a] * point);
  grad.point = r * d_pb;
  return d;
}

}  // namespace flowgrad
