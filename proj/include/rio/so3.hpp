#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace rio {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;  // Hamilton convention, ctor order (w,x,y,z)

/// Skew-symmetric matrix of v, so that skew(v) * w == v.cross(w).
inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

/// Hamilton product a ⊗ b, renormalized.
inline Quat quat_multiply(const Quat& a, const Quat& b) {
  Quat q = a * b;
  q.normalize();
  return q;
}

inline Mat3 quat_to_rot(const Quat& q) { return q.toRotationMatrix(); }

/// Quaternion-rate matrix: q̇ = ½ Ω(ω) q with q stored (w,x,y,z).
/// Block form [[0, -ωᵀ], [ω, -skew(ω)]]; equals the right-multiplication
/// matrix of the pure quaternion (0, ω).
inline Mat4 omega_matrix(const Vec3& w) {
  Mat4 m;
  m(0, 0) = 0.0;
  m.block<1, 3>(0, 1) = -w.transpose();
  m.block<3, 1>(1, 0) = w;
  m.block<3, 3>(1, 1) = -skew(w);
  return m;
}

/// First-order error quaternion [1, ½θ], normalized. Valid for any θ thanks
/// to the normalization, accurate to O(‖θ‖²) against the exponential map
/// (‖θ‖ ≲ 1e-3 keeps the gap below 1e-7).
inline Quat small_angle_quat(const Vec3& theta) {
  Quat q(1.0, 0.5 * theta.x(), 0.5 * theta.y(), 0.5 * theta.z());
  q.normalize();
  return q;
}

/// Exact exponential map: rotation by ‖θ‖ about θ/‖θ‖.
inline Quat axis_angle_quat(const Vec3& theta) {
  const double angle = theta.norm();
  if (angle < 1e-12) {
    return small_angle_quat(theta);
  }
  const Vec3 axis = theta / angle;
  const double half = 0.5 * angle;
  const double s = std::sin(half);
  return Quat(std::cos(half), s * axis.x(), s * axis.y(), s * axis.z());
}

/// Rotation-vector log of a unit quaternion (inverse of axis_angle_quat).
/// Sign chosen so the scalar part is treated as positive (shortest arc).
inline Vec3 quat_log(const Quat& q_in) {
  Quat q = q_in;
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  const Vec3 v(q.x(), q.y(), q.z());
  const double vn = v.norm();
  if (vn < 1e-12) {
    return 2.0 * v;  // first order, exact at identity
  }
  const double angle = 2.0 * std::atan2(vn, q.w());
  return (angle / vn) * v;
}

inline Quat quat_from_yaw(double yaw) {
  const double h = 0.5 * yaw;
  return Quat(std::cos(h), 0.0, 0.0, std::sin(h));
}

inline Quat quat_from_roll(double roll) {
  const double h = 0.5 * roll;
  return Quat(std::cos(h), std::sin(h), 0.0, 0.0);
}

}  // namespace rio
