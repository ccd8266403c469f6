#pragma once

#include "rio/so3.hpp"
#include "rio/state.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace rio {

struct ImuSample {
  double stamp = 0.0;  // s, arrival timestamp (IMU stream time)
  Vec3 gyro_m = Vec3::Zero();   // rad/s
  Vec3 accel_m = Vec3::Zero();  // m/s²
};

inline bool is_finite(const ImuSample& u) {
  return std::isfinite(u.stamp) && u.gyro_m.allFinite() && u.accel_m.allFinite();
}

/// Linear interpolation between two samples at time t. Outside [u0, u1] the
/// weight is clamped; identical stamps return u0.
inline ImuSample interpolate_imu(const ImuSample& u0, const ImuSample& u1, double t) {
  const double span = u1.stamp - u0.stamp;
  double w = span > 0.0 ? (t - u0.stamp) / span : 0.0;
  w = std::clamp(w, 0.0, 1.0);
  ImuSample out;
  out.stamp = t;
  out.gyro_m = (1.0 - w) * u0.gyro_m + w * u1.gyro_m;
  out.accel_m = (1.0 - w) * u0.accel_m + w * u1.accel_m;
  return out;
}

/// Time derivative of the nominal state under one IMU sample. Biases and the
/// time offset are constant; attitude follows q̇ = ½ Ω(ω̂) q with
/// ω̂ = ω_m − b_g, velocity follows v̇ = R(q)(a_m − b_a) + g.
struct StateRates {
  Vec4 q_dot = Vec4::Zero();  // (w,x,y,z) order
  Vec3 v_dot = Vec3::Zero();
  Vec3 p_dot = Vec3::Zero();
};

inline StateRates continuous_dynamics(const NominalState& x, const ImuSample& u,
                                      const NoiseParams& noise) {
  const Vec3 w_hat = u.gyro_m - x.b_g;
  const Vec3 a_hat = u.accel_m - x.b_a;
  StateRates r;
  const Vec4 q_vec(x.q_GI.w(), x.q_GI.x(), x.q_GI.y(), x.q_GI.z());
  r.q_dot = 0.5 * omega_matrix(w_hat) * q_vec;
  r.v_dot = quat_to_rot(x.q_GI) * a_hat + noise.gravity;
  r.p_dot = x.v_GI;
  return r;
}

namespace detail {

inline NominalState advance(const NominalState& x, const StateRates& k, double h) {
  NominalState y = x;
  Vec4 q(x.q_GI.w(), x.q_GI.x(), x.q_GI.y(), x.q_GI.z());
  q += h * k.q_dot;
  y.q_GI = Quat(q(0), q(1), q(2), q(3));  // normalized at the end of the step
  y.v_GI += h * k.v_dot;
  y.p_GI += h * k.p_dot;
  return y;
}

}  // namespace detail

/// One RK4 step of length dt starting at x.stamp. u0 holds at the interval
/// start, u1 at (or beyond) its end; stage inputs are linearly interpolated
/// by stamp, which supports stopping partway through an IMU interval.
inline NominalState rk4_step(const NominalState& x, const ImuSample& u0,
                             const ImuSample& u1, double dt,
                             const NoiseParams& noise) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("rk4_step: dt must be positive");
  }
  const double t0 = x.stamp;
  const ImuSample u_mid = interpolate_imu(u0, u1, t0 + 0.5 * dt);
  const ImuSample u_end = interpolate_imu(u0, u1, t0 + dt);
  const ImuSample u_beg = interpolate_imu(u0, u1, t0);

  const StateRates k1 = continuous_dynamics(x, u_beg, noise);
  const StateRates k2 = continuous_dynamics(detail::advance(x, k1, 0.5 * dt), u_mid, noise);
  const StateRates k3 = continuous_dynamics(detail::advance(x, k2, 0.5 * dt), u_mid, noise);
  const StateRates k4 = continuous_dynamics(detail::advance(x, k3, dt), u_end, noise);

  StateRates sum;
  sum.q_dot = (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot) / 6.0;
  sum.v_dot = (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot) / 6.0;
  sum.p_dot = (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot) / 6.0;

  NominalState out = detail::advance(x, sum, dt);
  out.q_GI.normalize();
  out.stamp = t0 + dt;
  return out;
}

/// Continuous-time error-state Jacobian. Non-zero blocks only:
///   F(θ,θ) = −⌊ω̂×⌋   F(θ,b_g) = −I
///   F(v,θ) = −R(q̂)⌊â×⌋   F(v,b_a) = −R(q̂)
///   F(p,v) = I
/// The t_d row and column stay zero (random-walk offset).
inline Eigen::Matrix<double, idx::kErrorDim, idx::kErrorDim> compute_F(
    const NominalState& x, const ImuSample& u) {
  using M = Eigen::Matrix<double, idx::kErrorDim, idx::kErrorDim>;
  const Vec3 w_hat = u.gyro_m - x.b_g;
  const Vec3 a_hat = u.accel_m - x.b_a;
  const Mat3 rot = quat_to_rot(x.q_GI);
  M f = M::Zero();
  f.block<3, 3>(idx::kTheta, idx::kTheta) = -skew(w_hat);
  f.block<3, 3>(idx::kTheta, idx::kBg) = -Mat3::Identity();
  f.block<3, 3>(idx::kVel, idx::kTheta) = -rot * skew(a_hat);
  f.block<3, 3>(idx::kVel, idx::kBa) = -rot;
  f.block<3, 3>(idx::kPos, idx::kVel) = Mat3::Identity();
  return f;
}

/// Noise input Jacobian, columns ordered (n_g, n_wg, n_a, n_wa, n_d).
inline Eigen::Matrix<double, idx::kErrorDim, idx::kNoiseDim> compute_G(
    const NominalState& x) {
  Eigen::Matrix<double, idx::kErrorDim, idx::kNoiseDim> g =
      Eigen::Matrix<double, idx::kErrorDim, idx::kNoiseDim>::Zero();
  g.block<3, 3>(idx::kTheta, idx::kNg) = -Mat3::Identity();
  g.block<3, 3>(idx::kBg, idx::kNwg) = Mat3::Identity();
  g.block<3, 3>(idx::kVel, idx::kNa) = -quat_to_rot(x.q_GI);
  g.block<3, 3>(idx::kBa, idx::kNwa) = Mat3::Identity();
  g(idx::kTd, idx::kNd) = 1.0;
  return g;
}

/// Discrete covariance propagation over one interval. The transition matrix
/// is the second-order truncation Φ = I + F·dt + ½(F·dt)² and the process
/// noise uses the trapezoidal form Qₖ = ½(Φ G Qc Gᵀ Φᵀ + G Qc Gᵀ)·dt.
inline Covariance propagate_covariance(
    const Covariance& p,
    const Eigen::Matrix<double, idx::kErrorDim, idx::kErrorDim>& f,
    const Eigen::Matrix<double, idx::kErrorDim, idx::kNoiseDim>& g,
    const NoiseCov& q_c, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("propagate_covariance: dt must be positive");
  }
  using M = Eigen::Matrix<double, idx::kErrorDim, idx::kErrorDim>;
  const M f_dt = f * dt;
  const M phi = M::Identity() + f_dt + 0.5 * f_dt * f_dt;
  const M gqg = g * q_c * g.transpose();
  const M q_k = 0.5 * dt * (phi * gqg * phi.transpose() + gqg);
  Covariance out = phi * p * phi.transpose() + q_k;
  symmetrize(out);
  return out;
}

}  // namespace rio
