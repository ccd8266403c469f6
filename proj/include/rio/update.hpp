#pragma once

#include "rio/ego_velocity.hpp"
#include "rio/propagation.hpp"
#include "rio/so3.hpp"
#include "rio/state.hpp"

#include <Eigen/Dense>

namespace rio {

/// IMU→radar extrinsics, pre-calibrated and constant for a run.
struct Extrinsics {
  Mat3 R_RI = Mat3::Identity();  // radar attitude relative to IMU
  Vec3 p_IR = Vec3::Zero();      // radar lever arm in the IMU frame, m
};

using MeasJacobian = Eigen::Matrix<double, 3, idx::kErrorDim>;

/// Predicted radar ego-velocity at filter time t′:
/// ᴿv̂_R = ᴿR_I (R(q̂)ᵀ v̂ + ⌊(ω_m − b̂_g)×⌋ ᴵp_R),
/// with u′ the IMU measurement interpolated at t′.
inline Vec3 predict_ego_velocity(const NominalState& x, const ImuSample& u_prime,
                                 const Extrinsics& ext) {
  const Vec3 w_hat = u_prime.gyro_m - x.b_g;
  return ext.R_RI * (quat_to_rot(x.q_GI).transpose() * x.v_GI + w_hat.cross(ext.p_IR));
}

inline Vec3 compute_residual(const EgoVelocityEstimate& meas, const Vec3& predicted) {
  return meas.v_R - predicted;
}

/// Measurement Jacobian in error-state order. Non-zero blocks:
///   H_q  = ᴿR_I ⌊R(q̂)ᵀ v̂ ×⌋          (attitude)
///   H_bg = ᴿR_I ⌊ᴵp_R ×⌋              (gyro bias)
///   H_v  = ᴿR_I R(q̂)ᵀ                 (velocity)
///   H_td = H_q ω̂(t′) + H_v (R(q̂) â(t′) + g)   (time offset, chain rule
///          through the attitude and velocity rates at t′)
/// The accel-bias and position columns are zero.
inline MeasJacobian compute_H(const NominalState& x, const ImuSample& u_prime,
                              const Extrinsics& ext, const Vec3& gravity) {
  const Mat3 rot_t = quat_to_rot(x.q_GI).transpose();
  const Mat3 h_q = ext.R_RI * skew(rot_t * x.v_GI);
  const Mat3 h_bg = ext.R_RI * skew(ext.p_IR);
  const Mat3 h_v = ext.R_RI * rot_t;
  const Vec3 w_hat = u_prime.gyro_m - x.b_g;
  const Vec3 a_hat = u_prime.accel_m - x.b_a;
  const Vec3 h_td = h_q * w_hat + h_v * (rot_t.transpose() * a_hat + gravity);

  MeasJacobian h = MeasJacobian::Zero();
  h.block<3, 3>(0, idx::kTheta) = h_q;
  h.block<3, 3>(0, idx::kBg) = h_bg;
  h.block<3, 3>(0, idx::kVel) = h_v;
  h.col(idx::kTd) = h_td;
  return h;
}

struct UpdateConfig {
  bool joseph_form = true;  // false replicates the plain (I−KH)P form
  bool chi2_gate = false;
  double chi2_threshold = 13.9314226655;  // 3-dof 0.997 quantile
};

enum class UpdateStatus {
  kApplied,
  kSkippedSingular,
  kGated,
};

struct UpdateOutcome {
  UpdateStatus status = UpdateStatus::kSkippedSingular;
  double nis = 0.0;  // rᵀ S⁻¹ r
  ErrorState correction = ErrorState::Zero();
};

/// EKF update: K = PHᵀ(HPHᵀ+R)⁻¹, δx = Kr injected into the nominal state,
/// covariance via Joseph form (or plain (I−KH)P when configured), symmetrized.
inline UpdateOutcome kalman_update(NominalState& x, Covariance& p, const Vec3& r,
                                   const MeasJacobian& h, const Mat3& r_meas,
                                   const UpdateConfig& cfg) {
  UpdateOutcome out;
  const Mat3 s = h * p * h.transpose() + r_meas;
  const Eigen::LDLT<Mat3> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff()) {
    out.status = UpdateStatus::kSkippedSingular;
    return out;
  }
  out.nis = r.dot(ldlt.solve(r));
  if (cfg.chi2_gate && out.nis > cfg.chi2_threshold) {
    out.status = UpdateStatus::kGated;
    return out;
  }

  const Eigen::Matrix<double, idx::kErrorDim, 3> k = p * h.transpose() * ldlt.solve(Mat3::Identity());
  out.correction = k * r;
  x = inject_error(x, out.correction);

  const Covariance i_kh = Covariance::Identity() - k * h;
  if (cfg.joseph_form) {
    p = i_kh * p * i_kh.transpose() + k * r_meas * k.transpose();
  } else {
    p = i_kh * p;
  }
  p = reset_error(p);
  out.status = UpdateStatus::kApplied;
  return out;
}

}  // namespace rio
