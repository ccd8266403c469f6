#pragma once

#include "rio/so3.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace rio {

// Error-state block layout. The same ordering is used for the columns of F,
// G and H; changing it silently breaks every Jacobian.
namespace idx {
constexpr int kTheta = 0;  // attitude error (3)
constexpr int kBg = 3;     // gyro bias (3)
constexpr int kVel = 6;    // velocity (3)
constexpr int kBa = 9;     // accel bias (3)
constexpr int kPos = 12;   // position (3)
constexpr int kTd = 15;    // time offset (1)
constexpr int kErrorDim = 16;

// Process-noise vector ordering (n_g, n_wg, n_a, n_wa, n_d).
constexpr int kNg = 0;
constexpr int kNwg = 3;
constexpr int kNa = 6;
constexpr int kNwa = 9;
constexpr int kNd = 12;
constexpr int kNoiseDim = 13;
}  // namespace idx

using ErrorState = Eigen::Matrix<double, idx::kErrorDim, 1>;
using Covariance = Eigen::Matrix<double, idx::kErrorDim, idx::kErrorDim>;
using NoiseCov = Eigen::Matrix<double, idx::kNoiseDim, idx::kNoiseDim>;

/// Full filter state. Attitude maps IMU frame to global; t_d maps a radar
/// timestamp t onto the IMU stream as t' = t + t_d.
struct NominalState {
  Quat q_GI = Quat::Identity();
  Vec3 b_g = Vec3::Zero();
  Vec3 v_GI = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
  Vec3 p_GI = Vec3::Zero();
  double t_d = 0.0;
  double stamp = 0.0;  // filter time on the IMU stream
};

/// Continuous-time noise densities (per √Hz) plus the gravity vector.
struct NoiseParams {
  double sigma_g = 1e-3;    // rad/s/√Hz
  double sigma_wg = 1e-5;   // rad/s²/√Hz
  double sigma_a = 1e-2;    // m/s²/√Hz
  double sigma_wa = 1e-4;   // m/s³/√Hz
  double sigma_td = 2e-3;   // s/√s
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
};

inline NoiseCov noise_covariance(const NoiseParams& n) {
  NoiseCov q = NoiseCov::Zero();
  q.diagonal().segment<3>(idx::kNg).setConstant(n.sigma_g * n.sigma_g);
  q.diagonal().segment<3>(idx::kNwg).setConstant(n.sigma_wg * n.sigma_wg);
  q.diagonal().segment<3>(idx::kNa).setConstant(n.sigma_a * n.sigma_a);
  q.diagonal().segment<3>(idx::kNwa).setConstant(n.sigma_wa * n.sigma_wa);
  q(idx::kNd, idx::kNd) = n.sigma_td * n.sigma_td;
  return q;
}

/// Applies the error state to the nominal state: additive on all vector
/// blocks and t_d, right-multiplicative on the attitude,
/// q ← q̂ ⊗ [1, ½θ].
inline NominalState inject_error(const NominalState& x, const ErrorState& dx) {
  if (!dx.allFinite()) {
    throw std::invalid_argument("inject_error: non-finite error state");
  }
  NominalState out = x;
  out.q_GI = quat_multiply(x.q_GI, small_angle_quat(dx.segment<3>(idx::kTheta)));
  out.b_g += dx.segment<3>(idx::kBg);
  out.v_GI += dx.segment<3>(idx::kVel);
  out.b_a += dx.segment<3>(idx::kBa);
  out.p_GI += dx.segment<3>(idx::kPos);
  out.t_d += dx(idx::kTd);
  return out;
}

/// Post-injection covariance reset: the error mean is implicitly zero and
/// the reset Jacobian is taken as identity, so only symmetry is enforced.
inline Covariance reset_error(const Covariance& p) {
  return 0.5 * (p + p.transpose());
}

inline void symmetrize(Covariance& p) { p = 0.5 * (p + p.transpose()).eval(); }

inline double min_eigenvalue(const Covariance& p) {
  Eigen::SelfAdjointEigenSolver<Covariance> es(p, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Per-block initial covariance diagonal. Defaults follow no published
/// values (the paper gives none); the t_d prior is loose enough to reach
/// offsets of a few hundred ms.
struct InitialCovariance {
  double att = 1e-2;      // rad²
  double bg = 1e-4;       // (rad/s)²
  double vel = 1e-2;      // (m/s)²
  double ba = 1e-4;       // (m/s²)²
  double pos = 0.0;       // m²
  double td = 2.5e-3;     // s², i.e. (0.05 s)²
};

inline Covariance make_initial_covariance(const InitialCovariance& c) {
  Covariance p = Covariance::Zero();
  p.diagonal().segment<3>(idx::kTheta).setConstant(c.att);
  p.diagonal().segment<3>(idx::kBg).setConstant(c.bg);
  p.diagonal().segment<3>(idx::kVel).setConstant(c.vel);
  p.diagonal().segment<3>(idx::kBa).setConstant(c.ba);
  p.diagonal().segment<3>(idx::kPos).setConstant(c.pos);
  p(idx::kTd, idx::kTd) = c.td;
  return p;
}

}  // namespace rio
