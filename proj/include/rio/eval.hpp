#pragma once

#include "rio/propagation.hpp"
#include "rio/so3.hpp"
#include "rio/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rio {

struct PoseMetrics {
  double trans_m = 0.0;
  double rot_deg = 0.0;
};

namespace detail {

inline double geodesic_angle_deg(const Mat3& r) {
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

}  // namespace detail

/// Nearest-timestamp association (est index, ref index) within tolerance.
/// Throws when no pair associates.
inline std::vector<std::pair<int, int>> associate(const Trajectory& est, const Trajectory& ref,
                                                  double tolerance = 0.01) {
  if (est.empty() || ref.empty()) {
    throw std::runtime_error("associate: empty trajectory");
  }
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < static_cast<int>(est.size()); ++i) {
    const double t = est[i].stamp;
    auto it = std::lower_bound(ref.begin(), ref.end(), t,
                               [](const TrajectoryPoint& p, double v) { return p.stamp < v; });
    int best = -1;
    double best_dt = tolerance;
    if (it != ref.end() && std::abs(it->stamp - t) <= best_dt) {
      best = static_cast<int>(it - ref.begin());
      best_dt = std::abs(it->stamp - t);
    }
    if (it != ref.begin() && std::abs((it - 1)->stamp - t) <= best_dt) {
      best = static_cast<int>(it - 1 - ref.begin());
    }
    if (best >= 0) {
      pairs.emplace_back(i, best);
    }
  }
  if (pairs.empty()) {
    throw std::runtime_error("associate: no timestamp overlap within tolerance");
  }
  return pairs;
}

/// Rigidly moves the estimate so its first associated pose coincides with
/// the reference's first associated pose. Relative poses are unchanged.
inline Trajectory origin_align(const Trajectory& est, const Trajectory& ref,
                               double tolerance = 0.01) {
  const auto pairs = associate(est, ref, tolerance);
  const TrajectoryPoint& e0 = est[pairs.front().first];
  const TrajectoryPoint& r0 = ref[pairs.front().second];
  const Quat q_align = r0.q_GI * e0.q_GI.conjugate();
  const Mat3 rot_align = quat_to_rot(q_align);
  const Vec3 t_align = r0.p_GI - rot_align * e0.p_GI;

  Trajectory out = est;
  for (TrajectoryPoint& pt : out) {
    pt.p_GI = rot_align * pt.p_GI + t_align;
    pt.q_GI = quat_multiply(q_align, pt.q_GI);
    pt.v_GI = rot_align * pt.v_GI;
  }
  return out;
}

/// RMSE of absolute pose error over the association: translation in meters,
/// rotation as the geodesic angle of R_refᵀ R_est in degrees.
inline PoseMetrics ape_rmse(const Trajectory& est, const Trajectory& ref,
                            double tolerance = 0.01) {
  const auto pairs = associate(est, ref, tolerance);
  double sum_t2 = 0.0;
  double sum_r2 = 0.0;
  for (const auto& [i, j] : pairs) {
    sum_t2 += (est[i].p_GI - ref[j].p_GI).squaredNorm();
    const Mat3 dr = quat_to_rot(ref[j].q_GI).transpose() * quat_to_rot(est[i].q_GI);
    const double ang = detail::geodesic_angle_deg(dr);
    sum_r2 += ang * ang;
  }
  PoseMetrics m;
  m.trans_m = std::sqrt(sum_t2 / pairs.size());
  m.rot_deg = std::sqrt(sum_r2 / pairs.size());
  return m;
}

/// RMSE of relative pose error over disjoint reference-path intervals of
/// interval_m meters: pairs (i, j) are chosen where the reference arc length
/// from i first reaches interval_m; the error is the relative-pose
/// discrepancy (T_ref(i,j))⁻¹ T_est(i,j). Returns nullopt when the
/// reference path is shorter than one interval.
inline std::optional<PoseMetrics> rpe_rmse(const Trajectory& est, const Trajectory& ref,
                                           double interval_m = 10.0, double tolerance = 0.01) {
  const auto pairs = associate(est, ref, tolerance);
  std::vector<double> arc(pairs.size(), 0.0);
  for (size_t k = 1; k < pairs.size(); ++k) {
    arc[k] = arc[k - 1] +
             (ref[pairs[k].second].p_GI - ref[pairs[k - 1].second].p_GI).norm();
  }

  double sum_t2 = 0.0;
  double sum_r2 = 0.0;
  int count = 0;
  size_t anchor = 0;
  for (size_t k = 1; k < pairs.size(); ++k) {
    if (arc[k] - arc[anchor] < interval_m) {
      continue;
    }
    const auto& [ei, ri] = pairs[anchor];
    const auto& [ej, rj] = pairs[k];
    const Mat3 r_ref_i = quat_to_rot(ref[ri].q_GI);
    const Mat3 r_est_i = quat_to_rot(est[ei].q_GI);
    // Relative motions over the interval in each trajectory's own frame.
    const Mat3 dr_ref = r_ref_i.transpose() * quat_to_rot(ref[rj].q_GI);
    const Vec3 dp_ref = r_ref_i.transpose() * (ref[rj].p_GI - ref[ri].p_GI);
    const Mat3 dr_est = r_est_i.transpose() * quat_to_rot(est[ej].q_GI);
    const Vec3 dp_est = r_est_i.transpose() * (est[ej].p_GI - est[ei].p_GI);
    // Discrepancy (ΔT_ref)⁻¹ ΔT_est.
    const Mat3 dr_err = dr_ref.transpose() * dr_est;
    const Vec3 dp_err = dr_ref.transpose() * (dp_est - dp_ref);
    sum_t2 += dp_err.squaredNorm();
    const double ang = detail::geodesic_angle_deg(dr_err);
    sum_r2 += ang * ang;
    ++count;
    anchor = k;
  }
  if (count == 0) {
    return std::nullopt;
  }
  PoseMetrics m;
  m.trans_m = std::sqrt(sum_t2 / count);
  m.rot_deg = std::sqrt(sum_r2 / count);
  return m;
}

/// Motion-intensity measure: norm of the mean gyroscope measurement over
/// the window [t − window, t].
inline double delta_omega(const std::vector<ImuSample>& imu, double t, double window = 0.11) {
  if (imu.empty() || imu.front().stamp > t - window || imu.back().stamp < t) {
    throw std::runtime_error("delta_omega: window not covered by IMU samples");
  }
  Vec3 sum = Vec3::Zero();
  int count = 0;
  for (const ImuSample& u : imu) {
    if (u.stamp >= t - window && u.stamp <= t) {
      sum += u.gyro_m;
      ++count;
    }
  }
  if (count == 0) {
    throw std::runtime_error("delta_omega: no samples in window");
  }
  return (sum / count).norm();
}

}  // namespace rio
