#pragma once

#include "rio/ego_velocity.hpp"
#include "rio/propagation.hpp"
#include "rio/so3.hpp"
#include "rio/state.hpp"
#include "rio/trajectory.hpp"
#include "rio/update.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace rio {

enum class TrajectoryProfile { kSinusoid, kCircle, kFigure8 };

/// Closed-form trajectory parameters. Attitude is yaw ⊗ roll with
/// independent sinusoidal angles; zero amplitudes give a constant pose.
struct TrajectoryParams {
  TrajectoryProfile profile = TrajectoryProfile::kFigure8;
  Vec3 amp = Vec3(3.0, 2.0, 0.4);  // m, per-axis position amplitude
  double omega = 0.5;              // rad/s, base rate of the position profile
  double radius = 5.0;             // m, circle profile only
  double yaw_amp = 0.9;            // rad
  double yaw_omega = 0.9;          // rad/s
  double roll_amp = 0.25;          // rad
  double roll_omega = 1.3;         // rad/s
};

struct SimConfig {
  double duration = 60.0;     // s
  double imu_rate = 200.0;    // Hz
  double radar_rate = 10.0;   // Hz
  double injected_t_d = -0.15;  // s, radar stamps become t_true − injected_t_d
  TrajectoryParams traj;
  NoiseParams imu_noise;
  double radar_doppler_sigma = 0.03;  // m/s
  double outlier_ratio = 0.05;        // fraction of points with gross offsets
  int landmarks_per_scan = 60;
  double fov_azimuth_deg = 60.0;    // half-angle of the forward cone
  double fov_elevation_deg = 15.0;  // half-angle
  double range_min = 1.0;           // m
  double range_max = 30.0;          // m
  std::uint64_t seed = 1;
};

inline void validate(const SimConfig& cfg) {
  if (!(cfg.duration > 0.0) || !(cfg.imu_rate > 0.0) || !(cfg.radar_rate > 0.0)) {
    throw std::invalid_argument("sim config: rates and duration must be positive");
  }
  if (cfg.imu_rate < 10.0 * cfg.radar_rate) {
    throw std::invalid_argument("sim config: imu_rate must be at least 10x radar_rate");
  }
  if (cfg.outlier_ratio < 0.0 || cfg.outlier_ratio > 0.5) {
    throw std::invalid_argument("sim config: outlier_ratio must lie in [0, 0.5]");
  }
  if (cfg.landmarks_per_scan < 1) {
    throw std::invalid_argument("sim config: landmarks_per_scan must be positive");
  }
}

/// Analytic ground truth: pose, velocity, acceleration and body angular rate
/// at any time, all in closed form.
class TruthModel {
 public:
  explicit TruthModel(const TrajectoryParams& traj) : traj_(traj) {}

  Vec3 position(double t) const {
    const TrajectoryParams& c = traj_;
    switch (c.profile) {
      case TrajectoryProfile::kCircle:
        return Vec3(c.radius * std::cos(c.omega * t), c.radius * std::sin(c.omega * t), 0.0);
      case TrajectoryProfile::kSinusoid:
        return Vec3(c.amp.x() * std::sin(c.omega * t),
                    c.amp.y() * std::sin(0.7 * c.omega * t),
                    c.amp.z() * std::sin(1.3 * c.omega * t));
      case TrajectoryProfile::kFigure8:
        return Vec3(c.amp.x() * std::sin(c.omega * t),
                    c.amp.y() * std::sin(2.0 * c.omega * t),
                    c.amp.z() * std::sin(0.8 * c.omega * t));
    }
    return Vec3::Zero();
  }

  Vec3 velocity(double t) const {
    const TrajectoryParams& c = traj_;
    switch (c.profile) {
      case TrajectoryProfile::kCircle:
        return c.radius * c.omega *
               Vec3(-std::sin(c.omega * t), std::cos(c.omega * t), 0.0);
      case TrajectoryProfile::kSinusoid:
        return Vec3(c.amp.x() * c.omega * std::cos(c.omega * t),
                    c.amp.y() * 0.7 * c.omega * std::cos(0.7 * c.omega * t),
                    c.amp.z() * 1.3 * c.omega * std::cos(1.3 * c.omega * t));
      case TrajectoryProfile::kFigure8:
        return Vec3(c.amp.x() * c.omega * std::cos(c.omega * t),
                    c.amp.y() * 2.0 * c.omega * std::cos(2.0 * c.omega * t),
                    c.amp.z() * 0.8 * c.omega * std::cos(0.8 * c.omega * t));
    }
    return Vec3::Zero();
  }

  Vec3 acceleration(double t) const {
    const TrajectoryParams& c = traj_;
    const double w = c.omega;
    switch (c.profile) {
      case TrajectoryProfile::kCircle:
        return -c.radius * w * w * Vec3(std::cos(w * t), std::sin(w * t), 0.0);
      case TrajectoryProfile::kSinusoid:
        return Vec3(-c.amp.x() * w * w * std::sin(w * t),
                    -c.amp.y() * 0.49 * w * w * std::sin(0.7 * w * t),
                    -c.amp.z() * 1.69 * w * w * std::sin(1.3 * w * t));
      case TrajectoryProfile::kFigure8:
        return Vec3(-c.amp.x() * w * w * std::sin(w * t),
                    -c.amp.y() * 4.0 * w * w * std::sin(2.0 * w * t),
                    -c.amp.z() * 0.64 * w * w * std::sin(0.8 * w * t));
    }
    return Vec3::Zero();
  }

  double yaw(double t) const {
    if (traj_.profile == TrajectoryProfile::kCircle) {
      return traj_.omega * t + M_PI / 2.0;  // tangent heading
    }
    return traj_.yaw_amp * std::sin(traj_.yaw_omega * t);
  }

  double yaw_rate(double t) const {
    if (traj_.profile == TrajectoryProfile::kCircle) {
      return traj_.omega;
    }
    return traj_.yaw_amp * traj_.yaw_omega * std::cos(traj_.yaw_omega * t);
  }

  double roll(double t) const {
    if (traj_.profile == TrajectoryProfile::kCircle) {
      return 0.0;
    }
    return traj_.roll_amp * std::sin(traj_.roll_omega * t);
  }

  double roll_rate(double t) const {
    if (traj_.profile == TrajectoryProfile::kCircle) {
      return 0.0;
    }
    return traj_.roll_amp * traj_.roll_omega * std::cos(traj_.roll_omega * t);
  }

  Quat attitude(double t) const {
    return quat_multiply(quat_from_yaw(yaw(t)), quat_from_roll(roll(t)));
  }

  /// Body angular rate of R = Rz(ψ) Rx(φ):
  /// ω = φ̇ e_x + Rx(φ)ᵀ (ψ̇ e_z) = (φ̇, ψ̇ sinφ, ψ̇ cosφ).
  Vec3 angular_rate_body(double t) const {
    const double phi = roll(t);
    const double phid = roll_rate(t);
    const double psid = yaw_rate(t);
    return Vec3(phid, psid * std::sin(phi), psid * std::cos(phi));
  }

  TrajectoryPoint at(double t) const {
    TrajectoryPoint pt;
    pt.stamp = t;
    pt.q_GI = attitude(t);
    pt.p_GI = position(t);
    pt.v_GI = velocity(t);
    return pt;
  }

  Trajectory sample(double rate, double duration) const {
    const int n = static_cast<int>(std::round(duration * rate));
    Trajectory out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
      out.push_back(at(k / rate));
    }
    return out;
  }

 private:
  TrajectoryParams traj_;
};

inline TruthModel generate_truth(const SimConfig& cfg) {
  validate(cfg);
  return TruthModel(cfg.traj);
}

/// IMU measurements on the true clock (the IMU delay is taken as zero):
/// ω_m = ω + b_g(t) + white noise, a_m = R(q)ᵀ(a − g) + b_a(t) + white
/// noise, with seeded random-walk biases.
inline std::vector<ImuSample> synth_imu(const TruthModel& truth, const SimConfig& cfg,
                                        std::mt19937_64& rng) {
  const int n = static_cast<int>(std::round(cfg.duration * cfg.imu_rate));
  const double dt = 1.0 / cfg.imu_rate;
  const double gyro_sigma = cfg.imu_noise.sigma_g * std::sqrt(cfg.imu_rate);
  const double accel_sigma = cfg.imu_noise.sigma_a * std::sqrt(cfg.imu_rate);
  const double bg_walk = cfg.imu_noise.sigma_wg * std::sqrt(dt);
  const double ba_walk = cfg.imu_noise.sigma_wa * std::sqrt(dt);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Vec3 b_g = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
  std::vector<ImuSample> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    const Mat3 rot_t = quat_to_rot(truth.attitude(t)).transpose();
    ImuSample u;
    u.stamp = t;
    for (int i = 0; i < 3; ++i) {
      u.gyro_m(i) = gyro_sigma * gauss(rng);
      u.accel_m(i) = accel_sigma * gauss(rng);
    }
    u.gyro_m += truth.angular_rate_body(t) + b_g;
    u.accel_m += rot_t * (truth.acceleration(t) - cfg.imu_noise.gravity) + b_a;
    out.push_back(u);
    for (int i = 0; i < 3; ++i) {
      b_g(i) += bg_walk * gauss(rng);
      b_a(i) += ba_walk * gauss(rng);
    }
  }
  return out;
}

/// Doppler point clouds at the radar epochs. Landmark directions are drawn
/// per scan inside a forward cone; Doppler follows the true ego-velocity
/// with additive noise, and an outlier fraction gets gross offsets of
/// ±[1,3] m/s. Scan stamps carry the injected offset:
/// stamp = t_true − injected_t_d, so correction_time(stamp, injected_t_d)
/// recovers the true epoch exactly.
inline std::vector<RadarScan> synth_radar(const TruthModel& truth, const SimConfig& cfg,
                                          const Extrinsics& ext, std::mt19937_64& rng) {
  const int n = static_cast<int>(std::round(cfg.duration * cfg.radar_rate));
  const double az_max = cfg.fov_azimuth_deg * M_PI / 180.0;
  const double el_max = cfg.fov_elevation_deg * M_PI / 180.0;
  std::uniform_real_distribution<double> u_az(-az_max, az_max);
  std::uniform_real_distribution<double> u_el(-el_max, el_max);
  std::uniform_real_distribution<double> u_range(cfg.range_min, cfg.range_max);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> u_gross(1.0, 3.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<RadarScan> out;
  out.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double t = j / cfg.radar_rate;
    const Vec3 v_R_true =
        ext.R_RI * (quat_to_rot(truth.attitude(t)).transpose() * truth.velocity(t) +
                    truth.angular_rate_body(t).cross(ext.p_IR));
    RadarScan scan;
    scan.stamp = t - cfg.injected_t_d;
    scan.points.reserve(cfg.landmarks_per_scan);
    for (int i = 0; i < cfg.landmarks_per_scan; ++i) {
      const double az = u_az(rng);
      const double el = u_el(rng);
      const double range = u_range(rng);
      const Vec3 dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      RadarPoint pt;
      pt.p_R = range * dir;
      pt.doppler = -v_R_true.dot(dir) + cfg.radar_doppler_sigma * gauss(rng);
      if (u01(rng) < cfg.outlier_ratio) {
        pt.doppler += (u01(rng) < 0.5 ? -1.0 : 1.0) * u_gross(rng);
      }
      scan.points.push_back(pt);
    }
    out.push_back(scan);
  }
  return out;
}

}  // namespace rio
