#pragma once

#include "rio/ego_velocity.hpp"
#include "rio/propagation.hpp"
#include "rio/state.hpp"
#include "rio/update.hpp"

#include <cstdint>
#include <random>

namespace rio {

enum class MeasNoiseMode {
  kLsq,    // covariance from the RANSAC-LSQ fit
  kFixed,  // fixed diagonal σ_r² I
};

struct FilterConfig {
  NoiseParams noise;
  Extrinsics extrinsics;
  InitialCovariance initial_cov;
  RansacConfig ransac;
  UpdateConfig update;
  MeasNoiseMode meas_noise_mode = MeasNoiseMode::kLsq;
  double meas_sigma_fixed = 0.05;  // m/s, used in kFixed mode
  double t_d_init = 0.0;
  std::uint64_t seed = 1;
};

/// Outcome of handing one radar scan to the filter.
struct ScanOutcome {
  EgoStatus ego_status = EgoStatus::kTooFewPoints;
  UpdateStatus update_status = UpdateStatus::kSkippedSingular;
  bool applied = false;
  Vec3 residual = Vec3::Zero();
  double nis = 0.0;
  int n_inliers = 0;
};

/// Error-state EKF over (attitude, gyro bias, velocity, accel bias,
/// position, IMU–radar time offset). One instance is single-threaded;
/// independent instances may run in parallel.
class Filter {
 public:
  explicit Filter(const FilterConfig& cfg)
      : cfg_(cfg), rng_(cfg.seed), q_c_(noise_covariance(cfg.noise)) {
    x_.t_d = cfg.t_d_init;
    p_ = make_initial_covariance(cfg.initial_cov);
  }

  /// Seeds the nominal state; stamp becomes the filter's time origin.
  void initialize(double stamp, const Quat& q_GI, const Vec3& p_GI, const Vec3& v_GI) {
    x_.stamp = stamp;
    x_.q_GI = q_GI.normalized();
    x_.p_GI = p_GI;
    x_.v_GI = v_GI;
    initialized_ = true;
  }

  /// One propagation step of length dt from the current stamp. u0 holds at
  /// the interval start, u1 at or beyond its end (partial intervals stop
  /// short of u1.stamp). F and G are held at the interval start.
  void propagate(const ImuSample& u0, const ImuSample& u1, double dt) {
    const auto f = compute_F(x_, interpolate_imu(u0, u1, x_.stamp));
    const auto g = compute_G(x_);
    x_ = rk4_step(x_, u0, u1, dt, cfg_.noise);
    p_ = propagate_covariance(p_, f, g, q_c_, dt);
  }

  /// Ego-velocity estimation plus EKF update. u_prime is the IMU
  /// measurement interpolated at the corrected scan time t′.
  ScanOutcome process_scan(const RadarScan& scan, const ImuSample& u_prime) {
    ScanOutcome out;
    const EgoVelocityResult ego = ransac_estimate(scan, cfg_.ransac, rng_);
    out.ego_status = ego.status;
    if (!ego.ok()) {
      return out;
    }
    out.n_inliers = ego.estimate.n_inliers;

    const Vec3 predicted = predict_ego_velocity(x_, u_prime, cfg_.extrinsics);
    const Vec3 r = compute_residual(ego.estimate, predicted);
    const MeasJacobian h = compute_H(x_, u_prime, cfg_.extrinsics, cfg_.noise.gravity);
    const Mat3 r_meas = cfg_.meas_noise_mode == MeasNoiseMode::kFixed
                            ? Mat3(cfg_.meas_sigma_fixed * cfg_.meas_sigma_fixed *
                                   Mat3::Identity())
                            : ego.estimate.meas_cov;

    const UpdateOutcome upd = kalman_update(x_, p_, r, h, r_meas, cfg_.update);
    out.update_status = upd.status;
    out.applied = upd.status == UpdateStatus::kApplied;
    out.residual = r;
    out.nis = upd.nis;
    return out;
  }

  bool initialized() const { return initialized_; }
  double stamp() const { return x_.stamp; }
  double td() const { return x_.t_d; }
  double td_sigma() const { return std::sqrt(std::max(0.0, p_(idx::kTd, idx::kTd))); }
  const NominalState& state() const { return x_; }
  const Covariance& covariance() const { return p_; }
  const FilterConfig& config() const { return cfg_; }

  NominalState& mutable_state() { return x_; }
  Covariance& mutable_covariance() { return p_; }

 private:
  FilterConfig cfg_;
  NominalState x_;
  Covariance p_ = Covariance::Zero();
  std::mt19937_64 rng_;
  NoiseCov q_c_;
  bool initialized_ = false;
};

}  // namespace rio
