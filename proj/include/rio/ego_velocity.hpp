#pragma once

#include "rio/so3.hpp"

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <vector>

namespace rio {

struct RadarPoint {
  Vec3 p_R = Vec3::Zero();  // position in the radar frame, m
  double doppler = 0.0;     // radial velocity, m/s
};

struct RadarScan {
  double stamp = 0.0;  // s, arrival timestamp
  std::vector<RadarPoint> points;
};

struct EgoVelocityEstimate {
  Vec3 v_R = Vec3::Zero();          // radar ego-velocity, m/s
  std::vector<int> inlier_indices;  // indices into the original scan
  Mat3 meas_cov = Mat3::Zero();     // (m/s)²
  int n_inliers = 0;
};

enum class EgoStatus {
  kOk,
  kTooFewPoints,
  kDegenerateGeometry,
  kNoConsensus,
};

struct EgoVelocityResult {
  EgoStatus status = EgoStatus::kTooFewPoints;
  EgoVelocityEstimate estimate;
  bool ok() const { return status == EgoStatus::kOk; }
};

struct RansacConfig {
  int iterations = 100;
  double inlier_threshold = 0.1;   // m/s Doppler residual
  double min_inlier_ratio = 0.3;
  int min_points = 8;
  double min_range = 0.25;         // m, near-field clutter cut
  double sigma_floor = 0.01;       // m/s, residual-variance floor
  double cov_eigen_floor = 1e-6;   // (m/s)², measurement covariance floor
  double max_condition = 1e3;      // direction-matrix conditioning limit
  double zero_doppler_fraction = 0.8;  // stationary shortcut trigger
};

/// Doppler of a static point at p seen from a radar moving at v_R:
/// v_d = −v_R · p / ‖p‖.
inline double doppler_predict(const Vec3& v_R, const Vec3& p) {
  const double n = p.norm();
  if (!(n > 0.0)) {
    throw std::invalid_argument("doppler_predict: zero-norm point");
  }
  return -v_R.dot(p) / n;
}

namespace detail {

inline Mat3 floor_eigenvalues(const Mat3& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  Vec3 ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Least squares over ≥3 points: minimizes Σ (v_d + u·v)² with u = p/‖p‖.
/// The covariance is σ̂²(AᵀA)⁻¹ with σ̂² the unbiased residual variance,
/// floored so a lucky scan cannot collapse the filter's measurement noise.
inline EgoStatus lsq_solve(const std::vector<RadarPoint>& points, const RansacConfig& cfg,
                           Vec3* v_R, Mat3* meas_cov) {
  const int n = static_cast<int>(points.size());
  if (n < 3) {
    return EgoStatus::kTooFewPoints;
  }
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const double r = points[i].p_R.norm();
    if (!(r > 0.0)) {
      return EgoStatus::kDegenerateGeometry;
    }
    a.row(i) = (points[i].p_R / r).transpose();
    b(i) = -points[i].doppler;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues()(2);
  if (!(smin > 0.0) || svd.singularValues()(0) / smin > cfg.max_condition) {
    return EgoStatus::kDegenerateGeometry;
  }
  const Vec3 v = svd.solve(b);
  const double dof = std::max(1, n - 3);
  const double rss = (a * v - b).squaredNorm();
  const double sigma2 = std::max(rss / dof, cfg.sigma_floor * cfg.sigma_floor);
  const Mat3 ata_inv = (a.transpose() * a).inverse();
  if (v_R != nullptr) {
    *v_R = v;
  }
  if (meas_cov != nullptr) {
    *meas_cov = detail::floor_eigenvalues(sigma2 * ata_inv, cfg.cov_eigen_floor);
  }
  return EgoStatus::kOk;
}

/// 3-point RANSAC followed by least squares on the consensus set.
/// Deterministic for a given rng state. Degenerate minimal samples are
/// redrawn without consuming an iteration.
inline EgoVelocityResult ransac_estimate(const RadarScan& scan, const RansacConfig& cfg,
                                         std::mt19937_64& rng) {
  EgoVelocityResult result;

  std::vector<int> usable;
  usable.reserve(scan.points.size());
  for (int i = 0; i < static_cast<int>(scan.points.size()); ++i) {
    const RadarPoint& pt = scan.points[i];
    if (pt.p_R.allFinite() && std::isfinite(pt.doppler) && pt.p_R.norm() > cfg.min_range) {
      usable.push_back(i);
    }
  }
  const int n = static_cast<int>(usable.size());
  if (n < std::max(3, cfg.min_points)) {
    result.status = EgoStatus::kTooFewPoints;
    return result;
  }

  // Stationary shortcut: RANSAC geometry degenerates at standstill, but a
  // scan dominated by near-zero Doppler pins v_R = 0 directly.
  int n_zero = 0;
  for (int i : usable) {
    if (std::abs(scan.points[i].doppler) < cfg.inlier_threshold) {
      ++n_zero;
    }
  }
  if (n_zero >= static_cast<int>(cfg.zero_doppler_fraction * n) && n_zero >= 3) {
    result.status = EgoStatus::kOk;
    result.estimate.v_R = Vec3::Zero();
    result.estimate.meas_cov = cfg.sigma_floor * cfg.sigma_floor * Mat3::Identity();
    for (int i : usable) {
      if (std::abs(scan.points[i].doppler) < cfg.inlier_threshold) {
        result.estimate.inlier_indices.push_back(i);
      }
    }
    result.estimate.n_inliers = static_cast<int>(result.estimate.inlier_indices.size());
    return result;
  }

  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<int> best_inliers;
  const int max_draws = 100 * cfg.iterations;
  int draws = 0;
  for (int it = 0; it < cfg.iterations && draws < max_draws; ++it) {
    int ia = usable[pick(rng)];
    int ib = usable[pick(rng)];
    int ic = usable[pick(rng)];
    ++draws;
    if (ia == ib || ia == ic || ib == ic) {
      --it;
      continue;
    }
    Mat3 a;
    Vec3 b;
    const int sample[3] = {ia, ib, ic};
    for (int k = 0; k < 3; ++k) {
      const RadarPoint& pt = scan.points[sample[k]];
      a.row(k) = (pt.p_R / pt.p_R.norm()).transpose();
      b(k) = -pt.doppler;
    }
    Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smin = svd.singularValues()(2);
    if (!(smin > 0.0) || svd.singularValues()(0) / smin > cfg.max_condition) {
      --it;  // degenerate sample, redraw
      continue;
    }
    const Vec3 v = svd.solve(b);
    std::vector<int> inliers;
    inliers.reserve(n);
    for (int i : usable) {
      const RadarPoint& pt = scan.points[i];
      if (std::abs(pt.doppler - doppler_predict(v, pt.p_R)) < cfg.inlier_threshold) {
        inliers.push_back(i);
      }
    }
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
    }
  }

  if (static_cast<double>(best_inliers.size()) < cfg.min_inlier_ratio * n ||
      best_inliers.size() < 3) {
    result.status = EgoStatus::kNoConsensus;
    return result;
  }

  std::vector<RadarPoint> consensus;
  consensus.reserve(best_inliers.size());
  for (int i : best_inliers) {
    consensus.push_back(scan.points[i]);
  }
  Vec3 v_fit;
  Mat3 cov_fit;
  const EgoStatus lsq = lsq_solve(consensus, cfg, &v_fit, &cov_fit);
  if (lsq != EgoStatus::kOk) {
    result.status = lsq;
    return result;
  }

  // Report the inlier set of the refined model so every reported inlier
  // satisfies the threshold against the returned velocity.
  std::vector<int> final_inliers;
  final_inliers.reserve(best_inliers.size());
  for (int i : usable) {
    const RadarPoint& pt = scan.points[i];
    if (std::abs(pt.doppler - doppler_predict(v_fit, pt.p_R)) < cfg.inlier_threshold) {
      final_inliers.push_back(i);
    }
  }
  if (static_cast<double>(final_inliers.size()) < cfg.min_inlier_ratio * n ||
      final_inliers.size() < 3) {
    result.status = EgoStatus::kNoConsensus;
    return result;
  }

  result.status = EgoStatus::kOk;
  result.estimate.v_R = v_fit;
  result.estimate.meas_cov = cov_fit;
  result.estimate.inlier_indices = std::move(final_inliers);
  result.estimate.n_inliers = static_cast<int>(result.estimate.inlier_indices.size());
  return result;
}

}  // namespace rio
