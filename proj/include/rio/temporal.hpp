#pragma once

#include "rio/ego_velocity.hpp"
#include "rio/filter.hpp"
#include "rio/propagation.hpp"

#include <deque>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace rio {

/// Maps a radar timestamp onto the IMU time stream: t′ = t + t̂_d.
inline double correction_time(double scan_stamp, double t_d) {
  return scan_stamp + t_d;
}

/// Time-ordered sensor queues shared between an ingestion thread and the
/// filter thread. Stamps must be strictly increasing per stream; samples
/// older than (newest IMU stamp − horizon) are evicted.
class SensorBuffer {
 public:
  explicit SensorBuffer(double horizon = 2.0) : horizon_(horizon) {
    if (!(horizon_ > 0.0)) {
      throw std::invalid_argument("SensorBuffer: horizon must be positive");
    }
  }

  bool push_imu(const ImuSample& u) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!is_finite(u)) {
      return false;
    }
    if (!imu_.empty() && u.stamp <= imu_.back().stamp) {
      return false;
    }
    imu_.push_back(u);
    evict_locked();
    return true;
  }

  bool push_radar(const RadarScan& scan) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!std::isfinite(scan.stamp)) {
      return false;
    }
    if (!radar_.empty() && scan.stamp <= radar_.back().stamp) {
      return false;
    }
    radar_.push_back(scan);
    return true;
  }

  double horizon() const { return horizon_; }

  std::deque<ImuSample>& imu() { return imu_; }
  std::deque<RadarScan>& radar() { return radar_; }
  std::mutex& mutex() { return mutex_; }

 private:
  void evict_locked() {
    const double cutoff = imu_.back().stamp - horizon_;
    while (imu_.size() > 1 && imu_.front().stamp < cutoff) {
      imu_.pop_front();
    }
    while (!radar_.empty() && radar_.front().stamp < cutoff) {
      radar_.pop_front();
    }
  }

  std::deque<ImuSample> imu_;
  std::deque<RadarScan> radar_;
  double horizon_;
  mutable std::mutex mutex_;
};

enum class EventType {
  kPropagated,        // filter advanced to `time`
  kUpdateApplied,     // scan update applied at t′
  kScanStale,         // t′ fell behind the filter by more than the tolerance
  kScanNoConsensus,   // RANSAC inlier ratio below minimum
  kScanTooFewPoints,  // not enough usable points
  kScanDegenerate,    // direction geometry rank-deficient
  kScanGated,         // chi-square gate rejected the update
  kScanSingular,      // innovation covariance not invertible
};

struct Event {
  EventType type;
  double time = 0.0;        // filter time the event refers to
  double scan_stamp = 0.0;  // arrival stamp for scan events, else 0
  ScanOutcome outcome;      // populated for update attempts
};

struct SchedulerConfig {
  double stale_tolerance = 0.01;  // s; older scans are dropped, not rewound
};

/// Drains a SensorBuffer into a filter: propagates through IMU intervals,
/// stops at each pending scan's corrected time t′ (partial interval), runs
/// the ego-velocity update there, then resumes. Scans whose t′ is beyond
/// the buffered IMU data stay queued for the next call.
class Scheduler {
 public:
  explicit Scheduler(const SchedulerConfig& cfg = {}) : cfg_(cfg) {}

  std::vector<Event> step(SensorBuffer& buffer, Filter& filter) {
    std::lock_guard<std::mutex> lock(buffer.mutex());
    std::vector<Event> events;
    if (!filter.initialized()) {
      throw std::logic_error("Scheduler::step: filter not initialized");
    }
    auto& imu = buffer.imu();
    auto& radar = buffer.radar();
    if (imu.empty() || imu.back().stamp < filter.stamp()) {
      return events;
    }

    while (!radar.empty()) {
      const RadarScan& scan = radar.front();
      const double t_prime = correction_time(scan.stamp, filter.td());
      if (t_prime > imu.back().stamp) {
        break;  // wait for IMU coverage
      }
      if (t_prime < filter.stamp() - cfg_.stale_tolerance) {
        Event ev;
        ev.type = EventType::kScanStale;
        ev.time = filter.stamp();
        ev.scan_stamp = scan.stamp;
        events.push_back(ev);
        radar.pop_front();
        continue;
      }
      if (t_prime > filter.stamp()) {
        propagate_to(imu, filter, t_prime, events);
      }
      // A scan whose t′ sits within the tolerance behind the filter is
      // applied at the current stamp; the Jacobian still uses IMU at t′.
      const ImuSample u_prime = imu_at(imu, t_prime);
      const ScanOutcome outcome = filter.process_scan(scan, u_prime);
      Event ev;
      ev.type = event_type_for(outcome);
      ev.time = filter.stamp();
      ev.scan_stamp = scan.stamp;
      ev.outcome = outcome;
      events.push_back(ev);
      radar.pop_front();
    }

    if (radar.empty() && imu.back().stamp > filter.stamp()) {
      propagate_to(imu, filter, imu.back().stamp, events);
    }
    return events;
  }

 private:
  static EventType event_type_for(const ScanOutcome& o) {
    if (o.applied) {
      return EventType::kUpdateApplied;
    }
    switch (o.ego_status) {
      case EgoStatus::kTooFewPoints:
        return EventType::kScanTooFewPoints;
      case EgoStatus::kDegenerateGeometry:
        return EventType::kScanDegenerate;
      case EgoStatus::kNoConsensus:
        return EventType::kScanNoConsensus;
      case EgoStatus::kOk:
        break;
    }
    return o.update_status == UpdateStatus::kGated ? EventType::kScanGated
                                                   : EventType::kScanSingular;
  }

  /// IMU interpolated at time t from the bracketing buffered samples;
  /// clamps to the first/last sample outside the buffered range.
  static ImuSample imu_at(const std::deque<ImuSample>& imu, double t) {
    if (imu.size() == 1 || t <= imu.front().stamp) {
      ImuSample u = imu.front();
      u.stamp = t;
      return u;
    }
    auto it = std::lower_bound(imu.begin(), imu.end(), t,
                               [](const ImuSample& u, double v) { return u.stamp < v; });
    if (it == imu.end()) {
      ImuSample u = imu.back();
      u.stamp = t;
      return u;
    }
    if (it == imu.begin()) {
      ImuSample u = imu.front();
      u.stamp = t;
      return u;
    }
    return interpolate_imu(*(it - 1), *it, t);
  }

  void propagate_to(const std::deque<ImuSample>& imu, Filter& filter, double target,
                    std::vector<Event>& events) {
    target = std::min(target, imu.back().stamp);
    while (filter.stamp() < target) {
      // Bracketing interval: last sample at/before the filter stamp and the
      // first strictly after it.
      auto next = std::upper_bound(
          imu.begin(), imu.end(), filter.stamp(),
          [](double v, const ImuSample& u) { return v < u.stamp; });
      if (next == imu.end()) {
        break;
      }
      const ImuSample& u1 = *next;
      const ImuSample u0 =
          next == imu.begin() ? imu.front() : interpolate_imu(*(next - 1), u1, filter.stamp());
      const double step_end = std::min(u1.stamp, target);
      const double dt = step_end - filter.stamp();
      if (!(dt > 0.0)) {
        break;
      }
      filter.propagate(u0, u1, dt);
    }
    Event ev;
    ev.type = EventType::kPropagated;
    ev.time = filter.stamp();
    events.push_back(ev);
  }

  SchedulerConfig cfg_;
};

}  // namespace rio
