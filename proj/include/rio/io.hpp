#pragma once

#include "rio/ego_velocity.hpp"
#include "rio/filter.hpp"
#include "rio/propagation.hpp"
#include "rio/simulator.hpp"
#include "rio/trajectory.hpp"
#include "rio/update.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace rio {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or invalid configuration (distinct from file-system
/// failures so callers can map it to a usage-style exit code).
class ConfigError : public IoError {
 public:
  using IoError::IoError;
};

namespace detail {

/// Shortest round-trip decimal form of a double (17 significant digits).
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& field, const std::string& path, int line) {
  const std::string t = trim(field);
  double v = 0.0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || t.empty()) {
    throw IoError(path + ":" + std::to_string(line) + ": cannot parse number '" + field + "'");
  }
  return v;
}

inline long parse_long(const std::string& field, const std::string& path, int line) {
  const std::string t = trim(field);
  long v = 0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || t.empty()) {
    throw IoError(path + ":" + std::to_string(line) + ": cannot parse integer '" + field + "'");
  }
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    const size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  return out;
}

inline std::string getline_normalized(std::ifstream& in, bool& ok) {
  std::string line;
  ok = static_cast<bool>(std::getline(in, line));
  if (ok && !line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  return line;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// IMU stream: CSV `t,wx,wy,wz,ax,ay,az` (s, rad/s, m/s²)
// ---------------------------------------------------------------------------

inline constexpr const char* kImuHeader = "t,wx,wy,wz,ax,ay,az";

inline void write_imu(const std::string& path, const std::vector<ImuSample>& samples) {
  auto out = detail::open_output(path);
  out << kImuHeader << "\n";
  for (const ImuSample& u : samples) {
    out << detail::fmt_double(u.stamp) << ',' << detail::fmt_double(u.gyro_m.x()) << ','
        << detail::fmt_double(u.gyro_m.y()) << ',' << detail::fmt_double(u.gyro_m.z()) << ','
        << detail::fmt_double(u.accel_m.x()) << ',' << detail::fmt_double(u.accel_m.y()) << ','
        << detail::fmt_double(u.accel_m.z()) << "\n";
  }
}

inline std::vector<ImuSample> read_imu(const std::string& path) {
  auto in = detail::open_input(path);
  bool ok = false;
  int line_no = 1;
  const std::string header = detail::getline_normalized(in, ok);
  if (!ok || header != kImuHeader) {
    throw IoError(path + ":1: expected header '" + std::string(kImuHeader) + "'");
  }
  std::vector<ImuSample> samples;
  while (true) {
    const std::string line = detail::getline_normalized(in, ok);
    if (!ok) {
      break;
    }
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 7) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 7 fields, got " +
                    std::to_string(fields.size()));
    }
    ImuSample u;
    u.stamp = detail::parse_double(fields[0], path, line_no);
    for (int i = 0; i < 3; ++i) {
      u.gyro_m(i) = detail::parse_double(fields[1 + i], path, line_no);
      u.accel_m(i) = detail::parse_double(fields[4 + i], path, line_no);
    }
    if (!samples.empty() && u.stamp <= samples.back().stamp) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": timestamps must be strictly increasing");
    }
    samples.push_back(u);
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Radar stream: CSV `t,scan_id,px,py,pz,doppler`; rows sharing a scan_id
// share a stamp and form one scan.
// ---------------------------------------------------------------------------

inline constexpr const char* kRadarHeader = "t,scan_id,px,py,pz,doppler";

inline void write_radar(const std::string& path, const std::vector<RadarScan>& scans) {
  auto out = detail::open_output(path);
  out << kRadarHeader << "\n";
  long id = 0;
  for (const RadarScan& scan : scans) {
    const std::string stamp = detail::fmt_double(scan.stamp);
    for (const RadarPoint& pt : scan.points) {
      out << stamp << ',' << id << ',' << detail::fmt_double(pt.p_R.x()) << ','
          << detail::fmt_double(pt.p_R.y()) << ',' << detail::fmt_double(pt.p_R.z()) << ','
          << detail::fmt_double(pt.doppler) << "\n";
    }
    ++id;
  }
}

inline std::vector<RadarScan> read_radar(const std::string& path) {
  auto in = detail::open_input(path);
  bool ok = false;
  int line_no = 1;
  const std::string header = detail::getline_normalized(in, ok);
  if (!ok || header != kRadarHeader) {
    throw IoError(path + ":1: expected header '" + std::string(kRadarHeader) + "'");
  }
  std::vector<RadarScan> scans;
  long current_id = -1;
  while (true) {
    const std::string line = detail::getline_normalized(in, ok);
    if (!ok) {
      break;
    }
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 6) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 6 fields, got " +
                    std::to_string(fields.size()));
    }
    const double stamp = detail::parse_double(fields[0], path, line_no);
    const long id = detail::parse_long(fields[1], path, line_no);
    RadarPoint pt;
    pt.p_R.x() = detail::parse_double(fields[2], path, line_no);
    pt.p_R.y() = detail::parse_double(fields[3], path, line_no);
    pt.p_R.z() = detail::parse_double(fields[4], path, line_no);
    pt.doppler = detail::parse_double(fields[5], path, line_no);
    if (id < current_id) {
      throw IoError(path + ":" + std::to_string(line_no) + ": scan_id regression (" +
                    std::to_string(id) + " after " + std::to_string(current_id) + ")");
    }
    if (id > current_id) {
      if (!scans.empty() && stamp <= scans.back().stamp) {
        throw IoError(path + ":" + std::to_string(line_no) +
                      ": scan stamps must be strictly increasing");
      }
      RadarScan scan;
      scan.stamp = stamp;
      scans.push_back(scan);
      current_id = id;
    } else if (stamp != scans.back().stamp) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": rows of one scan must share a stamp");
    }
    scans.back().points.push_back(pt);
  }
  return scans;
}

// ---------------------------------------------------------------------------
// Trajectory: CSV `t,px,py,pz,qw,qx,qy,qz,vx,vy,vz` (v columns optional on
// read). Quaternions are normalized on read; a norm off by more than 1e-6
// produces a warning, more than 1e-3 an error.
// ---------------------------------------------------------------------------

inline constexpr const char* kTrajectoryHeader = "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz";
inline constexpr const char* kTrajectoryHeaderNoVel = "t,px,py,pz,qw,qx,qy,qz";

inline void write_trajectory(const std::string& path, const Trajectory& traj) {
  auto out = detail::open_output(path);
  out << kTrajectoryHeader << "\n";
  for (const TrajectoryPoint& pt : traj) {
    out << detail::fmt_double(pt.stamp) << ',' << detail::fmt_double(pt.p_GI.x()) << ','
        << detail::fmt_double(pt.p_GI.y()) << ',' << detail::fmt_double(pt.p_GI.z()) << ','
        << detail::fmt_double(pt.q_GI.w()) << ',' << detail::fmt_double(pt.q_GI.x()) << ','
        << detail::fmt_double(pt.q_GI.y()) << ',' << detail::fmt_double(pt.q_GI.z()) << ','
        << detail::fmt_double(pt.v_GI.x()) << ',' << detail::fmt_double(pt.v_GI.y()) << ','
        << detail::fmt_double(pt.v_GI.z()) << "\n";
  }
}

inline Trajectory read_truth(const std::string& path,
                             std::vector<std::string>* warnings = nullptr) {
  auto in = detail::open_input(path);
  bool ok = false;
  int line_no = 1;
  const std::string header = detail::getline_normalized(in, ok);
  bool has_velocity = true;
  if (ok && header == kTrajectoryHeader) {
    has_velocity = true;
  } else if (ok && header == kTrajectoryHeaderNoVel) {
    has_velocity = false;
  } else {
    throw IoError(path + ":1: expected header '" + std::string(kTrajectoryHeader) + "' or '" +
                  std::string(kTrajectoryHeaderNoVel) + "'");
  }
  const size_t n_fields = has_velocity ? 11 : 8;
  Trajectory traj;
  while (true) {
    const std::string line = detail::getline_normalized(in, ok);
    if (!ok) {
      break;
    }
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != n_fields) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(n_fields) + " fields, got " + std::to_string(fields.size()));
    }
    TrajectoryPoint pt;
    pt.stamp = detail::parse_double(fields[0], path, line_no);
    for (int i = 0; i < 3; ++i) {
      pt.p_GI(i) = detail::parse_double(fields[1 + i], path, line_no);
    }
    const double qw = detail::parse_double(fields[4], path, line_no);
    const double qx = detail::parse_double(fields[5], path, line_no);
    const double qy = detail::parse_double(fields[6], path, line_no);
    const double qz = detail::parse_double(fields[7], path, line_no);
    pt.q_GI = Quat(qw, qx, qy, qz);
    const double norm_err = std::abs(pt.q_GI.norm() - 1.0);
    if (norm_err > 1e-3) {
      throw IoError(path + ":" + std::to_string(line_no) + ": quaternion norm off by " +
                    detail::fmt_double(norm_err));
    }
    if (norm_err > 1e-6 && warnings != nullptr) {
      warnings->push_back(path + ":" + std::to_string(line_no) +
                          ": quaternion normalized (norm error " + detail::fmt_double(norm_err) +
                          ")");
    }
    pt.q_GI.normalize();
    if (has_velocity) {
      for (int i = 0; i < 3; ++i) {
        pt.v_GI(i) = detail::parse_double(fields[8 + i], path, line_no);
      }
    }
    if (!traj.empty() && pt.stamp <= traj.back().stamp) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": timestamps must be strictly increasing");
    }
    traj.push_back(pt);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Estimate log: one row per applied update,
// `t,td_hat,td_sigma,r_x,r_y,r_z,n_inliers`.
// ---------------------------------------------------------------------------

inline constexpr const char* kEstimateLogHeader = "t,td_hat,td_sigma,r_x,r_y,r_z,n_inliers";

struct EstimateLogRow {
  double t = 0.0;
  double td_hat = 0.0;
  double td_sigma = 0.0;
  Vec3 residual = Vec3::Zero();
  int n_inliers = 0;
};

inline void write_estimate_log(const std::string& path,
                               const std::vector<EstimateLogRow>& rows) {
  auto out = detail::open_output(path);
  out << kEstimateLogHeader << "\n";
  for (const EstimateLogRow& r : rows) {
    out << detail::fmt_double(r.t) << ',' << detail::fmt_double(r.td_hat) << ','
        << detail::fmt_double(r.td_sigma) << ',' << detail::fmt_double(r.residual.x()) << ','
        << detail::fmt_double(r.residual.y()) << ',' << detail::fmt_double(r.residual.z()) << ','
        << r.n_inliers << "\n";
  }
}

inline std::vector<EstimateLogRow> read_estimate_log(const std::string& path) {
  auto in = detail::open_input(path);
  bool ok = false;
  int line_no = 1;
  const std::string header = detail::getline_normalized(in, ok);
  if (!ok || header != kEstimateLogHeader) {
    throw IoError(path + ":1: expected header '" + std::string(kEstimateLogHeader) + "'");
  }
  std::vector<EstimateLogRow> rows;
  while (true) {
    const std::string line = detail::getline_normalized(in, ok);
    if (!ok) {
      break;
    }
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 7) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 7 fields");
    }
    EstimateLogRow r;
    r.t = detail::parse_double(fields[0], path, line_no);
    r.td_hat = detail::parse_double(fields[1], path, line_no);
    r.td_sigma = detail::parse_double(fields[2], path, line_no);
    for (int i = 0; i < 3; ++i) {
      r.residual(i) = detail::parse_double(fields[3 + i], path, line_no);
    }
    r.n_inliers = static_cast<int>(detail::parse_long(fields[6], path, line_no));
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Metrics: `sequence,ape_trans_m,ape_rot_deg,rpe_trans_m,rpe_rot_deg,
// td_final_s,td_sigma_s`. RPE and t_d columns may be empty when unavailable.
// ---------------------------------------------------------------------------

inline constexpr const char* kMetricsHeader =
    "sequence,ape_trans_m,ape_rot_deg,rpe_trans_m,rpe_rot_deg,td_final_s,td_sigma_s";

struct MetricsRow {
  std::string sequence;
  double ape_trans_m = 0.0;
  double ape_rot_deg = 0.0;
  std::optional<double> rpe_trans_m;
  std::optional<double> rpe_rot_deg;
  std::optional<double> td_final_s;
  std::optional<double> td_sigma_s;
};

inline void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows) {
  auto out = detail::open_output(path);
  out << kMetricsHeader << "\n";
  auto opt = [](const std::optional<double>& v) {
    return v.has_value() ? detail::fmt_double(*v) : std::string();
  };
  for (const MetricsRow& r : rows) {
    out << r.sequence << ',' << detail::fmt_double(r.ape_trans_m) << ','
        << detail::fmt_double(r.ape_rot_deg) << ',' << opt(r.rpe_trans_m) << ','
        << opt(r.rpe_rot_deg) << ',' << opt(r.td_final_s) << ',' << opt(r.td_sigma_s) << "\n";
  }
}

inline std::vector<MetricsRow> read_metrics(const std::string& path) {
  auto in = detail::open_input(path);
  bool ok = false;
  int line_no = 1;
  const std::string header = detail::getline_normalized(in, ok);
  if (!ok || header != kMetricsHeader) {
    throw IoError(path + ":1: expected header '" + std::string(kMetricsHeader) + "'");
  }
  std::vector<MetricsRow> rows;
  while (true) {
    const std::string line = detail::getline_normalized(in, ok);
    if (!ok) {
      break;
    }
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 7) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 7 fields");
    }
    MetricsRow r;
    r.sequence = fields[0];
    r.ape_trans_m = detail::parse_double(fields[1], path, line_no);
    r.ape_rot_deg = detail::parse_double(fields[2], path, line_no);
    auto opt = [&](const std::string& f) -> std::optional<double> {
      if (detail::trim(f).empty()) {
        return std::nullopt;
      }
      return detail::parse_double(f, path, line_no);
    };
    r.rpe_trans_m = opt(fields[3]);
    r.rpe_rot_deg = opt(fields[4]);
    r.td_final_s = opt(fields[5]);
    r.td_sigma_s = opt(fields[6]);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Run configuration: flat `key = value` text, `#` comments, unknown keys are
// errors. Multi-component values (gravity, extrinsics, amplitudes) are
// space-separated numbers.
// ---------------------------------------------------------------------------

struct RunConfig {
  SimConfig sim;
  Quat ext_q_RI = Quat::Identity();  // radar attitude relative to IMU
  Vec3 ext_p_IR = Vec3(0.1, 0.0, 0.0);
  InitialCovariance init_cov;
  RansacConfig ransac;
  bool joseph_form = true;
  bool chi2_gate = false;
  double chi2_threshold = 13.9314226655;
  MeasNoiseMode meas_noise_mode = MeasNoiseMode::kLsq;
  double meas_sigma_fixed = 0.05;
  double t_d_init = 0.0;
  double buffer_horizon = 2.0;
  double stale_tolerance = 0.01;

  Extrinsics extrinsics() const {
    Extrinsics e;
    e.R_RI = quat_to_rot(ext_q_RI.normalized());
    e.p_IR = ext_p_IR;
    return e;
  }

  FilterConfig filter_config() const {
    FilterConfig f;
    f.noise = sim.imu_noise;
    f.extrinsics = extrinsics();
    f.initial_cov = init_cov;
    f.ransac = ransac;
    f.update.joseph_form = joseph_form;
    f.update.chi2_gate = chi2_gate;
    f.update.chi2_threshold = chi2_threshold;
    f.meas_noise_mode = meas_noise_mode;
    f.meas_sigma_fixed = meas_sigma_fixed;
    f.t_d_init = t_d_init;
    f.seed = sim.seed;
    return f;
  }
};

namespace detail {

inline Vec3 parse_vec3(const std::string& value, const std::string& path, int line) {
  std::istringstream ss(value);
  Vec3 v;
  if (!(ss >> v.x() >> v.y() >> v.z()) || !(ss >> std::ws).eof()) {
    throw ConfigError(path + ":" + std::to_string(line) + ": expected 3 numbers, got '" + value +
                  "'");
  }
  return v;
}

inline Quat parse_quat(const std::string& value, const std::string& path, int line) {
  std::istringstream ss(value);
  double w, x, y, z;
  if (!(ss >> w >> x >> y >> z) || !(ss >> std::ws).eof()) {
    throw ConfigError(path + ":" + std::to_string(line) + ": expected 4 numbers (w x y z), got '" +
                  value + "'");
  }
  return Quat(w, x, y, z);
}

inline bool parse_bool(const std::string& value, const std::string& path, int line) {
  if (value == "on" || value == "true" || value == "1") {
    return true;
  }
  if (value == "off" || value == "false" || value == "0") {
    return false;
  }
  throw ConfigError(path + ":" + std::to_string(line) + ": expected on/off, got '" + value + "'");
}

inline std::string vec3_str(const Vec3& v) {
  return fmt_double(v.x()) + " " + fmt_double(v.y()) + " " + fmt_double(v.z());
}

}  // namespace detail

inline std::string trajectory_profile_name(TrajectoryProfile p) {
  switch (p) {
    case TrajectoryProfile::kSinusoid:
      return "sinusoid";
    case TrajectoryProfile::kCircle:
      return "circle";
    case TrajectoryProfile::kFigure8:
      return "figure8";
  }
  return "figure8";
}

/// Canonical text form of a configuration; reading it back reproduces the
/// configuration exactly. Serves as the effective-config echo.
inline std::string echo_config(const RunConfig& c) {
  std::ostringstream out;
  auto put = [&](const char* key, const std::string& value) {
    out << key << " = " << value << "\n";
  };
  auto putd = [&](const char* key, double v) { put(key, detail::fmt_double(v)); };
  out << "# simulation\n";
  putd("duration", c.sim.duration);
  putd("imu_rate", c.sim.imu_rate);
  putd("radar_rate", c.sim.radar_rate);
  putd("injected_t_d", c.sim.injected_t_d);
  put("trajectory", trajectory_profile_name(c.sim.traj.profile));
  put("traj_amp", detail::vec3_str(c.sim.traj.amp));
  putd("traj_omega", c.sim.traj.omega);
  putd("traj_radius", c.sim.traj.radius);
  putd("traj_yaw_amp", c.sim.traj.yaw_amp);
  putd("traj_yaw_omega", c.sim.traj.yaw_omega);
  putd("traj_roll_amp", c.sim.traj.roll_amp);
  putd("traj_roll_omega", c.sim.traj.roll_omega);
  put("landmarks_per_scan", std::to_string(c.sim.landmarks_per_scan));
  putd("radar_doppler_sigma", c.sim.radar_doppler_sigma);
  putd("outlier_ratio", c.sim.outlier_ratio);
  putd("radar_fov_az_deg", c.sim.fov_azimuth_deg);
  putd("radar_fov_el_deg", c.sim.fov_elevation_deg);
  putd("radar_range_min", c.sim.range_min);
  putd("radar_range_max", c.sim.range_max);
  put("seed", std::to_string(c.sim.seed));
  out << "# noise densities\n";
  putd("sigma_g", c.sim.imu_noise.sigma_g);
  putd("sigma_wg", c.sim.imu_noise.sigma_wg);
  putd("sigma_a", c.sim.imu_noise.sigma_a);
  putd("sigma_wa", c.sim.imu_noise.sigma_wa);
  putd("sigma_td", c.sim.imu_noise.sigma_td);
  put("gravity", detail::vec3_str(c.sim.imu_noise.gravity));
  out << "# extrinsics\n";
  put("ext_q_RI", detail::fmt_double(c.ext_q_RI.w()) + " " + detail::fmt_double(c.ext_q_RI.x()) +
                      " " + detail::fmt_double(c.ext_q_RI.y()) + " " +
                      detail::fmt_double(c.ext_q_RI.z()));
  put("ext_p_IR", detail::vec3_str(c.ext_p_IR));
  out << "# filter\n";
  putd("t_d_init", c.t_d_init);
  putd("P0_att", c.init_cov.att);
  putd("P0_bg", c.init_cov.bg);
  putd("P0_vel", c.init_cov.vel);
  putd("P0_ba", c.init_cov.ba);
  putd("P0_pos", c.init_cov.pos);
  putd("P0_td", c.init_cov.td);
  put("meas_noise_mode", c.meas_noise_mode == MeasNoiseMode::kLsq ? "lsq" : "fixed");
  putd("meas_sigma_fixed", c.meas_sigma_fixed);
  put("update_form", c.joseph_form ? "joseph" : "simple");
  put("chi2_gate", c.chi2_gate ? "on" : "off");
  putd("chi2_threshold", c.chi2_threshold);
  putd("buffer_horizon", c.buffer_horizon);
  putd("stale_tolerance", c.stale_tolerance);
  out << "# ransac\n";
  putd("min_range", c.ransac.min_range);
  put("ransac_iterations", std::to_string(c.ransac.iterations));
  putd("ransac_inlier_threshold", c.ransac.inlier_threshold);
  putd("ransac_min_inlier_ratio", c.ransac.min_inlier_ratio);
  put("ransac_min_points", std::to_string(c.ransac.min_points));
  return out.str();
}

/// Parses the flat key = value configuration. Every key has a default;
/// unknown and duplicate keys are errors so typos cannot pass silently.
inline RunConfig parse_config_text(const std::string& text, const std::string& path) {
  RunConfig cfg;
  std::map<std::string, bool> seen;
  bool gravity_overridden = false;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) {
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": missing key or value");
    }
    if (seen.count(key) != 0) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    seen[key] = true;

    auto d = [&] { return detail::parse_double(value, path, line_no); };
    auto l = [&] { return detail::parse_long(value, path, line_no); };
    if (key == "duration") {
      cfg.sim.duration = d();
    } else if (key == "imu_rate") {
      cfg.sim.imu_rate = d();
    } else if (key == "radar_rate") {
      cfg.sim.radar_rate = d();
    } else if (key == "injected_t_d") {
      cfg.sim.injected_t_d = d();
    } else if (key == "trajectory") {
      if (value == "sinusoid") {
        cfg.sim.traj.profile = TrajectoryProfile::kSinusoid;
      } else if (value == "circle") {
        cfg.sim.traj.profile = TrajectoryProfile::kCircle;
      } else if (value == "figure8") {
        cfg.sim.traj.profile = TrajectoryProfile::kFigure8;
      } else {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown trajectory '" + value +
                      "'");
      }
    } else if (key == "traj_amp") {
      cfg.sim.traj.amp = detail::parse_vec3(value, path, line_no);
    } else if (key == "traj_omega") {
      cfg.sim.traj.omega = d();
    } else if (key == "traj_radius") {
      cfg.sim.traj.radius = d();
    } else if (key == "traj_yaw_amp") {
      cfg.sim.traj.yaw_amp = d();
    } else if (key == "traj_yaw_omega") {
      cfg.sim.traj.yaw_omega = d();
    } else if (key == "traj_roll_amp") {
      cfg.sim.traj.roll_amp = d();
    } else if (key == "traj_roll_omega") {
      cfg.sim.traj.roll_omega = d();
    } else if (key == "landmarks_per_scan") {
      cfg.sim.landmarks_per_scan = static_cast<int>(l());
    } else if (key == "radar_doppler_sigma") {
      cfg.sim.radar_doppler_sigma = d();
    } else if (key == "outlier_ratio") {
      cfg.sim.outlier_ratio = d();
    } else if (key == "radar_fov_az_deg") {
      cfg.sim.fov_azimuth_deg = d();
    } else if (key == "radar_fov_el_deg") {
      cfg.sim.fov_elevation_deg = d();
    } else if (key == "radar_range_min") {
      cfg.sim.range_min = d();
    } else if (key == "radar_range_max") {
      cfg.sim.range_max = d();
    } else if (key == "seed") {
      cfg.sim.seed = static_cast<std::uint64_t>(l());
    } else if (key == "sigma_g") {
      cfg.sim.imu_noise.sigma_g = d();
    } else if (key == "sigma_wg") {
      cfg.sim.imu_noise.sigma_wg = d();
    } else if (key == "sigma_a") {
      cfg.sim.imu_noise.sigma_a = d();
    } else if (key == "sigma_wa") {
      cfg.sim.imu_noise.sigma_wa = d();
    } else if (key == "sigma_td") {
      cfg.sim.imu_noise.sigma_td = d();
    } else if (key == "gravity") {
      cfg.sim.imu_noise.gravity = detail::parse_vec3(value, path, line_no);
      gravity_overridden = true;
    } else if (key == "ext_q_RI") {
      cfg.ext_q_RI = detail::parse_quat(value, path, line_no);
    } else if (key == "ext_p_IR") {
      cfg.ext_p_IR = detail::parse_vec3(value, path, line_no);
    } else if (key == "t_d_init") {
      cfg.t_d_init = d();
    } else if (key == "P0_att") {
      cfg.init_cov.att = d();
    } else if (key == "P0_bg") {
      cfg.init_cov.bg = d();
    } else if (key == "P0_vel") {
      cfg.init_cov.vel = d();
    } else if (key == "P0_ba") {
      cfg.init_cov.ba = d();
    } else if (key == "P0_pos") {
      cfg.init_cov.pos = d();
    } else if (key == "P0_td") {
      cfg.init_cov.td = d();
    } else if (key == "meas_noise_mode") {
      if (value == "lsq") {
        cfg.meas_noise_mode = MeasNoiseMode::kLsq;
      } else if (value == "fixed") {
        cfg.meas_noise_mode = MeasNoiseMode::kFixed;
      } else {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                      ": meas_noise_mode must be lsq or fixed");
      }
    } else if (key == "meas_sigma_fixed") {
      cfg.meas_sigma_fixed = d();
    } else if (key == "update_form") {
      if (value == "joseph") {
        cfg.joseph_form = true;
      } else if (value == "simple") {
        cfg.joseph_form = false;
      } else {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                      ": update_form must be joseph or simple");
      }
    } else if (key == "chi2_gate") {
      cfg.chi2_gate = detail::parse_bool(value, path, line_no);
    } else if (key == "chi2_threshold") {
      cfg.chi2_threshold = d();
    } else if (key == "buffer_horizon") {
      cfg.buffer_horizon = d();
    } else if (key == "stale_tolerance") {
      cfg.stale_tolerance = d();
    } else if (key == "min_range") {
      cfg.ransac.min_range = d();
    } else if (key == "ransac_iterations") {
      cfg.ransac.iterations = static_cast<int>(l());
    } else if (key == "ransac_inlier_threshold") {
      cfg.ransac.inlier_threshold = d();
    } else if (key == "ransac_min_inlier_ratio") {
      cfg.ransac.min_inlier_ratio = d();
    } else if (key == "ransac_min_points") {
      cfg.ransac.min_points = static_cast<int>(l());
    } else {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }

  try {
    validate(cfg.sim);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const NoiseParams& n = cfg.sim.imu_noise;
  if (n.sigma_g < 0.0 || n.sigma_wg < 0.0 || n.sigma_a < 0.0 || n.sigma_wa < 0.0 ||
      n.sigma_td < 0.0) {
    throw ConfigError(path + ": noise densities must be non-negative");
  }
  if (!gravity_overridden) {
    const double gn = n.gravity.norm();
    if (gn < 9.7 || gn > 9.9) {
      throw ConfigError(path + ": default gravity norm out of [9.7, 9.9]");
    }
  }
  if (cfg.buffer_horizon < std::abs(cfg.t_d_init) + 1.0) {
    throw ConfigError(path + ": buffer_horizon must be at least |t_d_init| + 1 s");
  }
  if (cfg.ransac.iterations < 1 || cfg.ransac.min_points < 3) {
    throw ConfigError(path + ": ransac_iterations must be >= 1 and ransac_min_points >= 3");
  }
  return cfg;
}

inline RunConfig read_config(const std::string& path) {
  auto in = detail::open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Dataset bundle on disk.
// ---------------------------------------------------------------------------

struct DatasetBundle {
  std::string imu_path;
  std::string radar_path;
  std::string groundtruth_path;  // empty when absent
  std::string meta_path;         // empty when absent
};

inline DatasetBundle locate_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  DatasetBundle b;
  b.imu_path = (fs::path(dir) / "imu.csv").string();
  b.radar_path = (fs::path(dir) / "radar.csv").string();
  if (!fs::exists(b.imu_path)) {
    throw IoError("missing dataset file '" + b.imu_path + "'");
  }
  if (!fs::exists(b.radar_path)) {
    throw IoError("missing dataset file '" + b.radar_path + "'");
  }
  const fs::path truth = fs::path(dir) / "groundtruth.csv";
  if (fs::exists(truth)) {
    b.groundtruth_path = truth.string();
  }
  const fs::path meta = fs::path(dir) / "meta.txt";
  if (fs::exists(meta)) {
    b.meta_path = meta.string();
  }
  return b;
}

}  // namespace rio
