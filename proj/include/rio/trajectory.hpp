#pragma once

#include "rio/so3.hpp"

#include <vector>

namespace rio {

struct TrajectoryPoint {
  double stamp = 0.0;
  Quat q_GI = Quat::Identity();
  Vec3 p_GI = Vec3::Zero();
  Vec3 v_GI = Vec3::Zero();
};

using Trajectory = std::vector<TrajectoryPoint>;

}  // namespace rio
