#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "solid/core/types.hpp"

namespace solid {

/// Greedy distance sampling of a trajectory: keeps frame 0, then every next
/// frame whose translation is at least `spacing` meters from the last kept
/// one. Returns the kept frame_ids in order.
inline std::vector<std::int64_t> sample_by_distance(const std::vector<Pose>& poses,
                                                    double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("sample_by_distance: spacing must be > 0");
  if (poses.empty()) throw std::invalid_argument("sample_by_distance: poses are empty");

  std::vector<std::int64_t> kept;
  kept.push_back(poses.front().frame_id);
  Eigen::Vector3d last = poses.front().translation;
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if ((poses[i].translation - last).norm() >= spacing) {
      kept.push_back(poses[i].frame_id);
      last = poses[i].translation;
    }
  }
  return kept;
}

}  // namespace solid
