#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "solid/core/types.hpp"

namespace solid {

/// Ground-truth loops for one query: ids of admissible frames within the
/// loop radius.
struct GtEntry {
  std::vector<std::int64_t> loop_ids;  // sorted ascending
  bool has_loop() const { return !loop_ids.empty(); }
  bool contains(std::int64_t id) const {
    return std::binary_search(loop_ids.begin(), loop_ids.end(), id);
  }
};

struct GtLoopTable {
  std::vector<GtEntry> entries;  // aligned with the query list
  std::int64_t queries_with_loop() const {
    std::int64_t n = 0;
    for (const auto& e : entries) n += e.has_loop();
    return n;
  }
};

/// Single-session ground truth: query q may loop with frame c when
/// id(c) <= id(q) - exclude_recent and the positions are within d_gt.
/// `ids` maps list index to frame id; empty means identity.
inline GtLoopTable build_gt(const std::vector<Eigen::Vector3d>& positions, double d_gt,
                            std::int64_t exclude_recent,
                            const std::vector<std::int64_t>& ids = {}) {
  if (!(d_gt > 0.0)) throw std::invalid_argument("build_gt: d_gt must be > 0");
  if (!ids.empty() && ids.size() != positions.size())
    throw std::invalid_argument("build_gt: ids/positions size mismatch");
  if (!ids.empty() && !std::is_sorted(ids.begin(), ids.end()))
    throw std::invalid_argument("build_gt: ids must ascend");

  const auto id_of = [&](std::size_t i) {
    return ids.empty() ? static_cast<std::int64_t>(i) : ids[i];
  };

  GtLoopTable table;
  table.entries.resize(positions.size());
  const double d2 = d_gt * d_gt;
  for (std::size_t q = 0; q < positions.size(); ++q) {
    auto& entry = table.entries[q];
    for (std::size_t c = 0; c < positions.size(); ++c) {
      if (id_of(c) > id_of(q) - exclude_recent) break;  // ids ascend with index
      if ((positions[q] - positions[c]).squaredNorm() <= d2) entry.loop_ids.push_back(id_of(c));
    }
  }
  return table;
}

/// Multi-session ground truth: every target frame within d_gt of the query
/// position is a loop; no exclusion window.
inline GtLoopTable build_gt_multi(const std::vector<Eigen::Vector3d>& query_positions,
                                  const std::vector<Eigen::Vector3d>& target_positions,
                                  double d_gt,
                                  const std::vector<std::int64_t>& target_ids = {}) {
  if (!(d_gt > 0.0)) throw std::invalid_argument("build_gt: d_gt must be > 0");
  if (!target_ids.empty() && target_ids.size() != target_positions.size())
    throw std::invalid_argument("build_gt: ids/positions size mismatch");

  const auto id_of = [&](std::size_t c) {
    return target_ids.empty() ? static_cast<std::int64_t>(c) : target_ids[c];
  };

  GtLoopTable table;
  table.entries.resize(query_positions.size());
  const double d2 = d_gt * d_gt;
  for (std::size_t q = 0; q < query_positions.size(); ++q) {
    auto& entry = table.entries[q];
    for (std::size_t c = 0; c < target_positions.size(); ++c)
      if ((query_positions[q] - target_positions[c]).squaredNorm() <= d2)
        entry.loop_ids.push_back(id_of(c));
  }
  return table;
}

}  // namespace solid
