#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "solid/core/types.hpp"

namespace solid {

namespace detail {

struct VoxelKey {
  std::int64_t ix, iy, iz;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    auto mix = [](std::uint64_t h, std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      return h;
    };
    std::uint64_t h = 0;
    h = mix(h, static_cast<std::uint64_t>(k.ix));
    h = mix(h, static_cast<std::uint64_t>(k.iy));
    h = mix(h, static_cast<std::uint64_t>(k.iz));
    return static_cast<std::size_t>(h);
  }
};

struct VoxelAccum {
  double sx = 0.0, sy = 0.0, sz = 0.0;
  std::int64_t count = 0;
};

}  // namespace detail

/// Cell index of a coordinate on the origin-anchored grid.
inline std::int64_t voxel_index(double coord, double voxel) {
  return static_cast<std::int64_t>(std::floor(coord / voxel));
}

/// Downsamples to one point per occupied voxel: grid of cube side `voxel`
/// anchored at the origin (cell = floor(coord / voxel)), representative =
/// centroid of the cell's points. Output is ordered by ascending
/// (ix, iy, iz) lexicographic, so the result is independent of input order.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (!(voxel > 0.0)) throw std::invalid_argument("voxel_downsample: voxel size must be > 0");

  std::unordered_map<detail::VoxelKey, detail::VoxelAccum, detail::VoxelKeyHash> cells;
  cells.reserve(cloud.points.size());
  for (const Point& p : cloud.points) {
    const detail::VoxelKey key{voxel_index(p.x, voxel), voxel_index(p.y, voxel),
                               voxel_index(p.z, voxel)};
    auto& acc = cells[key];
    acc.sx += p.x;
    acc.sy += p.y;
    acc.sz += p.z;
    acc.count += 1;
  }

  std::vector<std::pair<detail::VoxelKey, detail::VoxelAccum>> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    const auto& ka = a.first;
    const auto& kb = b.first;
    return std::array{ka.ix, ka.iy, ka.iz} < std::array{kb.ix, kb.iy, kb.iz};
  });

  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.reserve(sorted.size());
  for (const auto& [key, acc] : sorted) {
    const double inv = 1.0 / static_cast<double>(acc.count);
    out.points.push_back(Point{acc.sx * inv, acc.sy * inv, acc.sz * inv});
  }
  return out;
}

}  // namespace solid
