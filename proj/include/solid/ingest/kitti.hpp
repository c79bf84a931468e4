#pragma once

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "solid/core/types.hpp"

namespace solid {

static_assert(std::endian::native == std::endian::little,
              "scan and database I/O assume a little-endian host");

/// Reads a KITTI velodyne `.bin` scan: little-endian f32 quadruples
/// (x, y, z, intensity). Intensity is dropped. Points with NaN/Inf
/// coordinates are rejected at load.
inline PointCloud load_kitti_scan(const std::string& path, std::int64_t frame_id = 0) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open scan file: " + path);
  const std::streamoff bytes = in.tellg();
  if (bytes % 16 != 0)
    throw FormatError("scan file " + path + " has " + std::to_string(bytes) +
                      " bytes, not a multiple of 16");
  in.seekg(0);

  std::vector<float> raw(static_cast<std::size_t>(bytes) / 4);
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(raw.data()), bytes))
    throw IoError("short read on scan file: " + path);

  PointCloud cloud;
  cloud.frame_id = frame_id;
  cloud.points.reserve(raw.size() / 4);
  for (std::size_t i = 0; i + 3 < raw.size(); i += 4) {
    const float x = raw[i], y = raw[i + 1], z = raw[i + 2];
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) continue;
    cloud.points.push_back(Point{x, y, z});
  }
  return cloud;
}

/// Writes a scan back in the same raw format (intensity = 0). Round-trips
/// byte-identically with load_kitti_scan for values representable as f32.
inline void write_kitti_scan(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open scan file for writing: " + path);
  for (const Point& p : cloud.points) {
    const float quad[4] = {static_cast<float>(p.x), static_cast<float>(p.y),
                           static_cast<float>(p.z), 0.0f};
    out.write(reinterpret_cast<const char*>(quad), sizeof(quad));
  }
  if (!out) throw IoError("short write on scan file: " + path);
}

/// Reads a KITTI pose file: one pose per nonempty line, 12 whitespace-
/// separated numbers forming a row-major 3x4 [R|t]. frame_id is the line
/// index. Rotations off orthonormal by more than 1e-3 produce a warning,
/// beyond 1e-1 an error. Warnings go to `warnings` if given, else stderr.
inline std::vector<Pose> load_kitti_poses(const std::string& path,
                                          std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose file: " + path);

  std::vector<Pose> poses;
  std::string line;
  std::int64_t line_index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double v[12];
    int n = 0;
    while (n < 12 && (ls >> v[n])) ++n;
    double extra;
    if (n != 12 || (ls >> extra))
      throw FormatError("pose file " + path + " line " + std::to_string(line_index) +
                        ": expected 12 values");

    Pose pose;
    pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.translation << v[3], v[7], v[11];
    pose.frame_id = line_index;

    const double defect = rotation_defect(pose.rotation);
    if (defect > 1e-1)
      throw FormatError("pose file " + path + " line " + std::to_string(line_index) +
                        ": rotation is not orthonormal (defect " + std::to_string(defect) + ")");
    if (defect > 1e-3) {
      const std::string msg = "pose file " + path + " line " + std::to_string(line_index) +
                              ": rotation defect " + std::to_string(defect);
      if (warnings)
        warnings->push_back(msg);
      else
        std::cerr << "warning: " << msg << "\n";
    }
    poses.push_back(pose);
    ++line_index;
  }
  return poses;
}

}  // namespace solid
