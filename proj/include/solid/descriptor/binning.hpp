#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "solid/core/types.hpp"

namespace solid {

/// Whether the elevation weights are derived from the scan (Standard) or
/// forced to all-ones (ConstantIEV ablation).
enum class DescriptorVariant { Standard, ConstantIEV };

inline std::string to_string(DescriptorVariant v) {
  return v == DescriptorVariant::Standard ? "standard" : "constant-iev";
}

inline DescriptorVariant parse_variant(const std::string& s) {
  if (s == "standard") return DescriptorVariant::Standard;
  if (s == "constant-iev") return DescriptorVariant::ConstantIEV;
  throw FormatError("unknown descriptor variant: " + s);
}

/// Spatial-organization parameters. Defaults suit a Velodyne HDL-64E
/// (KITTI): 64 elevation bins over [-25, 2] degrees, 80 m max range.
struct BinningConfig {
  int n_r = 40;           // radial bins
  int n_a = 60;           // azimuthal bins
  int n_e = 64;           // elevational bins, aligned with sensor channels
  double l_max = 80.0;    // max observable range, meters
  double f_up = 2.0;      // upper vertical FOV, degrees
  double f_down = -25.0;  // lower vertical FOV, degrees
  double voxel = 0.5;     // downsampling voxel size, meters (<= 0 disables)
  DescriptorVariant variant = DescriptorVariant::Standard;

  void validate() const {
    if (n_r < 1 || n_a < 1 || n_e < 1)
      throw std::invalid_argument("binning config: bin counts must be >= 1");
    if (!(l_max > 0.0)) throw std::invalid_argument("binning config: l_max must be > 0");
    if (!(f_up > f_down)) throw std::invalid_argument("binning config: need f_up > f_down");
  }

  double azimuth_bin_deg() const { return 360.0 / n_a; }
};

/// Point in spherical coordinates: planar range, azimuth in [0, 360) deg,
/// elevation in degrees.
struct SphericalPoint {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

/// Converts a Cartesian point. r is the planar range sqrt(x^2 + y^2);
/// phi = atan2(z, r) so the zenith (r = 0) is well-defined; theta uses the
/// atan2 convention, so the exact origin maps to 0 degrees.
inline SphericalPoint to_spherical(const Point& p) {
  SphericalPoint sp;
  sp.r = std::sqrt(p.x * p.x + p.y * p.y);
  double theta = std::atan2(p.y, p.x) * 180.0 / M_PI;
  if (theta < 0.0) theta += 360.0;
  if (theta >= 360.0) theta = 0.0;
  sp.theta = theta;
  sp.phi = std::atan2(p.z, sp.r) * 180.0 / M_PI;
  return sp;
}

/// One-based bin indices (i: radial, j: azimuthal, k: elevational).
struct BinIndex {
  int i = 1;
  int j = 1;
  int k = 1;
  bool operator==(const BinIndex&) const = default;
};

/// Assigns a spherical point to its 3-D bin, or nullopt when the point is
/// out of range (r >= l_max, or phi outside [f_down, f_up)).
///
/// Raw index = round(N * fraction + 1) with round half-away-from-zero.
/// Boundary rounding can produce N+1: radial and elevational indices clamp
/// (physical edges), while the azimuthal index wraps to 1 (circular).
inline std::optional<BinIndex> bin_indices(const SphericalPoint& sp, const BinningConfig& cfg) {
  if (sp.r >= cfg.l_max) return std::nullopt;
  if (sp.phi < cfg.f_down || sp.phi >= cfg.f_up) return std::nullopt;

  BinIndex b;
  const long raw_i = std::lround(cfg.n_r * sp.r / cfg.l_max + 1.0);
  b.i = static_cast<int>(std::clamp<long>(raw_i, 1, cfg.n_r));

  const long raw_j = std::lround(cfg.n_a * sp.theta / 360.0 + 1.0);
  b.j = static_cast<int>(((raw_j - 1) % cfg.n_a + cfg.n_a) % cfg.n_a) + 1;

  const long raw_k =
      std::lround(cfg.n_e * (sp.phi - cfg.f_down) / (cfg.f_up - cfg.f_down) + 1.0);
  b.k = static_cast<int>(std::clamp<long>(raw_k, 1, cfg.n_e));

  return b;
}

}  // namespace solid
