#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "solid/core/types.hpp"

namespace solid {

/// Azimuth in degrees in [0, 360): atan2(y, x) with negatives wrapped up.
inline double azimuth_deg(double x, double y) {
  double theta = std::atan2(y, x) * 180.0 / M_PI;
  if (theta < 0.0) theta += 360.0;
  if (theta >= 360.0) theta = 0.0;  // guard against round-up of tiny negatives
  return theta;
}

/// Set of half-open azimuth intervals [start, end) in degrees that a sensor
/// keeps. A forward wedge straddling 0 deg is written as two intervals,
/// e.g. "330-360,0-30".
class FovMask {
 public:
  using Interval = std::pair<double, double>;

  FovMask() : keep_{{0.0, 360.0}} {}

  explicit FovMask(std::vector<Interval> keep) : keep_(std::move(keep)) {
    std::sort(keep_.begin(), keep_.end());
    validate();
  }

  /// Parses the config syntax "A-B[,C-D...]" (degrees, half-open).
  static FovMask parse(const std::string& text) {
    std::vector<Interval> keep;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto dash = item.find('-', 1);  // allow no leading sign, degrees are >= 0
      if (dash == std::string::npos)
        throw FormatError("fov mask: interval '" + item + "' is not of the form A-B");
      std::size_t pos_a = 0, pos_b = 0;
      double a = 0.0, b = 0.0;
      try {
        a = std::stod(item.substr(0, dash), &pos_a);
        b = std::stod(item.substr(dash + 1), &pos_b);
      } catch (const std::exception&) {
        throw FormatError("fov mask: cannot parse interval '" + item + "'");
      }
      if (pos_a != dash || pos_b != item.size() - dash - 1)
        throw FormatError("fov mask: trailing junk in interval '" + item + "'");
      keep.emplace_back(a, b);
    }
    if (keep.empty()) throw FormatError("fov mask: empty specification");
    return FovMask(std::move(keep));
  }

  const std::vector<Interval>& intervals() const { return keep_; }

  /// True if azimuth theta (degrees in [0,360)) falls in a keep interval.
  bool contains(double theta) const {
    for (const auto& [start, end] : keep_)
      if (theta >= start && theta < end) return true;
    return false;
  }

  /// Total kept angle in degrees.
  double coverage() const {
    double total = 0.0;
    for (const auto& [start, end] : keep_) total += end - start;
    return total;
  }

  bool is_full() const { return coverage() >= 360.0; }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < keep_.size(); ++i) {
      if (i) out += ',';
      out += format_deg(keep_[i].first) + "-" + format_deg(keep_[i].second);
    }
    return out;
  }

 private:
  void validate() const {
    if (keep_.empty()) throw FormatError("fov mask: no intervals");
    double prev_end = -1.0;
    for (const auto& [start, end] : keep_) {
      if (!(start >= 0.0 && start < 360.0) || !(end > 0.0 && end <= 360.0) || !(start < end))
        throw FormatError("fov mask: interval [" + format_deg(start) + ", " + format_deg(end) +
                          ") out of range");
      if (start < prev_end)
        throw FormatError("fov mask: overlapping intervals near " + format_deg(start));
      prev_end = end;
    }
    if (coverage() <= 0.0 || coverage() > 360.0)
      throw FormatError("fov mask: total kept angle must be in (0, 360]");
  }

  static std::string format_deg(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  std::vector<Interval> keep_;
};

/// Keeps exactly the points whose azimuth lies in a keep interval; order
/// preserved. Models restricted-FOV sensors and occlusions by clipping a
/// full 360-degree scan.
inline PointCloud clip_fov(const PointCloud& cloud, const FovMask& mask) {
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.reserve(cloud.points.size());
  for (const Point& p : cloud.points)
    if (mask.contains(azimuth_deg(p.x, p.y))) out.points.push_back(p);
  return out;
}

}  // namespace solid
