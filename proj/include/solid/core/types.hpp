#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

namespace solid {

/// A single LiDAR return in the sensor frame, meters.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// One scan: points in sensor frame plus its sequence index.
struct PointCloud {
  std::vector<Point> points;
  std::int64_t frame_id = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Rigid pose: orthonormal rotation (det +1) and translation in meters.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  std::int64_t frame_id = 0;
};

/// Max deviation of R from a proper rotation: max(|R^T R - I|, |det(R) - 1|).
inline double rotation_defect(const Eigen::Matrix3d& r) {
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det = std::abs(r.determinant() - 1.0);
  return std::max(ortho, det);
}

// ---------------------------------------------------------------------------
// Error taxonomy
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be opened / read / written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

/// File opened fine but the content is malformed.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(what) {}
};

/// Descriptor database file errors, with a machine-checkable kind.
class DbError : public Error {
 public:
  enum class Kind { BadMagic, BadVersion, Truncated, Malformed };

  DbError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Evaluation cannot produce a defined result (e.g. no ground-truth loops).
class EvalError : public Error {
 public:
  explicit EvalError(const std::string& what) : Error(what) {}
};

}  // namespace solid
