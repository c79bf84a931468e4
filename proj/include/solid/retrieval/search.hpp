#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Core>

#include "solid/retrieval/database.hpp"

namespace solid {

/// Whether a query runs against its own session (recent frames excluded)
/// or a separate target database (whole pool admissible).
enum class SessionMode { Single, Multi };

/// Cosine distance 1 - a.b / (|a||b|), clamped into [0, 2]. A zero-norm
/// operand yields 1.0 and sets *zero_norm when provided.
inline double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                              bool* zero_norm = nullptr) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_distance: vector lengths differ (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                ")");
  const double na2 = a.squaredNorm();
  const double nb2 = b.squaredNorm();
  if (na2 == 0.0 || nb2 == 0.0) {
    if (zero_norm) *zero_norm = true;
    return 1.0;
  }
  const double d = 1.0 - a.dot(b) / std::sqrt(na2 * nb2);
  return std::min(2.0, std::max(0.0, d));
}

/// Result of the azimuthal alignment search.
struct HeadingEstimate {
  int shift = 0;        // n* in [0, n_a)
  double degrees = 0.;  // n* * 360 / n_a
};

/// Finds n* = argmin_n |query - rotate(cand, n)| over all n_a circular
/// shifts, where rotate(v, n)[j] = v[(j + n) mod n_a]. Ties go to the
/// smallest n. The result is the relative yaw of the candidate frame.
inline HeadingEstimate estimate_heading(const Eigen::VectorXd& query_a,
                                        const Eigen::VectorXd& cand_a) {
  const int n_a = static_cast<int>(query_a.size());
  if (cand_a.size() != n_a)
    throw std::invalid_argument("estimate_heading: A-SOLiD lengths differ");
  if (n_a == 0) throw std::invalid_argument("estimate_heading: empty descriptors");

  int best_n = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int n = 0; n < n_a; ++n) {
    double d2 = 0.0;
    for (int j = 0; j < n_a; ++j) {
      const double diff = query_a[j] - cand_a[(j + n) % n_a];
      d2 += diff * diff;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best_n = n;
    }
  }
  return HeadingEstimate{best_n, best_n * 360.0 / n_a};
}

/// A retrieved place: candidate, cosine distance, and the 1-DoF heading.
struct Match {
  std::int64_t query_id = 0;
  std::int64_t candidate_id = 0;
  double distance = 0.0;      // cosine distance on raw R-SOLiD, in [0, 2]
  int heading_shift = 0;      // n* in [0, n_a)
  double heading_deg = 0.0;   // n* * 360 / n_a
  bool degenerate = false;    // a zero-norm descriptor was involved
};

/// Diagnostics a search can raise without failing.
struct SearchDiag {
  bool zero_norm_query = false;
  bool pool_empty = false;
};

namespace detail {

inline bool admissible(const FrameRecord& rec, const SolidDescriptor& query,
                       std::int64_t exclude_recent, SessionMode mode) {
  if (mode == SessionMode::Multi) return true;
  return rec.frame_id <= query.frame_id - exclude_recent;
}

inline Match finish_match(const FrameRecord& cand, const SolidDescriptor& query,
                          bool degenerate) {
  Match m;
  m.query_id = query.frame_id;
  m.candidate_id = cand.frame_id;
  bool zero = false;
  m.distance = cosine_distance(query.r_solid, cand.desc.r_solid, &zero);
  const HeadingEstimate h = estimate_heading(query.a_solid, cand.desc.a_solid);
  m.heading_shift = h.shift;
  m.heading_deg = h.degrees;
  m.degenerate = degenerate || zero;
  return m;
}

}  // namespace detail

/// Linear scan over the admissible pool; returns the smallest cosine
/// distance, ties broken by smaller frame_id. Zero-norm comparisons score
/// 1.0 and mark the match degenerate.
inline std::optional<Match> search_bruteforce(const DescriptorDatabase& db,
                                              const SolidDescriptor& query,
                                              std::int64_t exclude_recent,
                                              SessionMode mode = SessionMode::Single,
                                              SearchDiag* diag = nullptr) {
  const FrameRecord* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  bool best_zero = false;

  for (const FrameRecord& rec : db.records()) {
    if (!detail::admissible(rec, query, exclude_recent, mode)) continue;
    bool zero = false;
    const double d = cosine_distance(query.r_solid, rec.desc.r_solid, &zero);
    if (d < best_dist) {  // strict: earlier (smaller) frame_id wins ties
      best_dist = d;
      best = &rec;
      best_zero = zero;
    }
  }
  if (!best) {
    if (diag) diag->pool_empty = true;
    return std::nullopt;
  }
  if (diag && query.r_solid.norm() == 0.0) diag->zero_norm_query = true;
  return detail::finish_match(*best, query, best_zero);
}

/// Exact nearest neighbor via the kd-tree over unit-normalized R-SOLiD.
/// On the unit sphere the Euclidean argmin equals the cosine argmin, so
/// whenever the brute-force minimum is unique both searches agree on the
/// candidate. The reported distance is recomputed on the raw vectors.
inline std::optional<Match> search_kdtree(const DescriptorDatabase& db,
                                          const SolidDescriptor& query,
                                          std::int64_t exclude_recent,
                                          SessionMode mode = SessionMode::Single,
                                          SearchDiag* diag = nullptr) {
  const KdTree& tree = db.index_tree();

  const double norm = query.r_solid.norm();
  if (norm == 0.0) {
    if (diag) diag->zero_norm_query = true;
    return std::nullopt;
  }
  const Eigen::VectorXd unit = query.r_solid / norm;

  const std::int64_t bound =
      mode == SessionMode::Multi ? std::numeric_limits<std::int64_t>::max()
                                 : query.frame_id - exclude_recent;
  const auto hit = tree.nearest(unit, [bound](std::int64_t id) { return id <= bound; });
  if (!hit) {
    if (diag) diag->pool_empty = true;
    return std::nullopt;
  }
  const FrameRecord& cand = db.records()[db.record_of_index_point(hit->point)];
  return detail::finish_match(cand, query, false);
}

}  // namespace solid
