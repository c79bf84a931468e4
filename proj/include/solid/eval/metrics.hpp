#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "solid/core/types.hpp"
#include "solid/eval/ground_truth.hpp"
#include "solid/retrieval/search.hpp"

namespace solid {

/// One query's retrieval outcome, nullopt when the pool was empty.
struct QueryResult {
  std::int64_t query_id = 0;
  std::optional<Match> match;
};

struct PrPoint {
  double threshold, precision, recall;
};

struct RocPoint {
  double threshold, fpr, tpr;  // fpr is NaN where FP + TN = 0
};

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct EvalReport {
  double recall_at_1 = 0.0;
  double auc = std::numeric_limits<double>::quiet_NaN();
  double f1_max = 0.0;
  double f1_threshold = 0.0;
  ConfusionCounts at_f1;
  std::vector<PrPoint> pr_curve;
  std::vector<RocPoint> roc_curve;
  bool roc_degenerate = false;  // single-class ROC, AUC undefined

  double mean_re_deg = std::numeric_limits<double>::quiet_NaN();
  double desc_hz = std::numeric_limits<double>::quiet_NaN();
  double search_hz = std::numeric_limits<double>::quiet_NaN();
  double combined_hz = std::numeric_limits<double>::quiet_NaN();
  std::int64_t payload_bytes = 0;

  std::int64_t num_queries = 0;
  std::int64_t num_gt_loops = 0;
};

/// Scores retrieval outcomes against ground truth.
///
/// Threshold sweep: 0, the midpoints between consecutive distinct observed
/// distances, and +inf; a query is predicted positive iff its candidate
/// distance is < tau. Each query lands in exactly one confusion cell per
/// threshold: TP when the candidate is a true loop, FP otherwise (a wrong
/// candidate on a loop-bearing query counts FP only), FN when predicted
/// negative despite a loop existing, TN when predicted negative with none.
/// Precision at zero predicted positives is 1 by convention. Recall@1 is
/// threshold-independent: the fraction of loop-bearing queries whose top-1
/// candidate is a true loop. Throws EvalError when no query has a loop.
inline EvalReport score_queries(const std::vector<QueryResult>& results, const GtLoopTable& gt) {
  if (results.size() != gt.entries.size())
    throw std::invalid_argument("score_queries: results/ground-truth size mismatch");

  EvalReport report;
  report.num_queries = static_cast<std::int64_t>(results.size());
  report.num_gt_loops = gt.queries_with_loop();
  if (report.num_gt_loops == 0)
    throw EvalError("no ground-truth loops: Recall@1 is undefined");

  struct Row {
    double dist;
    bool correct;
    bool has_loop;
  };
  std::vector<Row> scored;  // queries that produced a candidate
  scored.reserve(results.size());
  std::int64_t top1_correct = 0;
  std::int64_t no_cand_with_loop = 0, no_cand_without_loop = 0;

  for (std::size_t q = 0; q < results.size(); ++q) {
    const GtEntry& entry = gt.entries[q];
    if (!results[q].match) {
      (entry.has_loop() ? no_cand_with_loop : no_cand_without_loop) += 1;
      continue;
    }
    const Match& m = *results[q].match;
    const bool correct = entry.contains(m.candidate_id);
    scored.push_back(Row{m.distance, correct, entry.has_loop()});
    if (entry.has_loop() && correct) ++top1_correct;
  }
  report.recall_at_1 =
      static_cast<double>(top1_correct) / static_cast<double>(report.num_gt_loops);

  std::sort(scored.begin(), scored.end(),
            [](const Row& a, const Row& b) { return a.dist < b.dist; });

  // Thresholds: 0, midpoints of distinct consecutive distances, +inf.
  std::vector<double> thresholds;
  thresholds.push_back(0.0);
  for (std::size_t i = 0; i + 1 < scored.size(); ++i)
    if (scored[i].dist < scored[i + 1].dist)
      thresholds.push_back(0.5 * (scored[i].dist + scored[i + 1].dist));
  thresholds.push_back(std::numeric_limits<double>::infinity());

  ConfusionCounts c;
  c.fn = no_cand_with_loop;
  c.tn = no_cand_without_loop;
  for (const Row& row : scored) (row.has_loop ? c.fn : c.tn) += 1;

  std::size_t next = 0;  // first scored row not yet predicted positive
  double best_f1 = -1.0;
  for (const double tau : thresholds) {
    while (next < scored.size() && scored[next].dist < tau) {
      const Row& row = scored[next];
      if (row.correct) {
        c.tp += 1;
        c.fn -= 1;
      } else {
        c.fp += 1;
        (row.has_loop ? c.fn : c.tn) -= 1;
      }
      ++next;
    }

    const double precision =
        (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 1.0;
    const double recall =
        c.tp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    const double fpr = (c.fp + c.tn) > 0
                           ? static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn)
                           : std::numeric_limits<double>::quiet_NaN();

    report.pr_curve.push_back(PrPoint{tau, precision, recall});
    report.roc_curve.push_back(RocPoint{tau, fpr, recall});

    const double f1 = (precision + recall) > 0.0
                          ? 2.0 * precision * recall / (precision + recall)
                          : 0.0;
    if (f1 > best_f1) {
      best_f1 = f1;
      report.f1_max = f1;
      report.f1_threshold = tau;
      report.at_f1 = c;
    }
  }

  // AUC: trapezoid over the ROC points whose FPR is defined.
  double auc = 0.0;
  bool have_prev = false;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  int finite_points = 0;
  for (const RocPoint& p : report.roc_curve) {
    if (std::isnan(p.fpr)) continue;
    ++finite_points;
    if (have_prev) auc += (p.fpr - prev_fpr) * 0.5 * (p.tpr + prev_tpr);
    prev_fpr = p.fpr;
    prev_tpr = p.tpr;
    have_prev = true;
  }
  if (finite_points >= 2) {
    report.auc = auc;
  } else {
    report.roc_degenerate = true;  // all queries positive-class
  }
  return report;
}

/// Geodesic angle between two rotations, degrees:
/// arccos(clamp((trace(r_est^T r_gt) - 1) / 2, -1, 1)).
inline double rotation_error_deg(const Eigen::Matrix3d& r_est, const Eigen::Matrix3d& r_gt) {
  if (rotation_defect(r_est) > 1e-3 || rotation_defect(r_gt) > 1e-3)
    throw std::invalid_argument("rotation_error: input is not orthonormal");
  const double cos_angle =
      std::clamp(((r_est.transpose() * r_gt).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(cos_angle) * 180.0 / M_PI;
}

/// Rotation by `deg` about the z axis (the sensor vertical).
inline Eigen::Matrix3d yaw_rotation(double deg) {
  return Eigen::AngleAxisd(deg * M_PI / 180.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

/// Rotation by `deg` about an arbitrary axis (for pose files whose vertical
/// is not z, e.g. camera-frame trajectories).
inline Eigen::Matrix3d axis_rotation(double deg, const Eigen::Vector3d& axis) {
  return Eigen::AngleAxisd(deg * M_PI / 180.0, axis.normalized()).toRotationMatrix();
}

/// Analytic descriptor-exchange time: payload [B] / bandwidth [B/s] -> [s].
inline double communication_time_s(std::int64_t payload_bytes, double bandwidth_bytes_per_s) {
  if (payload_bytes < 0) throw std::invalid_argument("communication_time: negative payload");
  if (!(bandwidth_bytes_per_s > 0.0))
    throw std::invalid_argument("communication_time: bandwidth must be > 0");
  return static_cast<double>(payload_bytes) / bandwidth_bytes_per_s;
}

}  // namespace solid
