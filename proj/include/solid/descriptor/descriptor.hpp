#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "solid/core/types.hpp"
#include "solid/descriptor/counters.hpp"
#include "solid/ingest/voxel.hpp"

namespace solid {

/// The SOLiD descriptor pair: R-SOLiD (length n_r, drives retrieval) and
/// A-SOLiD (length n_a, drives heading estimation).
struct SolidDescriptor {
  Eigen::VectorXd r_solid;
  Eigen::VectorXd a_solid;
  std::int64_t frame_id = 0;
};

/// Reweights the counters by the elevation weights:
/// r_solid[i] = sum_k rec(i,k) * iev[k], a_solid likewise from aec.
inline SolidDescriptor build_solid(const CounterSet& counters, const BinningConfig& cfg,
                                   std::int64_t frame_id = 0) {
  if (counters.rec.rows() != cfg.n_r || counters.rec.cols() != cfg.n_e ||
      counters.aec.rows() != cfg.n_a || counters.iev.size() != cfg.n_e)
    throw std::invalid_argument("build_solid: counter dimensions do not match config");

  SolidDescriptor d;
  d.frame_id = frame_id;
  d.r_solid = counters.rec.cast<double>() * counters.iev;
  d.a_solid = counters.aec.cast<double>() * counters.iev;
  return d;
}

/// Full descriptor pipeline for a raw cloud: voxel downsample (skipped when
/// cfg.voxel <= 0), bin, reweight. Deterministic and independent of point
/// order. An empty cloud yields all-zero descriptors.
inline SolidDescriptor describe(const PointCloud& cloud, const BinningConfig& cfg,
                                std::int64_t* discarded = nullptr) {
  const CounterSet counters =
      cfg.voxel > 0.0 ? build_counters(voxel_downsample(cloud, cfg.voxel), cfg)
                      : build_counters(cloud, cfg);
  if (discarded) *discarded = counters.discarded;
  return build_solid(counters, cfg, cloud.frame_id);
}

}  // namespace solid
