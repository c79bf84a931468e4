#pragma once

#include <cstdint>
#include <tuple>
#include <utility>

#include <Eigen/Core>

#include "solid/core/types.hpp"
#include "solid/descriptor/binning.hpp"

namespace solid {

using CounterMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using CounterVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Per-bin point counts and the derived elevation weights.
///
/// rec: n_r x n_e range-elevation counter, aec: n_a x n_e azimuth-elevation
/// counter, ec: radial sums of rec per elevation slab, iev: min-max
/// normalized ec in [0, 1].
struct CounterSet {
  CounterMatrix rec;
  CounterMatrix aec;
  CounterVector ec;
  Eigen::VectorXd iev;
  std::int64_t binned = 0;     // points that landed in a bin
  std::int64_t discarded = 0;  // points outside range/elevation limits
};

/// ec = column sums of rec; iev = (ec - min) / (max - min). A constant ec
/// (including the empty cloud) yields all-ones, as does the ConstantIEV
/// variant, so the descriptor degrades to plain counts instead of zeroing.
inline std::pair<CounterVector, Eigen::VectorXd> elevation_weights(
    const CounterMatrix& rec, DescriptorVariant variant = DescriptorVariant::Standard) {
  const Eigen::Index n_e = rec.cols();
  CounterVector ec = rec.colwise().sum();
  if (variant == DescriptorVariant::ConstantIEV)
    return {std::move(ec), Eigen::VectorXd::Ones(n_e)};

  const std::int64_t lo = ec.minCoeff();
  const std::int64_t hi = ec.maxCoeff();
  if (hi == lo) return {std::move(ec), Eigen::VectorXd::Ones(n_e)};

  Eigen::VectorXd iev(n_e);
  const double span = static_cast<double>(hi - lo);
  for (Eigen::Index k = 0; k < n_e; ++k)
    iev[k] = static_cast<double>(ec[k] - lo) / span;
  return {std::move(ec), std::move(iev)};
}

/// Counts the cloud's points into REC and AEC and derives EC / IEV.
/// Expects the cloud to be voxel-downsampled already; this op only bins.
inline CounterSet build_counters(const PointCloud& cloud, const BinningConfig& cfg) {
  cfg.validate();
  CounterSet cs;
  cs.rec = CounterMatrix::Zero(cfg.n_r, cfg.n_e);
  cs.aec = CounterMatrix::Zero(cfg.n_a, cfg.n_e);

  for (const Point& p : cloud.points) {
    const auto bin = bin_indices(to_spherical(p), cfg);
    if (!bin) {
      ++cs.discarded;
      continue;
    }
    cs.rec(bin->i - 1, bin->k - 1) += 1;
    cs.aec(bin->j - 1, bin->k - 1) += 1;
    ++cs.binned;
  }

  std::tie(cs.ec, cs.iev) = elevation_weights(cs.rec, cfg.variant);
  return cs;
}

}  // namespace solid
