#pragma once

// SOLiD: spatially organized, lightweight global descriptor for
// FOV-constrained LiDAR place recognition, with retrieval, 1-DoF heading
// estimation, and an evaluation harness.

#include "solid/core/types.hpp"
#include "solid/descriptor/binning.hpp"
#include "solid/descriptor/counters.hpp"
#include "solid/descriptor/descriptor.hpp"
#include "solid/eval/benchmark.hpp"
#include "solid/eval/ground_truth.hpp"
#include "solid/eval/metrics.hpp"
#include "solid/ingest/fov.hpp"
#include "solid/ingest/kitti.hpp"
#include "solid/ingest/trajectory.hpp"
#include "solid/ingest/voxel.hpp"
#include "solid/retrieval/database.hpp"
#include "solid/retrieval/kdtree.hpp"
#include "solid/retrieval/search.hpp"
