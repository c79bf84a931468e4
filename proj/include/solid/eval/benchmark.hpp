#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "solid/descriptor/descriptor.hpp"
#include "solid/retrieval/search.hpp"

namespace solid {

enum class SearchBackend { BruteForce, KdTree };

inline SearchBackend parse_backend(const std::string& s) {
  if (s == "bf") return SearchBackend::BruteForce;
  if (s == "kd") return SearchBackend::KdTree;
  throw FormatError("unknown search backend: " + s);
}

inline std::string to_string(SearchBackend b) {
  return b == SearchBackend::BruteForce ? "bf" : "kd";
}

struct BenchResult {
  double mean_desc_s = 0.0;
  double mean_search_s = 0.0;
  double desc_hz = 0.0;
  double search_hz = 0.0;
  double combined_hz = 0.0;  // 1 / (mean_desc_s + mean_search_s)
  int frames = 0;
};

/// Times description generation and loop search per scan, single-threaded.
/// Needs at least 10 scans for a stable average.
inline BenchResult bench_pipeline(const std::vector<PointCloud>& scans, const BinningConfig& cfg,
                                  const DescriptorDatabase& db, SearchBackend backend,
                                  std::int64_t exclude_recent = 0,
                                  SessionMode mode = SessionMode::Multi) {
  if (scans.size() < 10)
    throw std::invalid_argument("bench_pipeline: need at least 10 scans");
  if (backend == SearchBackend::KdTree && !db.has_index())
    throw std::logic_error("bench_pipeline: kd backend requires a built index");

  using clock = std::chrono::steady_clock;
  double desc_total = 0.0, search_total = 0.0;
  for (const PointCloud& scan : scans) {
    const auto t0 = clock::now();
    const SolidDescriptor desc = describe(scan, cfg);
    const auto t1 = clock::now();
    if (backend == SearchBackend::BruteForce)
      (void)search_bruteforce(db, desc, exclude_recent, mode);
    else
      (void)search_kdtree(db, desc, exclude_recent, mode);
    const auto t2 = clock::now();
    desc_total += std::chrono::duration<double>(t1 - t0).count();
    search_total += std::chrono::duration<double>(t2 - t1).count();
  }

  BenchResult r;
  r.frames = static_cast<int>(scans.size());
  r.mean_desc_s = desc_total / r.frames;
  r.mean_search_s = search_total / r.frames;
  r.desc_hz = r.mean_desc_s > 0.0 ? 1.0 / r.mean_desc_s : 0.0;
  r.search_hz = r.mean_search_s > 0.0 ? 1.0 / r.mean_search_s : 0.0;
  const double combined = r.mean_desc_s + r.mean_search_s;
  r.combined_hz = combined > 0.0 ? 1.0 / combined : 0.0;
  return r;
}

}  // namespace solid
