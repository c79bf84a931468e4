#pragma once

// Embedded property suite behind `solid selftest`. Runs on seeded synthetic
// data only, so a fresh checkout can verify the pipeline without datasets.
// Output is deterministic for a fixed seed (no timing, no paths).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>
#include <vector>

#include "solid/solid.hpp"

namespace solid::selftest {

namespace detail {

inline PointCloud random_cloud(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> xy(-60.0, 60.0);
  std::uniform_real_distribution<double> z(-2.0, 1.5);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) cloud.points.push_back(Point{xy(gen), xy(gen), z(gen)});
  return cloud;
}

inline PointCloud rotate_z(const PointCloud& cloud, double deg) {
  const double rad = deg * M_PI / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  PointCloud out;
  out.frame_id = cloud.frame_id;
  for (const Point& p : cloud.points)
    out.points.push_back(Point{c * p.x - s * p.y, s * p.x + c * p.y, p.z});
  return out;
}

/// Cloud whose points sit only on bin centers (radial bins >= 2 so no point
/// collapses onto the origin), optionally displaced by whole azimuth bins.
inline PointCloud bin_center_cloud(std::mt19937_64& gen, const BinningConfig& cfg,
                                   int shift_bins) {
  std::uniform_int_distribution<int> radial(2, cfg.n_r);
  std::uniform_int_distribution<int> azim(1, cfg.n_a);
  std::uniform_int_distribution<int> elev(1, cfg.n_e);
  const double e_width = (cfg.f_up - cfg.f_down) / cfg.n_e;

  PointCloud cloud;
  for (int n = 0; n < 400; ++n) {
    const double r = (radial(gen) - 1) * cfg.l_max / cfg.n_r;
    const double theta = ((azim(gen) - 1 + shift_bins) % cfg.n_a) * 360.0 / cfg.n_a;
    const double phi = (cfg.f_down + (elev(gen) - 0.75) * e_width) * M_PI / 180.0;
    const double rad = theta * M_PI / 180.0;
    cloud.points.push_back(Point{r * std::cos(rad), r * std::sin(rad), r * std::tan(phi)});
  }
  return cloud;
}

inline SolidDescriptor random_descriptor(std::mt19937_64& gen, const BinningConfig& cfg,
                                         std::int64_t id) {
  std::uniform_real_distribution<double> value(0.0, 1.0);
  SolidDescriptor d;
  d.frame_id = id;
  d.r_solid.resize(cfg.n_r);
  d.a_solid.resize(cfg.n_a);
  for (int i = 0; i < cfg.n_r; ++i) d.r_solid(i) = value(gen);
  for (int j = 0; j < cfg.n_a; ++j) d.a_solid(j) = value(gen);
  return d;
}

}  // namespace detail

struct Property {
  const char* name;
  std::function<bool(std::mt19937_64&, std::string&)> run;
};

inline std::vector<Property> properties() {
  using detail::bin_center_cloud;
  using detail::random_cloud;
  using detail::random_descriptor;
  using detail::rotate_z;

  std::vector<Property> props;

  props.push_back({"yaw_invariance_rsolid", [](std::mt19937_64& gen, std::string&) {
    BinningConfig cfg;
    BinningConfig binned_only = cfg;
    binned_only.voxel = 0.0;  // rotation is applied after downsampling
    std::uniform_real_distribution<double> angle(0.0, 360.0);
    for (int trial = 0; trial < 10; ++trial) {
      const PointCloud down = voxel_downsample(random_cloud(gen, 4000), cfg.voxel);
      const SolidDescriptor a = describe(down, binned_only);
      const SolidDescriptor b = describe(rotate_z(down, angle(gen)), binned_only);
      for (int i = 0; i < cfg.n_r; ++i) {
        const double denom = std::max({std::abs(a.r_solid(i)), std::abs(b.r_solid(i)), 1e-12});
        if (std::abs(a.r_solid(i) - b.r_solid(i)) / denom >= 1e-9) return false;
      }
    }
    return true;
  }});

  props.push_back({"azimuth_shift_law", [](std::mt19937_64& gen, std::string&) {
    BinningConfig cfg;
    cfg.voxel = 0.0;
    const std::uint64_t state = gen();
    for (const int m : {1, 13, 31, 59}) {
      std::mt19937_64 base_gen(state), moved_gen(state);
      const SolidDescriptor base = describe(bin_center_cloud(base_gen, cfg, 0), cfg);
      const SolidDescriptor moved = describe(bin_center_cloud(moved_gen, cfg, m), cfg);
      for (int j = 0; j < cfg.n_a; ++j)
        if (moved.a_solid((j + m) % cfg.n_a) != base.a_solid(j)) return false;
    }
    return true;
  }});

  props.push_back({"heading_recovery", [](std::mt19937_64& gen, std::string&) {
    BinningConfig cfg;
    cfg.voxel = 0.0;
    const std::uint64_t state = gen();
    for (const int m : {2, 7, 30, 58}) {
      std::mt19937_64 base_gen(state), moved_gen(state);
      const SolidDescriptor query = describe(bin_center_cloud(base_gen, cfg, 0), cfg);
      const SolidDescriptor cand = describe(bin_center_cloud(moved_gen, cfg, m), cfg);
      const HeadingEstimate h = estimate_heading(query.a_solid, cand.a_solid);
      if (h.shift != m) return false;
    }
    return true;
  }});

  props.push_back({"kdtree_equals_bruteforce", [](std::mt19937_64& gen, std::string& note) {
    BinningConfig cfg;
    DescriptorDatabase db(cfg);
    for (int i = 0; i < 500; ++i) {
      FrameRecord rec;
      rec.frame_id = i;
      rec.desc = random_descriptor(gen, cfg, i);
      db.add(std::move(rec));
    }
    db.build_index();
    int agreements = 0;
    for (int q = 0; q < 50; ++q) {
      const SolidDescriptor query = random_descriptor(gen, cfg, 1 << 20);
      const auto bf = search_bruteforce(db, query, 0, SessionMode::Multi);
      const auto kd = search_kdtree(db, query, 0, SessionMode::Multi);
      if (bf && kd && bf->candidate_id == kd->candidate_id) ++agreements;
    }
    note = "50 queries, " + std::to_string(agreements) + " agreements";
    return agreements == 50;
  }});

  props.push_back({"auc_rank_oracle", [](std::mt19937_64& gen, std::string&) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::bernoulli_distribution is_loop(0.4);
    const int n = 150;
    std::vector<Eigen::Vector3d> targets;
    for (int c = 0; c < n; ++c) targets.emplace_back(c * 50.0, 0, 0);

    std::set<double> seen;
    std::vector<Eigen::Vector3d> positions;
    std::vector<QueryResult> results;
    std::vector<std::pair<bool, double>> labeled;
    for (int q = 0; q < n; ++q) {
      const bool label = is_loop(gen);
      double score = dist(gen);
      while (!seen.insert(score).second) score = dist(gen);
      positions.emplace_back(label ? targets[q] : Eigen::Vector3d(q * 50.0, 1000.0, 0));
      QueryResult r;
      r.query_id = q;
      Match m;
      m.query_id = q;
      m.candidate_id = q;
      m.distance = score;
      r.match = m;
      results.push_back(r);
      labeled.emplace_back(label, score);
    }
    const EvalReport report = score_queries(results, build_gt_multi(positions, targets, 5.0));

    // Mann-Whitney rank statistic
    std::vector<std::pair<double, bool>> rows;
    for (const auto& [label, d] : labeled) rows.emplace_back(-d, label);
    std::sort(rows.begin(), rows.end());
    double rank_sum = 0.0;
    std::int64_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].second) {
        rank_sum += static_cast<double>(i + 1);
        ++pos;
      } else {
        ++neg;
      }
    }
    const double oracle =
        (rank_sum - 0.5 * pos * (pos + 1)) / (static_cast<double>(pos) * neg);
    return std::abs(report.auc - oracle) < 1e-9;
  }});

  props.push_back({"f1_exhaustive_oracle", [](std::mt19937_64& gen, std::string&) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::bernoulli_distribution is_loop(0.5);
    const int n = 120;
    std::vector<Eigen::Vector3d> targets;
    for (int c = 0; c < n; ++c) targets.emplace_back(c * 50.0, 0, 0);
    std::vector<Eigen::Vector3d> positions;
    std::vector<QueryResult> results;
    struct Row {
      double d;
      bool label;
    };
    std::vector<Row> rows;
    for (int q = 0; q < n; ++q) {
      const bool label = is_loop(gen);
      const double score = dist(gen);
      positions.emplace_back(label ? targets[q] : Eigen::Vector3d(q * 50.0, 1000.0, 0));
      QueryResult r;
      r.query_id = q;
      Match m;
      m.query_id = q;
      m.candidate_id = q;
      m.distance = score;
      r.match = m;
      results.push_back(r);
      rows.push_back(Row{score, label});
    }
    const EvalReport report = score_queries(results, build_gt_multi(positions, targets, 5.0));

    std::vector<double> taus{0.0, std::numeric_limits<double>::infinity()};
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.d < b.d; });
    for (const Row& r : rows) taus.push_back(r.d);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
      taus.push_back(0.5 * (rows[i].d + rows[i + 1].d));
    double best = 0.0;
    for (const double tau : taus) {
      std::int64_t tp = 0, fp = 0, fn = 0;
      for (const Row& r : rows) {
        const bool positive = r.d < tau;
        if (positive && r.label) ++tp;
        if (positive && !r.label) ++fp;
        if (!positive && r.label) ++fn;
      }
      const double precision = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 1.0;
      const double recall = tp > 0 ? double(tp) / double(tp + fn) : 0.0;
      const double f1 =
          (precision + recall) > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
      best = std::max(best, f1);
    }
    return report.f1_max == best;
  }});

  props.push_back({"ground_truth_quadratic_oracle", [](std::mt19937_64& gen, std::string&) {
    std::uniform_real_distribution<double> coord(0.0, 50.0);
    std::vector<Eigen::Vector3d> positions;
    for (int i = 0; i < 300; ++i) positions.emplace_back(coord(gen), coord(gen), 0.0);
    const GtLoopTable table = build_gt(positions, 8.0, 30);
    for (std::size_t q = 0; q < positions.size(); ++q) {
      std::vector<std::int64_t> oracle;
      for (std::size_t c = 0; c < positions.size(); ++c)
        if (static_cast<std::int64_t>(c) <= static_cast<std::int64_t>(q) - 30 &&
            (positions[q] - positions[c]).norm() <= 8.0)
          oracle.push_back(static_cast<std::int64_t>(c));
      if (table.entries[q].loop_ids != oracle) return false;
    }
    return true;
  }});

  props.push_back({"mass_conservation", [](std::mt19937_64& gen, std::string&) {
    BinningConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
      const CounterSet cs =
          build_counters(voxel_downsample(random_cloud(gen, 2500), cfg.voxel), cfg);
      const SolidDescriptor d = build_solid(cs, cfg);
      // exact integer identity: both marginals agree slab by slab
      if (cs.rec.colwise().sum() != cs.aec.colwise().sum()) return false;
      if (cs.rec.sum() != cs.binned || cs.aec.sum() != cs.binned) return false;
      double rhs = 0.0;
      for (int k = 0; k < cfg.n_e; ++k) rhs += static_cast<double>(cs.ec(k)) * cs.iev(k);
      const double tol = 1e-12 * std::max(1.0, std::abs(rhs));
      if (std::abs(d.r_solid.sum() - rhs) > tol) return false;
      if (std::abs(d.a_solid.sum() - rhs) > tol) return false;
    }
    return true;
  }});

  props.push_back({"constant_iev_row_sums", [](std::mt19937_64& gen, std::string&) {
    BinningConfig cfg;
    cfg.variant = DescriptorVariant::ConstantIEV;
    for (int trial = 0; trial < 10; ++trial) {
      const CounterSet cs =
          build_counters(voxel_downsample(random_cloud(gen, 2500), cfg.voxel), cfg);
      const SolidDescriptor d = build_solid(cs, cfg);
      for (int i = 0; i < cfg.n_r; ++i)
        if (d.r_solid(i) != static_cast<double>(cs.rec.row(i).sum())) return false;
    }
    return true;
  }});

  props.push_back({"rotation_error_yaw", [](std::mt19937_64&, std::string&) {
    for (const double delta : {0.0, 1.0, 90.0, 180.0}) {
      const double re = rotation_error_deg(yaw_rotation(delta), Eigen::Matrix3d::Identity());
      if (std::abs(re - delta) > 1e-9) return false;
    }
    return true;
  }});

  props.push_back({"database_round_trip", [](std::mt19937_64& gen, std::string&) {
    BinningConfig cfg;
    DescriptorDatabase db(cfg);
    for (int i = 0; i < 5; ++i) {
      FrameRecord rec;
      rec.frame_id = i;
      rec.position = Eigen::Vector3d(i, 2.0 * i, 0.5);
      rec.desc = random_descriptor(gen, cfg, i);
      db.add(std::move(rec));
    }
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = (dir / ("solid_selftest_" + std::to_string(::getpid()) + "_" +
                              std::to_string(gen()) + ".db"))
                          .string();
    bool ok = true;
    try {
      save_db(db, path);
      const DescriptorDatabase loaded = load_db(path);
      ok = loaded.size() == db.size();
      for (std::size_t i = 0; ok && i < db.size(); ++i)
        ok = loaded.records()[i].desc.r_solid == db.records()[i].desc.r_solid &&
             loaded.records()[i].desc.a_solid == db.records()[i].desc.a_solid &&
             *loaded.records()[i].position == *db.records()[i].position;
    } catch (const Error&) {
      ok = false;
    }
    std::error_code ec;
    std::filesystem::remove(path, ec);
    return ok;
  }});

  props.push_back({"cosine_scale_invariance", [](std::mt19937_64& gen, std::string&) {
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 50.0);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd a(10), b(10);
      for (int i = 0; i < 10; ++i) {
        a(i) = value(gen);
        b(i) = value(gen);
      }
      const double d = cosine_distance(a, b);
      if (d < 0.0 || d > 2.0) return false;
      if (std::abs(cosine_distance(scale(gen) * a, scale(gen) * b) - d) > 1e-12) return false;
      if (cosine_distance(b, a) != d) return false;
    }
    return true;
  }});

  props.push_back({"fov_clip_partition", [](std::mt19937_64& gen, std::string&) {
    const PointCloud cloud = random_cloud(gen, 1500);
    const FovMask mask = FovMask::parse("300-360,0-60");
    const FovMask complement = FovMask::parse("60-300");
    const PointCloud kept = clip_fov(cloud, mask);
    const PointCloud dropped = clip_fov(cloud, complement);
    if (kept.size() + dropped.size() != cloud.size()) return false;
    const PointCloud twice = clip_fov(kept, mask);
    return twice.size() == kept.size();
  }});

  props.push_back({"voxel_cell_bounds", [](std::mt19937_64& gen, std::string&) {
    const PointCloud cloud = random_cloud(gen, 2000);
    const double voxel = 0.5;
    const PointCloud down = voxel_downsample(cloud, voxel);
    if (down.size() > cloud.size()) return false;
    for (const Point& p : down.points) {
      for (const double c : {p.x, p.y, p.z}) {
        const double cell = std::floor(c / voxel);
        if (c < cell * voxel - 1e-9 || c > (cell + 1) * voxel + 1e-9) return false;
      }
    }
    return true;
  }});

  return props;
}

/// Runs every property; prints one line each plus a summary. Returns true
/// iff all pass.
inline bool run(std::ostream& out, std::uint64_t seed) {
  const std::vector<Property> props = properties();
  out << "solid selftest: " << props.size() << " properties, seed " << seed << "\n";
  int passed = 0;
  for (const Property& prop : props) {
    std::mt19937_64 gen(seed ^ std::hash<std::string>{}(prop.name));
    std::string note;
    bool ok = false;
    try {
      ok = prop.run(gen, note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    out << (ok ? "[ ok ] " : "[FAIL] ") << prop.name;
    if (!note.empty()) out << " (" << note << ")";
    out << "\n";
    passed += ok;
  }
  out << passed << "/" << props.size() << " properties passed\n";
  return passed == static_cast<int>(props.size());
}

}  // namespace solid::selftest
