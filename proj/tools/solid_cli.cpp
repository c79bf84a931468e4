// solid: batch CLI for SOLiD descriptor generation, place retrieval, and
// evaluation. Subcommands: describe, eval, bench, selftest.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "solid/cli/run_config.hpp"
#include "solid/cli/selftest.hpp"
#include "solid/solid.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDataError = 2;
constexpr int kExitPropertyFailure = 3;

std::string fmt(double v) { return solid::detail::format_double(v); }

Eigen::Vector3d up_axis_vector(const std::string& name) {
  if (name == "z") return Eigen::Vector3d::UnitZ();
  if (name == "y") return Eigen::Vector3d::UnitY();
  if (name == "x") return Eigen::Vector3d::UnitX();
  if (name == "-z") return -Eigen::Vector3d::UnitZ();
  if (name == "-y") return -Eigen::Vector3d::UnitY();
  if (name == "-x") return -Eigen::Vector3d::UnitX();
  throw solid::FormatError("unknown up axis: " + name);
}

std::vector<fs::path> list_scan_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw solid::IoError("scan directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".bin")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw solid::IoError("no .bin scans in " + dir);
  return files;
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw solid::IoError("cannot create output directory: " + out);
}

// ---------------------------------------------------------------------------
// config plumbing: file config first, explicit command-line flags override
// ---------------------------------------------------------------------------

struct ConfigCli {
  solid::RunConfig cfg;       // bound to CLI11 options
  std::string config_path;    // --config

  void add_common(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file (flags override it)");
    cmd->add_option("--scans", cfg.scans, "directory of .bin scans");
    cmd->add_option("--poses", cfg.poses, "pose file (12 floats per line, row-major 3x4)");
    cmd->add_option("--fov", cfg.fov, "kept azimuth intervals, e.g. \"300-360,0-60\"");
    cmd->add_option("--voxel", cfg.voxel, "downsampling voxel size in meters (<= 0 disables)");
    cmd->add_option("--nr", cfg.nr, "radial bin count");
    cmd->add_option("--na", cfg.na, "azimuthal bin count");
    cmd->add_option("--ne", cfg.ne, "elevational bin count (sensor channels)");
    cmd->add_option("--lmax", cfg.lmax, "max observable range in meters");
    cmd->add_option("--fup", cfg.fup, "upper vertical FOV in degrees");
    cmd->add_option("--fdown", cfg.fdown, "lower vertical FOV in degrees");
    cmd->add_option("--exclude-recent", cfg.exclude_recent,
                    "frames excluded from the candidate pool (single-session)");
    cmd->add_option("--gt-dist", cfg.gt_dist, "ground-truth loop radius in meters");
    cmd->add_option("--sample-spacing", cfg.sample_spacing,
                    "trajectory sampling spacing in meters (0 disables)");
    cmd->add_option("--backend", cfg.backend, "search backend: bf or kd")
        ->check(CLI::IsMember({"bf", "kd"}));
    cmd->add_option("--variant", cfg.variant, "descriptor variant")
        ->check(CLI::IsMember({"standard", "constant-iev"}));
    cmd->add_option("--up-axis", cfg.up_axis,
                    "vertical axis of the pose frame for rotation error")
        ->check(CLI::IsMember({"x", "y", "z", "-x", "-y", "-z"}));
    cmd->add_option("--out", cfg.out, "output directory");
    cmd->add_option("--jobs", cfg.jobs, "worker threads for describe")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", cfg.seed, "seed for synthetic generators");
  }

  /// Final config: file (if any) overridden by explicitly passed flags.
  solid::RunConfig resolve(CLI::App* cmd) const {
    if (config_path.empty()) return cfg;
    solid::RunConfig merged = solid::RunConfig::load(config_path);
    const auto take = [&](const char* flag, auto member) {
      if (cmd->count(flag) > 0) merged.*member = cfg.*member;
    };
    take("--scans", &solid::RunConfig::scans);
    take("--poses", &solid::RunConfig::poses);
    take("--fov", &solid::RunConfig::fov);
    take("--voxel", &solid::RunConfig::voxel);
    take("--nr", &solid::RunConfig::nr);
    take("--na", &solid::RunConfig::na);
    take("--ne", &solid::RunConfig::ne);
    take("--lmax", &solid::RunConfig::lmax);
    take("--fup", &solid::RunConfig::fup);
    take("--fdown", &solid::RunConfig::fdown);
    take("--exclude-recent", &solid::RunConfig::exclude_recent);
    take("--gt-dist", &solid::RunConfig::gt_dist);
    take("--sample-spacing", &solid::RunConfig::sample_spacing);
    take("--backend", &solid::RunConfig::backend);
    take("--variant", &solid::RunConfig::variant);
    take("--up-axis", &solid::RunConfig::up_axis);
    take("--out", &solid::RunConfig::out);
    take("--jobs", &solid::RunConfig::jobs);
    take("--seed", &solid::RunConfig::seed);
    return merged;
  }
};

// ---------------------------------------------------------------------------
// describe
// ---------------------------------------------------------------------------

int cmd_describe(const solid::RunConfig& run) {
  const solid::BinningConfig binning = run.binning();
  const solid::FovMask mask = solid::FovMask::parse(run.fov);

  const std::vector<fs::path> files = list_scan_files(run.scans);
  std::vector<solid::Pose> poses;
  if (!run.poses.empty()) {
    poses = solid::load_kitti_poses(run.poses);
    if (poses.size() < files.size())
      throw solid::FormatError("pose file has " + std::to_string(poses.size()) +
                               " poses for " + std::to_string(files.size()) + " scans");
  }

  // frame selection: all frames, or distance-sampled when requested
  std::vector<std::int64_t> frame_ids;
  if (run.sample_spacing > 0.0) {
    if (poses.empty())
      throw solid::FormatError("--sample-spacing needs --poses for trajectory distances");
    frame_ids = solid::sample_by_distance(poses, run.sample_spacing);
    frame_ids.erase(std::remove_if(frame_ids.begin(), frame_ids.end(),
                                   [&](std::int64_t id) {
                                     return id >= static_cast<std::int64_t>(files.size());
                                   }),
                    frame_ids.end());
  } else {
    frame_ids.resize(files.size());
    std::iota(frame_ids.begin(), frame_ids.end(), 0);
  }

  struct FrameOut {
    solid::SolidDescriptor desc;
    std::int64_t discarded = 0;
    std::size_t raw_points = 0;
    std::size_t kept_points = 0;
  };
  std::vector<FrameOut> outputs(frame_ids.size());

  const auto process = [&](std::size_t slot) {
    const std::int64_t id = frame_ids[slot];
    solid::PointCloud cloud;
    try {
      cloud = solid::load_kitti_scan(files[id].string(), id);
    } catch (const solid::Error& e) {
      throw solid::IoError("frame " + std::to_string(id) + ": " + e.what());
    }
    FrameOut out;
    out.raw_points = cloud.size();
    if (!mask.is_full()) cloud = solid::clip_fov(cloud, mask);
    out.kept_points = cloud.size();
    out.desc = solid::describe(cloud, binning, &out.discarded);
    outputs[slot] = std::move(out);
  };

  const int jobs = std::max(1, run.jobs);
  if (jobs == 1) {
    for (std::size_t slot = 0; slot < frame_ids.size(); ++slot) {
      process(slot);
      const FrameOut& out = outputs[slot];
      std::cout << "frame " << frame_ids[slot] << " (" << (slot + 1) << "/" << frame_ids.size()
                << "): " << out.raw_points << " pts, " << out.kept_points << " in FOV, "
                << out.discarded << " discarded\n";
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t slot = next.fetch_add(1);
          if (slot >= frame_ids.size()) return;
          try {
            process(slot);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    for (std::thread& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
    for (std::size_t slot = 0; slot < frame_ids.size(); ++slot) {
      const FrameOut& out = outputs[slot];
      std::cout << "frame " << frame_ids[slot] << " (" << (slot + 1) << "/" << frame_ids.size()
                << "): " << out.raw_points << " pts, " << out.kept_points << " in FOV, "
                << out.discarded << " discarded\n";
    }
  }

  solid::DescriptorDatabase db(binning);
  std::int64_t total_discards = 0;
  for (std::size_t slot = 0; slot < frame_ids.size(); ++slot) {
    solid::FrameRecord rec;
    rec.frame_id = frame_ids[slot];
    if (!poses.empty()) rec.position = poses[frame_ids[slot]].translation;
    rec.desc = std::move(outputs[slot].desc);
    total_discards += outputs[slot].discarded;
    db.add(std::move(rec));
  }

  ensure_out_dir(run.out);
  const std::string db_path = (fs::path(run.out) / "solid.db").string();
  solid::save_db(db, db_path);
  run.save((fs::path(run.out) / "run_config.txt").string());

  const std::int64_t payload = static_cast<std::int64_t>(binning.n_r) * 8;
  std::cout << "wrote " << db.size() << " records to " << db_path << "\n"
            << "discarded points total: " << total_discards << "\n"
            << "payload per frame: " << payload << " B (R-SOLiD), "
            << (binning.n_r + binning.n_a) * 8 << " B (pair); db file: "
            << fs::file_size(db_path) << " B\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

void write_pr_csv(const std::string& path, const solid::EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw solid::IoError("cannot write " + path);
  out << "threshold,precision,recall\n";
  for (const auto& p : report.pr_curve)
    out << fmt(p.threshold) << "," << fmt(p.precision) << "," << fmt(p.recall) << "\n";
}

void write_roc_csv(const std::string& path, const solid::EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw solid::IoError("cannot write " + path);
  out << "threshold,fpr,tpr\n";
  for (const auto& p : report.roc_curve)
    out << fmt(p.threshold) << "," << fmt(p.fpr) << "," << fmt(p.tpr) << "\n";
}

void write_matches_csv(const std::string& path, const std::vector<solid::QueryResult>& results,
                       const solid::GtLoopTable& gt) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw solid::IoError("cannot write " + path);
  out << "query_id,candidate_id,distance,heading_deg,is_tp\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.match) {
      out << r.query_id << ",-1,,,0\n";
      continue;
    }
    const bool tp = gt.entries[i].contains(r.match->candidate_id);
    out << r.query_id << "," << r.match->candidate_id << "," << fmt(r.match->distance) << ","
        << fmt(r.match->heading_deg) << "," << (tp ? 1 : 0) << "\n";
  }
}

json report_to_json(const solid::EvalReport& report, const solid::RunConfig& run) {
  json j;
  j["recall_at_1"] = report.recall_at_1;
  j["auc"] = report.roc_degenerate ? json(nullptr) : json(report.auc);
  j["f1_max"] = report.f1_max;
  j["f1_threshold"] = report.f1_threshold;
  j["confusion_at_f1"] = {{"tp", report.at_f1.tp},
                          {"fp", report.at_f1.fp},
                          {"tn", report.at_f1.tn},
                          {"fn", report.at_f1.fn}};
  j["mean_re_deg"] = std::isnan(report.mean_re_deg) ? json(nullptr) : json(report.mean_re_deg);
  j["num_queries"] = report.num_queries;
  j["num_gt_loops"] = report.num_gt_loops;
  j["payload_bytes"] = report.payload_bytes;
  j["roc_degenerate"] = report.roc_degenerate;
  j["conventions"] = {{"precision_at_zero_predictions", 1.0},
                      {"degenerate_roc_auc", nullptr},
                      {"threshold_rule", "positive iff distance < tau"}};
  json cfg_echo;
  std::istringstream cfg_lines(run.to_text());
  std::string line;
  while (std::getline(cfg_lines, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) cfg_echo[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = cfg_echo;
  j["provenance"] = std::string("solid-cli ") + kVersion + " cfg-" +
                    solid::config_fingerprint(run);
  return j;
}

int cmd_eval(const solid::RunConfig& run, const std::string& db_path,
             const std::string& target_path) {
  const bool multi = !target_path.empty();
  solid::DescriptorDatabase query_db = solid::load_db(db_path);
  solid::DescriptorDatabase target_db_storage =
      multi ? solid::load_db(target_path) : solid::DescriptorDatabase(query_db.config());
  solid::DescriptorDatabase& target_db = multi ? target_db_storage : query_db;

  if (!query_db.has_positions() || (multi && !target_db.has_positions()))
    throw solid::EvalError(
        "ground truth requested but the database has no positions (describe with --poses)");
  if (multi && (query_db.config().n_r != target_db.config().n_r ||
                query_db.config().n_a != target_db.config().n_a))
    throw solid::FormatError("query and target databases disagree on descriptor shape");

  const solid::SearchBackend backend = solid::parse_backend(run.backend);
  if (backend == solid::SearchBackend::KdTree) target_db.build_index();

  // ground truth over record positions, in frame-id space
  std::vector<Eigen::Vector3d> query_positions, target_positions;
  std::vector<std::int64_t> query_ids, target_ids;
  for (const auto& rec : query_db.records()) {
    query_positions.push_back(*rec.position);
    query_ids.push_back(rec.frame_id);
  }
  for (const auto& rec : target_db.records()) {
    target_positions.push_back(*rec.position);
    target_ids.push_back(rec.frame_id);
  }

  const solid::GtLoopTable full_gt =
      multi ? solid::build_gt_multi(query_positions, target_positions, run.gt_dist, target_ids)
            : solid::build_gt(query_positions, run.gt_dist, run.exclude_recent, query_ids);

  // single-session: only queries whose candidate pool is nonempty are scored
  const std::int64_t first_id = target_db.records().front().frame_id;
  std::vector<std::size_t> scored;  // record indices used as queries
  for (std::size_t i = 0; i < query_db.size(); ++i) {
    if (multi || query_db.records()[i].frame_id - run.exclude_recent >= first_id)
      scored.push_back(i);
  }
  if (scored.empty()) throw solid::EvalError("no queries remain after the exclusion window");

  std::vector<solid::QueryResult> results;
  solid::GtLoopTable gt;
  results.reserve(scored.size());
  gt.entries.reserve(scored.size());

  const auto t0 = std::chrono::steady_clock::now();
  for (const std::size_t i : scored) {
    const solid::FrameRecord& rec = query_db.records()[i];
    solid::QueryResult qr;
    qr.query_id = rec.frame_id;
    const solid::SessionMode mode = multi ? solid::SessionMode::Multi
                                          : solid::SessionMode::Single;
    qr.match = backend == solid::SearchBackend::BruteForce
                   ? solid::search_bruteforce(target_db, rec.desc, run.exclude_recent, mode)
                   : solid::search_kdtree(target_db, rec.desc, run.exclude_recent, mode);
    results.push_back(std::move(qr));
    gt.entries.push_back(full_gt.entries[i]);
  }
  const double search_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  solid::EvalReport report = solid::score_queries(results, gt);
  report.payload_bytes = static_cast<std::int64_t>(query_db.config().n_r) * 8;
  report.search_hz = scored.empty() ? 0.0 : scored.size() / search_seconds;

  // rotation error of the estimated heading against pose ground truth,
  // averaged over geometrically correct top-1 matches
  if (!multi && !run.poses.empty()) {
    const std::vector<solid::Pose> poses = solid::load_kitti_poses(run.poses);
    std::map<std::int64_t, const solid::Pose*> by_id;
    for (const auto& p : poses) by_id[p.frame_id] = &p;
    const Eigen::Vector3d up = up_axis_vector(run.up_axis);

    double re_sum = 0.0;
    std::int64_t re_count = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      if (!r.match || !gt.entries[i].contains(r.match->candidate_id)) continue;
      const auto q_it = by_id.find(r.query_id);
      const auto c_it = by_id.find(r.match->candidate_id);
      if (q_it == by_id.end() || c_it == by_id.end()) continue;
      const Eigen::Matrix3d r_gt =
          c_it->second->rotation.transpose() * q_it->second->rotation;
      const Eigen::Matrix3d r_est = solid::axis_rotation(r.match->heading_deg, up);
      re_sum += solid::rotation_error_deg(r_est, r_gt);
      ++re_count;
    }
    if (re_count > 0) report.mean_re_deg = re_sum / static_cast<double>(re_count);
  }

  ensure_out_dir(run.out);
  const fs::path out_dir(run.out);
  write_pr_csv((out_dir / "pr_curve.csv").string(), report);
  write_roc_csv((out_dir / "roc_curve.csv").string(), report);
  write_matches_csv((out_dir / "matches.csv").string(), results, gt);
  run.save((out_dir / "run_config.txt").string());

  json j = report_to_json(report, run);
  j["timing"] = {{"search_hz", report.search_hz}};
  {
    std::ofstream out(out_dir / "report.json", std::ios::trunc);
    out << j.dump(2) << "\n";
  }

  std::cout << "queries scored: " << report.num_queries
            << " (with GT loops: " << report.num_gt_loops << ")\n"
            << "Recall@1: " << fmt(report.recall_at_1) << "\n"
            << "AUC:      " << (report.roc_degenerate ? "degenerate" : fmt(report.auc)) << "\n"
            << "F1 max:   " << fmt(report.f1_max) << " at threshold "
            << fmt(report.f1_threshold) << "\n";
  if (!std::isnan(report.mean_re_deg))
    std::cout << "mean RE:  " << fmt(report.mean_re_deg) << " deg\n";
  std::cout << "report written to " << (out_dir / "report.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

int cmd_bench(const solid::RunConfig& run, int frames, int points, double bandwidth_mbps) {
  const solid::BinningConfig binning = run.binning();

  std::vector<solid::PointCloud> scans;
  if (!run.scans.empty()) {
    const auto files = list_scan_files(run.scans);
    const std::size_t n = std::min<std::size_t>(files.size(), frames);
    const solid::FovMask mask = solid::FovMask::parse(run.fov);
    for (std::size_t i = 0; i < n; ++i) {
      solid::PointCloud cloud = solid::load_kitti_scan(files[i].string(), i);
      if (!mask.is_full()) cloud = solid::clip_fov(cloud, mask);
      scans.push_back(std::move(cloud));
    }
  } else {
    std::mt19937_64 gen(run.seed);
    std::uniform_real_distribution<double> xy(-60.0, 60.0);
    std::uniform_real_distribution<double> z(-2.0, 1.5);
    for (int f = 0; f < frames; ++f) {
      solid::PointCloud cloud;
      cloud.frame_id = f;
      cloud.points.reserve(points);
      for (int p = 0; p < points; ++p)
        cloud.points.push_back(solid::Point{xy(gen), xy(gen), z(gen)});
      scans.push_back(std::move(cloud));
    }
  }
  if (scans.size() < 10) throw solid::FormatError("bench needs at least 10 scans");

  solid::DescriptorDatabase db(binning);
  for (std::size_t i = 0; i < scans.size(); ++i) {
    solid::FrameRecord rec;
    rec.frame_id = static_cast<std::int64_t>(i);
    rec.desc = solid::describe(scans[i], binning);
    rec.desc.frame_id = rec.frame_id;
    db.add(std::move(rec));
  }
  db.build_index();

  std::cout << "bench: " << scans.size() << " scans, db of " << db.size() << " records\n";
  for (const solid::SearchBackend backend :
       {solid::SearchBackend::BruteForce, solid::SearchBackend::KdTree}) {
    const solid::BenchResult r = solid::bench_pipeline(scans, binning, db, backend);
    std::cout << to_string(backend) << ": desc " << fmt(r.desc_hz) << " Hz, search "
              << fmt(r.search_hz) << " Hz, combined " << fmt(r.combined_hz) << " Hz\n";
  }

  const std::int64_t payload = static_cast<std::int64_t>(binning.n_r) * 8;
  std::cout << "payload per frame: " << payload << " B; database payload: "
            << payload * static_cast<std::int64_t>(db.size()) << " B\n";
  if (bandwidth_mbps > 0.0) {
    const double t = solid::communication_time_s(
        payload * static_cast<std::int64_t>(db.size()), bandwidth_mbps * 1e6);
    std::cout << "communication time at " << fmt(bandwidth_mbps) << " MB/s: " << fmt(t)
              << " s\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOLiD descriptor pipeline: describe, retrieve, evaluate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  ConfigCli describe_cfg, eval_cfg, bench_cfg;

  CLI::App* describe = app.add_subcommand("describe", "build a descriptor database from scans");
  describe_cfg.add_common(describe);

  CLI::App* eval = app.add_subcommand("eval", "evaluate retrieval against ground truth");
  eval_cfg.add_common(eval);
  std::string eval_db, eval_target;
  eval->add_option("db", eval_db, "descriptor database")->required();
  eval->add_option("target_db", eval_target, "target database (multi-session)");

  CLI::App* bench = app.add_subcommand("bench", "time description and search");
  bench_cfg.add_common(bench);
  int bench_frames = 200;
  int bench_points = 30000;
  double bench_bandwidth = 0.0;
  bench->add_option("--frames", bench_frames, "scan count (synthetic or from --scans)");
  bench->add_option("--points", bench_points, "points per synthetic scan");
  bench->add_option("--bandwidth-mbps", bench_bandwidth,
                    "report communication time for the database payload");

  CLI::App* selftest = app.add_subcommand("selftest", "run the embedded property suite");
  std::uint64_t selftest_seed = 42;
  selftest->add_option("--seed", selftest_seed, "property suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (describe->parsed()) return cmd_describe(describe_cfg.resolve(describe));
    if (eval->parsed()) return cmd_eval(eval_cfg.resolve(eval), eval_db, eval_target);
    if (bench->parsed())
      return cmd_bench(bench_cfg.resolve(bench), bench_frames, bench_points, bench_bandwidth);
    if (selftest->parsed())
      return solid::selftest::run(std::cout, selftest_seed) ? kExitOk : kExitPropertyFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}
