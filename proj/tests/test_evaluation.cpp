#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "solid/eval/benchmark.hpp"
#include "solid/eval/ground_truth.hpp"
#include "solid/eval/metrics.hpp"
#include "support/synthetic.hpp"

using namespace solid;

namespace {

Match make_match(std::int64_t query, std::int64_t cand, double dist) {
  Match m;
  m.query_id = query;
  m.candidate_id = cand;
  m.distance = dist;
  return m;
}

/// Rank-statistic (Mann-Whitney) AUC oracle over per-query labels and
/// scores, where score = -distance (smaller distance = more loop-like).
double rank_auc(const std::vector<std::pair<bool, double>>& labeled_distances) {
  std::vector<std::pair<double, bool>> rows;
  for (const auto& [label, dist] : labeled_distances) rows.emplace_back(-dist, label);
  std::sort(rows.begin(), rows.end());

  double rank_sum = 0.0;
  std::int64_t positives = 0, negatives = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].second) {
      rank_sum += static_cast<double>(i + 1);
      ++positives;
    } else {
      ++negatives;
    }
  }
  return (rank_sum - 0.5 * positives * (positives + 1)) /
         (static_cast<double>(positives) * static_cast<double>(negatives));
}

}  // namespace

TEST_CASE("build_gt honors the exclusion window") {
  // All positions coincide; with exclude 100, frames below 100 see nothing.
  std::vector<Eigen::Vector3d> positions(200, Eigen::Vector3d::Zero());
  const GtLoopTable table = build_gt(positions, 10.0, 100);

  for (int q = 0; q < 100; ++q) CHECK_FALSE(table.entries[q].has_loop());
  REQUIRE(table.entries[150].has_loop());
  CHECK(table.entries[150].loop_ids.front() == 0);
  CHECK(table.entries[150].loop_ids.back() == 50);
  CHECK(table.entries[150].loop_ids.size() == 51);
}

TEST_CASE("build_gt on a line keeps only earlier frames in radius") {
  std::vector<Eigen::Vector3d> positions;
  for (int i = 0; i < 20; ++i) positions.emplace_back(i, 0, 0);
  const GtLoopTable table = build_gt(positions, 5.0, 0);
  CHECK(table.entries[10].loop_ids == std::vector<std::int64_t>({5, 6, 7, 8, 9, 10}));
}

TEST_CASE("build_gt matches a quadratic brute-force oracle") {
  std::mt19937_64 gen(131);
  std::uniform_real_distribution<double> coord(0.0, 60.0);
  std::vector<Eigen::Vector3d> positions;
  for (int i = 0; i < 500; ++i)
    positions.emplace_back(coord(gen), coord(gen), coord(gen) * 0.05);

  const double d_gt = 10.0;
  const std::int64_t exclude = 50;
  const GtLoopTable table = build_gt(positions, d_gt, exclude);

  for (std::size_t q = 0; q < positions.size(); ++q) {
    std::vector<std::int64_t> oracle;
    for (std::size_t c = 0; c < positions.size(); ++c)
      if (static_cast<std::int64_t>(c) <= static_cast<std::int64_t>(q) - exclude &&
          (positions[q] - positions[c]).norm() <= d_gt)
        oracle.push_back(static_cast<std::int64_t>(c));
    CHECK(table.entries[q].loop_ids == oracle);
  }
}

TEST_CASE("build_gt_multi uses the whole target") {
  std::vector<Eigen::Vector3d> queries{{0, 0, 0}, {100, 0, 0}};
  std::vector<Eigen::Vector3d> target{{1, 0, 0}, {99, 0, 0}, {50, 0, 0}};
  const GtLoopTable table = build_gt_multi(queries, target, 5.0);
  CHECK(table.entries[0].loop_ids == std::vector<std::int64_t>({0}));
  CHECK(table.entries[1].loop_ids == std::vector<std::int64_t>({1}));
}

TEST_CASE("build_gt can map list indices to frame ids") {
  std::vector<Eigen::Vector3d> positions(4, Eigen::Vector3d::Zero());
  const std::vector<std::int64_t> ids{0, 10, 20, 200};
  const GtLoopTable table = build_gt(positions, 1.0, 100, ids);
  CHECK_FALSE(table.entries[1].has_loop());  // 10 - 100 < 0
  CHECK(table.entries[3].loop_ids == std::vector<std::int64_t>({0, 10, 20}));
}

TEST_CASE("score_queries on all-perfect matches with no loopless queries") {
  std::vector<Eigen::Vector3d> positions(10, Eigen::Vector3d::Zero());
  const GtLoopTable full = build_gt(positions, 5.0, 1);

  // evaluate only the loop-bearing queries 1..9, matched correctly
  GtLoopTable gt;
  std::vector<QueryResult> results;
  for (int q = 1; q < 10; ++q) {
    gt.entries.push_back(full.entries[q]);
    QueryResult r;
    r.query_id = q;
    r.match = make_match(q, q - 1, 0.1);
    results.push_back(r);
  }

  const EvalReport report = score_queries(results, gt);
  CHECK(report.recall_at_1 == 1.0);
  CHECK(report.f1_max == 1.0);
  CHECK(report.num_gt_loops == 9);
  // every query is positive-class: single-class ROC, flagged degenerate
  CHECK(report.roc_degenerate);
  CHECK(std::isnan(report.auc));
}

TEST_CASE("score_queries on geometrically wrong matches") {
  std::vector<Eigen::Vector3d> positions;
  for (int i = 0; i < 10; ++i) positions.emplace_back(i * 100.0, 0, 0);
  positions.push_back(positions[0]);  // frame 10 revisits frame 0
  const GtLoopTable gt = build_gt(positions, 5.0, 2);

  std::vector<QueryResult> results(positions.size());
  for (std::size_t q = 0; q < positions.size(); ++q) results[q].query_id = q;
  results[10].match = make_match(10, 5, 0.01);  // wrong candidate

  const EvalReport report = score_queries(results, gt);
  CHECK(report.recall_at_1 == 0.0);
}

TEST_CASE("score_queries throws when no query has a ground-truth loop") {
  std::vector<Eigen::Vector3d> positions;
  for (int i = 0; i < 5; ++i) positions.emplace_back(i * 1000.0, 0, 0);
  const GtLoopTable gt = build_gt(positions, 5.0, 1);
  std::vector<QueryResult> results(5);
  CHECK_THROWS_AS(score_queries(results, gt), EvalError);
}

TEST_CASE("AUC equals the rank-statistic oracle on tie-free inputs") {
  std::mt19937_64 gen(137);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::bernoulli_distribution is_loop(0.4);

  // Positions encode the labels: a loop-bearing query sits on its matched
  // candidate, a negative sits far from everything.
  std::vector<Eigen::Vector3d> positions;
  std::vector<QueryResult> results;
  std::vector<std::pair<bool, double>> labeled;

  const int n = 200;
  std::vector<Eigen::Vector3d> targets;
  for (int c = 0; c < n; ++c) targets.emplace_back(c * 50.0, 0, 0);

  for (int q = 0; q < n; ++q) {
    const bool label = is_loop(gen);
    double score = dist(gen);
    while (std::any_of(labeled.begin(), labeled.end(),
                       [&](const auto& p) { return p.second == score; }))
      score = dist(gen);  // enforce tie-free distances

    positions.emplace_back(label ? targets[q] : Eigen::Vector3d(q * 50.0, 1000.0, 0));
    QueryResult r;
    r.query_id = q;
    r.match = make_match(q, q, score);  // candidate c = q in the target session
    results.push_back(r);
    labeled.emplace_back(label, score);
  }

  const GtLoopTable gt = build_gt_multi(positions, targets, 5.0);
  const EvalReport report = score_queries(results, gt);
  CHECK(report.auc == Catch::Approx(rank_auc(labeled)).margin(1e-9));
}

TEST_CASE("F1 max equals exhaustive threshold enumeration") {
  std::mt19937_64 gen(139);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::bernoulli_distribution is_loop(0.5);

  const int n = 150;
  std::vector<Eigen::Vector3d> targets;
  for (int c = 0; c < n; ++c) targets.emplace_back(c * 50.0, 0, 0);

  std::vector<Eigen::Vector3d> positions;
  std::vector<QueryResult> results;
  struct Row {
    double d;
    bool correct;
    bool has_loop;
  };
  std::vector<Row> rows;
  for (int q = 0; q < n; ++q) {
    const bool label = is_loop(gen);
    const double score = dist(gen);
    positions.emplace_back(label ? targets[q] : Eigen::Vector3d(q * 50.0, 1000.0, 0));
    QueryResult r;
    r.query_id = q;
    r.match = make_match(q, q, score);
    results.push_back(r);
    rows.push_back(Row{score, label, label});
  }

  const GtLoopTable gt = build_gt_multi(positions, targets, 5.0);
  const EvalReport report = score_queries(results, gt);

  // oracle: recompute the confusion matrix from scratch at every candidate
  // threshold (all observed distances, their midpoints, 0, and +inf)
  std::vector<double> taus{0.0, std::numeric_limits<double>::infinity()};
  for (const Row& r : rows) taus.push_back(r.d);
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.d < b.d; });
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    taus.push_back(0.5 * (rows[i].d + rows[i + 1].d));

  double best_f1 = 0.0;
  for (const double tau : taus) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (const Row& r : rows) {
      const bool positive = r.d < tau;
      if (positive && r.correct) ++tp;
      if (positive && !r.correct) ++fp;
      if (!positive && r.has_loop) ++fn;
    }
    const double precision = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 1.0;
    const double recall = tp > 0 ? double(tp) / double(tp + fn) : 0.0;
    const double f1 =
        (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    best_f1 = std::max(best_f1, f1);
  }
  CHECK(report.f1_max == best_f1);  // exact: same threshold set, same arithmetic
}

TEST_CASE("confusion cells sum to the query count at every threshold") {
  std::mt19937_64 gen(149);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  const int n = 120;
  std::vector<Eigen::Vector3d> targets;
  for (int c = 0; c < n; ++c) targets.emplace_back(c * 50.0, 0, 0);
  std::vector<Eigen::Vector3d> positions;
  std::vector<QueryResult> results;
  for (int q = 0; q < n; ++q) {
    const bool near = coin(gen);
    positions.emplace_back(near ? targets[q] : Eigen::Vector3d(q * 50.0, 999.0, 0));
    QueryResult r;
    r.query_id = q;
    if (coin(gen)) r.match = make_match(q, q, dist(gen));  // some queries stay unmatched
    results.push_back(r);
  }

  const GtLoopTable gt = build_gt_multi(positions, targets, 5.0);
  if (gt.queries_with_loop() == 0) return;
  const EvalReport report = score_queries(results, gt);
  CHECK(report.at_f1.tp + report.at_f1.fp + report.at_f1.tn + report.at_f1.fn == n);

  // curves move monotonically with the threshold
  for (std::size_t i = 1; i < report.roc_curve.size(); ++i) {
    CHECK(report.roc_curve[i].tpr >= report.roc_curve[i - 1].tpr);
    if (!std::isnan(report.roc_curve[i].fpr) && !std::isnan(report.roc_curve[i - 1].fpr))
      CHECK(report.roc_curve[i].fpr >= report.roc_curve[i - 1].fpr);
    CHECK(report.pr_curve[i].recall >= report.pr_curve[i - 1].recall);
  }

  // extremes: no positives at tau = 0, all matched queries positive at +inf
  CHECK(report.pr_curve.front().threshold == 0.0);
  CHECK(report.pr_curve.front().recall == 0.0);
  CHECK(report.pr_curve.front().precision == 1.0);
  CHECK(std::isinf(report.pr_curve.back().threshold));
}

TEST_CASE("Recall@1 is invariant to monotone distance transforms") {
  std::mt19937_64 gen(151);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  const int n = 80;
  std::vector<Eigen::Vector3d> targets;
  for (int c = 0; c < n; ++c) targets.emplace_back(c * 50.0, 0, 0);
  std::vector<Eigen::Vector3d> positions;
  std::vector<QueryResult> results;
  for (int q = 0; q < n; ++q) {
    positions.emplace_back(coin(gen) ? targets[q] : Eigen::Vector3d(q * 50.0, 999.0, 0));
    QueryResult r;
    r.query_id = q;
    r.match = make_match(q, q, dist(gen));
    results.push_back(r);
  }
  const GtLoopTable gt = build_gt_multi(positions, targets, 5.0);

  std::vector<QueryResult> transformed = results;
  for (QueryResult& r : transformed)
    if (r.match) r.match->distance = std::exp(3.0 * r.match->distance);  // strictly monotone

  CHECK(score_queries(results, gt).recall_at_1 ==
        score_queries(transformed, gt).recall_at_1);
}

TEST_CASE("rotation_error_deg on yaw pairs") {
  CHECK(rotation_error_deg(Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity()) == 0.0);
  CHECK(rotation_error_deg(yaw_rotation(90.0), Eigen::Matrix3d::Identity()) ==
        Catch::Approx(90.0).margin(1e-9));
  CHECK(rotation_error_deg(yaw_rotation(42.0), yaw_rotation(41.0)) ==
        Catch::Approx(1.0).margin(1e-9));
  // symmetry
  CHECK(rotation_error_deg(yaw_rotation(10.0), yaw_rotation(50.0)) ==
        Catch::Approx(rotation_error_deg(yaw_rotation(50.0), yaw_rotation(10.0))).margin(1e-12));
}

TEST_CASE("rotation_error_deg rejects non-orthonormal input") {
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(0, 1) = 0.01;
  CHECK_THROWS_AS(rotation_error_deg(bad, Eigen::Matrix3d::Identity()), std::invalid_argument);
}

TEST_CASE("communication_time_s is payload over bandwidth") {
  CHECK(communication_time_s(448, 448.0) == 1.0);
  CHECK(communication_time_s(0, 1000.0) == 0.0);
  // 0.3 MB at ~2.17 MB/s is about 0.138 s
  CHECK(communication_time_s(300000, 300000.0 / 0.138) == Catch::Approx(0.138).margin(1e-3));
  CHECK_THROWS_AS(communication_time_s(10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(communication_time_s(10, -5.0), std::invalid_argument);
}

TEST_CASE("bench_pipeline respects the harmonic bound and scaling") {
  std::mt19937_64 gen(157);
  BinningConfig cfg;
  cfg.voxel = 0.2;

  std::vector<PointCloud> scans;
  for (int i = 0; i < 12; ++i) scans.push_back(testsupport::random_cloud(gen, 2000));

  DescriptorDatabase small_db(cfg), big_db(cfg);
  for (int i = 0; i < 2000; ++i) {
    Eigen::VectorXd r = Eigen::VectorXd::Random(cfg.n_r).cwiseAbs();
    Eigen::VectorXd a = Eigen::VectorXd::Random(cfg.n_a).cwiseAbs();
    SolidDescriptor d;
    d.r_solid = r;
    d.a_solid = a;
    d.frame_id = i;
    FrameRecord rec;
    rec.frame_id = i;
    rec.desc = d;
    if (i < 1000) small_db.add(rec);
    big_db.add(rec);
  }

  const BenchResult r = bench_pipeline(scans, cfg, small_db, SearchBackend::BruteForce);
  CHECK(r.combined_hz <= std::min(r.desc_hz, r.search_hz) * (1.0 + 1e-9));
  CHECK(r.frames == 12);

  // doubling the database must not blow up brute-force search time:
  // allow 2.5x on the median of three runs
  const auto median_search = [&](const DescriptorDatabase& db) {
    std::array<double, 3> times{};
    for (double& t : times)
      t = bench_pipeline(scans, cfg, db, SearchBackend::BruteForce).mean_search_s;
    std::sort(times.begin(), times.end());
    return times[1];
  };
  (void)median_search(small_db);  // warm up caches before timing
  const double small_t = median_search(small_db);
  const double big_t = median_search(big_db);
  CHECK(big_t <= 2.5 * small_t + 1e-4);

  CHECK_THROWS_AS(
      bench_pipeline(std::vector<PointCloud>(5), cfg, small_db, SearchBackend::BruteForce),
      std::invalid_argument);
}
