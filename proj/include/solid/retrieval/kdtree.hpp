#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace solid {

/// Exact nearest-neighbor kd-tree over fixed-dimension points, with an
/// optional admissibility predicate evaluated per point. Pruning uses the
/// usual splitting-plane bound, so filtering candidates never breaks
/// exactness.
class KdTree {
 public:
  struct Result {
    int point = -1;  // index into the point set passed to build()
    double dist_sq = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;

  /// Builds over `points` (n x dim, row per point). `keys` orders ties:
  /// among equidistant nearest neighbors the smallest key wins.
  void build(const Eigen::MatrixXd& points, std::vector<std::int64_t> keys) {
    n_ = static_cast<int>(points.rows());
    dim_ = static_cast<int>(points.cols());
    keys_ = std::move(keys);
    // Eigen default storage is column-major; keep a row-major copy for locality.
    pts_.resize(static_cast<std::size_t>(n_) * dim_);
    for (int p = 0; p < n_; ++p)
      for (int d = 0; d < dim_; ++d) pts_[static_cast<std::size_t>(p) * dim_ + d] = points(p, d);

    nodes_.clear();
    nodes_.reserve(n_);
    std::vector<int> order(n_);
    std::iota(order.begin(), order.end(), 0);
    root_ = build_range(order, 0, n_);
  }

  bool empty() const { return n_ == 0; }
  int size() const { return n_; }

  /// Exact nearest admissible point, or nullopt when no point passes the
  /// predicate. `admissible` receives the point's key.
  template <typename Predicate>
  std::optional<Result> nearest(const Eigen::VectorXd& query, Predicate&& admissible) const {
    if (root_ < 0 || query.size() != dim_) return std::nullopt;
    Best best;
    search(root_, query.data(), best, admissible);
    if (best.point < 0) return std::nullopt;
    return Result{best.point, best.dist_sq};
  }

  std::optional<Result> nearest(const Eigen::VectorXd& query) const {
    return nearest(query, [](std::int64_t) { return true; });
  }

 private:
  struct Node {
    int point;  // median point stored at this node
    int axis;
    int left = -1;
    int right = -1;
  };

  struct Best {
    int point = -1;
    double dist_sq = std::numeric_limits<double>::infinity();
    std::int64_t key = std::numeric_limits<std::int64_t>::max();
  };

  const double* coords(int p) const { return pts_.data() + static_cast<std::size_t>(p) * dim_; }

  // Axis with the widest spread over [lo, hi) of `order`.
  int widest_axis(const std::vector<int>& order, int lo, int hi) const {
    int best_axis = 0;
    double best_spread = -1.0;
    for (int d = 0; d < dim_; ++d) {
      double mn = coords(order[lo])[d], mx = mn;
      for (int i = lo + 1; i < hi; ++i) {
        const double v = coords(order[i])[d];
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mx - mn > best_spread) {
        best_spread = mx - mn;
        best_axis = d;
      }
    }
    return best_axis;
  }

  int build_range(std::vector<int>& order, int lo, int hi) {
    if (lo >= hi) return -1;
    const int axis = widest_axis(order, lo, hi);
    const int mid = lo + (hi - lo) / 2;
    std::nth_element(order.begin() + lo, order.begin() + mid, order.begin() + hi,
                     [&](int a, int b) { return coords(a)[axis] < coords(b)[axis]; });
    Node node;
    node.point = order[mid];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    nodes_[self].left = build_range(order, lo, mid);
    nodes_[self].right = build_range(order, mid + 1, hi);
    return self;
  }

  template <typename Predicate>
  void search(int node_id, const double* q, Best& best, Predicate&& admissible) const {
    const Node& node = nodes_[node_id];
    const double* p = coords(node.point);

    if (admissible(keys_[node.point])) {
      double d2 = 0.0;
      for (int d = 0; d < dim_; ++d) {
        const double diff = q[d] - p[d];
        d2 += diff * diff;
      }
      if (d2 < best.dist_sq || (d2 == best.dist_sq && keys_[node.point] < best.key)) {
        best.point = node.point;
        best.dist_sq = d2;
        best.key = keys_[node.point];
      }
    }

    const double delta = q[node.axis] - p[node.axis];
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    if (near >= 0) search(near, q, best, admissible);
    // <= keeps equidistant candidates reachable so tie-breaking stays exact
    if (far >= 0 && delta * delta <= best.dist_sq) search(far, q, best, admissible);
  }

  int n_ = 0;
  int dim_ = 0;
  int root_ = -1;
  std::vector<double> pts_;
  std::vector<std::int64_t> keys_;
  std::vector<Node> nodes_;
};

}  // namespace solid
