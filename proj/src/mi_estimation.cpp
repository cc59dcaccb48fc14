#include "cch/mi_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "cch/errors.hpp"
#include "cch/rng.hpp"

namespace cch {

double digamma(double x) {
  if (!(x > 0.0)) throw InvalidArgumentError("digamma: requires x > 0");
  // Recurrence psi(x) = psi(x + 1) - 1/x until the asymptotic series is
  // accurate (x >= 10 keeps the truncation error below 1e-15).
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      std::log(x) - 0.5 * inv -
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
  return shift + series;
}

double gaussian_mi(double rho) {
  if (std::isnan(rho)) throw InvalidArgumentError("gaussian_mi: rho is NaN");
  if (std::abs(rho) >= 1.0) {
    std::ostringstream msg;
    msg << "gaussian_mi: |rho| = " << std::abs(rho)
        << " >= 1 implies infinite mutual information";
    throw InvalidArgumentError(msg.str());
  }
  return -0.5 * std::log1p(-rho * rho);
}

namespace {

// ---------------------------------------------------------------------------
// Shared geometry helpers. Points are stored row-contiguous in a flat array;
// all distances are max-norm, which is what makes the joint/marginal counting
// identity of the KSG estimator exact.

struct PointSet {
  std::vector<double> data;
  int n = 0;
  int dim = 0;

  double coord(int i, int d) const { return data[static_cast<std::size_t>(i) * dim + d]; }

  double dist(int i, int j) const {
    const double* a = &data[static_cast<std::size_t>(i) * dim];
    const double* b = &data[static_cast<std::size_t>(j) * dim];
    double m = 0.0;
    for (int d = 0; d < dim; ++d) m = std::max(m, std::abs(a[d] - b[d]));
    return m;
  }
};

// Fixed-size worst-first buffer for k nearest distances.
class KBest {
 public:
  explicit KBest(int k) : k_(k) { dists_.reserve(k); }

  double worst() const {
    return dists_.size() < static_cast<std::size_t>(k_)
               ? std::numeric_limits<double>::infinity()
               : dists_.front();
  }

  void offer(double d) {
    if (dists_.size() < static_cast<std::size_t>(k_)) {
      dists_.push_back(d);
      std::push_heap(dists_.begin(), dists_.end());
    } else if (d < dists_.front()) {
      std::pop_heap(dists_.begin(), dists_.end());
      dists_.back() = d;
      std::push_heap(dists_.begin(), dists_.end());
    }
  }

 private:
  int k_;
  std::vector<double> dists_;  // max-heap, front is the current kth distance
};

// Minimal kd-tree over a PointSet, max-norm metric. Exact queries: results
// agree with brute force to the last bit because the per-pair distance
// arithmetic is shared.
class KdTree {
 public:
  explicit KdTree(const PointSet& pts) : pts_(pts), index_(pts.n) {
    for (int i = 0; i < pts.n; ++i) index_[i] = i;
    nodes_.reserve(static_cast<std::size_t>(2 * pts.n / kLeafSize + 2));
    root_ = build(0, pts.n);
  }

  double kth_neighbor_distance(int query, int k) const {
    KBest best(k);
    search(root_, query, best);
    return best.worst();
  }

  // Number of points with dist(query, .) strictly below eps, excluding the
  // query point itself.
  int count_within(int query, double eps) const {
    int count = 0;
    count_search(root_, query, eps, count);
    if (eps > 0.0) count -= 1;  // the query point sits at distance zero
    return count;
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    std::vector<double> lo, hi;  // bounding box
    int begin = 0, end = 0;      // leaf range in index_
    int left = -1, right = -1;
    int split_dim = -1;
    double split_val = 0.0;
  };

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo.assign(pts_.dim, std::numeric_limits<double>::infinity());
    node.hi.assign(pts_.dim, -std::numeric_limits<double>::infinity());
    for (int i = begin; i < end; ++i) {
      for (int d = 0; d < pts_.dim; ++d) {
        const double c = pts_.coord(index_[i], d);
        node.lo[d] = std::min(node.lo[d], c);
        node.hi[d] = std::max(node.hi[d], c);
      }
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(node));
    if (end - begin <= kLeafSize) return id;

    int dim = 0;
    double spread = -1.0;
    for (int d = 0; d < pts_.dim; ++d) {
      const double s = nodes_[id].hi[d] - nodes_[id].lo[d];
      if (s > spread) {
        spread = s;
        dim = d;
      }
    }
    if (spread <= 0.0) return id;  // all points identical: keep as leaf

    const int mid = (begin + end) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid,
                     index_.begin() + end, [&](int a, int b) {
                       return pts_.coord(a, dim) < pts_.coord(b, dim);
                     });
    nodes_[id].split_dim = dim;
    nodes_[id].split_val = pts_.coord(index_[mid], dim);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  double box_distance(const Node& node, int query) const {
    double m = 0.0;
    for (int d = 0; d < pts_.dim; ++d) {
      const double c = pts_.coord(query, d);
      if (c < node.lo[d]) m = std::max(m, node.lo[d] - c);
      if (c > node.hi[d]) m = std::max(m, c - node.hi[d]);
    }
    return m;
  }

  void search(int id, int query, KBest& best) const {
    const Node& node = nodes_[id];
    if (box_distance(node, query) >= best.worst()) return;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int j = index_[i];
        if (j == query) continue;
        best.offer(pts_.dist(query, j));
      }
      return;
    }
    // Descend toward the query's side first for tighter pruning.
    const bool left_first = pts_.coord(query, node.split_dim) < node.split_val;
    search(left_first ? node.left : node.right, query, best);
    search(left_first ? node.right : node.left, query, best);
  }

  void count_search(int id, int query, double eps, int& count) const {
    const Node& node = nodes_[id];
    if (box_distance(node, query) >= eps) return;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        if (pts_.dist(query, index_[i]) < eps) ++count;
      }
      return;
    }
    count_search(node.left, query, eps, count);
    count_search(node.right, query, eps, count);
  }

  const PointSet& pts_;
  std::vector<int> index_;
  std::vector<Node> nodes_;
  int root_ = 0;
};

double brute_kth_distance(const PointSet& pts, int i, int k) {
  KBest best(k);
  for (int j = 0; j < pts.n; ++j) {
    if (j == i) continue;
    best.offer(pts.dist(i, j));
  }
  return best.worst();
}

int brute_count_within(const PointSet& pts, int i, double eps) {
  int count = 0;
  for (int j = 0; j < pts.n; ++j) {
    if (j == i) continue;
    if (pts.dist(i, j) < eps) ++count;
  }
  return count;
}

// Strict open-window count for a one-dimensional marginal: the number of
// values u != v_i with |u - v_i| < eps, via one shared sorted copy.
class SortedMarginal {
 public:
  explicit SortedMarginal(const PointSet& pts) : sorted_(pts.data) {
    std::sort(sorted_.begin(), sorted_.end());
  }

  int count_within(double center, double eps) const {
    if (eps <= 0.0) return 0;
    const auto lo = std::upper_bound(sorted_.begin(), sorted_.end(), center - eps);
    const auto hi = std::lower_bound(sorted_.begin(), sorted_.end(), center + eps);
    return static_cast<int>(hi - lo) - 1;  // subtract the center point itself
  }

 private:
  std::vector<double> sorted_;
};

// Standardizes each column to zero mean and unit variance, then perturbs it
// upward by a tie-breaking jitter U[0, 1e-10), i.e. 1e-10 times the column
// std after standardization. Standardizing makes the estimate invariant
// under per-coordinate affine maps up to roundoff, and stops one wide
// coordinate from dominating the max-norm geometry. The jitter stream
// depends only on the column order, not the data, so reruns are
// bit-identical. A zero-variance column (tolerated when require_variance is
// false) centers to exact zeros and receives no jitter.
PointSet jittered_points(const Eigen::MatrixXd& m, RandomStream& stream,
                         const char* input_name, bool require_variance) {
  PointSet pts;
  pts.n = static_cast<int>(m.rows());
  pts.dim = static_cast<int>(m.cols());
  pts.data.resize(static_cast<std::size_t>(pts.n) * pts.dim);
  for (int d = 0; d < pts.dim; ++d) {
    const double mean = m.col(d).mean();
    const double var = (m.col(d).array() - mean).square().sum() / pts.n;
    if (require_variance && !(var > 0.0)) {
      std::ostringstream msg;
      msg << input_name << " column " << d
          << " has zero variance; the estimator is undefined on degenerate input";
      throw InvalidArgumentError(msg.str());
    }
    const double inv_sd = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    const double amplitude = var > 0.0 ? 1e-10 : 0.0;
    for (int i = 0; i < pts.n; ++i) {
      pts.data[static_cast<std::size_t>(i) * pts.dim + d] =
          (m(i, d) - mean) * inv_sd + amplitude * stream.next_unit_halfopen();
    }
  }
  if (!std::all_of(pts.data.begin(), pts.data.end(),
                   [](double v) { return std::isfinite(v); })) {
    std::ostringstream msg;
    msg << input_name << " contains non-finite values";
    throw InvalidArgumentError(msg.str());
  }
  return pts;
}

PointSet joint_points(const PointSet& x, const PointSet& y) {
  PointSet joint;
  joint.n = x.n;
  joint.dim = x.dim + y.dim;
  joint.data.resize(static_cast<std::size_t>(joint.n) * joint.dim);
  for (int i = 0; i < joint.n; ++i) {
    double* row = &joint.data[static_cast<std::size_t>(i) * joint.dim];
    for (int d = 0; d < x.dim; ++d) row[d] = x.coord(i, d);
    for (int d = 0; d < y.dim; ++d) row[x.dim + d] = y.coord(i, d);
  }
  return joint;
}

void marginal_counts(const PointSet& pts, const std::vector<double>& eps,
                     bool use_tree, std::vector<int>& counts) {
  counts.resize(pts.n);
  if (pts.dim == 1) {
    const SortedMarginal sorted(pts);
    for (int i = 0; i < pts.n; ++i) {
      counts[i] = sorted.count_within(pts.coord(i, 0), eps[i]);
    }
    return;
  }
  if (use_tree) {
    const KdTree tree(pts);
    for (int i = 0; i < pts.n; ++i) counts[i] = tree.count_within(i, eps[i]);
  } else {
    for (int i = 0; i < pts.n; ++i) counts[i] = brute_count_within(pts, i, eps[i]);
  }
}

constexpr int kBruteForceLimit = 20000;

}  // namespace

MiEstimate ksg_mi(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int k,
                  NeighborSearch search) {
  const int n = static_cast<int>(x.rows());
  if (y.rows() != n) throw InvalidArgumentError("ksg_mi: x and y row counts differ");
  if (x.cols() < 1 || y.cols() < 1) {
    throw InvalidArgumentError("ksg_mi: inputs must have at least one column");
  }
  if (k < 1) throw InvalidArgumentError("ksg_mi: k must be >= 1");
  if (k >= n) {
    std::ostringstream msg;
    msg << "ksg_mi: k = " << k << " must be below the sample size n = " << n;
    throw InvalidArgumentError(msg.str());
  }

  RandomStream jitter = RandomStream::from_ids({stream_tag::ksg_jitter});
  const PointSet px = jittered_points(x, jitter, "ksg_mi: x", true);
  const PointSet py = jittered_points(y, jitter, "ksg_mi: y", true);
  const PointSet joint = joint_points(px, py);

  const bool use_tree = search == NeighborSearch::kd_tree ||
                        (search == NeighborSearch::automatic && n > kBruteForceLimit);

  std::vector<double> eps(n);
  if (use_tree) {
    const KdTree tree(joint);
    for (int i = 0; i < n; ++i) eps[i] = tree.kth_neighbor_distance(i, k);
  } else {
    for (int i = 0; i < n; ++i) eps[i] = brute_kth_distance(joint, i, k);
  }

  std::vector<int> nx, ny;
  marginal_counts(px, eps, use_tree, nx);
  marginal_counts(py, eps, use_tree, ny);

  double mean_psi = 0.0;
  for (int i = 0; i < n; ++i) {
    mean_psi += digamma(nx[i] + 1.0) + digamma(ny[i] + 1.0);
  }
  mean_psi /= n;

  MiEstimate est;
  est.value = digamma(k) + digamma(n) - mean_psi;
  est.estimator = MiEstimator::ksg;
  est.k = k;
  est.n = n;
  return est;
}

MiEstimate ksg_mi(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int k,
                  NeighborSearch search) {
  return ksg_mi(Eigen::MatrixXd(x), Eigen::MatrixXd(y), k, search);
}

MiEstimate ross_mi(const std::vector<long long>& labels, const Eigen::MatrixXd& y,
                   int k) {
  const int n = static_cast<int>(y.rows());
  if (static_cast<int>(labels.size()) != n) {
    throw InvalidArgumentError("ross_mi: label count does not match sample count");
  }
  if (k < 1) throw InvalidArgumentError("ross_mi: k must be >= 1");

  std::map<long long, std::vector<int>> classes;
  for (int i = 0; i < n; ++i) classes[labels[i]].push_back(i);
  for (const auto& [label, members] : classes) {
    if (static_cast<int>(members.size()) <= k) {
      std::ostringstream msg;
      msg << "ross_mi: label " << label << " has only " << members.size()
          << " members; every class needs more than k = " << k;
      throw InvalidArgumentError(msg.str());
    }
  }

  RandomStream jitter = RandomStream::from_ids({stream_tag::ksg_jitter});
  const PointSet pts = jittered_points(y, jitter, "ross_mi: y", false);

  // Radius per point: distance to its kth nearest neighbor within its own
  // label class.
  std::vector<double> radius(n, 0.0);
  for (const auto& [label, members] : classes) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      KBest best(k);
      for (std::size_t b = 0; b < members.size(); ++b) {
        if (a == b) continue;
        best.offer(pts.dist(members[a], members[b]));
      }
      radius[members[a]] = best.worst();
    }
  }

  // m(i): the point itself plus every sample strictly inside the radius,
  // labels ignored.
  std::vector<int> m_counts(n, 0);
  if (pts.dim == 1) {
    const SortedMarginal sorted(pts);
    for (int i = 0; i < n; ++i) {
      m_counts[i] = 1 + sorted.count_within(pts.coord(i, 0), radius[i]);
    }
  } else {
    for (int i = 0; i < n; ++i) m_counts[i] = 1 + brute_count_within(pts, i, radius[i]);
  }

  double mean_psi_label = 0.0;
  double mean_psi_m = 0.0;
  for (int i = 0; i < n; ++i) {
    mean_psi_label += digamma(static_cast<double>(classes[labels[i]].size()));
    mean_psi_m += digamma(static_cast<double>(m_counts[i]));
  }
  mean_psi_label /= n;
  mean_psi_m /= n;

  MiEstimate est;
  est.value = digamma(n) - mean_psi_label + digamma(k) - mean_psi_m;
  est.estimator = MiEstimator::ross;
  est.k = k;
  est.n = n;
  return est;
}

MiEstimate ross_mi(const std::vector<long long>& labels, const Eigen::VectorXd& y,
                   int k) {
  return ross_mi(labels, Eigen::MatrixXd(y), k);
}

}  // namespace cch
