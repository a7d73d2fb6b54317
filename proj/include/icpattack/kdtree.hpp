#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "icpattack/errors.hpp"

namespace icpattack {

/// Exact nearest-neighbor index over a fixed set of 3D points.
///
/// Bucketed kd-tree with median splits. Queries return the true closest
/// point (no approximation); ties are broken toward the lowest index so
/// results are independent of traversal order.
class KdTree {
 public:
  using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

  struct Neighbor {
    Eigen::Index index = -1;
    double distance = std::numeric_limits<double>::infinity();
  };

  explicit KdTree(const PointMatrix& points) : points_(points) {
    if (points_.rows() == 0) throw ValidationError("KdTree: empty point set");
    order_.resize(static_cast<std::size_t>(points_.rows()));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    root_ = build(0, static_cast<Eigen::Index>(order_.size()));
  }

  Eigen::Index size() const { return points_.rows(); }

  Neighbor nearest(const Eigen::Vector3d& query) const {
    Neighbor best;
    search_one(root_, query, best);
    best.distance = std::sqrt(best.distance);
    return best;
  }

  /// k nearest neighbors, ascending by (distance, index). k is clamped to size().
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, int k) const {
    const auto want = std::min<Eigen::Index>(k, points_.rows());
    if (want <= 0) return {};
    std::vector<Neighbor> heap;  // max-heap on (distance, index)
    heap.reserve(static_cast<std::size_t>(want));
    search_k(root_, query, static_cast<std::size_t>(want), heap);
    std::sort_heap(heap.begin(), heap.end(), heap_less);
    for (auto& n : heap) n.distance = std::sqrt(n.distance);
    return heap;
  }

 private:
  struct Node {
    int dim = -1;          // -1 marks a leaf
    double split = 0.0;
    Eigen::Index left = -1, right = -1;   // children for internal nodes
    Eigen::Index begin = 0, end = 0;      // order_ range for leaves
  };

  static constexpr Eigen::Index kBucketSize = 16;

  static bool heap_less(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  }

  Eigen::Index build(Eigen::Index begin, Eigen::Index end) {
    Node node;
    if (end - begin <= kBucketSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<Eigen::Index>(nodes_.size() - 1);
    }
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (Eigen::Index i = begin; i < end; ++i) {
      const auto p = points_.row(order_[static_cast<std::size_t>(i)]);
      lo = lo.cwiseMin(p.transpose());
      hi = hi.cwiseMax(p.transpose());
    }
    int dim = 0;
    (hi - lo).maxCoeff(&dim);
    const Eigen::Index mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) {
                       return points_(a, dim) < points_(b, dim) ||
                              (points_(a, dim) == points_(b, dim) && a < b);
                     });
    node.dim = dim;
    node.split = points_(order_[static_cast<std::size_t>(mid)], dim);
    const auto self = static_cast<Eigen::Index>(nodes_.size());
    nodes_.push_back(node);
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
  }

  void scan_leaf(const Node& node, const Eigen::Vector3d& q, Neighbor& best) const {
    for (Eigen::Index i = node.begin; i < node.end; ++i) {
      const Eigen::Index idx = order_[static_cast<std::size_t>(i)];
      const double d2 = (points_.row(idx).transpose() - q).squaredNorm();
      if (d2 < best.distance || (d2 == best.distance && idx < best.index)) {
        best.distance = d2;
        best.index = idx;
      }
    }
  }

  void search_one(Eigen::Index node_id, const Eigen::Vector3d& q, Neighbor& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.dim < 0) {
      scan_leaf(node, q, best);
      return;
    }
    const double delta = q[node.dim] - node.split;
    const Eigen::Index near = delta < 0 ? node.left : node.right;
    const Eigen::Index far = delta < 0 ? node.right : node.left;
    search_one(near, q, best);
    if (delta * delta <= best.distance) search_one(far, q, best);
  }

  void push_candidate(std::vector<Neighbor>& heap, std::size_t k, Eigen::Index idx,
                      double d2) const {
    const Neighbor cand{idx, d2};
    if (heap.size() < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), heap_less);
    } else if (heap_less(cand, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), heap_less);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), heap_less);
    }
  }

  void search_k(Eigen::Index node_id, const Eigen::Vector3d& q, std::size_t k,
                std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.dim < 0) {
      for (Eigen::Index i = node.begin; i < node.end; ++i) {
        const Eigen::Index idx = order_[static_cast<std::size_t>(i)];
        push_candidate(heap, k, idx, (points_.row(idx).transpose() - q).squaredNorm());
      }
      return;
    }
    const double delta = q[node.dim] - node.split;
    const Eigen::Index near = delta < 0 ? node.left : node.right;
    const Eigen::Index far = delta < 0 ? node.right : node.left;
    search_k(near, q, k, heap);
    if (heap.size() < k || delta * delta <= heap.front().distance) search_k(far, q, k, heap);
  }

  PointMatrix points_;
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
  Eigen::Index root_ = 0;
};

}  // namespace icpattack
