// SPDX-License-Identifier: Apache-2.0
// Static 3-D kd-tree for k-nearest-neighbor and radius queries.
#pragma once

#include <algorithm>
#include <cstddef>
#include <queue>
#include <utility>
#include <vector>

#include "leafseg/cloud.hpp"

namespace leafseg::detail {

class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points) : points_(points), order_(points.size()) {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (!order_.empty()) build(0, order_.size());
  }

  /// Up to k nearest points to points_[query] (excluding itself) with
  /// squared distance <= max_sq. Ordered by (distance, index).
  std::vector<std::pair<double, std::size_t>> knn(std::size_t query, std::size_t k, double max_sq) const {
    Heap heap;
    if (k > 0 && !nodes_.empty()) search_knn(0, points_[query], query, k, max_sq, heap);
    std::vector<std::pair<double, std::size_t>> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back(heap.top());
      heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  /// Every point (including the query itself) within sqrt(max_sq), ascending index.
  std::vector<std::size_t> radius(const Vec3& q, double max_sq) const {
    std::vector<std::size_t> out;
    if (!nodes_.empty()) search_radius(0, q, max_sq, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::size_t kLeafSize = 12;

  struct Node {
    std::size_t begin, end;  // range in order_
    int axis;                // -1 for leaves
    double split;
    std::size_t left, right;
    Vec3 lo, hi;             // bounding box
  };

  // Max-heap on (sq distance, index) so the worst candidate is on top.
  using Heap = std::priority_queue<std::pair<double, std::size_t>>;

  std::size_t build(std::size_t begin, std::size_t end) {
    Node node{begin, end, -1, 0.0, 0, 0, points_[order_[begin]], points_[order_[begin]]};
    for (std::size_t i = begin; i < end; ++i) {
      const Vec3& p = points_[order_[i]];
      for (int a = 0; a < 3; ++a) {
        node.lo[a] = std::min(node.lo[a], p[a]);
        node.hi[a] = std::max(node.hi[a], p[a]);
      }
    }
    const std::size_t id = nodes_.size();
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;
    int axis = 0;
    for (int a = 1; a < 3; ++a) {
      if (node.hi[a] - node.lo[a] > node.hi[axis] - node.lo[axis]) axis = a;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       return points_[a][axis] < points_[b][axis] ||
                              (points_[a][axis] == points_[b][axis] && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static double box_sq(const Node& n, const Vec3& q) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
      double d = 0.0;
      if (q[a] < n.lo[a]) d = n.lo[a] - q[a];
      else if (q[a] > n.hi[a]) d = q[a] - n.hi[a];
      s += d * d;
    }
    return s;
  }

  static double sq(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
  }

  void search_knn(std::size_t id, const Vec3& q, std::size_t self, std::size_t k, double max_sq, Heap& heap) const {
    const Node& n = nodes_[id];
    const double bound = heap.size() == k ? heap.top().first : max_sq;
    if (box_sq(n, q) > bound) return;
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t j = order_[i];
        if (j == self) continue;
        const double d = sq(points_[j], q);
        if (d > max_sq) continue;
        const std::pair<double, std::size_t> cand{d, j};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const bool go_left = q[n.axis] < n.split;
    search_knn(go_left ? n.left : n.right, q, self, k, max_sq, heap);
    search_knn(go_left ? n.right : n.left, q, self, k, max_sq, heap);
  }

  void search_radius(std::size_t id, const Vec3& q, double max_sq, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (box_sq(n, q) > max_sq) return;
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        if (sq(points_[order_[i]], q) <= max_sq) out.push_back(order_[i]);
      }
      return;
    }
    search_radius(n.left, q, max_sq, out);
    search_radius(n.right, q, max_sq, out);
  }

  const std::vector<Vec3>& points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace leafseg::detail
