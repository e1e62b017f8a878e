// SPDX-License-Identifier: Apache-2.0
// Dinic's maximum flow on real-valued capacities.
#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

namespace leafseg::detail {

class MaxFlow {
 public:
  static constexpr double kInfinite = std::numeric_limits<double>::infinity();

  explicit MaxFlow(std::size_t nodes) : head_(nodes, kNone) {}

  /// Adds u->v with capacity `forward` and v->u with capacity `backward`.
  void add_edge(std::size_t u, std::size_t v, double forward, double backward = 0.0) {
    arcs_.push_back({v, head_[u], forward});
    head_[u] = arcs_.size() - 1;
    arcs_.push_back({u, head_[v], backward});
    head_[v] = arcs_.size() - 1;
  }

  double solve(std::size_t source, std::size_t sink) {
    double total = 0.0;
    while (bfs(source, sink)) {
      next_ = head_;
      while (true) {
        const double pushed = dfs(source, sink, kInfinite);
        if (pushed <= kTolerance) break;
        total += pushed;
      }
    }
    return total;
  }

  /// Nodes reachable from `source` in the residual graph (after solve()).
  std::vector<bool> source_side(std::size_t source) const {
    std::vector<bool> seen(head_.size(), false);
    std::vector<std::size_t> stack{source};
    seen[source] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t a = head_[u]; a != kNone; a = arcs_[a].next) {
        if (arcs_[a].residual > kTolerance && !seen[arcs_[a].to]) {
          seen[arcs_[a].to] = true;
          stack.push_back(arcs_[a].to);
        }
      }
    }
    return seen;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  static constexpr double kTolerance = 1e-12;

  struct Arc {
    std::size_t to;
    std::size_t next;
    double residual;
  };

  bool bfs(std::size_t source, std::size_t sink) {
    level_.assign(head_.size(), -1);
    std::queue<std::size_t> q;
    level_[source] = 0;
    q.push(source);
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t a = head_[u]; a != kNone; a = arcs_[a].next) {
        if (arcs_[a].residual > kTolerance && level_[arcs_[a].to] < 0) {
          level_[arcs_[a].to] = level_[u] + 1;
          q.push(arcs_[a].to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  double dfs(std::size_t u, std::size_t sink, double limit) {
    if (u == sink) return limit;
    for (std::size_t& a = next_[u]; a != kNone; a = arcs_[a].next) {
      Arc& arc = arcs_[a];
      if (arc.residual <= kTolerance || level_[arc.to] != level_[u] + 1) continue;
      const double got = dfs(arc.to, sink, std::min(limit, arc.residual));
      if (got > kTolerance) {
        arc.residual -= got;
        arcs_[a ^ 1].residual += got;
        return got;
      }
    }
    return 0.0;
  }

  std::vector<std::size_t> head_;
  std::vector<std::size_t> next_;
  std::vector<Arc> arcs_;
  std::vector<int> level_;
};

}  // namespace leafseg::detail
