#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

// Primal network simplex with a strongly feasible spanning tree rooted at an
// artificial node (Cunningham's rule), big-M artificial arcs and block-search
// pricing. The tree is stored as adjacency lists; parent pointers, depths and
// node potentials are recomputed by a traversal after every pivot, which is
// O(nodes) and cheap next to pricing for the problem sizes used here.

namespace urcd::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class NetworkSimplex {
 public:
  NetworkSimplex(std::span<const double> supply, std::span<const double> demand,
                 std::span<const double> cost)
      : k_(static_cast<int>(supply.size())),
        m_(static_cast<int>(demand.size())),
        nodes_(k_ + m_),
        root_(k_ + m_),
        real_arcs_(k_ * m_),
        cost_(cost.begin(), cost.end()) {
    double max_cost = 0.0;
    for (double c : cost_) max_cost = std::max(max_cost, c);
    art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_);
    eps_ = 1e-14 * art_cost_;

    flow_.assign(static_cast<std::size_t>(real_arcs_ + nodes_), 0.0);
    in_tree_.assign(flow_.size(), 0);
    adj_.assign(static_cast<std::size_t>(nodes_ + 1), {});
    art_up_.assign(static_cast<std::size_t>(nodes_), 0);

    for (int u = 0; u < nodes_; ++u) {
      const int e = real_arcs_ + u;
      in_tree_[e] = 1;
      if (u < k_) {
        art_up_[u] = 1;  // u -> root, zero cost
        flow_[e] = supply[u];
      } else {
        flow_[e] = demand[u - k_];  // root -> u, cost art_cost_
      }
      adj_[u].push_back(e);
      adj_[root_].push_back(e);
    }

    block_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(real_arcs_))));
    parent_.assign(adj_.size(), -1);
    pred_.assign(adj_.size(), -1);
    pred_up_.assign(adj_.size(), 0);
    depth_.assign(adj_.size(), 0);
    pi_.assign(adj_.size(), 0.0);
  }

  std::vector<double> run() {
    rebuild_tree();
    const long long max_pivots = 100LL * (real_arcs_ + nodes_) + 10000;
    long long pivots = 0;
    int entering = -1;
    while (find_entering(entering)) {
      pivot(entering);
      if (++pivots > max_pivots) {
        throw std::runtime_error("network simplex: pivot limit exceeded");
      }
    }
    for (int u = 0; u < nodes_; ++u) {
      if (flow_[real_arcs_ + u] > 1e-9) {
        throw std::runtime_error("network simplex: artificial arc carries flow " +
                                 std::to_string(flow_[real_arcs_ + u]) +
                                 " at optimum; marginals are inconsistent");
      }
    }
    std::vector<double> plan(flow_.begin(), flow_.begin() + real_arcs_);
    for (double& f : plan) f = std::max(f, 0.0);
    return plan;
  }

 private:
  int source(int arc) const {
    if (arc < real_arcs_) return arc / m_;
    const int u = arc - real_arcs_;
    return art_up_[u] ? u : root_;
  }
  int target(int arc) const {
    if (arc < real_arcs_) return k_ + arc % m_;
    const int u = arc - real_arcs_;
    return art_up_[u] ? root_ : u;
  }
  double arc_cost(int arc) const {
    if (arc < real_arcs_) return cost_[arc];
    return art_up_[arc - real_arcs_] ? 0.0 : art_cost_;
  }
  double reduced_cost(int arc) const {
    return arc_cost(arc) + pi_[source(arc)] - pi_[target(arc)];
  }

  void rebuild_tree() {
    stack_.clear();
    stack_.push_back(root_);
    parent_[root_] = -1;
    pred_[root_] = -1;
    depth_[root_] = 0;
    pi_[root_] = 0.0;
    while (!stack_.empty()) {
      const int u = stack_.back();
      stack_.pop_back();
      for (int e : adj_[u]) {
        if (e == pred_[u]) continue;
        const int s = source(e);
        const int v = s == u ? target(e) : s;
        parent_[v] = u;
        pred_[v] = e;
        pred_up_[v] = static_cast<char>(s == v);
        depth_[v] = depth_[u] + 1;
        pi_[v] = s == u ? pi_[u] + arc_cost(e) : pi_[u] - arc_cost(e);
        stack_.push_back(v);
      }
    }
  }

  bool find_entering(int& entering) {
    double best = 0.0;
    int best_arc = -1;
    int count = block_;
    for (int i = 0; i < real_arcs_; ++i) {
      const int e = next_arc_;
      next_arc_ = next_arc_ + 1 == real_arcs_ ? 0 : next_arc_ + 1;
      if (!in_tree_[e]) {
        const double rc = reduced_cost(e);
        if (rc < best) {
          best = rc;
          best_arc = e;
        }
      }
      if (--count == 0) {
        if (best < -eps_) break;
        count = block_;
      }
    }
    if (best < -eps_) {
      entering = best_arc;
      return true;
    }
    return false;
  }

  void pivot(int entering) {
    const int first = source(entering);
    const int second = target(entering);

    int a = first;
    int b = second;
    while (a != b) {
      if (depth_[a] >= depth_[b]) {
        a = parent_[a];
      } else {
        b = parent_[b];
      }
    }
    const int join = a;

    // Flow travels first -> second on the entering arc, up from `second` to
    // the join and down from the join to `first`.
    double delta = kInf;
    int leaving_node = -1;
    for (int u = first; u != join; u = parent_[u]) {
      const double residual = pred_up_[u] ? flow_[pred_[u]] : kInf;
      if (residual < delta) {
        delta = residual;
        leaving_node = u;
      }
    }
    for (int u = second; u != join; u = parent_[u]) {
      const double residual = pred_up_[u] ? kInf : flow_[pred_[u]];
      if (residual <= delta) {
        delta = residual;
        leaving_node = u;
      }
    }
    if (leaving_node < 0 || !std::isfinite(delta)) {
      throw std::runtime_error("network simplex: unbounded cycle");
    }

    if (delta > 0.0) {
      flow_[entering] += delta;
      for (int u = first; u != join; u = parent_[u]) {
        flow_[pred_[u]] += pred_up_[u] ? -delta : delta;
      }
      for (int u = second; u != join; u = parent_[u]) {
        flow_[pred_[u]] += pred_up_[u] ? delta : -delta;
      }
    }
    const int leaving = pred_[leaving_node];
    flow_[leaving] = 0.0;

    in_tree_[leaving] = 0;
    remove_adjacent(source(leaving), leaving);
    remove_adjacent(target(leaving), leaving);
    in_tree_[entering] = 1;
    adj_[first].push_back(entering);
    adj_[second].push_back(entering);
    rebuild_tree();
  }

  void remove_adjacent(int node, int arc) {
    auto& list = adj_[node];
    auto it = std::find(list.begin(), list.end(), arc);
    *it = list.back();
    list.pop_back();
  }

  int k_;
  int m_;
  int nodes_;
  int root_;
  int real_arcs_;
  std::vector<double> cost_;
  double art_cost_ = 0.0;
  double eps_ = 0.0;
  std::vector<double> flow_;
  std::vector<char> in_tree_;
  std::vector<char> art_up_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> parent_;
  std::vector<int> pred_;
  std::vector<char> pred_up_;
  std::vector<int> depth_;
  std::vector<double> pi_;
  std::vector<int> stack_;
  int block_ = 10;
  int next_arc_ = 0;
};

}  // namespace

std::vector<double> solve_transportation(std::span<const double> supply,
                                         std::span<const double> demand,
                                         std::span<const double> cost) {
  if (supply.empty() || demand.empty() || cost.size() != supply.size() * demand.size()) {
    throw std::invalid_argument("solve_transportation: inconsistent problem shape");
  }
  return NetworkSimplex(supply, demand, cost).run();
}

}  // namespace urcd::detail
