#include "bstree/mode.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <string>

#include "bstree/tree_distribution.hpp"

namespace bstree {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// True if candidate (value, edge) beats the incumbent under "larger value,
// then lexicographically smaller edge".
bool better(double value, const Edge& e, double best_value, const Edge& best_edge) {
  if (value > best_value) return true;
  if (value < best_value) return false;
  return e < best_edge;
}

// Edges of the tree path between h and l, by parent pointers from h.
std::vector<Edge> tree_path(const std::vector<std::vector<int>>& adj, int h, int l) {
  const int p = static_cast<int>(adj.size());
  std::vector<int> parent(static_cast<std::size_t>(p), -1);
  std::vector<int> stack{h};
  parent[h] = h;
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    if (x == l) break;
    for (int y : adj[x]) {
      if (parent[y] < 0) {
        parent[y] = x;
        stack.push_back(y);
      }
    }
  }
  std::vector<Edge> out;
  for (int x = l; x != h; x = parent[x]) out.emplace_back(x, parent[x]);
  return out;
}

std::vector<std::vector<int>> adjacency_lists(const SpanningTree& tree) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(tree.node_count()));
  for (const auto& e : tree.edges()) {
    adj[e.j].push_back(e.k);
    adj[e.k].push_back(e.j);
  }
  return adj;
}

void scan_tree(const SpanningTree& tree, const Eigen::MatrixXd& w,
               const std::set<Edge>& excluded_from_off, SeparabilityResult& out,
               bool& tie_seen) {
  const int p = tree.node_count();
  const auto adj = adjacency_lists(tree);
  for (int h = 0; h < p; ++h) {
    for (int l = h + 1; l < p; ++l) {
      const Edge off(h, l);
      if (excluded_from_off.count(off)) continue;
      for (const auto& on : tree_path(adj, h, l)) {
        const double gap = w(h, l) - w(on.j, on.k);
        if (gap <= 1e-12 * std::max(1.0, std::abs(w(h, l)))) tie_seen = true;
        if (gap < out.delta || (gap == out.delta && std::pair(off, on) < std::pair(out.off_tree, out.on_path))) {
          out.delta = gap;
          out.off_tree = off;
          out.on_path = on;
        }
      }
    }
  }
}

}  // namespace

SpanningTree prim_mode(const Eigen::MatrixXd& q) {
  const int p = static_cast<int>(q.rows());
  if (p < 1 || q.cols() != p) throw std::invalid_argument("q must be square");
  std::vector<char> in_tree(static_cast<std::size_t>(p), 0);
  std::vector<double> best(static_cast<std::size_t>(p), -kInf);
  std::vector<Edge> best_edge(static_cast<std::size_t>(p));
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(std::max(0, p - 1)));

  auto absorb = [&](int u) {
    in_tree[u] = 1;
    for (int v = 0; v < p; ++v) {
      if (in_tree[v]) continue;
      const Edge e(u, v);
      if (better(q(u, v), e, best[v], best_edge[v])) {
        best[v] = q(u, v);
        best_edge[v] = e;
      }
    }
  };

  absorb(0);
  for (int step = 1; step < p; ++step) {
    int pick = -1;
    for (int v = 0; v < p; ++v) {
      if (in_tree[v] || best[v] == -kInf) continue;
      if (pick < 0 || better(best[v], best_edge[v], best[pick], best_edge[pick])) pick = v;
    }
    if (pick < 0) {
      for (int v = 0; v < p; ++v) {
        if (!in_tree[v]) {
          throw DisconnectedSupportError("node " + std::to_string(v + 1) +
                                         " is unreachable through finite log weights");
        }
      }
    }
    edges.push_back(best_edge[pick]);
    absorb(pick);
  }
  return SpanningTree::from_edges(p, std::move(edges));
}

double tau_hat(const SpanningTree& tree, const PairwiseDistances& distances, double alpha) {
  const int p = tree.node_count();
  if (p < 2) throw std::invalid_argument("tau_hat needs at least two nodes");
  std::vector<double> d;
  d.reserve(tree.edges().size());
  for (const auto& e : tree.edges()) d.push_back(distances.dist(e.j, e.k));
  // Summing in sorted order keeps the value independent of edge order.
  std::sort(d.begin(), d.end());
  double total = 0.0;
  for (double x : d) total += x;
  return alpha * total / (static_cast<double>(distances.n) * (p - 1));
}

Eigen::MatrixXd covariance_dissimilarity(const Eigen::MatrixXd& sigma) {
  const auto p = sigma.rows();
  Eigen::MatrixXd w(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      w(j, k) = j == k ? 0.0 : sigma(j, j) + sigma(k, k) - 2.0 * sigma(j, k);
    }
  }
  return w;
}

SpanningTree minimum_spanning_tree(const Eigen::MatrixXd& w) {
  Eigen::MatrixXd q = -w;
  q.diagonal().setConstant(-kInf);
  return prim_mode(q);
}

SpanningTree oracle_tree(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) throw std::invalid_argument("covariance must be square");
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) {
    throw std::invalid_argument("covariance must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("covariance must be positive-definite");
  }
  return minimum_spanning_tree(covariance_dissimilarity(sigma));
}

SeparabilityResult separability_delta(const Eigen::MatrixXd& w) {
  const int p = static_cast<int>(w.rows());
  if (p < 2 || w.cols() != p) throw std::invalid_argument("weights must be square with p >= 2");
  SeparabilityResult out;
  out.delta = kInf;
  bool tie_seen = false;

  if (p <= 8) {
    const auto trees = enumerate_trees(p);
    std::vector<double> totals;
    totals.reserve(trees.size());
    double best = kInf;
    for (const auto& t : trees) {
      double s = 0.0;
      for (const auto& e : t.edges()) s += w(e.j, e.k);
      totals.push_back(s);
      best = std::min(best, s);
    }
    const double tol = 1e-10 * std::max(1.0, std::abs(best));
    std::vector<const SpanningTree*> msts;
    std::set<Edge> union_edges;
    for (std::size_t i = 0; i < trees.size(); ++i) {
      if (totals[i] <= best + tol) {
        msts.push_back(&trees[i]);
        for (const auto& e : trees[i].edges()) union_edges.insert(e);
      }
    }
    for (const auto* t : msts) {
      bool ignored = false;
      scan_tree(*t, w, union_edges, out, ignored);
    }
    out.mst_count = static_cast<int>(msts.size());
    out.exhaustive = true;
    return out;
  }

  const auto tree = minimum_spanning_tree(w);
  std::set<Edge> own(tree.edges().begin(), tree.edges().end());
  scan_tree(tree, w, own, out, tie_seen);
  out.mst_count = 1;
  out.exhaustive = !tie_seen;
  if (tie_seen) {
    std::clog << "warning: tied weights admit several minimum spanning trees; separability "
                 "computed against the one found\n";
  }
  return out;
}

}  // namespace bstree
