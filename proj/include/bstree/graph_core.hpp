#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace bstree {

/// Undirected edge stored canonically with j < k (0-based node indices).
struct Edge {
  int j = 0;
  int k = 0;

  Edge() = default;
  Edge(int a, int b) : j(a < b ? a : b), k(a < b ? b : a) {}

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class InvalidTreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the cached Gram inverse no longer yields a clean two-value
/// projection; the owner is expected to refresh and retry.
class NumericalDriftError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A labeled spanning tree on p nodes. Edge order is insertion order, so an
/// edge index is positional.
class SpanningTree {
 public:
  SpanningTree() = default;

  /// Validates count, self-loops, duplicates and connectivity.
  static SpanningTree from_edges(int p, std::vector<Edge> edges);

  int node_count() const { return p_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int s) const { return edges_.at(static_cast<std::size_t>(s)); }

  Eigen::MatrixXi adjacency() const;
  std::vector<int> degrees() const;
  bool contains(const Edge& e) const;

  /// Sorted copy of the edge list; equal for trees with the same edge set.
  std::vector<Edge> sorted_edges() const;

  /// Same edge set, ignoring order.
  bool same_edges(const SpanningTree& other) const;

  /// Relabels node l as perm[l].
  SpanningTree relabeled(const std::vector<int>& perm) const;

 private:
  SpanningTree(int p, std::vector<Edge> edges) : p_(p), edges_(std::move(edges)) {}
  friend class IncidenceMatrix;

  int p_ = 0;
  std::vector<Edge> edges_;
};

/// Two sides of the cut obtained by deleting one tree edge. The smaller
/// endpoint of the cut edge is always in `first`.
struct CutPartition {
  std::vector<int> first;
  std::vector<int> second;
  Edge cut_edge;
  /// in_first[l] != 0 iff node l belongs to `first`.
  std::vector<std::uint8_t> in_first;
};

/// Node-to-edge incidence matrix of a spanning tree together with the cached
/// inverse of its Gram matrix B^T B.
///
/// Column s carries +1 at the smaller endpoint of edge s and -1 at the larger.
/// The Gram inverse is maintained across edge swaps by block updates and is
/// recomputed from scratch every p swaps, or whenever a drift signal is seen.
class IncidenceMatrix {
 public:
  explicit IncidenceMatrix(const SpanningTree& tree);

  int node_count() const { return p_; }
  int edge_count() const { return p_ - 1; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Eigen::MatrixXd& matrix() const { return b_; }
  const Eigen::MatrixXd& gram_inverse() const { return gram_inv_; }
  SpanningTree tree() const { return SpanningTree(p_, edges_); }

  /// Number of block updates applied since the last full recompute.
  int swaps_since_refresh() const { return swaps_since_refresh_; }
  /// Total number of full recomputes (including the initial one).
  int refresh_count() const { return refresh_count_; }

  /// Projection of column s onto the orthogonal complement of the other
  /// columns, computed from the cached Gram inverse.
  Eigen::VectorXd projected_column(int s) const;

  /// (B_{-s}^T B_{-s})^{-1} obtained from the cached inverse by block
  /// extraction; rows/columns keep the original edge order with s removed.
  Eigen::MatrixXd reduced_gram_inverse(int s) const;

  /// Traversal-free cut: nodes are split by the two values of the projected
  /// column. Throws NumericalDriftError if the values do not form two tight
  /// clusters.
  CutPartition cut_partition(int s) const;

  /// Replaces edge s by `replacement`, which must reconnect the two sides of
  /// the cut of edge s. Throws InvalidTreeError otherwise.
  void swap_edge(int s, Edge replacement);

  /// Full O(p^3) recompute of the Gram inverse.
  void refresh();

 private:
  Eigen::VectorXd gram_column_without(int s, const Edge& col) const;
  Eigen::VectorXd apply_reduced_inverse(int s, const Eigen::VectorXd& v) const;
  Eigen::VectorXd multiply_b(const Eigen::VectorXd& x) const;

  int p_ = 0;
  std::vector<Edge> edges_;
  Eigen::MatrixXd b_;
  Eigen::MatrixXd gram_inv_;
  int swaps_since_refresh_ = 0;
  int refresh_count_ = 0;
};

IncidenceMatrix build_incidence(const SpanningTree& tree);
CutPartition cut_partition(const IncidenceMatrix& b, int s);
Eigen::MatrixXd extract_reduced_gram_inverse(const IncidenceMatrix& b, int s);
IncidenceMatrix swap_edge_update(IncidenceMatrix b, int s, Edge replacement);

/// Laplacian of the tree with edge s weighted by edge_weights[s].
Eigen::MatrixXd weighted_laplacian(const SpanningTree& tree,
                                   const Eigen::VectorXd& edge_weights);

}  // namespace bstree
