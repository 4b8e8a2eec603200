#pragma once

#include <Eigen/Dense>

#include "bstree/edge_weights.hpp"
#include "bstree/graph_core.hpp"

namespace bstree {

/// Maximum-weight spanning tree of q by Prim's algorithm grown from node 0.
/// Among equal candidates the lexicographically smallest edge wins. Throws
/// DisconnectedSupportError naming a node that cannot be reached.
SpanningTree prim_mode(const Eigen::MatrixXd& q);
inline SpanningTree prim_mode(const LogWeightMatrix& w) { return prim_mode(w.q); }

/// Plug-in global scale alpha * sum_{(j,k) in tree} d_jk / (n (p-1)).
double tau_hat(const SpanningTree& tree, const PairwiseDistances& distances, double alpha);

/// W0(j,k) = S(j,j) + S(k,k) - 2 S(j,k) for a covariance S.
Eigen::MatrixXd covariance_dissimilarity(const Eigen::MatrixXd& sigma);

/// Minimum spanning tree of the covariance dissimilarity. Rejects matrices
/// that are not symmetric positive-definite.
SpanningTree oracle_tree(const Eigen::MatrixXd& sigma);

/// Minimum spanning tree of a symmetric weight table (lexicographic ties).
SpanningTree minimum_spanning_tree(const Eigen::MatrixXd& w);

struct SeparabilityResult {
  /// min over off-tree (h,l) and tree edges (j,k) on path(h,l) of W_hl - W_jk.
  double delta = 0.0;
  Edge off_tree;
  Edge on_path;
  /// Number of minimum spanning trees examined (1 above the enumeration limit).
  int mst_count = 0;
  /// False when ties suggest more minimum spanning trees than were examined.
  bool exhaustive = true;
};

/// Separability constant of a weight table. All minimum spanning trees are
/// enumerated for p <= 8; above that the single tree found by Prim is used
/// and a warning is emitted if ties indicate alternatives. delta is +inf when
/// every pair lies on some minimum spanning tree.
SeparabilityResult separability_delta(const Eigen::MatrixXd& w);

}  // namespace bstree
