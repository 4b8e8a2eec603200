#pragma once

#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bstree/edge_weights.hpp"
#include "bstree/graph_core.hpp"

namespace bstree {

/// Raised when the graph of finite log weights does not connect all nodes,
/// so no spanning tree has positive mass.
class DisconnectedSupportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TreePosteriorSummary {
  double log_z = 0.0;
  /// Marginal probability that each pair is an edge of the random tree.
  Eigen::MatrixXd mcp;
  /// Constant subtracted from q before exponentiation (max finite entry).
  double shift = 0.0;
  /// Largest amount any entry had to be clamped into [0, 1].
  double clamp_magnitude = 0.0;
};

/// log of sum_T prod_{(j,k) in T} exp(q_jk), via det(L_q + J/p^2).
double log_partition(const Eigen::MatrixXd& q);
inline double log_partition(const LogWeightMatrix& w) { return log_partition(w.q); }

TreePosteriorSummary marginal_connecting_probabilities(const Eigen::MatrixXd& q);
inline TreePosteriorSummary marginal_connecting_probabilities(const LogWeightMatrix& w) {
  return marginal_connecting_probabilities(w.q);
}

/// Same quantities by log-domain elimination of the Laplacian, which stays
/// accurate when the weights span more than double precision resolves. The
/// two functions above switch to it when the Cholesky factor is
/// ill-conditioned.
TreePosteriorSummary elimination_summary(const Eigen::MatrixXd& q);

/// Decodes a Pruefer sequence (0-based labels, length p-2) into a tree.
SpanningTree tree_from_pruefer(const std::vector<int>& sequence, int p);

/// All p^(p-2) labeled trees on p <= 8 nodes, in Pruefer-sequence order.
std::vector<SpanningTree> enumerate_trees(int p);

/// sum of q over the tree's edges; -inf if any edge is blocked.
double tree_log_posterior_unnormalized(const SpanningTree& tree, const Eigen::MatrixXd& q);

/// Uniformly random labeled tree (uniform Pruefer sequence).
template <class Urbg>
SpanningTree random_tree(int p, Urbg& rng) {
  if (p < 2) return SpanningTree::from_edges(p, {});
  std::uniform_int_distribution<int> pick(0, p - 1);
  std::vector<int> seq(static_cast<std::size_t>(p - 2));
  for (auto& x : seq) x = pick(rng);
  return tree_from_pruefer(seq, p);
}

}  // namespace bstree
