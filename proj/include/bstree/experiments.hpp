#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "bstree/graph_core.hpp"
#include "bstree/rng.hpp"
#include "bstree/sampler.hpp"
#include "bstree/tree_hmm.hpp"

namespace bstree {

/// Ground truth for a sparse-precision benchmark instance.
struct SparsePrecisionInstance {
  Eigen::MatrixXd precision;
  Eigen::MatrixXd covariance;
  /// Nonzero off-diagonal pattern of the precision matrix.
  std::vector<Edge> graph;
  /// Minimum spanning tree of the covariance dissimilarity.
  SpanningTree backbone;
  /// Number of backbone edges missing from `graph`.
  int backbone_outside_graph = 0;
};

enum class SparseConstruction {
  /// Omega = C^T C with C = -I plus a sparse strictly lower triangle, nodes
  /// randomly relabeled (the scikit-learn sparse SPD construction).
  cholesky_factor,
  /// Symmetric sparse pattern with random signs; diagonal = absolute row
  /// sum + margin.
  diagonal_dominance
};

struct SparsePrecisionSpec {
  int p = 200;
  /// Probability that an entry of the random pattern (the triangular factor
  /// for cholesky_factor) is nonzero.
  double sparsity = 0.03;
  double min_magnitude = 0.3;
  double max_magnitude = 0.9;
  SparseConstruction construction = SparseConstruction::diagonal_dominance;
  /// Added to the absolute row sum on the diagonal (diagonal_dominance).
  double margin = 0.1;

  void validate() const;
};

/// Random sparse SPD precision, rescaled so the covariance is a correlation
/// matrix (the nonzero pattern is unchanged). `graph` is the nonzero
/// off-diagonal pattern of the precision.
SparsePrecisionInstance generate_sparse_precision(const SparsePrecisionSpec& spec, Rng& rng);

/// n x p draws from N(0, covariance).
Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& covariance, int n, Rng& rng);

/// Tree-generated variables: node `root` ~ N(0, 1), every other node equals
/// its parent plus N(0, edge_sd^2).
struct TreeInstance {
  SpanningTree tree;
  int root = 0;
  double edge_sd = 1.0;
  Eigen::MatrixXd covariance;
};

TreeInstance generate_tree_instance(int p, double edge_sd, Rng& rng);
Eigen::MatrixXd sample_tree_data(const SpanningTree& tree, int root, double edge_sd, int n, Rng& rng);
/// Exact covariance of sample_tree_data.
Eigen::MatrixXd tree_covariance(const SpanningTree& tree, int root, double edge_sd);

/// Pairs whose absolute sample correlation is at least `threshold`.
std::vector<Edge> thresholding_baseline(const Eigen::MatrixXd& raw, double threshold);

struct RecoveryCounts {
  /// |T0 \ G_hat|
  int missed_backbone = 0;
  /// |G_hat \ G0|
  int false_edges = 0;
  int combined = 0;
  int estimated_edges = 0;
};

RecoveryCounts recovery_error(const std::vector<Edge>& backbone, const std::vector<Edge>& graph,
                              const std::vector<Edge>& estimate);

enum class RecoveryMethod { mode, mcp_plugin, mcmc_mcp, threshold };

struct RecoveryMethodSpec {
  RecoveryMethod method = RecoveryMethod::mode;
  /// Correlation cutoff (threshold) or probability cutoff (mcp methods).
  double cutoff = 0.5;
  /// Sweeps for mcmc_mcp (half of them burn-in).
  int sweeps = 200;

  std::string label() const;
};

enum class TruthKind { sparse_precision, oracle_tree };

struct RecoveryConfig {
  TruthKind truth = TruthKind::sparse_precision;
  SparsePrecisionSpec sparse;
  /// Node count and edge noise for the oracle_tree truth.
  int tree_p = 200;
  double tree_edge_sd = 1.0;
  std::vector<int> n_grid{25, 50, 100, 200, 400};
  int replicates = 10;
  std::uint64_t seed = 1;
  double alpha = 5.0;
  std::vector<RecoveryMethodSpec> methods{RecoveryMethodSpec{}};
};

struct RecoveryRow {
  int n = 0;
  std::string method;
  int replicate = 0;
  std::uint64_t seed = 0;
  RecoveryCounts counts;
  int backbone_edges = 0;
  int graph_edges = 0;
  int backbone_outside_graph = 0;
};

struct RecoverySummary {
  int n = 0;
  std::string method;
  double mean_combined = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double mean_missed = 0.0;
  double mean_false = 0.0;
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;
  std::vector<RecoverySummary> summary;
};

/// Every replicate draws one truth and one data set of the largest n; smaller
/// n use its leading rows, so the grid points share random numbers.
RecoveryReport recovery_experiment(const RecoveryConfig& config);

/// Edge estimate of a method on raw data.
std::vector<Edge> estimate_edges(const Eigen::MatrixXd& raw, const RecoveryMethodSpec& method,
                                 double alpha, std::uint64_t seed);

enum class ManifoldKind { blobs, two_moons };

/// 2 x p coordinates: each column is a point, treated as one variable with
/// n = 2 observations.
Eigen::MatrixXd generate_blobs(int points_per_blob, double spread, Rng& rng);
Eigen::MatrixXd generate_two_moons(int points, double noise, Rng& rng);

struct ManifoldConfig {
  ManifoldKind kind = ManifoldKind::two_moons;
  int points = 100;
  /// Point noise for two_moons.
  double noise = 0.05;
  /// Standard deviation of each blob.
  double spread = 1.0;
  std::uint64_t seed = 1;
  ChainConfig chain = [] {
    ChainConfig c;
    c.iterations = 2000;
    c.burn_in = 1000;
    return c;
  }();
  double alpha = 5.0;
};

struct ManifoldResult {
  Eigen::MatrixXd points;
  SpanningTree mode_tree;
  ChainResult chain;
  Eigen::MatrixXd mcp;
  /// Share of mode-tree pairs with draw frequency above 0.9.
  double mode_edges_above_90 = 0.0;
  /// Mean draw frequency of the mode-tree pairs.
  double mean_mode_edge_mcp = 0.0;
  /// Share of ever-connected pairs with draw frequency below 0.5.
  double connected_pairs_below_50 = 0.0;
};

ManifoldResult manifold_uq_experiment(const ManifoldConfig& config);

/// Synthetic regime data for the tree HMM.
struct RegimeSpec {
  int states = 3;
  int p = 20;
  int length = 100;
  int series_per_condition = 10;
  double edge_sd = 0.3;
};

struct RegimeData {
  std::vector<SpanningTree> trees;
  std::vector<Eigen::MatrixXd> trans;
  std::vector<HmmSeries> series;
  std::vector<std::vector<int>> paths;
};

/// Two conditions: a sticky chain and one that moves forward around the
/// states more often. Series are standardized per variable.
RegimeData generate_regime_data(const RegimeSpec& spec, Rng& rng);

/// Accuracy of `estimate` against `truth` under the best relabeling of the
/// estimated states (K <= 8).
double best_permutation_accuracy(const std::vector<std::vector<int>>& truth,
                                 const std::vector<std::vector<int>>& estimate, int states);

/// Area under the ROC curve; ties count one half.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

std::string to_string(ManifoldKind kind);
std::string to_string(TruthKind kind);

nlohmann::json to_json(const RecoveryConfig& config);

}  // namespace bstree
