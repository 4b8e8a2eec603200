#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bstree/graph_core.hpp"

namespace bstree {

/// n x p observation matrix; column k holds the n samples of variable k.
struct DataMatrix {
  Eigen::MatrixXd y;
  std::vector<std::string> names;
  bool standardized = false;

  int n() const { return static_cast<int>(y.rows()); }
  int p() const { return static_cast<int>(y.cols()); }
};

/// Centers every column and scales it to unit sample standard deviation
/// (divisor n-1). Throws std::invalid_argument naming any constant column.
DataMatrix standardize(const Eigen::MatrixXd& raw, std::vector<std::string> names = {});

/// Wraps raw values without rescaling, e.g. point coordinates whose geometry
/// must be kept.
DataMatrix unstandardized(const Eigen::MatrixXd& raw, std::vector<std::string> names = {});

struct PairwiseDistances {
  /// dist(j,k) = ||y_j - y_k||_2
  Eigen::MatrixXd dist;
  /// w_n(j,k) = S(j,j) + S(k,k) - 2 S(j,k) with S = Y^T Y / n
  Eigen::MatrixXd w_n;
  int n = 0;
};

PairwiseDistances pairwise_distances(const DataMatrix& data);

struct ShrinkageParams {
  double alpha = 5.0;
  double tau = 1.0;
  double mu_tau = 1.0;

  void validate() const;
};

/// Tree prior: uniform, edge-based (eta), or degree-based (eta_jk = v_j v_k).
struct UniformPrior {};
struct EdgePrior {
  Eigen::MatrixXd eta;
};
struct DegreePrior {
  Eigen::VectorXd v;
  double alpha_dir = 1.0;
};
using TreePrior = std::variant<UniformPrior, EdgePrior, DegreePrior>;

void validate_prior(const TreePrior& prior, int p);

/// Element-wise log(eta); -inf for blocked pairs and on the diagonal.
Eigen::MatrixXd log_eta(const TreePrior& prior, int p);

/// Symmetric table of log edge scores. `q` holds the edge-varying part
/// -(alpha+n) log(1 + d/tau) + log eta; `edge_constant` is the per-edge term
/// log C(n) + log Gamma(alpha+n) - log Gamma(alpha) - n log tau, which
/// cancels in tree posterior ratios but is needed for absolute densities.
struct LogWeightMatrix {
  Eigen::MatrixXd q;
  double edge_constant = 0.0;

  int p() const { return static_cast<int>(q.rows()); }
};

/// Log of the multivariate generalized double Pareto marginal density of an
/// n-dimensional difference vector with Euclidean norm d.
double gdp_log_marginal(double d, int n, double alpha, double tau);

/// Per-edge constant part of gdp_log_marginal (everything except the
/// -(alpha+n) log(1 + d/tau) term).
double gdp_log_constant(int n, double alpha, double tau);

/// min_{j != k} ||y_j - y_k|| / n; throws if two columns coincide.
double empirical_tau_prior_mean(const DataMatrix& data);
double empirical_tau_prior_mean(const PairwiseDistances& distances);

LogWeightMatrix assemble_log_weights(const PairwiseDistances& distances,
                                     const ShrinkageParams& params, const TreePrior& prior);
LogWeightMatrix assemble_log_weights(const DataMatrix& data, const ShrinkageParams& params,
                                     const TreePrior& prior);

/// log z(eta) for eta_jk = v_j v_k: (p-2) log(sum v) + sum log v.
double degree_prior_log_normalizer(const Eigen::VectorXd& v, int p);

}  // namespace bstree
