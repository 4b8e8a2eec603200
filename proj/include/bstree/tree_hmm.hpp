#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bstree/graph_core.hpp"
#include "bstree/rng.hpp"

namespace bstree {

/// One multivariate time series: rows are time points, columns variables.
struct HmmSeries {
  Eigen::MatrixXd y;
  /// Index of the condition (task load) the series was recorded under.
  int condition = 0;
  std::string name;
  std::string subject;

  int length() const { return static_cast<int>(y.rows()); }
  int p() const { return static_cast<int>(y.cols()); }
};

/// Standardizes every variable across the series' own time points.
HmmSeries standardized_series(const Eigen::MatrixXd& raw, int condition, std::string name = {},
                              std::string subject = {});

/// Hidden Markov model whose latent states are spanning trees shared across
/// conditions; only the transition matrix depends on the condition.
struct TreeHmmModel {
  std::vector<SpanningTree> trees;
  Eigen::VectorXd q0;
  std::vector<Eigen::MatrixXd> trans;
  double tau = 1.0;
  double alpha = 5.0;
  double dir_conc = 0.5;

  int states() const { return static_cast<int>(trees.size()); }
  int conditions() const { return static_cast<int>(trans.size()); }
  void validate() const;
};

/// Sum over tree edges of the n = 1 GDP log-density of |y_j - y_k|.
double emission_log_density(const Eigen::VectorXd& y, const SpanningTree& tree, double tau,
                            double alpha);

/// T x K table of emission log-densities of a series under every state tree.
Eigen::MatrixXd emission_log_matrix(const Eigen::MatrixXd& y, const std::vector<SpanningTree>& trees,
                                    double tau, double alpha);

/// log p(y) by the forward algorithm, log domain with per-step normalization.
double forward_log_likelihood(const Eigen::MatrixXd& log_emission, const Eigen::VectorXd& q0,
                              const Eigen::MatrixXd& trans);

/// Exact draw of the state path from its conditional posterior by forward
/// filtering and backward sampling. States are 0-based.
std::vector<int> ffbs_states(const Eigen::MatrixXd& log_emission, const Eigen::VectorXd& q0,
                             const Eigen::MatrixXd& trans, Rng& rng);
std::vector<int> ffbs_states(const HmmSeries& series, const TreeHmmModel& model, int condition,
                             Rng& rng);

/// One pass of the conjugate and Metropolis updates given state paths:
/// q0 and transition rows from Dirichlet(counts + dir_conc), each occupied
/// state's tree by a cut-and-reconnect sweep on its assigned time points, and
/// tau by random-walk Metropolis pooling all assignments. Returns whether the
/// tau proposal was accepted.
bool update_hmm_params(TreeHmmModel& model, const std::vector<HmmSeries>& series,
                       const std::vector<std::vector<int>>& paths, double mu_tau, double delta,
                       Rng& rng);

/// Probability that the series came from condition g1 rather than g2, with
/// equal prior weight and exact forward-algorithm marginals.
double classify_condition(const HmmSeries& series, const TreeHmmModel& model, int g1 = 0,
                          int g2 = 1);

/// log q for one state: sum over the given time points of
/// -(alpha + 1) log(1 + |y_tj - y_tk| / tau).
Eigen::MatrixXd state_log_weights(const std::vector<HmmSeries>& series,
                                  const std::vector<std::pair<int, int>>& points, double tau,
                                  double alpha);

struct HmmConfig {
  int states = 20;
  int iterations = 20000;
  int burn_in = 10000;
  std::uint64_t seed = 1;
  double alpha = 5.0;
  double dir_conc = 0.5;
  /// Window length for the initial dictionary of mode trees.
  int init_window = 10;

  void validate() const;
};

struct HmmFit {
  /// Trees at the mode given modal assignments; q0, trans and tau at their
  /// posterior means.
  TreeHmmModel model;
  /// Per series: modal state at every time point.
  std::vector<std::vector<int>> modal_states;
  /// Per series: T x K posterior state frequencies.
  std::vector<Eigen::MatrixXd> state_probabilities;
  /// Per iteration: number of time points assigned to each state.
  std::vector<std::vector<int>> occupancy_trace;
  std::vector<double> tau_trace;
  double mu_tau = 0.0;
  double accept_rate_tau = 0.0;
};

/// Blocked Gibbs sampler for the tree HMM. Conditions are the distinct
/// `condition` values, which must be 0..G-1.
HmmFit fit_tree_hmm(const std::vector<HmmSeries>& series, const HmmConfig& config);

}  // namespace bstree
