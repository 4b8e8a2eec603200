#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bstree/edge_weights.hpp"
#include "bstree/graph_core.hpp"
#include "bstree/rng.hpp"

namespace bstree {

enum class ScanKind { full, random };

struct ChainConfig {
  int iterations = 1000;
  int burn_in = 0;
  std::uint64_t seed = 1;
  ScanKind scan = ScanKind::full;
  /// Edges updated per sweep under random scan; 0 selects ceil((p-1)/4).
  int random_scan_edges = 0;
  /// Half-width of the tau random walk; 0 selects half the initial tau.
  double delta = 0.0;
  /// Sweeps during which delta adapts; negative means "the burn-in".
  int adapt_window = -1;
  double target_accept = 0.3;
  /// Keep every thin-th post-burn-in draw.
  int thin = 1;
  /// Hold tau at its initial value (plug-in mode).
  bool fix_tau = false;
  /// Initial tau; unset means mu_tau.
  std::optional<double> tau_init;

  void validate(int p) const;
};

/// Everything the chain conditions on: distances, shrinkage shape, tau prior
/// mean and the tree prior.
struct SamplerModel {
  PairwiseDistances distances;
  double alpha = 5.0;
  double mu_tau = 1.0;
  TreePrior prior = UniformPrior{};

  int p() const { return static_cast<int>(distances.dist.rows()); }
};

SamplerModel make_sampler_model(const DataMatrix& data, double alpha, TreePrior prior = UniformPrior{});

struct PosteriorDraw {
  SpanningTree tree;
  double tau = 0.0;
  std::optional<Eigen::VectorXd> v;
  double log_post = 0.0;
};

/// Mutable chain state: the tree with its cached Gram inverse, the signed
/// random-walk variable behind tau, degree weights and the current q.
struct ChainState {
  IncidenceMatrix incidence;
  double tau_tilde = 1.0;
  std::optional<Eigen::VectorXd> v;
  /// log eta without the likelihood term; refreshed when v changes.
  Eigen::MatrixXd log_prior_weights;
  /// log z(eta) for the current prior weights.
  double log_prior_normalizer = 0.0;
  LogWeightMatrix weights;
  int drift_recoveries = 0;

  double tau() const { return tau_tilde < 0.0 ? -tau_tilde : tau_tilde; }
};

/// Starts at the mode tree for the given tau. Under the degree prior v starts
/// at the prior's v (uniform v gives eta_jk = 1/p^2).
ChainState initial_state(const SamplerModel& model, double tau);

/// Rebuilds q from the current tau and prior weights.
void reassemble_weights(ChainState& state, const SamplerModel& model);

/// One cut-and-reconnect update of edge s.
void update_edge(ChainState& state, int s, Rng& rng);

/// Cut-and-reconnect over the given edge indices, in order.
void update_tree_sweep(ChainState& state, const std::vector<int>& order, Rng& rng);

/// Random-walk Metropolis step on tau; returns whether the proposal was accepted.
bool update_tau(ChainState& state, const SamplerModel& model, double delta, Rng& rng);

/// Conjugate draw v ~ Dir(D + alpha_dir - 1); no-op for other priors.
void update_degree_weights(ChainState& state, const SamplerModel& model, Rng& rng);

/// Unnormalized joint log posterior of (tree, tau, v) given the data.
double log_posterior(const ChainState& state, const SamplerModel& model);

struct ChainDiagnostics {
  double accept_rate_tau = 0.0;
  /// Acceptance rate over sweeps after adaptation stopped.
  double accept_rate_tau_post_adapt = 0.0;
  double final_delta = 0.0;
  /// tau after every sweep, burn-in included.
  std::vector<double> tau_trace;
  /// Node degrees after every sweep, burn-in included.
  std::vector<std::vector<int>> degree_trace;
  double ess_tau = 0.0;
  /// Per-node effective sample size of the post-burn-in degree traces.
  std::vector<double> ess_degree;
  int gram_refreshes = 0;
  int drift_recoveries = 0;
  double seconds = 0.0;
};

struct ChainResult {
  std::vector<PosteriorDraw> draws;
  ChainDiagnostics diagnostics;
};

ChainResult run_chain(const SamplerModel& model, const ChainConfig& config);

/// Independent chains on separate threads with seeds split from config.seed.
std::vector<ChainResult> run_chains(const SamplerModel& model, const ChainConfig& config,
                                    int chains);

/// Fraction of draws containing each pair.
Eigen::MatrixXd edge_frequencies(const std::vector<PosteriorDraw>& draws, int p);

/// Closed-form marginal connecting probabilities averaged over the tau (and
/// v) values of the draws, rather than evaluated at a single plug-in tau. At
/// most max_evaluations evenly spaced draws are used.
Eigen::MatrixXd tau_averaged_mcp(const std::vector<PosteriorDraw>& draws, const SamplerModel& model,
                                 int max_evaluations = 200);

/// Effective sample size from Geyer's initial positive sequence.
double effective_sample_size(const std::vector<double>& trace);

}  // namespace bstree
