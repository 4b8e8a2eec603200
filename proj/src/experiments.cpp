#include "bstree/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

#include "bstree/edge_weights.hpp"
#include "bstree/mode.hpp"
#include "bstree/tree_distribution.hpp"

namespace bstree {

namespace {

std::vector<int> bfs_parents(const SpanningTree& tree, int root, std::vector<int>& order) {
  const int p = tree.node_count();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(p));
  for (const auto& e : tree.edges()) {
    adj[e.j].push_back(e.k);
    adj[e.k].push_back(e.j);
  }
  std::vector<int> parent(static_cast<std::size_t>(p), -1);
  order.assign(1, root);
  parent[root] = root;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (int c : adj[order[i]]) {
      if (parent[c] < 0) {
        parent[c] = order[i];
        order.push_back(c);
      }
    }
  }
  return parent;
}

std::vector<Edge> edges_above(const Eigen::MatrixXd& m, double cutoff) {
  std::vector<Edge> out;
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    for (Eigen::Index k = j + 1; k < m.cols(); ++k) {
      if (m(j, k) >= cutoff) out.emplace_back(static_cast<int>(j), static_cast<int>(k));
    }
  }
  return out;
}

int sample_row(const Eigen::RowVectorXd& probs, Rng& rng) {
  const double u = uniform01(rng) * probs.sum();
  double run = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    run += probs[i];
    if (u < run) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

}  // namespace

void SparsePrecisionSpec::validate() const {
  if (p < 2) throw std::invalid_argument("need at least two variables");
  if (!(sparsity > 0.0 && sparsity < 1.0)) throw std::invalid_argument("sparsity must be in (0, 1)");
  if (!(min_magnitude > 0.0 && min_magnitude < max_magnitude)) {
    throw std::invalid_argument("magnitude range must satisfy 0 < min < max");
  }
  if (!(margin > 0.0)) throw std::invalid_argument("diagonal margin must be positive");
}

SparsePrecisionInstance generate_sparse_precision(const SparsePrecisionSpec& spec, Rng& rng) {
  spec.validate();
  const int p = spec.p;
  SparsePrecisionInstance out;
  std::uniform_real_distribution<double> magnitude(spec.min_magnitude, spec.max_magnitude);
  Eigen::MatrixXd omega;
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (spec.construction == SparseConstruction::cholesky_factor) {
    std::vector<int> label(static_cast<std::size_t>(p));
    std::iota(label.begin(), label.end(), 0);
    std::shuffle(label.begin(), label.end(), rng);
    Eigen::MatrixXd c = -Eigen::MatrixXd::Identity(p, p);
    for (int j = 1; j < p; ++j) {
      for (int k = 0; k < j; ++k) {
        if (uniform01(rng) < spec.sparsity) c(label[j], label[k]) = magnitude(rng);
      }
    }
    omega = c.transpose() * c;
    llt.compute(omega);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
      throw std::runtime_error("triangular factor construction is numerically singular at sparsity " +
                               std::to_string(spec.sparsity) + "; use diagonal_dominance");
    }
  } else {
    omega = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) {
      for (int k = j + 1; k < p; ++k) {
        if (uniform01(rng) >= spec.sparsity) continue;
        const double x = magnitude(rng) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
        omega(j, k) = x;
        omega(k, j) = x;
      }
    }
    double margin = spec.margin;
    for (;;) {
      omega.diagonal().setZero();
      const Eigen::VectorXd row_sum = omega.cwiseAbs().rowwise().sum();
      omega.diagonal() = row_sum.array() + margin;
      llt.compute(omega);
      if (llt.info() == Eigen::Success) break;
      margin *= 2.0;
    }
  }
  for (int j = 0; j < p; ++j) {
    for (int k = j + 1; k < p; ++k) {
      if (omega(j, k) != 0.0) out.graph.emplace_back(j, k);
    }
  }
  Eigen::MatrixXd sigma = llt.solve(Eigen::MatrixXd::Identity(p, p));
  sigma = 0.5 * (sigma + sigma.transpose());
  const Eigen::VectorXd sd = sigma.diagonal().cwiseSqrt();
  out.covariance = sigma.array() / (sd * sd.transpose()).array();
  out.covariance.diagonal().setOnes();
  out.precision = omega.array() * (sd * sd.transpose()).array();
  out.backbone = oracle_tree(out.covariance);
  std::set<Edge> graph(out.graph.begin(), out.graph.end());
  for (const auto& e : out.backbone.edges()) out.backbone_outside_graph += graph.count(e) ? 0 : 1;
  return out;
}

Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& covariance, int n, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("covariance is not positive-definite");
  const auto p = covariance.rows();
  Eigen::MatrixXd z(n, p);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = standard_normal(rng);
  }
  return z * llt.matrixU();
}

Eigen::MatrixXd tree_covariance(const SpanningTree& tree, int root, double edge_sd) {
  const int p = tree.node_count();
  std::vector<int> order;
  const auto parent = bfs_parents(tree, root, order);
  // Loadings on independent innovations: column 0 is the root's, column c the
  // innovation entering at node c.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (int node : order) {
    if (node == root) {
      a(node, root) = 1.0;
    } else {
      a.row(node) = a.row(parent[node]);
      a(node, node) = edge_sd;
    }
  }
  return a * a.transpose();
}

TreeInstance generate_tree_instance(int p, double edge_sd, Rng& rng) {
  if (!(edge_sd > 0.0)) throw std::invalid_argument("edge noise must be positive");
  TreeInstance out;
  out.tree = random_tree(p, rng);
  out.root = 0;
  out.edge_sd = edge_sd;
  out.covariance = tree_covariance(out.tree, out.root, edge_sd);
  return out;
}

Eigen::MatrixXd sample_tree_data(const SpanningTree& tree, int root, double edge_sd, int n, Rng& rng) {
  const int p = tree.node_count();
  std::vector<int> order;
  const auto parent = bfs_parents(tree, root, order);
  Eigen::MatrixXd y(n, p);
  for (int i = 0; i < n; ++i) {
    for (int node : order) {
      y(i, node) = node == root ? standard_normal(rng)
                                : y(i, parent[node]) + edge_sd * standard_normal(rng);
    }
  }
  return y;
}

std::vector<Edge> thresholding_baseline(const Eigen::MatrixXd& raw, double threshold) {
  const DataMatrix data = standardize(raw);
  const Eigen::MatrixXd corr = data.y.transpose() * data.y / static_cast<double>(data.n() - 1);
  return edges_above(corr.cwiseAbs(), threshold);
}

RecoveryCounts recovery_error(const std::vector<Edge>& backbone, const std::vector<Edge>& graph,
                              const std::vector<Edge>& estimate) {
  const std::set<Edge> est(estimate.begin(), estimate.end());
  const std::set<Edge> g0(graph.begin(), graph.end());
  RecoveryCounts out;
  for (const auto& e : std::set<Edge>(backbone.begin(), backbone.end())) {
    out.missed_backbone += est.count(e) ? 0 : 1;
  }
  for (const auto& e : est) out.false_edges += g0.count(e) ? 0 : 1;
  out.combined = out.missed_backbone + out.false_edges;
  out.estimated_edges = static_cast<int>(est.size());
  return out;
}

std::string RecoveryMethodSpec::label() const {
  switch (method) {
    case RecoveryMethod::mode:
      return "bayes_mode";
    case RecoveryMethod::mcp_plugin:
      return "bayes_mcp_plugin";
    case RecoveryMethod::mcmc_mcp:
      return "bayes_mcmc_mcp";
    case RecoveryMethod::threshold:
      break;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "threshold_%.2f", cutoff);
  return buf;
}

std::vector<Edge> estimate_edges(const Eigen::MatrixXd& raw, const RecoveryMethodSpec& method,
                                 double alpha, std::uint64_t seed) {
  if (method.method == RecoveryMethod::threshold) return thresholding_baseline(raw, method.cutoff);
  const DataMatrix data = standardize(raw);
  const PairwiseDistances dist = pairwise_distances(data);
  const double mu = empirical_tau_prior_mean(dist);
  const SpanningTree mode = prim_mode(assemble_log_weights(dist, {alpha, mu, mu}, UniformPrior{}));
  if (method.method == RecoveryMethod::mode) return mode.edges();
  if (method.method == RecoveryMethod::mcp_plugin) {
    const double tau = tau_hat(mode, dist, alpha);
    const auto summary =
        marginal_connecting_probabilities(assemble_log_weights(dist, {alpha, tau, mu}, UniformPrior{}));
    return edges_above(summary.mcp, method.cutoff);
  }
  SamplerModel model{dist, alpha, mu, UniformPrior{}};
  ChainConfig chain;
  chain.iterations = std::max(2, method.sweeps);
  chain.burn_in = chain.iterations / 2;
  chain.seed = seed;
  const auto result = run_chain(model, chain);
  return edges_above(edge_frequencies(result.draws, data.p()), method.cutoff);
}

RecoveryReport recovery_experiment(const RecoveryConfig& config) {
  if (config.n_grid.empty()) throw std::invalid_argument("empty sample-size grid");
  if (config.replicates < 1) throw std::invalid_argument("need at least one replicate");
  const int max_n = *std::max_element(config.n_grid.begin(), config.n_grid.end());
  if (*std::min_element(config.n_grid.begin(), config.n_grid.end()) < 2) {
    throw std::invalid_argument("sample sizes must be at least 2");
  }
  RecoveryReport report;
  for (int r = 0; r < config.replicates; ++r) {
    const std::uint64_t rep_seed = split_seed(config.seed, static_cast<std::uint64_t>(r));
    Rng rng = make_rng(rep_seed);
    std::vector<Edge> backbone;
    std::vector<Edge> graph;
    int outside = 0;
    Eigen::MatrixXd data;
    if (config.truth == TruthKind::sparse_precision) {
      const auto inst = generate_sparse_precision(config.sparse, rng);
      backbone = inst.backbone.edges();
      graph = inst.graph;
      outside = inst.backbone_outside_graph;
      data = sample_gaussian(inst.covariance, max_n, rng);
    } else {
      const auto inst = generate_tree_instance(config.tree_p, config.tree_edge_sd, rng);
      backbone = inst.tree.edges();
      graph = backbone;
      data = sample_tree_data(inst.tree, inst.root, inst.edge_sd, max_n, rng);
    }
    for (int n : config.n_grid) {
      const Eigen::MatrixXd sub = data.topRows(n);
      for (std::size_t m = 0; m < config.methods.size(); ++m) {
        RecoveryRow row;
        row.n = n;
        row.method = config.methods[m].label();
        row.replicate = r;
        row.seed = rep_seed;
        row.counts = recovery_error(backbone, graph,
                                    estimate_edges(sub, config.methods[m], config.alpha,
                                                   split_seed(rep_seed, 1 + m)));
        row.backbone_edges = static_cast<int>(backbone.size());
        row.graph_edges = static_cast<int>(graph.size());
        row.backbone_outside_graph = outside;
        report.rows.push_back(std::move(row));
      }
    }
  }

  std::map<std::pair<std::string, int>, std::vector<const RecoveryRow*>> groups;
  for (const auto& row : report.rows) groups[{row.method, row.n}].push_back(&row);
  for (const auto& [key, rows] : groups) {
    RecoverySummary s;
    s.method = key.first;
    s.n = key.second;
    const double count = static_cast<double>(rows.size());
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto* row : rows) {
      sum += row->counts.combined;
      sum_sq += static_cast<double>(row->counts.combined) * row->counts.combined;
      s.mean_missed += row->counts.missed_backbone / count;
      s.mean_false += row->counts.false_edges / count;
    }
    s.mean_combined = sum / count;
    const double var = count > 1 ? std::max(0.0, (sum_sq - count * s.mean_combined * s.mean_combined) / (count - 1)) : 0.0;
    const double half = 1.96 * std::sqrt(var / count);
    s.lower = s.mean_combined - half;
    s.upper = s.mean_combined + half;
    report.summary.push_back(s);
  }
  return report;
}

Eigen::MatrixXd generate_blobs(int points_per_blob, double spread, Rng& rng) {
  if (points_per_blob < 1) throw std::invalid_argument("need at least one point per blob");
  const double centers[3][2] = {{0.0, 0.0}, {6.0, 0.0}, {3.0, 5.0}};
  Eigen::MatrixXd pts(2, 3 * points_per_blob);
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < points_per_blob; ++i) {
      const int c = b * points_per_blob + i;
      pts(0, c) = centers[b][0] + spread * standard_normal(rng);
      pts(1, c) = centers[b][1] + spread * standard_normal(rng);
    }
  }
  return pts;
}

Eigen::MatrixXd generate_two_moons(int points, double noise, Rng& rng) {
  if (points < 4) throw std::invalid_argument("need at least four points");
  const int outer = points / 2;
  const int inner = points - outer;
  Eigen::MatrixXd pts(2, points);
  for (int i = 0; i < outer; ++i) {
    const double t = std::numbers::pi * i / (outer - 1);
    pts(0, i) = std::cos(t);
    pts(1, i) = std::sin(t);
  }
  for (int i = 0; i < inner; ++i) {
    const double t = std::numbers::pi * i / (inner - 1);
    pts(0, outer + i) = 1.0 - std::cos(t);
    pts(1, outer + i) = 0.5 - std::sin(t);
  }
  for (int c = 0; c < points; ++c) {
    pts(0, c) += noise * standard_normal(rng);
    pts(1, c) += noise * standard_normal(rng);
  }
  return pts;
}

ManifoldResult manifold_uq_experiment(const ManifoldConfig& config) {
  Rng rng = make_rng(config.seed, 0);
  ManifoldResult out;
  out.points = config.kind == ManifoldKind::blobs
                   ? generate_blobs(std::max(1, config.points / 3), config.spread, rng)
                   : generate_two_moons(config.points, config.noise, rng);
  const DataMatrix data = unstandardized(out.points);
  const SamplerModel model = make_sampler_model(data, config.alpha);
  out.mode_tree = prim_mode(assemble_log_weights(model.distances,
                                                 {config.alpha, model.mu_tau, model.mu_tau},
                                                 UniformPrior{}));
  ChainConfig chain = config.chain;
  chain.seed = split_seed(config.seed, 1);
  out.chain = run_chain(model, chain);
  out.mcp = edge_frequencies(out.chain.draws, data.p());

  int above = 0;
  for (const auto& e : out.mode_tree.edges()) {
    above += out.mcp(e.j, e.k) > 0.9 ? 1 : 0;
    out.mean_mode_edge_mcp += out.mcp(e.j, e.k);
  }
  out.mode_edges_above_90 = static_cast<double>(above) / out.mode_tree.edges().size();
  out.mean_mode_edge_mcp /= static_cast<double>(out.mode_tree.edges().size());
  int connected = 0;
  int below = 0;
  for (int j = 0; j < data.p(); ++j) {
    for (int k = j + 1; k < data.p(); ++k) {
      if (out.mcp(j, k) > 0.0) {
        ++connected;
        below += out.mcp(j, k) < 0.5 ? 1 : 0;
      }
    }
  }
  out.connected_pairs_below_50 = connected ? static_cast<double>(below) / connected : 0.0;
  return out;
}

RegimeData generate_regime_data(const RegimeSpec& spec, Rng& rng) {
  const int k = spec.states;
  if (k < 1 || spec.p < 2 || spec.length < 1 || spec.series_per_condition < 1) {
    throw std::invalid_argument("invalid regime specification");
  }
  RegimeData out;
  while (static_cast<int>(out.trees.size()) < k) {
    SpanningTree t = random_tree(spec.p, rng);
    bool fresh = true;
    for (const auto& u : out.trees) fresh = fresh && !u.same_edges(t);
    if (fresh) out.trees.push_back(std::move(t));
  }
  Eigen::MatrixXd sticky = Eigen::MatrixXd::Constant(k, k, k > 1 ? 0.1 / (k - 1) : 0.0);
  sticky.diagonal().setConstant(k > 1 ? 0.9 : 1.0);
  Eigen::MatrixXd moving = Eigen::MatrixXd::Zero(k, k);
  for (int r = 0; r < k; ++r) {
    if (k == 1) {
      moving(r, r) = 1.0;
    } else if (k == 2) {
      moving(r, r) = 0.7;
      moving(r, 1 - r) = 0.3;
    } else {
      for (int c = 0; c < k; ++c) moving(r, c) = 0.05 / (k - 2);
      moving(r, r) = 0.7;
      moving(r, (r + 1) % k) = 0.25;
    }
  }
  out.trans = {sticky, moving};

  for (int g = 0; g < 2; ++g) {
    for (int i = 0; i < spec.series_per_condition; ++i) {
      std::vector<int> z(static_cast<std::size_t>(spec.length));
      z[0] = std::uniform_int_distribution<int>(0, k - 1)(rng);
      for (int t = 1; t < spec.length; ++t) z[t] = sample_row(out.trans[g].row(z[t - 1]), rng);
      Eigen::MatrixXd raw(spec.length, spec.p);
      for (int t = 0; t < spec.length; ++t) {
        raw.row(t) = sample_tree_data(out.trees[z[t]], 0, spec.edge_sd, 1, rng);
      }
      out.series.push_back(standardized_series(raw, g, "g" + std::to_string(g) + "_s" + std::to_string(i),
                                               "s" + std::to_string(i)));
      out.paths.push_back(std::move(z));
    }
  }
  return out;
}

double best_permutation_accuracy(const std::vector<std::vector<int>>& truth,
                                 const std::vector<std::vector<int>>& estimate, int states) {
  if (states < 1 || states > 8) throw std::invalid_argument("relabeling search supports 1..8 states");
  if (truth.size() != estimate.size()) throw std::invalid_argument("sequence counts differ");
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(states, states);
  long total = 0;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    if (truth[s].size() != estimate[s].size()) throw std::invalid_argument("sequence lengths differ");
    for (std::size_t t = 0; t < truth[s].size(); ++t) {
      ++confusion(estimate[s][t], truth[s][t]);
      ++total;
    }
  }
  std::vector<int> perm(static_cast<std::size_t>(states));
  std::iota(perm.begin(), perm.end(), 0);
  long best = 0;
  do {
    long hits = 0;
    for (int e = 0; e < states; ++e) hits += confusion(e, perm[e]);
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total ? static_cast<double>(best) / total : 1.0;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      ++pairs;
      wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
    }
  }
  if (pairs == 0) throw std::invalid_argument("AUC needs both classes");
  return wins / pairs;
}

std::string to_string(ManifoldKind kind) {
  return kind == ManifoldKind::blobs ? "blobs" : "two_moons";
}

std::string to_string(TruthKind kind) {
  return kind == TruthKind::sparse_precision ? "sparse_precision" : "oracle_tree";
}

nlohmann::json to_json(const RecoveryConfig& config) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : config.methods) {
    methods.push_back({{"label", m.label()}, {"cutoff", m.cutoff}, {"sweeps", m.sweeps}});
  }
  return {{"truth", to_string(config.truth)},
          {"p", config.truth == TruthKind::sparse_precision ? config.sparse.p : config.tree_p},
          {"sparsity", config.sparse.sparsity},
          {"magnitude_range", {config.sparse.min_magnitude, config.sparse.max_magnitude}},
          {"diagonal_margin", config.sparse.margin},
          {"tree_edge_sd", config.tree_edge_sd},
          {"n_grid", config.n_grid},
          {"replicates", config.replicates},
          {"seed", config.seed},
          {"alpha", config.alpha},
          {"methods", methods}};
}

}  // namespace bstree
