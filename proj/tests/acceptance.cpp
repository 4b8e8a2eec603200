// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "bstree/edge_weights.hpp"
#include "bstree/experiments.hpp"
#include "bstree/graph_core.hpp"
#include "bstree/mode.hpp"
#include "bstree/sampler.hpp"
#include "bstree/tree_distribution.hpp"
#include "bstree/tree_hmm.hpp"
#include "oracles.hpp"

using namespace bstree;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

SpanningTree to_tree(int p, const oracle::EdgeList& edges) {
  std::vector<Edge> out;
  for (const auto& [j, k] : edges) out.emplace_back(j, k);
  return SpanningTree::from_edges(p, out);
}

oracle::EdgeList to_list(const SpanningTree& t) {
  oracle::EdgeList out;
  for (const auto& e : t.sorted_edges()) out.emplace_back(e.j, e.k);
  return out;
}

Outcome partition_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int p = 3; p <= 6; ++p) {
    for (int rep = 0; rep < 50; ++rep) {
      const Eigen::MatrixXd q = oracle::random_q(p, -3.0, 3.0, rng);
      worst = std::max(worst, rel(log_partition(q), oracle::enumerate(q).log_z));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 10.0, fmt("max rel err %.3g, %.2f s", worst, secs)};
}

Outcome cayley() {
  double worst = 0.0;
  for (int p = 3; p <= 8; ++p) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p, p);
    q.diagonal().setConstant(oracle::kNegInf);
    worst = std::max(worst, rel(log_partition(q), (p - 2) * std::log(static_cast<double>(p))));
  }
  return {worst <= 1e-9, fmt("max rel err %.3g", worst)};
}

Outcome mcp_exactness() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (int p = 3; p <= 6; ++p) {
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::MatrixXd q = oracle::random_q(p, -3.0, 3.0, rng);
      const auto s = marginal_connecting_probabilities(q);
      worst = std::max(worst, (s.mcp - oracle::enumerate(q).mcp).cwiseAbs().maxCoeff());
    }
  }
  double sum_err = 0.0;
  for (int p : {10, 50, 100, 200, 500}) {
    const auto s = marginal_connecting_probabilities(oracle::random_q(p, -3.0, 3.0, rng));
    sum_err = std::max(sum_err, std::abs(s.mcp.sum() / 2.0 - (p - 1)));
  }
  return {worst <= 1e-10 && sum_err <= 1e-8, fmt("max abs err %.3g, max |sum - (p-1)| %.3g", worst, sum_err)};
}

bool cuts_match(int p, const oracle::EdgeList& edges) {
  const auto tree = to_tree(p, edges);
  IncidenceMatrix b(tree);
  for (int s = 0; s < p - 1; ++s) {
    const Edge e = tree.edge(s);
    auto cut = b.cut_partition(s);
    std::sort(cut.first.begin(), cut.first.end());
    std::sort(cut.second.begin(), cut.second.end());
    if (cut.first != oracle::bfs_side(p, edges, {e.j, e.k}, e.j)) return false;
    if (cut.second != oracle::bfs_side(p, edges, {e.j, e.k}, e.k)) return false;
  }
  return true;
}

Outcome projection_cuts() {
  std::mt19937_64 rng(103);
  int bad = 0;
  int trees = 0;
  for (int rep = 0; rep < 100; ++rep, ++trees) bad += !cuts_match(50, oracle::random_tree(50, rng));
  for (int p = 2; p <= 6; ++p) {
    oracle::for_each_tree(p, [&](const oracle::EdgeList& t) {
      bad += !cuts_match(p, t);
      ++trees;
    });
  }
  return {bad == 0, fmt("%d of %d trees with a mismatched cut", bad, trees)};
}

Outcome inverse_updates() {
  std::mt19937_64 rng(104);
  const int p = 50;
  IncidenceMatrix b(to_tree(p, oracle::random_tree(p, rng)));
  double worst = 0.0;
  for (int it = 0; it < 10 * p; ++it) {
    const int s = std::uniform_int_distribution<int>(0, p - 2)(rng);
    const auto cut = b.cut_partition(s);
    const int a = cut.first[std::uniform_int_distribution<std::size_t>(0, cut.first.size() - 1)(rng)];
    const int c = cut.second[std::uniform_int_distribution<std::size_t>(0, cut.second.size() - 1)(rng)];
    b = swap_edge_update(b, s, Edge(a, c));
    worst = std::max(worst, (b.gram_inverse() - oracle::fresh_gram_inverse(b.matrix())).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8, fmt("max abs deviation %.3g over %d swaps", worst, 10 * p)};
}

Outcome mode_optimality() {
  std::mt19937_64 rng(105);
  int brute_bad = 0;
  int kruskal_bad = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int p = 3 + rep % 5;
    const Eigen::MatrixXd q = oracle::random_q(p, -3.0, 3.0, rng);
    const auto mode = to_list(prim_mode(q));
    brute_bad += mode != oracle::brute_force_best(q);
    kruskal_bad += mode != oracle::kruskal_max(q);
  }
  for (int p : {20, 100, 300}) {
    const Eigen::MatrixXd q = oracle::random_q(p, -3.0, 3.0, rng);
    kruskal_bad += to_list(prim_mode(q)) != oracle::kruskal_max(q);
  }
  return {brute_bad == 0 && kruskal_bad == 0,
          fmt("%d brute-force mismatches, %d Kruskal mismatches", brute_bad, kruskal_bad)};
}

Outcome sampler_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(106);
  Eigen::MatrixXd raw(20, 5);
  for (int i = 0; i < raw.size(); ++i) raw.data()[i] = standard_normal(rng);
  const auto data = standardize(raw);
  const auto model = make_sampler_model(data, 5.0);
  const auto pd = pairwise_distances(data);
  const double tau = tau_hat(minimum_spanning_tree(pd.dist), pd, 5.0);
  ChainConfig cfg;
  cfg.iterations = 200000;
  cfg.fix_tau = true;
  cfg.tau_init = tau;
  cfg.seed = 107;
  const auto chain = run_chain(model, cfg);
  const auto q = assemble_log_weights(pd, {5.0, tau, model.mu_tau}, UniformPrior{});
  const auto exact = oracle::enumerate(q.q);
  std::map<oracle::EdgeList, double> freq;
  for (const auto& d : chain.draws) freq[to_list(d.tree)] += 1.0 / static_cast<double>(chain.draws.size());
  double tv = 0.0;
  for (std::size_t i = 0; i < exact.trees.size(); ++i) {
    const auto it = freq.find(oracle::sorted(exact.trees[i]));
    tv += std::abs(std::exp(exact.log_weight[i] - exact.log_z) - (it == freq.end() ? 0.0 : it->second));
  }
  tv *= 0.5;
  const double secs = seconds_since(t0);
  return {tv <= 0.02 && secs < 300.0, fmt("TV %.4f at tau %.4f, %.1f s", tv, tau, secs)};
}

Outcome gdp_marginal() {
  double worst = 0.0;
  for (double d : {0.0, 0.1, 0.5, 1.0, 3.0}) {
    for (double tau : {0.1, 0.25, 0.5, 1.0, 2.0}) {
      for (int n : {1, 2, 5}) {
        const double closed = std::exp(gdp_log_marginal(d, n, 5.0, tau));
        worst = std::max(worst, rel(closed, oracle::gdp_density_by_quadrature(d, n, 5.0, tau)));
      }
    }
  }
  return {worst <= 1e-6, fmt("max rel err %.3g over 75 grid points", worst)};
}

Outcome degree_normalizer() {
  std::mt19937_64 rng(108);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double worst = 0.0;
  for (int p = 3; p <= 6; ++p) {
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd v(p);
      for (auto& x : v) x = u(rng);
      v /= v.sum();
      std::vector<double> terms;
      oracle::for_each_tree(p, [&](const oracle::EdgeList& t) {
        double s = 0.0;
        for (const auto& [j, k] : t) s += std::log(v[j]) + std::log(v[k]);
        terms.push_back(s);
      });
      worst = std::max(worst, rel(degree_prior_log_normalizer(v, p), oracle::log_sum_exp(terms)));
    }
  }
  return {worst <= 1e-10, fmt("max rel err %.3g", worst)};
}

Outcome oracle_tree_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  RecoveryConfig cfg;
  cfg.truth = TruthKind::oracle_tree;
  cfg.tree_p = 200;
  cfg.n_grid = {50};
  cfg.replicates = 10;
  cfg.seed = 109;
  cfg.methods = {RecoveryMethodSpec{RecoveryMethod::mode, 0.5, 0}};
  const auto report = recovery_experiment(cfg);
  int ok = 0;
  double worst = 0.0;
  for (const auto& row : report.rows) {
    const double frac = static_cast<double>(row.counts.missed_backbone) / row.backbone_edges;
    worst = std::max(worst, frac);
    ok += frac <= 0.05;
  }
  return {ok == 10, fmt("%d/10 replicates within 5%%, worst %.3f, %.1f s", ok, worst, seconds_since(t0))};
}

Outcome backbone_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  RecoveryConfig sparse;
  sparse.truth = TruthKind::sparse_precision;
  sparse.sparse.sparsity = 0.03;
  sparse.n_grid = {100};
  sparse.replicates = 10;
  sparse.seed = 110;
  sparse.methods = {RecoveryMethodSpec{RecoveryMethod::mode, 0.5, 0}};
  const auto a = recovery_experiment(sparse);
  const double missed = a.summary.front().mean_missed / 199.0;

  RecoveryConfig dense = sparse;
  dense.sparse.sparsity = 0.2;
  dense.n_grid = {25, 50, 100, 200, 400};
  dense.seed = 111;

  const auto b = recovery_experiment(dense);
  std::vector<double> errs;
  for (const auto& s : b.summary) errs.push_back(s.mean_combined);
  bool monotone = true;
  for (std::size_t i = 1; i < errs.size(); ++i) monotone = monotone && errs[i] < errs[i - 1];
  std::string grid;
  for (double e : errs) grid += fmt(" %.1f", e);
  return {missed <= 0.05 && monotone,
          fmt("sparse mean missed %.3f of p-1; dense combined error over n grid:%s (%s), %.1f s", missed,
              grid.c_str(), monotone ? "decreasing" : "not decreasing", seconds_since(t0))};
}

Outcome exchangeability() {
  Rng rng = make_rng(112);
  const int p = 12;
  Eigen::MatrixXd raw(30, p);
  for (int i = 0; i < raw.size(); ++i) raw.data()[i] = standard_normal(rng);
  for (int k = 1; k < p; ++k) raw.col(k) += 0.7 * raw.col(k - 1);
  std::vector<int> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd moved(30, p);
  for (int k = 0; k < p; ++k) moved.col(k) = raw.col(perm[k]);

  auto fit = [](const Eigen::MatrixXd& y) {
    const auto pd = pairwise_distances(standardize(y));
    const auto mode = minimum_spanning_tree(pd.dist);
    const double tau = tau_hat(mode, pd, 5.0);
    const auto q = assemble_log_weights(pd, {5.0, tau, 1.0}, UniformPrior{});
    return std::make_pair(prim_mode(q.q), marginal_connecting_probabilities(q.q).mcp);
  };
  const auto [tree_a, mcp_a] = fit(raw);
  const auto [tree_b, mcp_b] = fit(moved);
  // Column k of `moved` is column perm[k] of `raw`.
  const bool tree_ok = tree_b.relabeled(perm).same_edges(tree_a);
  double worst = 0.0;
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < p; ++k) worst = std::max(worst, std::abs(mcp_b(j, k) - mcp_a(perm[j], perm[k])));
  }
  return {tree_ok && worst <= 1e-10, fmt("mode tree %s, max mcp deviation %.3g", tree_ok ? "permuted" : "differs", worst)};
}

Outcome hmm() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 seed_rng(113);
  double forward_err = 0.0;
  for (int k = 1; k <= 3; ++k) {
    for (int t = 1; t <= 8; ++t) {
      std::uniform_real_distribution<double> u(-6.0, 2.0);
      Eigen::MatrixXd e(t, k);
      for (int i = 0; i < e.size(); ++i) e.data()[i] = u(seed_rng);
      Eigen::MatrixXd trans(k, k);
      for (int i = 0; i < trans.size(); ++i) trans.data()[i] = 0.1 + std::abs(u(seed_rng));
      for (int r = 0; r < k; ++r) trans.row(r) /= trans.row(r).sum();
      const Eigen::VectorXd q0 = Eigen::VectorXd::Constant(k, 1.0 / k);
      forward_err = std::max(forward_err, rel(forward_log_likelihood(e, q0, trans), oracle::hmm_path_sum(e, q0, trans)));
    }
  }

  Rng rng = make_rng(114);
  RegimeSpec spec;
  spec.states = 3;
  spec.p = 20;
  spec.series_per_condition = 20;
  const auto data = generate_regime_data(spec, rng);
  std::vector<HmmSeries> train;
  std::vector<HmmSeries> test;
  std::vector<std::vector<int>> train_paths;
  std::vector<int> seen(2, 0);
  for (std::size_t i = 0; i < data.series.size(); ++i) {
    const int g = data.series[i].condition;
    if (seen[g]++ < spec.series_per_condition / 2) {
      train.push_back(data.series[i]);
      train_paths.push_back(data.paths[i]);
    } else {
      test.push_back(data.series[i]);
    }
  }
  HmmConfig cfg;
  cfg.states = 3;
  cfg.iterations = 1000;
  cfg.burn_in = 500;
  cfg.seed = 115;
  const auto fit = fit_tree_hmm(train, cfg);
  const double accuracy = best_permutation_accuracy(train_paths, fit.modal_states, 3);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : test) {
    scores.push_back(classify_condition(s, fit.model, 0, 1));
    labels.push_back(s.condition == 0 ? 1 : 0);
  }
  const double auc = roc_auc(scores, labels);
  return {forward_err <= 1e-10 && accuracy >= 0.9 && auc >= 0.85,
          fmt("%zu train / %zu test series, state accuracy %.3f, AUC %.3f, forward rel err %.3g, %.1f s",
              train.size(), test.size(), accuracy, auc, forward_err, seconds_since(t0))};
}

Outcome performance() {
  Rng rng = make_rng(116);
  const auto inst = generate_tree_instance(200, 1.0, rng);
  const Eigen::MatrixXd raw = sample_tree_data(inst.tree, inst.root, 1.0, 50, rng);
  const auto model = make_sampler_model(standardize(raw), 5.0);
  ChainConfig cfg;
  cfg.iterations = 1000;
  cfg.burn_in = 500;
  cfg.seed = 117;
  const auto t0 = std::chrono::steady_clock::now();
  const auto chain = run_chain(model, cfg);
  const double secs = seconds_since(t0);
  return {secs < 600.0 && chain.draws.size() == 500, fmt("1000 full sweeps at p = 200 in %.1f s", secs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"partition_function_exactness", partition_exactness},
      {"cayley_count", cayley},
      {"mcp_exactness", mcp_exactness},
      {"projection_cuts_equal_traversal", projection_cuts},
      {"gram_inverse_updates", inverse_updates},
      {"mode_optimality", mode_optimality},
      {"sampler_exactness", sampler_exactness},
      {"gdp_marginal", gdp_marginal},
      {"degree_prior_normalizer", degree_normalizer},
      {"oracle_tree_recovery", oracle_tree_recovery},
      {"backbone_recovery", backbone_recovery},
      {"exchangeability", exchangeability},
      {"tree_hmm", hmm},
      {"performance", performance},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome r;
    try {
      r = run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
