#include "bstree/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "bstree/mode.hpp"
#include "bstree/tree_distribution.hpp"

namespace bstree {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

CutPartition cut_with_recovery(ChainState& state, int s) {
  try {
    return state.incidence.cut_partition(s);
  } catch (const NumericalDriftError&) {
    state.incidence.refresh();
    ++state.drift_recoveries;
    return state.incidence.cut_partition(s);
  }
}

// The replacement always crosses the cut, so a rejection can only come from a
// drifted Gram inverse.
void swap_with_recovery(ChainState& state, int s, const Edge& e) {
  try {
    state.incidence.swap_edge(s, e);
  } catch (const InvalidTreeError&) {
    state.incidence.refresh();
    ++state.drift_recoveries;
    state.incidence.swap_edge(s, e);
  } catch (const NumericalDriftError&) {
    state.incidence.refresh();
    ++state.drift_recoveries;
    state.incidence.swap_edge(s, e);
  }
}

double tree_log_likelihood_in_tau(const ChainState& state, const SamplerModel& model, double tau) {
  const double n = model.distances.n;
  const double power = model.alpha + n;
  double total = 0.0;
  for (const auto& e : state.incidence.edges()) {
    total += -n * std::log(tau) - power * std::log1p(model.distances.dist(e.j, e.k) / tau);
  }
  return total - tau / model.mu_tau;
}

double dirichlet_log_density(const Eigen::VectorXd& v, double conc) {
  const double p = static_cast<double>(v.size());
  return std::lgamma(p * conc) - p * std::lgamma(conc) + (conc - 1.0) * v.array().log().sum();
}

std::vector<int> random_scan_order(int edges, int m, Rng& rng) {
  std::vector<int> all(static_cast<std::size_t>(edges));
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<int> pick(i, edges - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(static_cast<std::size_t>(m));
  return all;
}

}  // namespace

void ChainConfig::validate(int p) const {
  if (iterations < 1) throw std::invalid_argument("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) {
    throw std::invalid_argument("burn-in must be in [0, iterations)");
  }
  if (scan == ScanKind::random && (random_scan_edges < 0 || random_scan_edges > p - 1)) {
    throw std::invalid_argument("random scan size must be in (0, p-1]");
  }
  if (delta < 0.0) throw std::invalid_argument("tau step must be non-negative");
  if (thin < 1) throw std::invalid_argument("thinning must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw std::invalid_argument("target acceptance must be in (0, 1)");
  }
  if (tau_init && !(*tau_init > 0.0)) throw std::invalid_argument("initial tau must be positive");
}

SamplerModel make_sampler_model(const DataMatrix& data, double alpha, TreePrior prior) {
  SamplerModel model;
  model.distances = pairwise_distances(data);
  model.alpha = alpha;
  model.mu_tau = empirical_tau_prior_mean(model.distances);
  model.prior = std::move(prior);
  validate_prior(model.prior, data.p());
  return model;
}

void reassemble_weights(ChainState& state, const SamplerModel& model) {
  const int p = model.p();
  const double tau = state.tau();
  const double power = model.alpha + model.distances.n;
  auto& q = state.weights.q;
  q.resize(p, p);
  for (int j = 0; j < p; ++j) {
    q(j, j) = kNegInf;
    for (int k = j + 1; k < p; ++k) {
      const double lp = state.log_prior_weights(j, k);
      const double v = lp == kNegInf ? kNegInf
                                     : lp - power * std::log1p(model.distances.dist(j, k) / tau);
      q(j, k) = v;
      q(k, j) = v;
    }
  }
  state.weights.edge_constant = gdp_log_constant(model.distances.n, model.alpha, tau);
}

ChainState initial_state(const SamplerModel& model, double tau) {
  const int p = model.p();
  if (p < 2) throw std::invalid_argument("sampler needs at least two variables");
  if (!(tau > 0.0)) throw std::invalid_argument("initial tau must be positive");
  ShrinkageParams params{model.alpha, tau, model.mu_tau};
  params.validate();
  validate_prior(model.prior, p);

  std::optional<Eigen::VectorXd> v;
  double log_norm = 0.0;
  if (const auto* d = std::get_if<DegreePrior>(&model.prior)) {
    v = d->v;
    log_norm = degree_prior_log_normalizer(d->v, p);
  } else if (std::holds_alternative<EdgePrior>(model.prior)) {
    log_norm = log_partition(log_eta(model.prior, p));
  } else {
    log_norm = (p - 2) * std::log(static_cast<double>(p));
  }
  const auto weights = assemble_log_weights(model.distances, params, model.prior);
  ChainState state{IncidenceMatrix(prim_mode(weights)), tau, v, log_eta(model.prior, p), log_norm,
                   weights, 0};
  return state;
}

void update_edge(ChainState& state, int s, Rng& rng) {
  const CutPartition cut = cut_with_recovery(state, s);
  const auto& q = state.weights.q;
  std::vector<double> scores;
  scores.reserve(cut.first.size() * cut.second.size());
  double top = kNegInf;
  for (int a : cut.first) {
    for (int c : cut.second) {
      scores.push_back(q(a, c));
      top = std::max(top, scores.back());
    }
  }
  if (top == kNegInf) {
    throw DisconnectedSupportError("no pair with finite weight crosses the cut of edge " +
                                   std::to_string(cut.cut_edge.j + 1) + "-" +
                                   std::to_string(cut.cut_edge.k + 1));
  }
  double total = 0.0;
  for (double& x : scores) {
    x = std::exp(x - top);
    total += x;
  }
  const double target = uniform01(rng) * total;
  std::size_t chosen = scores.size() - 1;
  double running = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    running += scores[i];
    if (target < running && scores[i] > 0.0) {
      chosen = i;
      break;
    }
  }
  while (scores[chosen] == 0.0) --chosen;  // rounding at the top end
  const std::size_t width = cut.second.size();
  const Edge replacement(cut.first[chosen / width], cut.second[chosen % width]);
  if (replacement != cut.cut_edge) swap_with_recovery(state, s, replacement);
}

void update_tree_sweep(ChainState& state, const std::vector<int>& order, Rng& rng) {
  for (int s : order) update_edge(state, s, rng);
}

bool update_tau(ChainState& state, const SamplerModel& model, double delta, Rng& rng) {
  const double proposal =
      std::uniform_real_distribution<double>(state.tau_tilde - delta, state.tau_tilde + delta)(rng);
  const double tau_new = std::abs(proposal);
  if (!(tau_new > 0.0)) return false;
  const double log_ratio = tree_log_likelihood_in_tau(state, model, tau_new) -
                           tree_log_likelihood_in_tau(state, model, state.tau());
  if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) {
    state.tau_tilde = proposal;
    reassemble_weights(state, model);
    return true;
  }
  return false;
}

void update_degree_weights(ChainState& state, const SamplerModel& model, Rng& rng) {
  const auto* d = std::get_if<DegreePrior>(&model.prior);
  if (!d) return;
  const int p = model.p();
  const auto degrees = state.incidence.tree().degrees();
  Eigen::VectorXd conc(p);
  for (int j = 0; j < p; ++j) conc[j] = degrees[j] + d->alpha_dir - 1.0;
  if (!(conc.minCoeff() > 0.0)) {
    throw std::invalid_argument("Dirichlet parameters D_j + alpha_dir - 1 must be positive");
  }
  Eigen::VectorXd v = sample_dirichlet(conc, rng);
  // Guard against exact zeros from gamma underflow.
  v = v.cwiseMax(std::numeric_limits<double>::min());
  v /= v.sum();
  const Eigen::VectorXd lv = v.array().log();
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < p; ++k) state.log_prior_weights(j, k) = j == k ? kNegInf : lv[j] + lv[k];
  }
  state.log_prior_normalizer = degree_prior_log_normalizer(v, p);
  state.v = std::move(v);
  reassemble_weights(state, model);
}

double log_posterior(const ChainState& state, const SamplerModel& model) {
  double total = 0.0;
  for (const auto& e : state.incidence.edges()) {
    total += state.weights.q(e.j, e.k) + state.weights.edge_constant;
  }
  total -= state.log_prior_normalizer;
  total += -std::log(model.mu_tau) - state.tau() / model.mu_tau;
  if (const auto* d = std::get_if<DegreePrior>(&model.prior)) {
    total += dirichlet_log_density(*state.v, d->alpha_dir);
  }
  return total;
}

ChainResult run_chain(const SamplerModel& model, const ChainConfig& config) {
  const int p = model.p();
  config.validate(p);
  const auto start = std::chrono::steady_clock::now();
  Rng rng = make_rng(config.seed);
  const double tau0 = config.tau_init.value_or(model.mu_tau);
  ChainState state = initial_state(model, tau0);

  double delta = config.delta > 0.0 ? config.delta : 0.5 * tau0;
  const int adapt_window = config.adapt_window < 0 ? config.burn_in : config.adapt_window;
  const int m = config.random_scan_edges > 0 ? config.random_scan_edges : (p - 1 + 3) / 4;
  std::vector<int> full_order(static_cast<std::size_t>(p - 1));
  std::iota(full_order.begin(), full_order.end(), 0);

  ChainResult result;
  auto& diag = result.diagnostics;
  diag.tau_trace.reserve(static_cast<std::size_t>(config.iterations));
  diag.degree_trace.reserve(static_cast<std::size_t>(config.iterations));
  int accepted = 0;
  int accepted_post = 0;
  int proposals_post = 0;

  for (int it = 0; it < config.iterations; ++it) {
    if (config.scan == ScanKind::full) {
      update_tree_sweep(state, full_order, rng);
    } else {
      update_tree_sweep(state, random_scan_order(p - 1, m, rng), rng);
    }
    update_degree_weights(state, model, rng);
    if (!config.fix_tau) {
      const bool acc = update_tau(state, model, delta, rng);
      accepted += acc ? 1 : 0;
      if (it < adapt_window) {
        delta *= std::exp(0.05 * ((acc ? 1.0 : 0.0) - config.target_accept));
      } else {
        ++proposals_post;
        accepted_post += acc ? 1 : 0;
      }
    }

    const SpanningTree tree = state.incidence.tree();
    diag.tau_trace.push_back(state.tau());
    diag.degree_trace.push_back(tree.degrees());
    if (it >= config.burn_in && (it - config.burn_in) % config.thin == 0) {
      PosteriorDraw draw;
      draw.tree = SpanningTree::from_edges(p, tree.edges());
      draw.tau = state.tau();
      draw.v = state.v;
      draw.log_post = log_posterior(state, model);
      result.draws.push_back(std::move(draw));
    }
  }

  diag.accept_rate_tau = config.fix_tau ? 0.0 : static_cast<double>(accepted) / config.iterations;
  diag.accept_rate_tau_post_adapt =
      proposals_post > 0 ? static_cast<double>(accepted_post) / proposals_post : 0.0;
  diag.final_delta = delta;
  const auto kept = static_cast<std::ptrdiff_t>(config.burn_in);
  diag.ess_tau = effective_sample_size(
      std::vector<double>(diag.tau_trace.begin() + kept, diag.tau_trace.end()));
  diag.ess_degree.resize(static_cast<std::size_t>(p));
  std::vector<double> trace;
  for (int j = 0; j < p; ++j) {
    trace.clear();
    for (std::size_t it = static_cast<std::size_t>(kept); it < diag.degree_trace.size(); ++it) {
      trace.push_back(diag.degree_trace[it][j]);
    }
    diag.ess_degree[j] = effective_sample_size(trace);
  }
  diag.gram_refreshes = state.incidence.refresh_count();
  diag.drift_recoveries = state.drift_recoveries;
  diag.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<ChainResult> run_chains(const SamplerModel& model, const ChainConfig& config,
                                    int chains) {
  if (chains < 1) throw std::invalid_argument("need at least one chain");
  std::vector<ChainResult> results(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  std::vector<std::thread> workers;
  for (int c = 0; c < chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        ChainConfig local = config;
        local.seed = split_seed(config.seed, static_cast<std::uint64_t>(c));
        results[c] = run_chain(model, local);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

Eigen::MatrixXd edge_frequencies(const std::vector<PosteriorDraw>& draws, int p) {
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(p, p);
  if (draws.empty()) return freq;
  for (const auto& d : draws) {
    for (const auto& e : d.tree.edges()) {
      freq(e.j, e.k) += 1.0;
      freq(e.k, e.j) += 1.0;
    }
  }
  return freq / static_cast<double>(draws.size());
}

Eigen::MatrixXd tau_averaged_mcp(const std::vector<PosteriorDraw>& draws, const SamplerModel& model,
                                 int max_evaluations) {
  const int p = model.p();
  if (draws.empty()) throw std::invalid_argument("no draws to average over");
  if (max_evaluations < 1) throw std::invalid_argument("need at least one evaluation");
  const std::size_t count = std::min(draws.size(), static_cast<std::size_t>(max_evaluations));
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& d = draws[i * draws.size() / count];
    TreePrior prior = model.prior;
    if (auto* dp = std::get_if<DegreePrior>(&prior); dp && d.v) dp->v = *d.v;
    const ShrinkageParams params{model.alpha, d.tau, model.mu_tau};
    total += marginal_connecting_probabilities(assemble_log_weights(model.distances, params, prior)).mcp;
  }
  return total / static_cast<double>(count);
}

double effective_sample_size(const std::vector<double>& trace) {
  const std::size_t n = trace.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double x : trace) mean += x;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (trace[t] - mean) * (trace[t + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  if (!(gamma0 > 0.0)) return static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = autocov(2 * m) + autocov(2 * m + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  const double tau_int = std::max(1e-12, -1.0 + 2.0 * sum / gamma0);
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau_int);
}

}  // namespace bstree
