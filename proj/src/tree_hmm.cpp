#include "bstree/tree_hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bstree/edge_weights.hpp"
#include "bstree/mode.hpp"
#include "bstree/sampler.hpp"
#include "bstree/tree_distribution.hpp"

namespace bstree {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_stochastic(const Eigen::VectorXd& row, const char* what) {
  if (!(row.minCoeff() >= 0.0) || std::abs(row.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument(std::string(what) + " must be a probability vector");
  }
}

double pooled_tau_log_target(const TreeHmmModel& model, const std::vector<HmmSeries>& series,
                             const std::vector<std::vector<int>>& paths, double tau,
                             double mu_tau) {
  const double power = model.alpha + 1.0;
  const double log_tau = std::log(tau);
  double total = 0.0;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& y = series[s].y;
    for (int t = 0; t < series[s].length(); ++t) {
      for (const auto& e : model.trees[paths[s][t]].edges()) {
        total += -log_tau - power * std::log1p(std::abs(y(t, e.j) - y(t, e.k)) / tau);
      }
    }
  }
  return total - tau / mu_tau;
}

int tree_distance(const SpanningTree& a, const SpanningTree& b) {
  int shared = 0;
  for (const auto& e : a.edges()) shared += b.contains(e) ? 1 : 0;
  return a.node_count() - 1 - shared;
}

Eigen::MatrixXd pooled_rows(const std::vector<HmmSeries>& series) {
  Eigen::Index rows = 0;
  for (const auto& s : series) rows += s.y.rows();
  Eigen::MatrixXd out(rows, series.front().p());
  Eigen::Index at = 0;
  for (const auto& s : series) {
    out.middleRows(at, s.y.rows()) = s.y;
    at += s.y.rows();
  }
  return out;
}

// Mode trees of short windows, reduced to K representatives by farthest-point
// selection on edge-set distance.
std::vector<SpanningTree> initial_dictionary(const std::vector<HmmSeries>& series, int k,
                                             int window, double tau, double alpha, Rng& rng) {
  std::vector<SpanningTree> candidates;
  for (int s = 0; s < static_cast<int>(series.size()); ++s) {
    for (int start = 0; start + window <= series[s].length(); start += window) {
      std::vector<std::pair<int, int>> points;
      for (int t = start; t < start + window; ++t) points.emplace_back(s, t);
      candidates.push_back(prim_mode(state_log_weights(series, points, tau, alpha)));
    }
  }
  std::vector<SpanningTree> chosen;
  if (!candidates.empty()) {
    std::vector<int> nearest(candidates.size(), std::numeric_limits<int>::max());
    std::size_t next = 0;
    while (static_cast<int>(chosen.size()) < k) {
      chosen.push_back(candidates[next]);
      int far = -1;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        nearest[i] = std::min(nearest[i], tree_distance(candidates[i], chosen.back()));
        if (nearest[i] > far) {
          far = nearest[i];
          next = i;
        }
      }
      if (far <= 0) break;
    }
  }
  while (static_cast<int>(chosen.size()) < k) chosen.push_back(random_tree(series.front().p(), rng));
  return chosen;
}

}  // namespace

HmmSeries standardized_series(const Eigen::MatrixXd& raw, int condition, std::string name,
                              std::string subject) {
  HmmSeries out;
  out.y = standardize(raw).y;
  out.condition = condition;
  out.name = std::move(name);
  out.subject = std::move(subject);
  return out;
}

void TreeHmmModel::validate() const {
  const int k = states();
  if (k < 1) throw std::invalid_argument("model needs at least one state");
  if (q0.size() != k) throw std::invalid_argument("initial distribution has the wrong length");
  require_stochastic(q0, "initial distribution");
  for (const auto& m : trans) {
    if (m.rows() != k || m.cols() != k) throw std::invalid_argument("transition matrix must be K x K");
    for (int r = 0; r < k; ++r) require_stochastic(m.row(r).transpose(), "transition row");
  }
  const int p = trees.front().node_count();
  for (const auto& t : trees) {
    if (t.node_count() != p) throw std::invalid_argument("state trees differ in node count");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(dir_conc > 0.0)) throw std::invalid_argument("Dirichlet concentration must be positive");
}

double emission_log_density(const Eigen::VectorXd& y, const SpanningTree& tree, double tau,
                            double alpha) {
  const double c = gdp_log_constant(1, alpha, tau);
  double total = 0.0;
  for (const auto& e : tree.edges()) {
    total += c - (alpha + 1.0) * std::log1p(std::abs(y[e.j] - y[e.k]) / tau);
  }
  return total;
}

Eigen::MatrixXd emission_log_matrix(const Eigen::MatrixXd& y, const std::vector<SpanningTree>& trees,
                                    double tau, double alpha) {
  Eigen::MatrixXd out(y.rows(), static_cast<Eigen::Index>(trees.size()));
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    const Eigen::VectorXd row = y.row(t).transpose();
    for (std::size_t k = 0; k < trees.size(); ++k) {
      out(t, static_cast<Eigen::Index>(k)) = emission_log_density(row, trees[k], tau, alpha);
    }
  }
  return out;
}

namespace {

// Normalized forward messages; returns log p(y).
double forward_pass(const Eigen::MatrixXd& log_emission, const Eigen::VectorXd& q0,
                    const Eigen::MatrixXd& trans, Eigen::MatrixXd* messages) {
  const auto steps = log_emission.rows();
  const auto k = log_emission.cols();
  if (q0.size() != k || trans.rows() != k || trans.cols() != k) {
    throw std::invalid_argument("emission table and parameters disagree on the state count");
  }
  if (messages) messages->resize(steps, k);
  double loglik = 0.0;
  Eigen::RowVectorXd alpha(k);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const double top = log_emission.row(t).maxCoeff();
    if (top == kNegInf || std::isnan(top)) {
      throw std::runtime_error("every state has zero emission density at time " +
                               std::to_string(t + 1));
    }
    const Eigen::RowVectorXd e = (log_emission.row(t).array() - top).exp().matrix();
    if (t == 0) {
      alpha = q0.transpose().cwiseProduct(e);
    } else {
      alpha = (alpha * trans).cwiseProduct(e);
    }
    const double c = alpha.sum();
    if (!(c > 0.0)) {
      throw std::runtime_error("no state path has positive probability at time " +
                               std::to_string(t + 1));
    }
    alpha /= c;
    loglik += std::log(c) + top;
    if (messages) messages->row(t) = alpha;
  }
  return loglik;
}

int draw_index(const Eigen::RowVectorXd& weights, Rng& rng) {
  const double target = uniform01(rng) * weights.sum();
  double running = 0.0;
  int last = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last = static_cast<int>(i);
    running += weights[i];
    if (target < running) return last;
  }
  return last;
}

}  // namespace

double forward_log_likelihood(const Eigen::MatrixXd& log_emission, const Eigen::VectorXd& q0,
                              const Eigen::MatrixXd& trans) {
  if (log_emission.rows() == 0) return 0.0;
  return forward_pass(log_emission, q0, trans, nullptr);
}

std::vector<int> ffbs_states(const Eigen::MatrixXd& log_emission, const Eigen::VectorXd& q0,
                             const Eigen::MatrixXd& trans, Rng& rng) {
  const auto steps = log_emission.rows();
  std::vector<int> z(static_cast<std::size_t>(steps));
  if (steps == 0) return z;
  Eigen::MatrixXd messages;
  forward_pass(log_emission, q0, trans, &messages);
  z[steps - 1] = draw_index(messages.row(steps - 1), rng);
  for (Eigen::Index t = steps - 2; t >= 0; --t) {
    const Eigen::RowVectorXd w = messages.row(t).cwiseProduct(trans.col(z[t + 1]).transpose());
    z[t] = draw_index(w, rng);
  }
  return z;
}

std::vector<int> ffbs_states(const HmmSeries& series, const TreeHmmModel& model, int condition,
                             Rng& rng) {
  return ffbs_states(emission_log_matrix(series.y, model.trees, model.tau, model.alpha), model.q0,
                     model.trans.at(static_cast<std::size_t>(condition)), rng);
}

Eigen::MatrixXd state_log_weights(const std::vector<HmmSeries>& series,
                                  const std::vector<std::pair<int, int>>& points, double tau,
                                  double alpha) {
  const int p = series.front().p();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p, p);
  const double power = alpha + 1.0;
  for (const auto& [s, t] : points) {
    const auto& y = series[s].y;
    for (int j = 0; j < p; ++j) {
      const double yj = y(t, j);
      for (int k = j + 1; k < p; ++k) q(j, k) -= power * std::log1p(std::abs(yj - y(t, k)) / tau);
    }
  }
  for (int j = 0; j < p; ++j) {
    q(j, j) = kNegInf;
    for (int k = j + 1; k < p; ++k) q(k, j) = q(j, k);
  }
  return q;
}

bool update_hmm_params(TreeHmmModel& model, const std::vector<HmmSeries>& series,
                       const std::vector<std::vector<int>>& paths, double mu_tau, double delta,
                       Rng& rng) {
  const int k = model.states();
  const int g_count = model.conditions();
  if (paths.size() != series.size()) throw std::invalid_argument("one state path per series");

  Eigen::VectorXd initial = Eigen::VectorXd::Constant(k, model.dir_conc);
  std::vector<Eigen::MatrixXd> counts(static_cast<std::size_t>(g_count),
                                      Eigen::MatrixXd::Zero(k, k));
  std::vector<std::vector<std::pair<int, int>>> points(static_cast<std::size_t>(k));
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& z = paths[s];
    if (static_cast<int>(z.size()) != series[s].length()) {
      throw std::invalid_argument("state path length differs from its series");
    }
    if (z.empty()) continue;
    initial[z[0]] += 1.0;
    for (std::size_t t = 0; t < z.size(); ++t) {
      if (z[t] < 0 || z[t] >= k) throw std::invalid_argument("state index out of range");
      points[z[t]].emplace_back(static_cast<int>(s), static_cast<int>(t));
      if (t > 0) counts[series[s].condition](z[t - 1], z[t]) += 1.0;
    }
  }
  model.q0 = sample_dirichlet(initial, rng);
  for (int g = 0; g < g_count; ++g) {
    for (int r = 0; r < k; ++r) {
      const Eigen::VectorXd conc = counts[g].row(r).transpose().array() + model.dir_conc;
      model.trans[g].row(r) = sample_dirichlet(conc, rng).transpose();
    }
  }

  for (int s = 0; s < k; ++s) {
    if (points[s].empty()) continue;
    const Eigen::MatrixXd q = state_log_weights(series, points[s], model.tau, model.alpha);
    ChainState state{IncidenceMatrix(model.trees[s]), model.tau, std::nullopt, Eigen::MatrixXd(),
                     0.0, LogWeightMatrix{q, 0.0}, 0};
    std::vector<int> order(static_cast<std::size_t>(q.rows() - 1));
    std::iota(order.begin(), order.end(), 0);
    update_tree_sweep(state, order, rng);
    model.trees[s] = SpanningTree::from_edges(static_cast<int>(q.rows()), state.incidence.edges());
  }

  // tau = |tau~| with a symmetric proposal; the chain on |tau~| is the same
  // whichever sign tau~ carries, so tau itself is stored.
  const double proposal = std::abs(
      std::uniform_real_distribution<double>(model.tau - delta, model.tau + delta)(rng));
  if (!(proposal > 0.0)) return false;
  const double log_ratio = pooled_tau_log_target(model, series, paths, proposal, mu_tau) -
                           pooled_tau_log_target(model, series, paths, model.tau, mu_tau);
  if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) {
    model.tau = proposal;
    return true;
  }
  return false;
}

double classify_condition(const HmmSeries& series, const TreeHmmModel& model, int g1, int g2) {
  const Eigen::MatrixXd e = emission_log_matrix(series.y, model.trees, model.tau, model.alpha);
  const double l1 = forward_log_likelihood(e, model.q0, model.trans.at(static_cast<std::size_t>(g1)));
  const double l2 = forward_log_likelihood(e, model.q0, model.trans.at(static_cast<std::size_t>(g2)));
  if (l1 == l2) return 0.5;
  return 1.0 / (1.0 + std::exp(l2 - l1));
}

void HmmConfig::validate() const {
  if (states < 1) throw std::invalid_argument("need at least one state");
  if (iterations < 1 || burn_in < 0 || burn_in >= iterations) {
    throw std::invalid_argument("burn-in must be in [0, iterations)");
  }
  if (!(alpha > 0.0) || !(dir_conc > 0.0)) {
    throw std::invalid_argument("alpha and Dirichlet concentration must be positive");
  }
  if (init_window < 1) throw std::invalid_argument("initial window must be positive");
}

HmmFit fit_tree_hmm(const std::vector<HmmSeries>& series, const HmmConfig& config) {
  config.validate();
  if (series.empty()) throw std::invalid_argument("no series to fit");
  const int p = series.front().p();
  int g_count = 0;
  for (const auto& s : series) {
    if (s.p() != p) throw std::invalid_argument("series differ in variable count");
    if (s.length() < 1) throw std::invalid_argument("empty series '" + s.name + "'");
    if (s.condition < 0) throw std::invalid_argument("condition indices must be non-negative");
    g_count = std::max(g_count, s.condition + 1);
  }
  const int k = config.states;
  Rng rng = make_rng(config.seed);

  const Eigen::MatrixXd pooled = pooled_rows(series);
  const auto pooled_dist = pairwise_distances(unstandardized(pooled));
  const double mu_tau = empirical_tau_prior_mean(pooled_dist);

  // Start tau at the n = 1 analogue of the plug-in estimate on the pooled mode tree.
  std::vector<std::pair<int, int>> all_points;
  for (int s = 0; s < static_cast<int>(series.size()); ++s) {
    for (int t = 0; t < series[s].length(); ++t) all_points.emplace_back(s, t);
  }
  const SpanningTree pooled_tree = prim_mode(state_log_weights(series, all_points, 1.0, config.alpha));
  double abs_sum = 0.0;
  for (const auto& [s, t] : all_points) {
    for (const auto& e : pooled_tree.edges()) abs_sum += std::abs(series[s].y(t, e.j) - series[s].y(t, e.k));
  }
  const double tau0 =
      std::max(config.alpha * abs_sum / (static_cast<double>(all_points.size()) * (p - 1)), 1e-8);

  TreeHmmModel model;
  model.alpha = config.alpha;
  model.dir_conc = config.dir_conc;
  model.tau = tau0;
  model.trees = initial_dictionary(series, k, config.init_window, tau0, config.alpha, rng);
  model.q0 = Eigen::VectorXd::Constant(k, 1.0 / k);
  model.trans.assign(static_cast<std::size_t>(g_count), Eigen::MatrixXd::Constant(k, k, 1.0 / k));

  HmmFit fit;
  fit.mu_tau = mu_tau;
  std::vector<Eigen::MatrixXd> state_counts;
  for (const auto& s : series) state_counts.push_back(Eigen::MatrixXd::Zero(s.length(), k));
  Eigen::VectorXd q0_sum = Eigen::VectorXd::Zero(k);
  std::vector<Eigen::MatrixXd> trans_sum(static_cast<std::size_t>(g_count), Eigen::MatrixXd::Zero(k, k));
  double tau_sum = 0.0;
  int kept = 0;
  int accepted = 0;
  double delta = 0.5 * tau0;

  std::vector<std::vector<int>> paths(series.size());
  for (int it = 0; it < config.iterations; ++it) {
    for (std::size_t s = 0; s < series.size(); ++s) {
      paths[s] = ffbs_states(series[s], model, series[s].condition, rng);
    }
    const bool acc = update_hmm_params(model, series, paths, mu_tau, delta, rng);
    accepted += acc ? 1 : 0;
    if (it < config.burn_in) delta *= std::exp(0.05 * ((acc ? 1.0 : 0.0) - 0.3));

    std::vector<int> occupancy(static_cast<std::size_t>(k), 0);
    for (const auto& z : paths) {
      for (int x : z) ++occupancy[x];
    }
    fit.occupancy_trace.push_back(std::move(occupancy));
    fit.tau_trace.push_back(model.tau);

    if (it >= config.burn_in) {
      ++kept;
      for (std::size_t s = 0; s < series.size(); ++s) {
        for (std::size_t t = 0; t < paths[s].size(); ++t) {
          state_counts[s](static_cast<Eigen::Index>(t), paths[s][t]) += 1.0;
        }
      }
      q0_sum += model.q0;
      for (int g = 0; g < g_count; ++g) trans_sum[g] += model.trans[g];
      tau_sum += model.tau;
    }
  }
  fit.accept_rate_tau = static_cast<double>(accepted) / config.iterations;

  TreeHmmModel summary = model;
  summary.q0 = q0_sum / kept;
  for (int g = 0; g < g_count; ++g) summary.trans[g] = trans_sum[g] / kept;
  summary.tau = tau_sum / kept;
  std::vector<std::vector<std::pair<int, int>>> modal_points(static_cast<std::size_t>(k));
  for (std::size_t s = 0; s < series.size(); ++s) {
    Eigen::MatrixXd probs = state_counts[s] / kept;
    std::vector<int> modal(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index t = 0; t < probs.rows(); ++t) {
      Eigen::Index best = 0;
      probs.row(t).maxCoeff(&best);
      modal[t] = static_cast<int>(best);
      modal_points[best].emplace_back(static_cast<int>(s), static_cast<int>(t));
    }
    fit.modal_states.push_back(std::move(modal));
    fit.state_probabilities.push_back(std::move(probs));
  }
  for (int s = 0; s < k; ++s) {
    if (!modal_points[s].empty()) {
      summary.trees[s] = prim_mode(state_log_weights(series, modal_points[s], summary.tau, config.alpha));
    }
  }
  summary.validate();
  fit.model = std::move(summary);
  return fit;
}

}  // namespace bstree
