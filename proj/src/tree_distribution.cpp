#include "bstree/tree_distribution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <queue>
#include <string>

namespace bstree {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Cholesky diagonals spread wider than this (squared ratio) mean the
// difference formula for mcp has lost more than about five digits.
constexpr double kConditionLimit = 1e5;

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

void warn_once(const char* message) {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true)) std::clog << "warning: " << message << '\n';
}

void require_connected_support(const Eigen::MatrixXd& q) {
  const auto p = q.rows();
  std::vector<char> seen(static_cast<std::size_t>(p), 0);
  std::vector<Eigen::Index> stack{0};
  seen[0] = 1;
  Eigen::Index reached = 1;
  while (!stack.empty()) {
    const auto j = stack.back();
    stack.pop_back();
    for (Eigen::Index k = 0; k < p; ++k) {
      if (!seen[k] && k != j && q(j, k) > kNegInf) {
        seen[k] = 1;
        ++reached;
        stack.push_back(k);
      }
    }
  }
  if (reached != p) {
    for (Eigen::Index k = 0; k < p; ++k) {
      if (!seen[k]) {
        throw DisconnectedSupportError("node " + std::to_string(k + 1) +
                                       " is not reachable through finite log weights");
      }
    }
  }
}

double max_finite_offdiagonal(const Eigen::MatrixXd& q) {
  const auto p = q.rows();
  if (p < 2) return 0.0;
  double c = kNegInf;
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      if (j != k && std::isfinite(q(j, k))) c = std::max(c, q(j, k));
    }
  }
  return c;
}

struct Elimination {
  double log_det = 0.0;
  Eigen::MatrixXd gradient;
};

// Log-domain Gaussian elimination of the Laplacian with node p-1 as root.
// Each pivot is the log-sum of the eliminated node's remaining weights and
// each fill-in a log-sum of nonnegative terms, so nothing cancels however
// widely the weights range. The gradient with respect to the log weights is
// the matrix of edge inclusion probabilities; it is obtained by a reverse
// pass over stored pre-step weights.
Elimination eliminate(const Eigen::MatrixXd& shifted, bool with_gradient) {
  const Eigen::Index p = shifted.rows();
  Eigen::MatrixXd w = shifted;
  Eigen::VectorXd pivot = Eigen::VectorXd::Zero(p);
  std::vector<std::vector<double>> saved;
  if (with_gradient) saved.resize(static_cast<std::size_t>(p));
  Elimination out;
  for (Eigen::Index v = 0; v + 1 < p; ++v) {
    double piv = kNegInf;
    for (Eigen::Index u = v + 1; u < p; ++u) piv = log_add(piv, w(v, u));
    pivot[v] = piv;
    out.log_det += piv;
    if (with_gradient) {
      auto& store = saved[static_cast<std::size_t>(v)];
      store.reserve(static_cast<std::size_t>((p - v) * (p - v - 1) / 2));
      for (Eigen::Index u = v + 1; u < p; ++u) {
        for (Eigen::Index x = u + 1; x < p; ++x) store.push_back(w(u, x));
      }
    }
    for (Eigen::Index u = v + 1; u < p; ++u) {
      if (w(v, u) == kNegInf) continue;
      for (Eigen::Index x = u + 1; x < p; ++x) {
        const double fill = log_add(w(u, x), w(v, u) + w(v, x) - piv);
        w(u, x) = fill;
        w(x, u) = fill;
      }
    }
  }
  if (!with_gradient) return out;

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index v = p - 2; v >= 0; --v) {
    const auto& store = saved[static_cast<std::size_t>(v)];
    const double piv = pivot[v];
    Eigen::VectorXd row_bar = Eigen::VectorXd::Zero(p);
    double pivot_bar = 1.0;
    std::size_t at = 0;
    for (Eigen::Index u = v + 1; u < p; ++u) {
      for (Eigen::Index x = u + 1; x < p; ++x, ++at) {
        const double bar = g(u, x);
        if (bar == 0.0 || w(v, u) == kNegInf || w(v, x) == kNegInf) continue;
        const double before = store[at];
        const double through = w(v, u) + w(v, x) - piv;
        const double after = log_add(before, through);
        const double beta = bar * std::exp(through - after);
        g(u, x) = before == kNegInf ? 0.0 : bar * std::exp(before - after);
        row_bar[u] += beta;
        row_bar[x] += beta;
        pivot_bar -= beta;
      }
    }
    for (Eigen::Index u = v + 1; u < p; ++u) {
      g(v, u) = w(v, u) == kNegInf ? 0.0 : row_bar[u] + pivot_bar * std::exp(w(v, u) - piv);
    }
  }
  out.gradient = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j + 1; k < p; ++k) {
      out.gradient(j, k) = g(j, k);
      out.gradient(k, j) = g(j, k);
    }
  }
  return out;
}

struct Factored {
  double shift = 0.0;
  double log_det = 0.0;
  Eigen::MatrixXd weights;  // exp(q - shift), zero diagonal
  Eigen::LLT<Eigen::MatrixXd> factor;
  bool well_conditioned = false;
};

// Factor of L + J/p^2 built from exp(q - c), c = max finite q.
Factored factor_laplacian(const Eigen::MatrixXd& q) {
  const auto p = q.rows();
  if (p < 1 || q.cols() != p) throw std::invalid_argument("q must be square");
  require_connected_support(q);
  Factored out;
  out.shift = max_finite_offdiagonal(q);
  out.weights = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      if (j != k && q(j, k) > kNegInf) out.weights(j, k) = std::exp(q(j, k) - out.shift);
    }
  }
  Eigen::MatrixXd m = -out.weights;
  m.diagonal() = out.weights.rowwise().sum();
  m.array() += 1.0 / static_cast<double>(p * p);
  out.factor.compute(m);
  if (out.factor.info() == Eigen::Success) {
    const Eigen::VectorXd d = out.factor.matrixLLT().diagonal();
    out.log_det = 2.0 * d.array().log().sum();
    const double spread = d.maxCoeff() / d.minCoeff();
    out.well_conditioned = std::isfinite(out.log_det) && spread * spread < kConditionLimit;
  }
  return out;
}

Eigen::MatrixXd shifted_log_weights(const Eigen::MatrixXd& q, double shift) {
  Eigen::MatrixXd s = q.array() - shift;
  s.diagonal().setConstant(kNegInf);
  return s;
}

}  // namespace

double log_partition(const Eigen::MatrixXd& q) {
  const auto f = factor_laplacian(q);
  const double scale = static_cast<double>(q.rows() - 1) * f.shift;
  if (f.well_conditioned) return f.log_det + scale;
  warn_once("Laplacian is ill-conditioned; using log-domain elimination");
  return eliminate(shifted_log_weights(q, f.shift), false).log_det + scale;
}

TreePosteriorSummary marginal_connecting_probabilities(const Eigen::MatrixXd& q) {
  const auto f = factor_laplacian(q);
  const auto p = q.rows();
  TreePosteriorSummary out;
  out.shift = f.shift;
  const double scale = static_cast<double>(p - 1) * f.shift;
  Eigen::MatrixXd raw;
  if (f.well_conditioned) {
    out.log_z = f.log_det + scale;
    const Eigen::MatrixXd omega = f.factor.solve(Eigen::MatrixXd::Identity(p, p));
    raw = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index k = j + 1; k < p; ++k) {
        raw(j, k) = (omega(j, j) + omega(k, k) - 2.0 * omega(j, k)) * f.weights(j, k);
      }
    }
  } else {
    warn_once("Laplacian is ill-conditioned; using log-domain elimination");
    auto e = eliminate(shifted_log_weights(q, f.shift), true);
    out.log_z = e.log_det + scale;
    raw = std::move(e.gradient);
  }
  out.mcp = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j + 1; k < p; ++k) {
      if (f.weights(j, k) == 0.0 && !(q(j, k) > kNegInf)) continue;
      double v = raw(j, k);
      if (v < 0.0) {
        out.clamp_magnitude = std::max(out.clamp_magnitude, -v);
        v = 0.0;
      } else if (v > 1.0) {
        out.clamp_magnitude = std::max(out.clamp_magnitude, v - 1.0);
        v = 1.0;
      }
      out.mcp(j, k) = v;
      out.mcp(k, j) = v;
    }
  }
  if (out.clamp_magnitude > 1e-6) {
    std::clog << "warning: marginal connecting probabilities clamped by "
              << out.clamp_magnitude << "; the Laplacian is poorly conditioned\n";
  }
  return out;
}

TreePosteriorSummary elimination_summary(const Eigen::MatrixXd& q) {
  const auto p = q.rows();
  if (p < 1 || q.cols() != p) throw std::invalid_argument("q must be square");
  require_connected_support(q);
  TreePosteriorSummary out;
  out.shift = max_finite_offdiagonal(q);
  auto e = eliminate(shifted_log_weights(q, out.shift), true);
  out.log_z = e.log_det + static_cast<double>(p - 1) * out.shift;
  out.mcp = e.gradient.cwiseMax(0.0).cwiseMin(1.0);
  out.clamp_magnitude = std::max((e.gradient - out.mcp).cwiseAbs().maxCoeff(), 0.0);
  return out;
}

SpanningTree tree_from_pruefer(const std::vector<int>& sequence, int p) {
  if (p < 2) return SpanningTree::from_edges(p, {});
  if (static_cast<int>(sequence.size()) != p - 2) {
    throw std::invalid_argument("Pruefer sequence must have length p-2");
  }
  std::vector<int> degree(static_cast<std::size_t>(p), 1);
  for (int x : sequence) {
    if (x < 0 || x >= p) throw std::invalid_argument("Pruefer label out of range");
    ++degree[x];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
  for (int l = 0; l < p; ++l) {
    if (degree[l] == 1) leaves.push(l);
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(p - 1));
  for (int x : sequence) {
    const int leaf = leaves.top();
    leaves.pop();
    edges.emplace_back(leaf, x);
    if (--degree[x] == 1) leaves.push(x);
  }
  const int a = leaves.top();
  leaves.pop();
  const int b = leaves.top();
  edges.emplace_back(a, b);
  return SpanningTree::from_edges(p, std::move(edges));
}

std::vector<SpanningTree> enumerate_trees(int p) {
  if (p < 1 || p > 8) throw std::invalid_argument("tree enumeration supports 1 <= p <= 8");
  if (p <= 2) {
    std::vector<Edge> edges;
    if (p == 2) edges.emplace_back(0, 1);
    return {SpanningTree::from_edges(p, edges)};
  }
  std::vector<SpanningTree> out;
  std::size_t total = 1;
  for (int i = 0; i < p - 2; ++i) total *= static_cast<std::size_t>(p);
  out.reserve(total);
  std::vector<int> seq(static_cast<std::size_t>(p - 2), 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    out.push_back(tree_from_pruefer(seq, p));
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) {
      if (++*it < p) break;
      *it = 0;
    }
  }
  return out;
}

double tree_log_posterior_unnormalized(const SpanningTree& tree, const Eigen::MatrixXd& q) {
  double total = 0.0;
  for (const auto& e : tree.edges()) total += q(e.j, e.k);
  return total;
}

}  // namespace bstree
