#include "bstree/edge_weights.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bstree {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::string> default_names(std::vector<std::string> names, int p) {
  if (names.empty()) {
    names.reserve(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) names.push_back("V" + std::to_string(k + 1));
  }
  if (static_cast<int>(names.size()) != p) {
    throw std::invalid_argument("number of column names does not match column count");
  }
  return names;
}

}  // namespace

DataMatrix standardize(const Eigen::MatrixXd& raw, std::vector<std::string> names) {
  const auto n = raw.rows();
  if (n < 2) throw std::invalid_argument("standardization needs at least two samples");
  DataMatrix out;
  out.names = default_names(std::move(names), static_cast<int>(raw.cols()));
  out.y.resize(n, raw.cols());
  for (Eigen::Index k = 0; k < raw.cols(); ++k) {
    const double mean = raw.col(k).mean();
    const Eigen::VectorXd centered = raw.col(k).array() - mean;
    const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(n - 1));
    if (!(sd > 1e-10 * std::max(1.0, std::abs(mean))) || !std::isfinite(sd)) {
      throw std::invalid_argument("column '" + out.names[k] + "' is constant");
    }
    out.y.col(k) = centered / sd;
  }
  out.standardized = true;
  return out;
}

DataMatrix unstandardized(const Eigen::MatrixXd& raw, std::vector<std::string> names) {
  DataMatrix out;
  out.names = default_names(std::move(names), static_cast<int>(raw.cols()));
  out.y = raw;
  out.standardized = false;
  return out;
}

PairwiseDistances pairwise_distances(const DataMatrix& data) {
  const int p = data.p();
  const int n = data.n();
  PairwiseDistances out;
  out.n = n;
  out.dist = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    for (int k = j + 1; k < p; ++k) {
      const double d = (data.y.col(j) - data.y.col(k)).norm();
      out.dist(j, k) = d;
      out.dist(k, j) = d;
    }
  }
  const Eigen::MatrixXd s = (data.y.transpose() * data.y) / static_cast<double>(n);
  out.w_n.resize(p, p);
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < p; ++k) {
      out.w_n(j, k) = j == k ? 0.0 : std::max(0.0, s(j, j) + s(k, k) - 2.0 * s(j, k));
    }
  }
  return out;
}

void ShrinkageParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(mu_tau > 0.0)) throw std::invalid_argument("mu_tau must be positive");
}

void validate_prior(const TreePrior& prior, int p) {
  if (const auto* e = std::get_if<EdgePrior>(&prior)) {
    if (e->eta.rows() != p || e->eta.cols() != p) {
      throw std::invalid_argument("eta must be p x p");
    }
    for (int j = 0; j < p; ++j) {
      for (int k = 0; k < p; ++k) {
        if (j == k) continue;
        if (!(e->eta(j, k) >= 0.0) || !std::isfinite(e->eta(j, k))) {
          throw std::invalid_argument("eta entries must be finite and non-negative");
        }
        if (e->eta(j, k) != e->eta(k, j)) throw std::invalid_argument("eta must be symmetric");
      }
    }
  } else if (const auto* d = std::get_if<DegreePrior>(&prior)) {
    if (d->v.size() != p) throw std::invalid_argument("degree weights need one entry per node");
    if (!(d->v.minCoeff() > 0.0)) throw std::invalid_argument("degree weights must be positive");
    if (std::abs(d->v.sum() - 1.0) > 1e-8) {
      throw std::invalid_argument("degree weights must sum to one");
    }
    if (!(d->alpha_dir > 0.0)) throw std::invalid_argument("Dirichlet concentration must be positive");
  }
}

Eigen::MatrixXd log_eta(const TreePrior& prior, int p) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  if (const auto* e = std::get_if<EdgePrior>(&prior)) {
    for (int j = 0; j < p; ++j) {
      for (int k = 0; k < p; ++k) {
        out(j, k) = e->eta(j, k) > 0.0 ? std::log(e->eta(j, k)) : kNegInf;
      }
    }
  } else if (const auto* d = std::get_if<DegreePrior>(&prior)) {
    const Eigen::VectorXd lv = d->v.array().log();
    for (int j = 0; j < p; ++j) {
      for (int k = 0; k < p; ++k) out(j, k) = lv[j] + lv[k];
    }
  }
  out.diagonal().setConstant(kNegInf);
  return out;
}

double gdp_log_constant(int n, double alpha, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("gdp density needs tau > 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("gdp density needs alpha > 0");
  if (n < 1) throw std::invalid_argument("gdp density needs n >= 1");
  const double nd = static_cast<double>(n);
  const double log_c = -nd * std::numbers::ln2 - std::lgamma((nd + 1.0) / 2.0) -
                       0.5 * (nd - 1.0) * std::log(std::numbers::pi);
  return log_c + std::lgamma(alpha + nd) - std::lgamma(alpha) - nd * std::log(tau);
}

double gdp_log_marginal(double d, int n, double alpha, double tau) {
  if (d < 0.0) throw std::invalid_argument("distance must be non-negative");
  return gdp_log_constant(n, alpha, tau) - (alpha + n) * std::log1p(d / tau);
}

double empirical_tau_prior_mean(const PairwiseDistances& distances) {
  const auto p = distances.dist.rows();
  if (p < 2) throw std::invalid_argument("need at least two variables");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j + 1; k < p; ++k) best = std::min(best, distances.dist(j, k));
  }
  if (!(best > 0.0)) {
    throw std::invalid_argument("two variables coincide; the tau prior mean would be zero");
  }
  return best / distances.n;
}

double empirical_tau_prior_mean(const DataMatrix& data) {
  return empirical_tau_prior_mean(pairwise_distances(data));
}

LogWeightMatrix assemble_log_weights(const PairwiseDistances& distances,
                                     const ShrinkageParams& params, const TreePrior& prior) {
  params.validate();
  const int p = static_cast<int>(distances.dist.rows());
  validate_prior(prior, p);
  LogWeightMatrix out;
  out.q = log_eta(prior, p);
  const double power = params.alpha + distances.n;
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < p; ++k) {
      if (j == k || out.q(j, k) == kNegInf) continue;
      out.q(j, k) -= power * std::log1p(distances.dist(j, k) / params.tau);
    }
  }
  out.edge_constant = gdp_log_constant(distances.n, params.alpha, params.tau);
  return out;
}

LogWeightMatrix assemble_log_weights(const DataMatrix& data, const ShrinkageParams& params,
                                     const TreePrior& prior) {
  return assemble_log_weights(pairwise_distances(data), params, prior);
}

double degree_prior_log_normalizer(const Eigen::VectorXd& v, int p) {
  if (v.size() != p) throw std::invalid_argument("degree weights need one entry per node");
  if (!(v.minCoeff() > 0.0)) throw std::invalid_argument("degree weights must be positive");
  return (p - 2) * std::log(v.sum()) + v.array().log().sum();
}

}  // namespace bstree
