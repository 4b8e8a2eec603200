#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "bstree/edge_weights.hpp"
#include "oracles.hpp"

using namespace bstree;

namespace {

Eigen::MatrixXd gaussian(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd y(n, p);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < p; ++k) y(i, k) = z(rng);
  }
  return y;
}

}  // namespace

TEST_CASE("standardize a three-point column") {
  Eigen::MatrixXd raw(3, 1);
  raw << 1, 2, 3;
  const auto d = standardize(raw);
  CHECK(d.y(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(d.y(1, 0) == doctest::Approx(0.0));
  CHECK(d.y(2, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d.standardized);
  CHECK(d.names == std::vector<std::string>{"V1"});
}

TEST_CASE("standardization is idempotent and exact on Gaussian draws") {
  const auto once = standardize(gaussian(100, 4, 1));
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(once.y.col(k).mean()) < 1e-12);
    const double sd = std::sqrt(once.y.col(k).squaredNorm() / 99.0);
    CHECK(std::abs(sd - 1.0) < 1e-12);
  }
  const auto twice = standardize(once.y);
  CHECK((twice.y - once.y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardize rejects constant columns by name") {
  Eigen::MatrixXd raw(4, 2);
  raw << 1, 5, 2, 5, 3, 5, 4, 5;
  try {
    standardize(raw, {"a", "flat"});
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("flat") != std::string::npos);
  }
  CHECK_THROWS_AS(standardize(Eigen::MatrixXd::Ones(1, 3)), std::invalid_argument);
}

TEST_CASE("distances and the W_n identity") {
  const auto data = standardize(gaussian(30, 6, 2));
  const auto pd = pairwise_distances(data);
  for (int j = 0; j < 6; ++j) {
    CHECK(pd.dist(j, j) == 0.0);
    for (int k = 0; k < 6; ++k) {
      if (j == k) continue;
      CHECK(pd.dist(j, k) == pd.dist(k, j));
      CHECK(pd.w_n(j, k) >= 0.0);
      CHECK(pd.dist(j, k) * pd.dist(j, k) / 30.0 == doctest::Approx(pd.w_n(j, k)).epsilon(1e-10));
    }
  }
}

TEST_CASE("GDP density at d = 0 reduces to its constant") {
  for (int n : {1, 2, 5}) {
    const double alpha = 5.0;
    const double tau = 0.7;
    const double nd = n;
    const double expected = -nd * std::log(2.0) - std::lgamma((nd + 1.0) / 2.0) -
                            0.5 * (nd - 1.0) * std::log(std::numbers::pi) +
                            std::lgamma(alpha + nd) - std::lgamma(alpha) - nd * std::log(tau);
    CHECK(gdp_log_marginal(0.0, n, alpha, tau) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(gdp_log_constant(n, alpha, tau) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("GDP density matches the scale-mixture integral") {
  const double closed = std::exp(gdp_log_marginal(1.0, 2, 5.0, 0.5));
  const double numeric = oracle::gdp_density_by_quadrature(1.0, 2, 5.0, 0.5);
  CHECK(closed == doctest::Approx(numeric).epsilon(1e-6));
}

TEST_CASE("GDP density decreases in distance and rejects bad parameters") {
  double last = gdp_log_marginal(0.0, 3, 5.0, 1.0);
  for (double d = 0.1; d < 10.0; d += 0.1) {
    const double now = gdp_log_marginal(d, 3, 5.0, 1.0);
    CHECK(now < last);
    last = now;
  }
  CHECK_THROWS_AS(gdp_log_marginal(1.0, 2, 5.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gdp_log_marginal(1.0, 2, 5.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(gdp_log_marginal(1.0, 2, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gdp_log_marginal(-1.0, 2, 5.0, 1.0), std::invalid_argument);
}

TEST_CASE("tau prior mean is the smallest distance over n") {
  SUBCASE("single pair") {
    Eigen::MatrixXd raw(2, 2);
    raw << 1, -1, -1, 1;
    const auto data = unstandardized(raw);
    CHECK(empirical_tau_prior_mean(data) == doctest::Approx(std::sqrt(8.0) / 2.0).epsilon(1e-15));
  }
  SUBCASE("brute-force minimum") {
    const auto data = standardize(gaussian(12, 5, 4));
    double best = 1e300;
    for (int j = 0; j < 5; ++j) {
      for (int k = j + 1; k < 5; ++k) best = std::min(best, (data.y.col(j) - data.y.col(k)).norm());
    }
    CHECK(empirical_tau_prior_mean(data) == doctest::Approx(best / 12.0).epsilon(1e-15));
  }
  SUBCASE("duplicate columns") {
    Eigen::MatrixXd raw = gaussian(10, 3, 5);
    raw.col(2) = raw.col(0);
    CHECK_THROWS_AS(empirical_tau_prior_mean(standardize(raw)), std::invalid_argument);
  }
}

TEST_CASE("log weights follow the distance ordering") {
  const auto data = standardize(gaussian(20, 6, 6));
  const auto pd = pairwise_distances(data);
  const auto w = assemble_log_weights(pd, {5.0, 0.8, 0.1}, UniformPrior{});
  std::vector<std::pair<double, double>> pairs;
  for (int j = 0; j < 6; ++j) {
    CHECK(w.q(j, j) == -std::numeric_limits<double>::infinity());
    for (int k = j + 1; k < 6; ++k) {
      CHECK(w.q(j, k) == w.q(k, j));
      CHECK(w.q(j, k) == doctest::Approx(-(25.0) * std::log1p(pd.dist(j, k) / 0.8)).epsilon(1e-14));
      pairs.emplace_back(pd.dist(j, k), w.q(j, k));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i].second < pairs[i - 1].second);
  CHECK(w.edge_constant == doctest::Approx(gdp_log_constant(20, 5.0, 0.8)).epsilon(1e-14));
}

TEST_CASE("zero eta blocks an edge") {
  const auto data = standardize(gaussian(20, 4, 7));
  Eigen::MatrixXd eta = Eigen::MatrixXd::Ones(4, 4);
  eta(1, 3) = eta(3, 1) = 0.0;
  const auto w = assemble_log_weights(data, {5.0, 1.0, 0.1}, EdgePrior{eta});
  CHECK(w.q(1, 3) == -std::numeric_limits<double>::infinity());
  CHECK(std::isfinite(w.q(0, 3)));
}

TEST_CASE("uniform degree weights shift the uniform weights by a constant") {
  const auto data = standardize(gaussian(15, 5, 8));
  const auto a = assemble_log_weights(data, {5.0, 1.0, 0.1}, UniformPrior{});
  const auto b = assemble_log_weights(data, {5.0, 1.0, 0.1}, DegreePrior{Eigen::VectorXd::Constant(5, 0.2), 1.0});
  const double shift = 2.0 * std::log(0.2);
  for (int j = 0; j < 5; ++j) {
    for (int k = j + 1; k < 5; ++k) CHECK(b.q(j, k) - a.q(j, k) == doctest::Approx(shift).epsilon(1e-13));
  }
}

TEST_CASE("permuting columns permutes the weights") {
  const Eigen::MatrixXd raw = gaussian(25, 6, 9);
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};
  Eigen::MatrixXd moved(25, 6);
  for (int k = 0; k < 6; ++k) moved.col(k) = raw.col(perm[k]);
  const auto a = assemble_log_weights(standardize(raw), {5.0, 1.0, 0.1}, UniformPrior{});
  const auto b = assemble_log_weights(standardize(moved), {5.0, 1.0, 0.1}, UniformPrior{});
  for (int j = 0; j < 6; ++j) {
    for (int k = 0; k < 6; ++k) CHECK(b.q(j, k) == a.q(perm[j], perm[k]));
  }
}

TEST_CASE("prior validation") {
  Eigen::MatrixXd eta = Eigen::MatrixXd::Ones(3, 3);
  eta(0, 1) = 2.0;
  CHECK_THROWS_AS(validate_prior(EdgePrior{eta}, 3), std::invalid_argument);
  eta(0, 1) = eta(1, 0) = -1.0;
  CHECK_THROWS_AS(validate_prior(EdgePrior{eta}, 3), std::invalid_argument);
  CHECK_THROWS_AS(validate_prior(EdgePrior{Eigen::MatrixXd::Ones(2, 2)}, 3), std::invalid_argument);
  CHECK_THROWS_AS(validate_prior(DegreePrior{Eigen::Vector3d(0.5, 0.5, 0.5), 1.0}, 3), std::invalid_argument);
  CHECK_THROWS_AS(validate_prior(DegreePrior{Eigen::Vector3d(0.5, 0.5, 0.0), 1.0}, 3), std::invalid_argument);
  CHECK_THROWS_AS(validate_prior(DegreePrior{Eigen::Vector3d(0.5, 0.25, 0.25), 0.0}, 3), std::invalid_argument);
  CHECK_NOTHROW(validate_prior(DegreePrior{Eigen::Vector3d(0.5, 0.25, 0.25), 1.0}, 3));
  CHECK_THROWS_AS((ShrinkageParams{5.0, 0.0, 1.0}.validate()), std::invalid_argument);
}

TEST_CASE("degree-prior normalizer") {
  SUBCASE("uniform weights") {
    for (int p : {3, 5, 9}) {
      const double expected = -p * std::log(static_cast<double>(p));
      CHECK(degree_prior_log_normalizer(Eigen::VectorXd::Constant(p, 1.0 / p), p) ==
            doctest::Approx(expected).epsilon(1e-14));
    }
  }
  SUBCASE("hand value") {
    CHECK(std::exp(degree_prior_log_normalizer(Eigen::Vector3d(0.5, 0.25, 0.25), 3)) ==
          doctest::Approx(0.03125).epsilon(1e-14));
  }
  SUBCASE("enumeration") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::VectorXd v(5);
    for (auto& x : v) x = u(rng);
    v /= v.sum();
    std::vector<double> terms;
    oracle::for_each_tree(5, [&](const oracle::EdgeList& t) {
      double s = 0.0;
      for (const auto& [j, k] : t) s += std::log(v[j]) + std::log(v[k]);
      terms.push_back(s);
    });
    CHECK(degree_prior_log_normalizer(v, 5) == doctest::Approx(oracle::log_sum_exp(terms)).epsilon(1e-10));
  }
}
