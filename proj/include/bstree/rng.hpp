#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace bstree {

using Rng = std::mt19937_64;

/// Deterministic child seed for stream `stream` of a parent seed (splitmix64).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(split_seed(seed, stream));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// Draw from Dir(concentration) via normalized gamma variates.
inline Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& concentration, Rng& rng) {
  Eigen::VectorXd out(concentration.size());
  for (Eigen::Index i = 0; i < concentration.size(); ++i) {
    out[i] = std::gamma_distribution<double>(concentration[i], 1.0)(rng);
  }
  const double total = out.sum();
  if (total > 0.0) {
    out /= total;
  } else {
    // Every gamma draw underflowed; fall back on the largest concentration.
    out.setZero();
    Eigen::Index imax = 0;
    concentration.maxCoeff(&imax);
    out[imax] = 1.0;
  }
  return out;
}

}  // namespace bstree
