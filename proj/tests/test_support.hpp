#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "mixlab/chain_core.hpp"
#include "mixlab/random.hpp"

namespace mixlab::testing {

inline Distribution random_distribution(Rng& rng, std::size_t n, double zero_fraction = 0.2) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = rng.uniform01() < zero_fraction ? 0.0 : rng.uniform01();
    total += x;
  }
  if (total == 0.0) {
    w[rng.below(n)] = 1.0;
    total = 1.0;
  }
  for (auto& x : w) x /= total;
  return Distribution::normalized(std::move(w));
}

/// Symmetric positive conductances on a random connected graph; P = C / rowsum.
inline Eigen::MatrixXd random_reversible_matrix(Rng& rng, std::size_t n, double edge_prob = 0.3) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  // a random spanning path keeps it connected
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double w = 0.1 + rng.uniform01();
    c(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(order[i + 1])) = w;
    c(static_cast<Eigen::Index>(order[i + 1]), static_cast<Eigen::Index>(order[i])) = w;
  }
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = x + 1; y < n; ++y)
      if (rng.uniform01() < edge_prob) {
        const double w = 0.1 + rng.uniform01();
        c(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = w;
        c(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) = w;
      }
  Eigen::MatrixXd p = c;
  for (Eigen::Index x = 0; x < p.rows(); ++x) p.row(x) /= c.row(x).sum();
  return p;
}

inline FiniteChain random_reversible_chain(Rng& rng, std::size_t n, bool lazy) {
  Eigen::MatrixXd p = random_reversible_matrix(rng, n);
  if (lazy) p = 0.5 * (p + Eigen::MatrixXd::Identity(p.rows(), p.cols()));
  return FiniteChain::from_dense(p);
}

/// Dense P^t by repeated multiplication.
inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& p, std::int64_t t) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(p.rows(), p.cols());
  for (std::int64_t i = 0; i < t; ++i) r = r * p;
  return r;
}

}  // namespace mixlab::testing
