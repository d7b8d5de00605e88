#include <gtest/gtest.h>

#include <cmath>

#include "mixlab/chain_core.hpp"
#include "mixlab/graph_builders.hpp"
#include "test_support.hpp"

namespace mixlab {
namespace {

using testing::matrix_power;
using testing::random_distribution;
using testing::random_reversible_chain;

TEST(Distribution, RejectsBadWeights) {
  EXPECT_THROW(Distribution({0.5, 0.6}), DomainError);
  EXPECT_THROW(Distribution({1.5, -0.5}), DomainError);
  EXPECT_THROW(Distribution(std::vector<double>{}), DomainError);
  EXPECT_NO_THROW(Distribution({0.25, 0.75}));
}

TEST(TvDistance, Examples) {
  const Distribution mu({0.5, 0.3, 0.2});
  const Distribution nu({0.2, 0.3, 0.5});
  EXPECT_EQ(tv_distance(mu, mu), 0.0);
  EXPECT_EQ(tv_distance(Distribution({1.0, 0.0}), Distribution({0.0, 1.0})), 1.0);
  // |0.3| + 0 + |0.3| halved
  EXPECT_NEAR(tv_distance(mu, nu), 0.3, 1e-15);
  EXPECT_THROW(tv_distance(mu, Distribution({1.0, 0.0})), DimensionError);
}

TEST(TvDistance, MaxEventIsPositivePartSet) {
  const Distribution mu({0.5, 0.3, 0.2});
  const Distribution nu({0.2, 0.3, 0.5});
  const auto ev = tv_max_event(mu, nu);
  EXPECT_EQ(ev.event, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(ev.value, 0.3, 1e-15);
}

// brute force over all 2^n events
double max_over_events(const Distribution& mu, const Distribution& nu) {
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1U << mu.size()); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      if (mask >> i & 1U) s += mu[i] - nu[i];
    best = std::max(best, std::abs(s));
  }
  return best;
}

TEST(TvDistance, AgreesWithBruteForceEvents) {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.below(10);
    const auto mu = random_distribution(rng, n);
    const auto nu = random_distribution(rng, n);
    EXPECT_NEAR(tv_distance(mu, nu), max_over_events(mu, nu), 1e-12);
    EXPECT_NEAR(tv_positive_part(mu, nu), max_over_events(mu, nu), 1e-12);
  }
}

TEST(OptimalCoupling, Examples) {
  const Distribution mu({0.5, 0.3, 0.2});
  const Distribution nu({0.2, 0.3, 0.5});
  const auto q = optimal_coupling(mu, nu);
  EXPECT_NEAR(q.joint().trace(), 0.7, 1e-15);
  EXPECT_NEAR(q.prob_unequal(), 0.3, 1e-15);
  EXPECT_NEAR(q.joint()(0, 2), 0.3, 1e-15);

  const auto same = optimal_coupling(mu, mu);
  EXPECT_EQ(same.prob_unequal(), 0.0);
  EXPECT_TRUE(same.joint().isDiagonal());

  const auto forced = optimal_coupling(Distribution({1.0, 0.0}), Distribution({0.0, 1.0}));
  EXPECT_EQ(forced.joint()(0, 1), 1.0);
}

TEST(OptimalCoupling, MarginalsAndInfimum) {
  Rng rng(5);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rng.below(50);
    const auto mu = random_distribution(rng, n);
    const auto nu = random_distribution(rng, n);
    const auto q = optimal_coupling(mu, nu);
    EXPECT_NEAR(q.prob_unequal(), tv_distance(mu, nu), 1e-12);
    // the independent coupling is valid and never beats the optimum
    const Eigen::MatrixXd indep = Eigen::VectorXd(mu.row().transpose()) * nu.row();
    const Coupling product(indep, mu, nu);
    EXPECT_GE(product.prob_unequal() + 1e-12, tv_distance(mu, nu));
  }
}

TEST(Coupling, RejectsWrongMarginals) {
  Eigen::MatrixXd q(2, 2);
  q << 0.5, 0.0, 0.0, 0.5;
  EXPECT_THROW(Coupling(q, Distribution({1.0, 0.0}), Distribution({0.5, 0.5})), DomainError);
}

TEST(FiniteChain, ValidatesRows) {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.6, 0.5, 0.5;
  EXPECT_THROW(FiniteChain::from_dense(p), ConstructionError);
  p << 0.5, 0.5, 0.5, 0.5;
  EXPECT_NO_THROW(FiniteChain::from_dense(p));
  EXPECT_THROW(FiniteChain::from_dense(p, Distribution({0.9, 0.1})), ConstructionError);
}

TEST(FiniteChain, StationaryMatchesPowerIteration) {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto chain = random_reversible_chain(rng, 3 + rng.below(25), true);
    ASSERT_TRUE(chain.reversible());
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(chain.size()),
                                                         1.0 / static_cast<double>(chain.size()));
    const Eigen::MatrixXd p = chain.dense();
    for (int i = 0; i < 20000; ++i) v = v * p;
    EXPECT_LT((v - chain.stationary().row()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FiniteChain, ReducibleChainHasNoStationaryLaw) {
  Eigen::MatrixXd p(2, 2);
  p << 1.0, 0.0, 0.0, 1.0;
  const auto chain = FiniteChain::from_dense(p);
  EXPECT_FALSE(chain.irreducible());
  EXPECT_FALSE(chain.has_stationary());
  EXPECT_THROW(dist_from_stationarity(chain, 1), DomainError);
}

TEST(FiniteChain, DetectsNonReversible) {
  // biased walk on the 3-cycle: uniform stationary law, not reversible
  Eigen::MatrixXd p(3, 3);
  p << 0.0, 0.7, 0.3, 0.3, 0.0, 0.7, 0.7, 0.3, 0.0;
  const auto chain = FiniteChain::from_dense(p);
  EXPECT_TRUE(chain.irreducible());
  EXPECT_FALSE(chain.reversible());
}

TEST(DistFromStationarity, Examples) {
  const auto c4 = lazy_srw(cycle(4));
  const auto d0 = dist_from_stationarity(c4, 0);
  for (double d : d0.per_state) EXPECT_NEAR(d, 0.75, 1e-15);
  EXPECT_THROW(dist_from_stationarity(c4, -1), ArgumentError);

  Eigen::MatrixXd half = Eigen::MatrixXd::Constant(2, 2, 0.5);
  EXPECT_NEAR(dist_from_stationarity(FiniteChain::from_dense(half), 1).max, 0.0, 1e-15);

  double prev = 1.0;
  for (int t = 0; t <= 60; t += 5) {
    const double d = dist_from_stationarity(c4, t).max;
    EXPECT_LE(d, prev + 1e-15);
    prev = d;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(DistFromStationarity, MatchesDenseMatrixPower) {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto chain = random_reversible_chain(rng, 2 + rng.below(20), rep % 2 == 0);
    for (std::int64_t t : {0, 1, 2, 7, 20}) {
      const Eigen::MatrixXd pt = matrix_power(chain.dense(), t);
      const auto prof = dist_from_stationarity(chain, t);
      for (std::size_t x = 0; x < chain.size(); ++x) {
        const double oracle =
            0.5 * (pt.row(static_cast<Eigen::Index>(x)) - chain.stationary().row()).cwiseAbs().sum();
        EXPECT_NEAR(prof.per_state[x], oracle, 1e-12);
      }
    }
  }
}

TEST(Dbar, Examples) {
  const auto c8 = lazy_srw(cycle(8));
  EXPECT_NEAR(dbar(c8, 0), 1.0, 1e-15);
  const Eigen::MatrixXd p5 = matrix_power(c8.dense(), 5);
  double brute = 0.0;
  for (Eigen::Index x = 0; x < 8; ++x)
    for (Eigen::Index y = 0; y < 8; ++y) brute = std::max(brute, 0.5 * (p5.row(x) - p5.row(y)).cwiseAbs().sum());
  EXPECT_NEAR(dbar(c8, 5), brute, 1e-12);
}

TEST(ChainInequalities, OnRandomChains) {
  Rng rng(9);
  for (int rep = 0; rep < 8; ++rep) {
    const auto chain = random_reversible_chain(rng, 3 + rng.below(15), true);
    for (std::int64_t t = 0; t <= 30; t += 3) {
      const double d = dist_from_stationarity(chain, t).max;
      const double db = dbar(chain, t);
      EXPECT_LE(d, db + 1e-10);
      EXPECT_LE(db, 2 * d + 1e-10);
      for (std::int64_t s : {1, 4}) EXPECT_LE(dbar(chain, t + s), db * dbar(chain, s) + 1e-10);
      for (int k : {2, 3})
        EXPECT_LE(dist_from_stationarity(chain, k * t).max, std::pow(2.0 * d, k) + 1e-10);
      const auto sep = separation_distance(chain, 2 * t);
      for (double sx : sep.per_state) EXPECT_LE(sx, 4 * d + 1e-10);
      const auto sep_t = separation_distance(chain, t);
      const auto d_t = dist_from_stationarity(chain, t);
      for (std::size_t x = 0; x < chain.size(); ++x) EXPECT_LE(d_t.per_state[x], sep_t.per_state[x] + 1e-12);
    }
  }
}

TEST(SeparationDistance, Examples) {
  const auto c5 = lazy_srw(cycle(5));
  EXPECT_NEAR(separation_distance(c5, 0).max, 1.0, 1e-15);
  EXPECT_THROW(separation_distance(c5, -3), ArgumentError);
}

TEST(BinomialTvGap, Examples) {
  EXPECT_DOUBLE_EQ(binomial_tv_gap(0), 0.5);
  EXPECT_DOUBLE_EQ(binomial_tv_gap(4), 6.0 / 32.0);
  const double asym = 1.0 / std::sqrt(2.0 * M_PI * 100.0);
  EXPECT_NEAR(binomial_tv_gap(100) / asym, 1.0, 0.05);
  EXPECT_THROW(binomial_tv_gap(-1), ArgumentError);
}

TEST(BinomialTvGap, MatchesDirectTv) {
  for (std::int64_t n = 0; n <= 60; ++n) {
    const auto a = binomial_half_pmf(n);
    const auto b = binomial_half_pmf(n + 1);
    std::vector<double> aa(a.begin(), a.end());
    aa.push_back(0.0);
    EXPECT_NEAR(tv_distance(Distribution::normalized(aa), Distribution::normalized(b)), binomial_tv_gap(n), 1e-14);
  }
}

}  // namespace
}  // namespace mixlab
