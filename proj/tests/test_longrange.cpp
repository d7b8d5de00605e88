#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mixlab/graph_builders.hpp"
#include "mixlab/longrange.hpp"
#include "test_support.hpp"

namespace mixlab {
namespace {

using testing::matrix_power;
using testing::random_reversible_chain;

TEST(Chebyshev, LowDegreeCoefficients) {
  const auto t = chebyshev_table(5);
  EXPECT_EQ(t.coefficients[0], (std::vector<std::int64_t>{1}));
  EXPECT_EQ(t.coefficients[1], (std::vector<std::int64_t>{0, 1}));
  EXPECT_EQ(t.coefficients[2], (std::vector<std::int64_t>{-1, 0, 2}));
  EXPECT_EQ(t.coefficients[3], (std::vector<std::int64_t>{0, -3, 0, 4}));
  EXPECT_EQ(t.coefficients[5], (std::vector<std::int64_t>{0, 5, 0, -20, 0, 16}));
}

TEST(Chebyshev, CosineIdentityAndBound) {
  const auto table = chebyshev_table(30);
  for (std::size_t k = 0; k <= 30; ++k)
    for (int i = 0; i <= 200; ++i) {
      const double theta = std::numbers::pi * i / 200.0;
      const double x = std::cos(theta);
      const double q = ChebyshevTable::evaluate(k, x);
      EXPECT_NEAR(q, std::cos(static_cast<double>(k) * theta), 1e-10);
      EXPECT_LE(std::abs(q), 1.0 + 1e-12);
      if (k <= 20) EXPECT_NEAR(table.evaluate_monomial(k, x), q, 1e-7);
    }
}

TEST(Chebyshev, OverflowIsReported) { EXPECT_THROW(chebyshev_table(80), SizeError); }

TEST(ChebyshevApply, LowDegrees) {
  Rng rng(4);
  const auto chain = random_reversible_chain(rng, 9, false);
  EXPECT_TRUE(chebyshev_apply(chain, 0).isIdentity(0.0));
  EXPECT_EQ((chebyshev_apply(chain, 1) - chain.dense()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(chebyshev_apply(chain, -1), ArgumentError);
}

TEST(ChebyshevApply, MatchesEigenOracleOnCycle) {
  const auto chain = lazy_srw(cycle(8));
  const Eigen::MatrixXd p = chain.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
  for (int k : {2, 5, 7, 12}) {
    Eigen::VectorXd qk(p.rows());
    for (Eigen::Index i = 0; i < p.rows(); ++i) qk(i) = std::cos(k * std::acos(std::clamp(es.eigenvalues()(i), -1.0, 1.0)));
    const Eigen::MatrixXd oracle = es.eigenvectors() * qk.asDiagonal() * es.eigenvectors().transpose();
    EXPECT_LT((chebyshev_apply(chain, k) - oracle).cwiseAbs().maxCoeff(), 1e-10) << k;
  }
}

TEST(ChebyshevApply, VanishesBeyondDistance) {
  for (const auto& g : {cycle(10), dary_tree_ball(2, 4), hypercube(4)}) {
    const auto chain = lazy_srw(g);
    const auto dist = distance_table(g);
    for (std::int64_t k = 0; k <= 6; ++k) {
      const Eigen::MatrixXd q = chebyshev_apply(chain, k);
      for (std::size_t x = 0; x < g.size(); ++x)
        for (std::size_t y = 0; y < g.size(); ++y)
          if (static_cast<std::int64_t>(dist[x][y]) > k)
            EXPECT_EQ(q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)), 0.0);
    }
  }
}

TEST(ChebyshevApply, ContractsPiNorm) {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto chain = random_reversible_chain(rng, 15, trial % 2 == 0);
    const auto& pi = chain.stationary();
    const auto q = chebyshev_sequence(chain, 25);
    auto pi_norm = [&](const Eigen::VectorXd& v) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) s += pi[static_cast<std::size_t>(i)] * v(i) * v(i);
      return std::sqrt(s);
    };
    for (int r = 0; r < 10; ++r) {
      Eigen::VectorXd v(15);
      for (Eigen::Index i = 0; i < 15; ++i) v(i) = 2.0 * rng.uniform01() - 1.0;
      v /= pi_norm(v);
      for (const auto& qk : q) EXPECT_LE(pi_norm(qk * v), 1.0 + 1e-10);
    }
  }
}

TEST(MixtureIdentity, TrivialAtZero) {
  const auto r = binomial_mixture_identity_check(lazy_srw(cycle(8)), 0);
  EXPECT_EQ(r.deviation, 0.0);
  EXPECT_FALSE(r.log_mode);
}

TEST(MixtureIdentity, LazyCycle) {
  const auto r = binomial_mixture_identity_check(lazy_srw(cycle(8)), 10);
  EXPECT_LT(r.deviation, 1e-10);
  EXPECT_TRUE(r.ok());
}

TEST(MixtureIdentity, RandomReversibleChain) {
  Rng rng(99);
  const auto chain = random_reversible_chain(rng, 20, false);
  for (std::int64_t t : {1, 7, 15, 30}) EXPECT_LT(binomial_mixture_identity_check(chain, t).deviation, 1e-10) << t;
}

TEST(MixtureIdentity, LogModeBeyondThirty) {
  Rng rng(5);
  const auto chain = random_reversible_chain(rng, 12, true);
  const auto r = binomial_mixture_identity_check(chain, 60);
  EXPECT_TRUE(r.log_mode);
  EXPECT_EQ(r.tolerance, 1e-8);
  EXPECT_TRUE(r.ok()) << r.deviation;
}

TEST(Support, DistancesMatchGraph) {
  const auto g = dary_tree_ball(3, 3);
  EXPECT_EQ(support_distances(lazy_srw(g)), distance_table(g));
}

TEST(Support, PowersVanishBelowDistance) {
  for (const auto& g : {cycle(9), dary_tree_ball(2, 5), hypercube(3)}) {
    const auto chain = lazy_srw(g);
    const auto dist = support_distances(chain);
    const Eigen::MatrixXd p = chain.dense();
    Eigen::MatrixXd pk = Eigen::MatrixXd::Identity(p.rows(), p.cols());
    for (std::size_t k = 0; k <= 8; ++k) {
      for (std::size_t x = 0; x < g.size(); ++x)
        for (std::size_t y = 0; y < g.size(); ++y)
          if (k < dist[x][y]) EXPECT_EQ(pk(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)), 0.0);
      pk = pk * p;
    }
  }
}

TEST(VcBound, LazyCycleHasNoViolations) {
  const auto chain = lazy_srw(cycle(10));
  EXPECT_TRUE(vc_bound_check(chain, support_distances(chain), 100).empty());
}

TEST(VcBound, TreeBallHasNoViolations) {
  const auto chain = lazy_srw(dary_tree_ball(2, 5));
  EXPECT_TRUE(vc_bound_check(chain, support_distances(chain), 60).empty());
}

TEST(VcBound, HypercubeAndRandomChains) {
  const auto cube = lazy_srw(hypercube(4));
  EXPECT_TRUE(vc_bound_check(cube, support_distances(cube), 40).empty());
  Rng rng(8);
  for (int i = 0; i < 3; ++i) {
    const auto chain = random_reversible_chain(rng, 14, i == 0);
    EXPECT_TRUE(vc_bound_check(chain, support_distances(chain), 40).empty());
  }
}

TEST(VcBound, DiagonalMiddleBoundIsAtLeastOne) {
  for (std::int64_t t = 1; t <= 50; ++t) EXPECT_GE(2.0 * srw_upper_tail(t, 0), 1.0);
}

TEST(VcBound, DetectsInflatedDistances) {
  const auto chain = lazy_srw(cycle(6));
  auto dist = support_distances(chain);
  dist[0][1] = 5;
  const auto v = vc_bound_check(chain, dist, 3);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.front().x, 0u);
  EXPECT_EQ(v.front().y, 1u);
  EXPECT_EQ(v.front().t, 1u);
  EXPECT_DOUBLE_EQ(v.front().lhs, 0.25);
  EXPECT_EQ(v.front().rhs, 0.0);
}

TEST(VcBound, RejectsBadInput) {
  const auto chain = lazy_srw(cycle(6));
  EXPECT_THROW(vc_bound_check(chain, {}, 3), DimensionError);
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.0, 1.0;
  EXPECT_THROW(vc_bound_check(FiniteChain::from_dense(p), {{0, 1}, {1, 0}}, 3), UnsupportedError);
}

TEST(VcBound, CsvReport) {
  std::ostringstream os;
  write_vc_violations(os, {{1, 2, 3, 0.5, 0.25, false}});
  EXPECT_EQ(os.str(), "x,y,t,lhs,rhs\n1,2,3,0.5,0.25\n");
}

TEST(Bernstein, ZeroRadius) {
  const auto r = bernstein_tail(9, 0);
  EXPECT_GE(r.exact, 0.5);
  EXPECT_EQ(r.bound, 1.0);
}

TEST(Bernstein, DirectBinomialSum) {
  double direct = 0.0;
  for (int ups = 0; ups <= 10; ++ups)
    if (2 * ups - 10 >= 4) direct += std::tgamma(11.0) / (std::tgamma(ups + 1.0) * std::tgamma(11.0 - ups)) / 1024.0;
  const auto r = bernstein_tail(10, 4);
  EXPECT_NEAR(r.exact, 176.0 / 1024.0, 1e-15);
  EXPECT_NEAR(direct, 176.0 / 1024.0, 1e-12);
  EXPECT_LE(r.exact, r.bound);
}

TEST(Bernstein, LargeDeviation) {
  const auto r = bernstein_tail(100, 30);
  EXPECT_LE(r.exact, std::exp(-4.5));
  EXPECT_NEAR(r.bound, std::exp(-4.5), 1e-15);
}

TEST(Bernstein, ExactBelowBoundEverywhere) {
  for (std::int64_t t = 1; t <= 200; t += 7)
    for (std::int64_t r = 0; r <= t; ++r) {
      const auto b = bernstein_tail(t, r);
      EXPECT_LE(b.exact, b.bound + 1e-15) << t << " " << r;
    }
}

TEST(Bernstein, RejectsOutOfRange) {
  EXPECT_THROW(bernstein_tail(5, 6), ArgumentError);
  EXPECT_THROW(bernstein_tail(5, -1), ArgumentError);
}

}  // namespace
}  // namespace mixlab
