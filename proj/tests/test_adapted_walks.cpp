#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mixlab/adapted_walks.hpp"
#include "mixlab/graph_builders.hpp"

namespace mixlab {
namespace {

TEST(StepMeasure, BuiltinsAreCentered) {
  for (const auto& mu : {simple_measure(3), horizontal_measure(), vertical_measure(), max_coordinate_measure(3, 1, Rational(1, 20))}) {
    Rational total = 0;
    for (const auto& p : mu.probabilities()) total += p;
    EXPECT_EQ(total, Rational(1));
  }
  EXPECT_TRUE(simple_measure(3).full_dimensional());
  EXPECT_FALSE(horizontal_measure().full_dimensional());
  EXPECT_TRUE(simple_measure(3).covariance().isApprox(Eigen::MatrixXd::Identity(3, 3) / 3.0));
}

TEST(StepMeasure, RejectsBadLaws) {
  EXPECT_THROW(StepMeasure("drift", {{1}, {-1}}, {Rational(2, 3), Rational(1, 3)}), ConstructionError);
  EXPECT_THROW(StepMeasure("short", {{1}, {-1}}, {Rational(1, 3), Rational(1, 3)}), ConstructionError);
  EXPECT_THROW(StepMeasure("mixed", {{1}, {-1, 0}}, {Rational(1, 2), Rational(1, 2)}), DimensionError);
  EXPECT_THROW(max_coordinate_measure(3, 0, Rational(1, 2)), ArgumentError);
}

TEST(StepMeasure, SamplingMatchesProbabilities) {
  const auto mu = max_coordinate_measure(3, 2, Rational(1, 20));
  Rng rng(5);
  std::vector<double> count(mu.size(), 0.0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++count[mu.sample(rng)];
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double p = to_double(mu.probabilities()[j]);
    EXPECT_NEAR(count[j] / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST(Simulate, ZeroSteps) {
  for (const auto& rule : {bks_rule(), gantert_rule(), time_block_rule(), max_coordinate_rule()}) {
    const auto s = simulate_adapted(rule, 0, 1);
    EXPECT_TRUE(std::all_of(s.position.begin(), s.position.end(), [](auto c) { return c == 0; }));
    EXPECT_EQ(s.returns, 0u);
    EXPECT_EQ(s.steps, 0u);
  }
}

TEST(Simulate, DimensionMismatch) {
  AdaptedRule r = bks_rule();
  r.measures[1] = simple_measure(3);
  EXPECT_THROW(simulate_adapted(r, 10, 1), DimensionError);
  AdaptedRule g{RuleKind::region, {simple_measure(3), simple_measure(3)}, "bad"};
  EXPECT_THROW(simulate_adapted(g, 10, 1), DimensionError);
  AdaptedRule m = max_coordinate_rule();
  m.measures.pop_back();
  EXPECT_THROW(simulate_adapted(m, 10, 1), ArgumentError);
}

TEST(Simulate, GantertFrequenciesPerRegion) {
  const auto s = simulate_adapted(gantert_rule(), 100000, 11);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& c = s.increment_counts[k];
    const double n = static_cast<double>(s.choice_counts[k]);
    ASSERT_GT(n, 1000.0);
    const double horizontal = static_cast<double>(c[0] + c[1]) / n;
    const double p = k == 0 ? 2.0 / 3.0 : 1.0 / 3.0;
    EXPECT_NEAR(horizontal, p, 3.0 * std::sqrt(p * (1 - p) / n)) << k;
  }
}

TEST(Simulate, GantertChoiceFollowsRegion) {
  AdaptedOptions opt;
  opt.record_path = true;
  const auto rule = gantert_rule();
  const auto s = simulate_adapted(rule, 2000, 3, opt);
  std::vector<std::uint64_t> recount(2, 0);
  for (std::size_t t = 0; t + 1 < s.path.size(); ++t) ++recount[std::abs(s.path[t][0]) < std::abs(s.path[t][1]) ? 0 : 1];
  EXPECT_EQ(recount, s.choice_counts);
}

TEST(Simulate, TimeBlocks) {
  AdaptedOptions opt;
  opt.record_path = true;
  const auto s = simulate_adapted(time_block_rule(), 64, 9, opt);
  for (std::size_t t = 0; t < 64; ++t) {
    const bool horizontal = s.path[t + 1][1] == s.path[t][1];
    const bool expected = t == 0 || (t >= 1 && t < 2) || (t >= 4 && t < 8) || (t >= 16 && t < 32);
    EXPECT_EQ(horizontal, expected) << t;
  }
  for (std::uint64_t t = 4; t < 8; ++t) EXPECT_TRUE(time_block_first(t));
  for (std::uint64_t t = 8; t < 16; ++t) EXPECT_FALSE(time_block_first(t));
  EXPECT_TRUE(time_block_first(0));
  EXPECT_TRUE(time_block_first(1ULL << 62));
  EXPECT_FALSE(time_block_first(1ULL << 63));
}

TEST(Simulate, BksVerticalExactlyOnFirstVisits) {
  AdaptedOptions opt;
  opt.record_path = true;
  const auto s = simulate_adapted(bks_rule(), 5000, 21, opt);
  std::set<LatticePoint> seen;
  std::uint64_t vertical = 0;
  for (std::size_t t = 0; t + 1 < s.path.size(); ++t) {
    const bool fresh = seen.insert(s.path[t]).second;
    const bool moved_vertically = s.path[t + 1][0] == s.path[t][0];
    EXPECT_EQ(fresh, moved_vertically) << t;
    vertical += moved_vertically;
  }
  seen.insert(s.path.back());
  EXPECT_EQ(vertical, s.choice_counts[0]);
  EXPECT_EQ(seen.size(), s.distinct_sites);
}

TEST(Simulate, ReturnsAndRadius) {
  AdaptedOptions opt;
  opt.record_path = true;
  opt.returns_after = 100;
  const auto s = simulate_adapted(max_coordinate_rule(), 3000, 4, opt);
  std::uint64_t returns = 0, late = 0;
  double radius = 0.0;
  for (std::size_t t = 1; t < s.path.size(); ++t) {
    const bool zero = std::all_of(s.path[t].begin(), s.path[t].end(), [](auto c) { return c == 0; });
    returns += zero;
    late += zero && t > 100;
    double r2 = 0.0;
    for (auto c : s.path[t]) r2 += static_cast<double>(c * c);
    radius = std::max(radius, std::sqrt(r2));
  }
  EXPECT_EQ(returns, s.returns);
  EXPECT_EQ(late, s.returns_late);
  EXPECT_DOUBLE_EQ(radius, s.max_radius);
}

TEST(Simulate, DeterministicAndCsv) {
  AdaptedOptions opt;
  opt.record_path = true;
  const auto a = simulate_adapted(gantert_rule(), 50, 8, opt), b = simulate_adapted(gantert_rule(), 50, 8, opt);
  EXPECT_EQ(a.path, b.path);
  std::ostringstream os;
  write_adapted_path(os, a);
  EXPECT_EQ(os.str().rfind("t,x1,x2\n0,0,0\n", 0), 0u);
  EXPECT_THROW(write_adapted_path(os, simulate_adapted(gantert_rule(), 5, 8)), ArgumentError);
}

TEST(Simulate, BlockWalkRarelyReturnsLate) {
  std::vector<std::uint64_t> late;
  AdaptedOptions opt;
  opt.returns_after = 1 << 10;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    late.push_back(simulate_adapted(time_block_rule(), 1 << 18, stream_seed(17, seed), opt).returns_late);
  std::sort(late.begin(), late.end());
  EXPECT_EQ(late[100], 0u);
  // returns come in clusters of order 2^k once the walk sits on the horizontal axis; count seeds, not visits
  const auto hit = std::count_if(late.begin(), late.end(), [](auto v) { return v > 0; });
  EXPECT_LE(hit, 40);
}

TEST(Excessive, GantertOriginDeficit) {
  const auto r = excessive_measure_check(rule_kernel(gantert_rule()), 50);
  EXPECT_LE(r.max_column_sum, Rational(1));
  EXPECT_EQ(r.origin_value, Rational(2, 3));
  EXPECT_TRUE(r.passes());
  EXPECT_EQ(r.points, 101u * 101u);
}

TEST(Excessive, GantertColumnSumsByBruteForce) {
  // p((a,b) -> (a,b)+z): horizontal moves carry 1/3 each when |a| < |b|, else 1/6
  Rational best = 0;
  for (std::int64_t x = -5; x <= 5; ++x)
    for (std::int64_t y = -5; y <= 5; ++y) {
      Rational s = 0;
      for (const auto& [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const std::int64_t a = x - dx, b = y - dy;
        const bool heavy_h = std::abs(a) < std::abs(b);
        s += dx != 0 ? Rational(1, heavy_h ? 3 : 6) : Rational(1, heavy_h ? 6 : 3);
      }
      best = std::max(best, s);
    }
  EXPECT_EQ(excessive_measure_check(rule_kernel(gantert_rule()), 5).max_column_sum, best);
}

TEST(Excessive, SimpleWalkIsDoublyStochastic) {
  const auto r = excessive_measure_check(measure_kernel(simple_measure(2)), 20);
  EXPECT_EQ(r.max_column_sum, Rational(1));
  EXPECT_EQ(r.origin_value, Rational(1));
  EXPECT_FALSE(r.strict_at_origin());
  const auto r3 = excessive_measure_check(measure_kernel(simple_measure(3)), 6);
  EXPECT_EQ(r3.max_column_sum, Rational(1));
}

TEST(Excessive, HistoryRulesHaveNoKernel) {
  EXPECT_THROW(rule_kernel(bks_rule()), UnsupportedError);
  EXPECT_THROW(rule_kernel(time_block_rule()), UnsupportedError);
  EXPECT_THROW(excessive_measure_check(rule_kernel(gantert_rule()), 0), ArgumentError);
}

TEST(Lyapunov, Examples) {
  const auto id = lyapunov_condition(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_TRUE(id.satisfied);
  EXPECT_DOUBLE_EQ(id.margin, 1.0);
  Eigen::MatrixXd g(2, 2);
  g << 2.0 / 3.0, 0, 0, 1.0 / 3.0;
  EXPECT_FALSE(lyapunov_condition(g).satisfied);
  EXPECT_NEAR(lyapunov_condition(g).margin, -1.0 / 3.0, 1e-15);
  EXPECT_TRUE(gantert_rule().measures[0].covariance().isApprox(g));
  const Eigen::Vector3d d(5, 1, 1);
  const auto big = lyapunov_condition(Eigen::MatrixXd(d.asDiagonal()));
  EXPECT_FALSE(big.satisfied);
  EXPECT_DOUBLE_EQ(big.margin, -3.0);
}

TEST(Lyapunov, Errors) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0.5, 0, 1;
  EXPECT_THROW(lyapunov_condition(m), DomainError);
  m << 1, 0, 0, -1;
  EXPECT_THROW(lyapunov_condition(m), DomainError);
  EXPECT_THROW(lyapunov_condition(Eigen::MatrixXd(2, 3)), DimensionError);
}

TEST(Normalize, IdentityPair) {
  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
  const auto n = normalize_spd_pair(id, id);
  EXPECT_NEAR(n.margin1, 1.0, 1e-12);
  EXPECT_NEAR(n.margin2, 1.0, 1e-12);
  EXPECT_TRUE((n.a * n.a.transpose()).isApprox(id, 1e-12));
}

TEST(Normalize, DiagonalPairMatchesRecipe) {
  const Eigen::Matrix3d m2 = Eigen::Vector3d(1, 2, 3).asDiagonal();
  const auto n = normalize_spd_pair(Eigen::Matrix3d::Identity(), m2);
  const auto [a, b, c] = n.labels;
  Eigen::Vector3d e1 = n.m1.diagonal(), e2 = n.m2.diagonal();
  EXPECT_TRUE(n.m1.isApprox(Eigen::Matrix3d(e1.asDiagonal()), 1e-12));
  EXPECT_TRUE(n.m2.isApprox(Eigen::Matrix3d(e2.asDiagonal()), 1e-12));
  EXPECT_NEAR(e1(0), b / a, 1e-12);
  EXPECT_NEAR(e1(1), 1.0, 1e-12);
  EXPECT_NEAR(e1(2), 1.0, 1e-12);
  EXPECT_NEAR(e2(0), b, 1e-12);
  EXPECT_NEAR(e2(1), b, 1e-12);
  EXPECT_NEAR(e2(2), c, 1e-12);
  EXPECT_GT(n.margin1, 0.0);
  EXPECT_GT(n.margin2, 0.0);
  EXPECT_NEAR(n.margin1, b / a + 2.0 - 2.0 * std::max({b / a, 1.0}), 1e-12);
  EXPECT_NEAR(n.margin2, 2.0 * b + c - 2.0 * std::max(b, c), 1e-12);
}

Eigen::Matrix3d random_spd(Rng& rng, double max_condition) {
  Eigen::Matrix3d g;
  for (int i = 0; i < 9; ++i) g(i / 3, i % 3) = rng.uniform01() - 0.5;
  const Eigen::Matrix3d q = Eigen::HouseholderQR<Eigen::Matrix3d>(g).householderQ();
  Eigen::Vector3d ev;
  for (int i = 0; i < 3; ++i) ev(i) = std::pow(max_condition, rng.uniform01());
  return q * ev.asDiagonal() * q.transpose();
}

TEST(Normalize, RandomPairsAlwaysSucceed) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d m1 = random_spd(rng, 1e3), m2 = random_spd(rng, 1e3);
    const auto n = normalize_spd_pair(m1, m2);
    EXPECT_GT(n.margin1, 0.0) << trial;
    EXPECT_GT(n.margin2, 0.0) << trial;
    EXPECT_TRUE((n.a * m1 * n.a.transpose()).isApprox(n.m1, 1e-9));
    EXPECT_TRUE(lyapunov_condition(n.m1, 1e-9).satisfied);
    EXPECT_TRUE(lyapunov_condition(n.m2, 1e-9).satisfied);
  }
}

TEST(Normalize, RejectsNonSpd) {
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(2, 2) = -1.0;
  EXPECT_THROW(normalize_spd_pair(bad, Eigen::Matrix3d::Identity()), DomainError);
  EXPECT_THROW(normalize_spd_pair(Eigen::Matrix3d::Identity(), bad), DomainError);
}

TEST(Probe, IsotropicShellsNonpositive) {
  const auto mu = simple_measure(3);
  const auto r = superharmonicity_probe({mu}, normalizing_transform(mu));
  EXPECT_TRUE(r.nonpositive()) << r.worst;
  ASSERT_EQ(r.shells.size(), 3u);
  for (const auto& s : r.shells) {
    EXPECT_GT(s.points, 0u);
    EXPECT_LE(s.worst, 0.0);
  }
}

TEST(Probe, MatchesDirectExpectation) {
  const auto mu = simple_measure(3);
  const Eigen::MatrixXd a = normalizing_transform(mu);
  const LatticePoint x{20, -7, 3};
  const double alpha = 0.01;
  auto phi = [&](const LatticePoint& p) {
    Eigen::Vector3d v(static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2]));
    return std::pow((a * v).squaredNorm(), -alpha);
  };
  double e = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    LatticePoint y = x;
    for (int i = 0; i < 3; ++i) y[i] += mu.support()[j][i];
    e += to_double(mu.probabilities()[j]) * phi(y);
  }
  EXPECT_NEAR(phi_drift(mu, a, x, alpha), e / phi(x) - 1.0, 1e-13);
}

TEST(Probe, NormalizedPairOfLaws) {
  const auto m0 = max_coordinate_measure(3, 0, Rational(1, 20));
  const auto m1 = max_coordinate_measure(3, 1, Rational(1, 20));
  const auto n = normalize_spd_pair(m0.covariance(), m1.covariance());
  ProbeOptions opt;
  opt.radii = {25, 50};
  const auto r = superharmonicity_probe({m0, m1}, n.a, opt);
  EXPECT_TRUE(r.nonpositive()) << r.worst;
  EXPECT_THROW(superharmonicity_probe({m0, m1}, Eigen::MatrixXd::Identity(3, 3), opt), DomainError);
}

TEST(Probe, LargeAlphaIsReportedNotThrown) {
  const auto mu = simple_measure(3);
  ProbeOptions opt;
  opt.alpha = 2.0;
  opt.radii = {25};
  const auto r = superharmonicity_probe({mu}, normalizing_transform(mu), opt);
  EXPECT_GT(r.worst, 0.0);
  EXPECT_FALSE(r.nonpositive());
  EXPECT_FALSE(r.where.empty());
}

TEST(Probe, RejectsLowDimension) {
  const auto mu = simple_measure(1);
  EXPECT_THROW(superharmonicity_probe({mu}, Eigen::MatrixXd::Identity(1, 1)), DomainError);
  const auto mu2 = simple_measure(2);
  EXPECT_THROW(superharmonicity_probe({mu2}, normalizing_transform(mu2)), DomainError);
}

TEST(Supermartingale, ConstantIsNonQualifying) {
  const auto k = measure_kernel(simple_measure(3));
  const auto r = supermartingale_check(k, [](const LatticePoint&) { return 1.0; }, {{0, 0, 0}, {3, 1, 2}});
  EXPECT_NEAR(r.max_excess, 0.0, 1e-15);
  EXPECT_FALSE(r.non_constant);
  EXPECT_FALSE(r.passes());
}

TEST(Supermartingale, CappedLyapunovOnShells) {
  const auto mu = simple_measure(3);
  const Eigen::MatrixXd a = normalizing_transform(mu);
  const double alpha = 0.01;
  const auto phi = capped_lyapunov(a, alpha, 25.0 * std::sqrt(3.0));
  std::vector<LatticePoint> interior;
  for (std::int64_t r : {26, 40, 60})
    for (std::int64_t i = -r; i <= r; i += 3)
      for (std::int64_t j = -r; j <= r; j += 3) {
        const double rest = static_cast<double>(r * r - i * i - j * j);
        if (rest < 0) continue;
        interior.push_back({i, j, static_cast<std::int64_t>(std::lround(std::sqrt(rest)))});
      }
  const auto res = supermartingale_check(measure_kernel(mu), phi, interior);
  EXPECT_TRUE(res.passes()) << res.max_excess;
  EXPECT_LE(res.max_excess, 0.0);
  EXPECT_EQ(phi({0, 0, 0}), std::pow(25.0 * std::sqrt(3.0), -2.0 * alpha));
}

TEST(Supermartingale, AbsoluteValueOnLineFailsAtOrigin) {
  const auto k = measure_kernel(simple_measure(1));
  const auto r = supermartingale_check(k, [](const LatticePoint& x) { return static_cast<double>(std::abs(x[0])); },
                                       {{-3}, {-1}, {0}, {2}});
  EXPECT_DOUBLE_EQ(r.max_excess, 1.0);
  EXPECT_EQ(r.argmax, 2u);
  EXPECT_FALSE(r.passes());
}

TEST(Supermartingale, FiniteChainOverload) {
  const auto chain = srw(cycle(6));
  std::vector<double> phi{1, 2, 3, 4, 3, 2};
  const auto r = supermartingale_check(chain, phi, {0, 1, 2, 3, 4, 5});
  EXPECT_DOUBLE_EQ(r.max_excess, 1.0);
  EXPECT_EQ(r.argmax, 0u);
  EXPECT_THROW(supermartingale_check(chain, std::vector<double>(5, 1.0), {0}), DimensionError);
}

}  // namespace
}  // namespace mixlab
