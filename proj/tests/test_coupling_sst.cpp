#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <map>
#include <sstream>

#include "mixlab/coupling_sst.hpp"
#include "test_support.hpp"

namespace mixlab {
namespace {

// upper tail of chi-square with `dof` degrees of freedom
double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double diff = observed[i] - expected[i];
    stat += diff * diff / expected[i];
  }
  return boost::math::gamma_q(0.5 * static_cast<double>(observed.size() - 1), 0.5 * stat);
}

struct Moments {
  double sum = 0, sum_sq = 0;
  std::size_t k = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++k;
  }
  double mean() const { return sum / static_cast<double>(k); }
  double se() const {
    const double m = mean();
    return std::sqrt(std::max(0.0, sum_sq / static_cast<double>(k) - m * m) / static_cast<double>(k));
  }
};

TEST(CycleCoupling, SameStart) {
  const auto tr = cycle_coupling_run(7, 3, 3, 1);
  ASSERT_TRUE(tr.tau_couple);
  EXPECT_EQ(*tr.tau_couple, 0u);
}

TEST(CycleCoupling, GapIsSimpleRandomWalk) {
  const auto tr = cycle_coupling_run(9, 4, 0, 5);
  for (std::size_t t = 1; t < tr.gap_path.size(); ++t) EXPECT_EQ(std::abs(tr.gap_path[t] - tr.gap_path[t - 1]), 1);
  ASSERT_TRUE(tr.tau_couple);
  const long last = tr.gap_path.back();
  EXPECT_TRUE(last == 0 || last == 9);
  // paths agree from the meeting on
  EXPECT_EQ(tr.x_path.back(), tr.y_path.back());
}

TEST(CycleCoupling, MeanCouplingTimeIsGamblersRuin) {
  const std::size_t n = 10, k = 3;
  Moments m;
  CouplingOptions opt;
  opt.record_paths = false;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto tr = cycle_coupling_run(n, k, 0, stream_seed(42, s), opt);
    ASSERT_TRUE(tr.tau_couple);
    m.add(static_cast<double>(*tr.tau_couple));
  }
  EXPECT_NEAR(m.mean(), static_cast<double>(k * (n - k)), 3 * m.se());
}

TEST(CycleCoupling, MarginalIsLazyWalk) {
  const std::size_t n = 6, t = 10;
  const auto chain = lazy_srw(cycle(n));
  DeviationRows rows(chain, {0});
  rows.advance_to(t);
  const Eigen::RowVectorXd law = rows.law(0);
  std::vector<double> obs(n, 0.0), expect(n);
  const int runs = 10000;
  CouplingOptions opt;
  opt.t_max = t;
  opt.run_to_t_max = true;
  for (int s = 0; s < runs; ++s) obs[cycle_coupling_run(n, 0, 3, stream_seed(7, s), opt).x_path[t]] += 1;
  for (std::size_t i = 0; i < n; ++i) expect[i] = runs * law(static_cast<Eigen::Index>(i));
  EXPECT_GT(chi_square_p(obs, expect), 1e-3);
}

TEST(CycleCoupling, SquaredGapMartingale) {
  const std::size_t n = 12, k = 5;
  for (std::size_t t : {5u, 20u, 60u}) {
    Moments m;
    CouplingOptions opt;
    opt.t_max = t;
    for (std::uint64_t s = 0; s < 4000; ++s) {
      const auto tr = cycle_coupling_run(n, k, 0, stream_seed(t, s), opt);
      const auto stop = tr.gap_path.size() - 1;  // t ^ tau
      const double d = static_cast<double>(tr.gap_path.back());
      m.add(d * d - static_cast<double>(stop));
    }
    EXPECT_NEAR(m.mean(), static_cast<double>(k * k), 3 * m.se() + 1e-12) << t;
  }
}

// P_k[tau_{0,n} > t] is exact from the gambler's ruin chain; coupling bounds d(t)
TEST(CycleCoupling, CouplingTailBoundsDistance) {
  const std::size_t n = 8;
  const auto chain = lazy_srw(cycle(n));
  const auto ruin = gamblers_ruin_chain(n);
  for (std::size_t t = 0; t <= 80; t += 4) {
    double worst = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n + 1));
      v(static_cast<Eigen::Index>(k)) = 1.0;
      for (std::size_t i = 0; i < t; ++i) v = ruin.push(v);
      worst = std::max(worst, 1.0 - v(0) - v(static_cast<Eigen::Index>(n)));
    }
    EXPECT_LE(dist_from_stationarity(chain, static_cast<std::int64_t>(t)).max, worst + 1e-12);
  }
}

TEST(TorusCoupling, SameStart) {
  EXPECT_EQ(*torus_coupling_run(5, 2, 7, 7, 1).tau_couple, 0u);
}

TEST(TorusCoupling, MarginalIsLazyWalk) {
  const std::size_t n = 3, d = 2, t = 6;
  const auto chain = lazy_srw(torus(n, d));
  DeviationRows rows(chain, {0});
  rows.advance_to(t);
  const Eigen::RowVectorXd law = rows.law(0);
  std::vector<double> obs(9, 0.0), expect(9);
  CouplingOptions opt;
  opt.t_max = t;
  opt.run_to_t_max = true;
  const int runs = 20000;
  for (int s = 0; s < runs; ++s) obs[torus_coupling_run(n, d, 0, 4, stream_seed(3, s), opt).x_path[t]] += 1;
  for (std::size_t i = 0; i < 9; ++i) expect[i] = runs * law(static_cast<Eigen::Index>(i));
  EXPECT_GT(chi_square_p(obs, expect), 1e-3);
}

TEST(TorusCoupling, TheoremBoundAndCoordinateTimes) {
  const std::size_t n = 5, d = 2;
  const auto t_bound = static_cast<std::size_t>(3.0 * d * std::log(static_cast<double>(d)) * n * n);
  CouplingOptions opt;
  opt.t_max = t_bound;
  opt.record_paths = false;
  int open = 0;
  Moments coord;
  const int runs = 10000;
  // (2,2) vs (0,0): both coordinates at the worst clockwise distance
  for (int s = 0; s < runs; ++s) {
    const auto tr = torus_coupling_run(n, d, 2 * n + 2, 0, stream_seed(11, s), opt);
    if (!tr.tau_couple) ++open;
  }
  EXPECT_LE(open / static_cast<double>(runs), 0.25);
  CouplingOptions full;
  full.record_paths = false;
  for (int s = 0; s < runs; ++s) {
    const auto tr = torus_coupling_run(n, d, 2 * n + 2, 0, stream_seed(12, s), full);
    ASSERT_TRUE(tr.coordinate_times[0]);
    coord.add(static_cast<double>(*tr.coordinate_times[0]));
  }
  EXPECT_LE(coord.mean(), d * n * n / 4.0 + 3 * coord.se());
}

TEST(Trajectory, DumpFormat) {
  CouplingOptions opt;
  opt.t_max = 3;
  opt.run_to_t_max = true;
  const auto tr = cycle_coupling_run(5, 0, 0, 1, opt);
  std::ostringstream os;
  write_trajectory(os, tr);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, 12), "t x y\n0 0 0\n");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(HypercubeSST, OneDimension) {
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(hypercube_refresh_sst(1, 0, s).tau, 1u);
}

TEST(HypercubeSST, SeparationEqualsCouponTail) {
  for (std::size_t d = 1; d <= 8; ++d) {
    const auto chain = lazy_srw(hypercube(d));
    DeviationRows rows(chain, {0});
    const auto t_max = static_cast<std::size_t>(10.0 * d * std::log(static_cast<double>(d))) + 2;
    for (std::size_t t = 0; t <= t_max; ++t) {
      if (t > 0) rows.advance();
      EXPECT_NEAR(rows.separation(0), coupon_collector_tail(d, t), 1e-10) << d << " " << t;
    }
  }
}

TEST(HypercubeSST, MeanHaltingAndUniformity) {
  const std::size_t d = 5;
  double harmonic = 0;
  for (std::size_t j = 1; j <= d; ++j) harmonic += 1.0 / static_cast<double>(j);
  Moments m;
  std::vector<double> counts(32, 0.0);
  const int runs = 20000;
  for (int s = 0; s < runs; ++s) {
    const auto rec = hypercube_refresh_sst(d, 0b10110, stream_seed(5, s));
    EXPECT_FALSE(rec.halting_hit_early);
    EXPECT_EQ(*rec.halting_state, 0b01001u);
    m.add(static_cast<double>(rec.tau));
    counts[rec.state_at_tau] += 1;
  }
  EXPECT_NEAR(m.mean(), d * harmonic, 3 * m.se());
  EXPECT_GT(chi_square_p(counts, std::vector<double>(32, runs / 32.0)), 1e-3);
}

// Propagates the sub-probability of not having stopped; P[tau > t] must equal s_x(t).
TEST(SeparationOptimalSST, TailEqualsSeparation) {
  for (const auto& g : {cycle(5), complete(3), hypercube(3)}) {
    const auto chain = lazy_srw(g);
    const SeparationOptimalSST sst(chain);
    for (std::size_t x : {std::size_t{0}, g.size() - 1}) {
      DeviationRows rows(chain, {x});
      Eigen::RowVectorXd alive = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(g.size()));
      alive(static_cast<Eigen::Index>(x)) = 1.0;
      for (std::size_t t = 0; t < std::min<std::size_t>(sst.horizon(x), 80); ++t) {
        if (t > 0) {
          rows.advance();
          alive = chain.push(alive);
        }
        Eigen::RowVectorXd stopped = alive;
        for (Eigen::Index y = 0; y < alive.size(); ++y) {
          stopped(y) *= sst.stop_probability(x, t, static_cast<std::size_t>(y));
          alive(y) -= stopped(y);
        }
        // the stopped mass is a multiple of pi
        const double total = stopped.sum();
        for (Eigen::Index y = 0; y < alive.size(); ++y)
          EXPECT_NEAR(stopped(y), total * chain.stationary()[static_cast<std::size_t>(y)], 1e-12);
        EXPECT_NEAR(alive.sum(), std::max(0.0, rows.separation(0)), 1e-10);
      }
    }
  }
}

TEST(SeparationOptimalSST, RejectsLargeGraphs) {
  EXPECT_THROW(SeparationOptimalSST(lazy_srw(cycle(13))), UnsupportedError);
  EXPECT_THROW(lamplighter_sst_run(cycle(13), 0, 1), UnsupportedError);
}

TEST(LamplighterSepLower, SmallGraphs) {
  for (const auto& g : {complete(2), cycle(3), cycle(4)}) {
    const auto rows = lamplighter_sep_lower(g, 60);
    EXPECT_NEAR(rows[0].separation, 1.0, 1e-15);
    EXPECT_NEAR(rows[0].cover_tail, 1.0, 1e-15);
    for (const auto& r : rows) EXPECT_TRUE(r.holds) << r.t << " " << r.separation << " " << r.cover_tail;
  }
}

TEST(LamplighterSST, K2StationaryAndIndependent) {
  const LamplighterSST sst(complete(2));
  const int runs = 100000;
  std::vector<double> at_tau(8, 0.0), lamps_at_cov(4, 0.0);
  Moments tau, joint, indicator;
  for (int s = 0; s < runs; ++s) {
    const auto rec = sst.run(0, stream_seed(99, s));
    at_tau[rec.sst.state_at_tau] += 1;
    lamps_at_cov[sst.codec().decode(rec.state_at_cov).lamps[0] + 2 * sst.codec().decode(rec.state_at_cov).lamps[1]] += 1;
    const double ind = rec.sst.state_at_tau == 0 ? 1.0 : 0.0;
    tau.add(static_cast<double>(rec.sst.tau));
    indicator.add(ind);
    joint.add(ind * static_cast<double>(rec.sst.tau));
  }
  EXPECT_GT(chi_square_p(at_tau, std::vector<double>(8, runs / 8.0)), 1e-3);
  EXPECT_GT(chi_square_p(lamps_at_cov, std::vector<double>(4, runs / 4.0)), 1e-3);
  // sample covariance of tau with a state indicator, against its standard error
  const double cov = joint.mean() - tau.mean() * indicator.mean();
  const double sd_tau = tau.se() * std::sqrt(static_cast<double>(runs));
  const double sd_ind = indicator.se() * std::sqrt(static_cast<double>(runs));
  const double corr = cov / (sd_tau * sd_ind);
  EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(static_cast<double>(runs)));
}

TEST(LamplighterSST, C3Stationary) {
  const LamplighterSST sst(cycle(3));
  const int runs = 60000;
  std::vector<double> counts(24, 0.0);
  for (int s = 0; s < runs; ++s) counts[sst.run(1, stream_seed(3, s)).sst.state_at_tau] += 1;
  EXPECT_GT(chi_square_p(counts, std::vector<double>(24, runs / 24.0)), 1e-3);
}

}  // namespace
}  // namespace mixlab
