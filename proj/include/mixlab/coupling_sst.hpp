#pragma once

// Simulators for the cycle and torus couplings, the hypercube refresh strong
// stationary time, and the lamplighter stationary times built from cover times.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "mixlab/chain_core.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/graph_builders.hpp"
#include "mixlab/random.hpp"
#include "mixlab/spectral_metrics.hpp"

namespace mixlab {

// ---------------------------------------------------------------------------
// Couplings

struct CoupledTrajectory {
  std::vector<std::size_t> x_path;  ///< vertex index per time (torus: lexicographic index)
  std::vector<std::size_t> y_path;
  /// Unwrapped clockwise difference D_t on the cycle, absorbed at 0 or n. Empty for the torus.
  std::vector<long> gap_path;
  std::optional<std::size_t> tau_couple;  ///< nullopt: still apart at t_max (censored)
  /// Torus only: first time coordinate i agreed, if it did by t_max.
  std::vector<std::optional<std::size_t>> coordinate_times;
  std::size_t steps = 0;  ///< number of simulated steps
};

namespace detail {

// One coupled step of two lazy walks on Z_n at positions (x, y), x != y:
// exactly one of them moves +-1, each of the four cases with probability 1/4.
inline void cycle_coupled_increment(std::size_t n, std::size_t& x, std::size_t& y, long& gap, Rng& rng) {
  const auto c = rng.below(4);
  switch (c) {
    case 0:  // X stays, Y +1
      y = (y + 1) % n;
      gap -= 1;
      break;
    case 1:  // X stays, Y -1
      y = (y + n - 1) % n;
      gap += 1;
      break;
    case 2:  // X +1, Y stays
      x = (x + 1) % n;
      gap += 1;
      break;
    default:  // X -1, Y stays
      x = (x + n - 1) % n;
      gap -= 1;
      break;
  }
}

// Shared lazy increment: 0, +1, -1 with probabilities 1/2, 1/4, 1/4.
inline long lazy_increment(Rng& rng) {
  const auto c = rng.below(4);
  return c < 2 ? 0 : (c == 2 ? 1 : -1);
}

}  // namespace detail

struct CouplingOptions {
  std::optional<std::size_t> t_max;  ///< default 100 n^2
  /// Keep running (moving together after the meeting) until t_max instead of stopping at tau_couple.
  bool run_to_t_max = false;
  bool record_paths = true;
};

/// Cycle coupling started from (x0, y0).
inline CoupledTrajectory cycle_coupling_run(std::size_t n, std::size_t x0, std::size_t y0, std::uint64_t seed,
                                            const CouplingOptions& opt = {}) {
  if (n < 3) throw ArgumentError("cycle_coupling_run: need n >= 3");
  if (x0 >= n || y0 >= n) throw ArgumentError("cycle_coupling_run: start out of range");
  const std::size_t cap = opt.t_max.value_or(100 * n * n);
  const bool record_paths = opt.record_paths;
  Rng rng(seed);
  CoupledTrajectory out;
  std::size_t x = x0, y = y0;
  long gap = static_cast<long>((x0 + n - y0) % n);
  const auto record = [&] {
    if (!record_paths) return;
    out.x_path.push_back(x);
    out.y_path.push_back(y);
    out.gap_path.push_back(gap);
  };
  record();
  if (x == y) out.tau_couple = 0;
  for (std::size_t t = 1; t <= cap; ++t) {
    if (out.tau_couple && !opt.run_to_t_max) break;
    if (out.tau_couple) {
      x = static_cast<std::size_t>((static_cast<long>(x) + static_cast<long>(n) + detail::lazy_increment(rng)) %
                                   static_cast<long>(n));
      y = x;
    } else {
      detail::cycle_coupled_increment(n, x, y, gap, rng);
      if (x == y) out.tau_couple = t;
    }
    out.steps = t;
    record();
  }
  return out;
}

/// Torus coupling: pick a uniform coordinate U; if the U-th coordinates agree both
/// walks take the same lazy increment there, otherwise the cycle coupling moves one of them.
inline CoupledTrajectory torus_coupling_run(std::size_t n, std::size_t d, std::size_t x0, std::size_t y0,
                                            std::uint64_t seed, const CouplingOptions& opt = {}) {
  if (n < 3 || d < 1) throw ArgumentError("torus_coupling_run: need n >= 3, d >= 1");
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= n;
  if (x0 >= total || y0 >= total) throw ArgumentError("torus_coupling_run: start out of range");
  const std::size_t cap = opt.t_max.value_or(100 * n * n);
  const bool record_paths = opt.record_paths;
  auto xc = torus_coordinates(x0, n, d);
  auto yc = torus_coordinates(y0, n, d);
  const auto index = [&](const std::vector<std::size_t>& c) {
    std::size_t v = 0;
    for (std::size_t i = 0; i < d; ++i) v = v * n + c[i];
    return v;
  };
  Rng rng(seed);
  CoupledTrajectory out;
  out.coordinate_times.assign(d, std::nullopt);
  std::size_t apart = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (xc[i] == yc[i])
      out.coordinate_times[i] = 0;
    else
      ++apart;
  }
  const auto record = [&] {
    if (!record_paths) return;
    out.x_path.push_back(index(xc));
    out.y_path.push_back(index(yc));
  };
  record();
  if (apart == 0) out.tau_couple = 0;
  for (std::size_t t = 1; t <= cap; ++t) {
    if (out.tau_couple && !opt.run_to_t_max) break;
    const auto u = static_cast<std::size_t>(rng.below(d));
    if (xc[u] == yc[u]) {
      const long inc = detail::lazy_increment(rng);
      xc[u] = static_cast<std::size_t>((static_cast<long>(xc[u]) + static_cast<long>(n) + inc) % static_cast<long>(n));
      yc[u] = xc[u];
    } else {
      long gap = 0;
      detail::cycle_coupled_increment(n, xc[u], yc[u], gap, rng);
      if (xc[u] == yc[u]) {
        out.coordinate_times[u] = t;
        --apart;
      }
    }
    out.steps = t;
    record();
    if (apart == 0 && !out.tau_couple) out.tau_couple = t;
  }
  return out;
}

/// Line-oriented dump: header "t x y", then one row per time.
inline void write_trajectory(std::ostream& os, const CoupledTrajectory& tr) {
  os << "t x y\n";
  for (std::size_t t = 0; t < tr.x_path.size(); ++t) os << t << ' ' << tr.x_path[t] << ' ' << tr.y_path[t] << '\n';
}

// ---------------------------------------------------------------------------
// Strong stationary times

struct SSTRecord {
  std::size_t tau = 0;
  std::size_t state_at_tau = 0;
  std::optional<std::size_t> halting_state;
  /// The walk sat on the halting state at some time t < tau (would contradict the halting property).
  bool halting_hit_early = false;
};

/// Lazy walk on H_d in its refresh form: choose a uniform coordinate and set it to a
/// fair bit. tau is the first time every coordinate has been chosen; the antipode of x0
/// is a halting state.
inline SSTRecord hypercube_refresh_sst(std::size_t d, std::uint64_t x0, std::uint64_t seed) {
  if (d < 1 || d > 63) throw ArgumentError("hypercube_refresh_sst: need 1 <= d <= 63");
  if (x0 >> d) throw ArgumentError("hypercube_refresh_sst: start out of range");
  const std::uint64_t mask = (std::uint64_t{1} << d) - 1;
  const std::uint64_t antipode = ~x0 & mask;
  Rng rng(seed);
  std::vector<char> chosen(d, 0);
  std::size_t remaining = d;
  std::uint64_t x = x0;
  SSTRecord rec;
  rec.halting_state = static_cast<std::size_t>(antipode);
  std::size_t t = 0;
  while (remaining > 0) {
    if (x == antipode) rec.halting_hit_early = true;
    const auto i = static_cast<std::size_t>(rng.below(d));
    const std::uint64_t bit = rng.coin() ? 1 : 0;
    x = (x & ~(std::uint64_t{1} << i)) | (bit << i);
    ++t;
    if (!chosen[i]) {
      chosen[i] = 1;
      --remaining;
    }
  }
  rec.tau = t;
  rec.state_at_tau = static_cast<std::size_t>(x);
  return rec;
}

/// P[tau_refresh > t] = sum_{j>=1} (-1)^{j+1} C(d,j) (1 - j/d)^t.
inline double coupon_collector_tail(std::size_t d, std::size_t t) {
  double s = 0.0;
  for (std::size_t j = 1; j <= d; ++j) {
    const double term = choose(static_cast<std::int64_t>(d), static_cast<std::int64_t>(j)) *
                        std::pow(1.0 - static_cast<double>(j) / static_cast<double>(d), static_cast<double>(t));
    s += (j % 2 == 1) ? term : -term;
  }
  return s;
}

/// Generic separation-optimal strong stationary time from each start x: stop at
/// time t in state y with probability
///   (alpha_t - alpha_{t-1}) pi(y) / (P^t(x,y) - alpha_{t-1} pi(y)),  alpha_t = 1 - s_x(t),
/// so that P_x[tau > t] = s_x(t). Tables run to the first T with s_x(T) < 1e-13, where
/// the stop is forced.
class SeparationOptimalSST {
public:
  static constexpr std::size_t kMaxStates = 12;

  explicit SeparationOptimalSST(const FiniteChain& chain, double floor = 1e-13, std::size_t t_cap = 200000)
      : sampler_(chain), pi_(chain.stationary()), n_(chain.size()) {
    if (n_ > kMaxStates) throw UnsupportedError("SeparationOptimalSST: base chain has more than 12 states");
    if (n_ < 2) throw UnsupportedError("SeparationOptimalSST: base chain needs at least two states");
    if (!(pi_.min() > 0.0)) throw DomainError("SeparationOptimalSST: zero stationary mass");
    stop_.resize(n_);
    for (std::size_t x = 0; x < n_; ++x) {
      DeviationRows rows(chain, {x});
      double prev_alpha = 0.0;
      for (std::size_t t = 0;; ++t) {
        if (t > 0) rows.advance();
        if (t > t_cap) throw NoConvergenceError("SeparationOptimalSST: separation did not fall below floor");
        const double s = rows.separation(0);
        const double alpha = std::max(prev_alpha, std::min(1.0, 1.0 - s));
        const Eigen::RowVectorXd law = rows.law(0);
        std::vector<double> r(n_, 0.0);
        const bool last = s < floor;
        for (std::size_t y = 0; y < n_; ++y) {
          if (last) {
            r[y] = 1.0;
            continue;
          }
          const double den = law(static_cast<Eigen::Index>(y)) - prev_alpha * pi_[y];
          const double num = (alpha - prev_alpha) * pi_[y];
          r[y] = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
        }
        stop_[x].push_back(std::move(r));
        prev_alpha = alpha;
        if (last) break;
      }
    }
  }

  std::size_t size() const { return n_; }
  /// Index of the forced stop for start x.
  std::size_t horizon(std::size_t x) const { return stop_[x].size() - 1; }

  /// Conditional stop probability at time t in state y, given no stop before t.
  double stop_probability(std::size_t x, std::size_t t, std::size_t y) const {
    if (t >= stop_[x].size()) return 1.0;
    return stop_[x][t][y];
  }

  /// Continues a walk currently at `x` (time 0 of the SST) until it stops.
  /// Returns (elapsed steps, state at stop).
  std::pair<std::size_t, std::size_t> run_from(std::size_t x, Rng& rng) const {
    std::size_t y = x;
    for (std::size_t t = 0;; ++t) {
      const double r = stop_probability(x, t, y);
      if (r >= 1.0 || (r > 0.0 && rng.uniform01() < r)) return {t, y};
      y = sampler_.step(y, rng);
    }
  }

  SSTRecord run(std::size_t x, std::uint64_t seed) const {
    Rng rng(seed);
    const auto [tau, y] = run_from(x, rng);
    SSTRecord rec;
    rec.tau = tau;
    rec.state_at_tau = y;
    return rec;
  }

  const ChainSampler& sampler() const { return sampler_; }

private:
  ChainSampler sampler_;
  Distribution pi_;
  std::size_t n_;
  std::vector<std::vector<std::vector<double>>> stop_;  // [start][t][state]
};

struct LamplighterSSTRecord {
  SSTRecord sst;                  ///< tau = tau_cov + tau_G; state encoded by LampCodec(|G|, 2)
  std::size_t tau_cov = 0;
  std::size_t state_at_cov = 0;   ///< encoded lamplighter state at tau_cov
};

/// Runs Z_2 wr G from (all lamps off, marker x0) until tau = tau_cov + tau_G(X_{tau_cov}),
/// tau_G being the separation-optimal SST of the lazy base walk started at X_{tau_cov}.
class LamplighterSST {
public:
  explicit LamplighterSST(const Graph& g)
      : base_(lazy_srw(g)), sst_(base_), codec_(g.size(), 2), sampler_(base_) {}

  LamplighterSSTRecord run(std::size_t x0, std::uint64_t seed) const {
    const std::size_t n = codec_.sites();
    if (x0 >= n) throw ArgumentError("LamplighterSST: start out of range");
    Rng rng(seed);
    LampState s{std::vector<std::size_t>(n, 0), x0};
    std::vector<char> seen(n, 0);
    seen[x0] = 1;
    std::size_t remaining = n - 1;
    std::size_t t = 0;
    const auto step = [&] {
      s.lamps[s.marker] = rng.coin() ? 1 : 0;
      const std::size_t y = sampler_.step(s.marker, rng);
      s.marker = y;
      s.lamps[y] = rng.coin() ? 1 : 0;
      ++t;
    };
    while (remaining > 0) {
      step();
      if (!seen[s.marker]) {
        seen[s.marker] = 1;
        --remaining;
      }
    }
    LamplighterSSTRecord rec;
    rec.tau_cov = t;
    rec.state_at_cov = codec_.encode(s);
    // the base SST from the current marker, driven by the same walk
    const std::size_t v = s.marker;
    for (std::size_t k = 0;; ++k) {
      const double r = sst_.stop_probability(v, k, s.marker);
      if (r >= 1.0 || (r > 0.0 && rng.uniform01() < r)) break;
      step();
    }
    rec.sst.tau = t;
    rec.sst.state_at_tau = codec_.encode(s);
    return rec;
  }

  const LampCodec& codec() const { return codec_; }
  const FiniteChain& base() const { return base_; }

private:
  FiniteChain base_;
  SeparationOptimalSST sst_;
  LampCodec codec_;
  ChainSampler sampler_;
};

inline LamplighterSSTRecord lamplighter_sst_run(const Graph& g, std::size_t x0, std::uint64_t seed) {
  return LamplighterSST(g).run(x0, seed);
}

struct SepLowerRow {
  std::size_t t = 0;
  double separation = 0.0;  ///< s_{(0, x0)}(t) for Z_2 wr G
  double cover_tail = 0.0;  ///< P_{x0}[tau_cov > t] for the lazy base walk
  bool holds = true;
};

/// s(t) of the lamplighter chain from (all lamps off, x0) against the cover-time
/// tail of the lazy base walk, for t = 0..t_max.
inline std::vector<SepLowerRow> lamplighter_sep_lower(const Graph& g, std::size_t t_max, std::size_t x0 = 0,
                                                      double tol = kPowerTolerance) {
  const auto chain = lamplighter_chain(g);
  const LampCodec codec(g.size(), 2);
  const std::size_t start = codec.encode({std::vector<std::size_t>(g.size(), 0), x0});
  const auto tail = cover_tail(lazy_srw(g), x0, t_max);
  DeviationRows rows(chain, {start});
  std::vector<SepLowerRow> out;
  for (std::size_t t = 0; t <= t_max; ++t) {
    if (t > 0) rows.advance();
    SepLowerRow r;
    r.t = t;
    r.separation = rows.separation(0);
    r.cover_tail = tail[t];
    r.holds = r.separation + tol >= r.cover_tail;
    out.push_back(r);
  }
  return out;
}

}  // namespace mixlab
