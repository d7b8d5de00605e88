#pragma once

// Mixing-time functionals of finite chains: spectra and relaxation time,
// t_mix / t_sep by scanning d(t), s(t), hitting and cover times, and the
// eigenvalue inequalities relating them.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mixlab/chain_core.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/random.hpp"

namespace mixlab {

// ---------------------------------------------------------------------------
// Spectra

struct SpectralSummary {
  std::vector<double> eigenvalues;  ///< descending
  double lambda2 = 0.0;
  double lambda_min = 0.0;
  double lambda_star = 0.0;  ///< max |lambda| over eigenvalues other than the top one
  double t_rel = 0.0;        ///< 1 / (1 - lambda2)
};

namespace detail {

inline void require_reversible(const FiniteChain& chain, const char* what) {
  if (!chain.has_stationary() || !chain.reversible())
    throw UnsupportedError(std::string(what) + ": needs a reversible chain (general spectra are out of scope)");
  if (!(chain.stationary().min() > 0.0)) throw DomainError(std::string(what) + ": zero stationary mass");
}

inline Eigen::VectorXd sqrt_pi(const FiniteChain& chain) {
  return chain.stationary().row().transpose().cwiseSqrt();
}

inline double relaxation_from(double lambda2) {
  return lambda2 < 1.0 ? 1.0 / (1.0 - lambda2) : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Dense route is used up to this many states.
inline constexpr std::size_t kDenseSpectrumLimit = 2048;

/// All eigenvalues of D^{1/2} P D^{-1/2}, D = diag(pi), by a dense symmetric solver.
inline SpectralSummary spectrum(const FiniteChain& chain) {
  detail::require_reversible(chain, "spectrum");
  if (chain.size() > kDenseSpectrumLimit) throw SizeError("spectrum: chain too large for the dense solver");
  const Eigen::VectorXd r = detail::sqrt_pi(chain);
  Eigen::MatrixXd s = r.asDiagonal() * chain.dense() * r.cwiseInverse().asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NoConvergenceError("spectrum: eigensolver failed");
  SpectralSummary out;
  const Eigen::VectorXd& ev = es.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), std::greater<>());
  if (std::abs(out.eigenvalues.front() - 1.0) > kPowerTolerance)
    throw ConstructionError("spectrum: top eigenvalue is not 1");
  out.eigenvalues.front() = std::min(out.eigenvalues.front(), 1.0);
  if (out.eigenvalues.size() >= 2) {
    out.lambda2 = out.eigenvalues[1];
    out.lambda_min = out.eigenvalues.back();
    out.lambda_star = std::max(std::abs(out.lambda2), std::abs(out.lambda_min));
  }
  out.t_rel = detail::relaxation_from(out.lambda2);
  return out;
}

struct ExtremalSpectrum {
  double lambda2 = 0.0;
  double lambda_min = 0.0;
  double lambda_star = 0.0;
  double t_rel = 0.0;
  std::size_t krylov_dimension = 0;
  double residual = 0.0;  ///< max Ritz residual of the two reported values
};

struct LanczosOptions {
  std::size_t max_dimension = 800;
  double tolerance = 1e-11;
  std::uint64_t seed = 1;
};

/// lambda2 and lambda_min of a reversible chain by Lanczos with full
/// reorthogonalization on the symmetrized operator, deflated against sqrt(pi).
/// Each reported value is within `residual` of an eigenvalue.
inline ExtremalSpectrum extremal_spectrum(const FiniteChain& chain, const LanczosOptions& opt = {}) {
  detail::require_reversible(chain, "extremal_spectrum");
  const auto n = static_cast<Eigen::Index>(chain.size());
  if (n < 2) throw DomainError("extremal_spectrum: need at least two states");
  const Eigen::VectorXd r = detail::sqrt_pi(chain);
  const Eigen::VectorXd r_inv = r.cwiseInverse();
  const Eigen::VectorXd u = r / r.norm();
  const auto op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return r.cwiseProduct(chain.transition() * r_inv.cwiseProduct(v));
  };
  const auto deflate = [&](Eigen::VectorXd& w, const Eigen::MatrixXd& basis, Eigen::Index k) {
    for (int pass = 0; pass < 2; ++pass) {
      w -= u * u.dot(w);
      if (k > 0) w -= basis.leftCols(k) * (basis.leftCols(k).transpose() * w);
    }
  };

  const Eigen::Index max_k = std::min<Eigen::Index>(static_cast<Eigen::Index>(opt.max_dimension), n - 1);
  Eigen::MatrixXd v(n, max_k);
  Rng rng(opt.seed);
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = rng.uniform01() - 0.5;
  deflate(q, v, 0);
  q.normalize();

  std::vector<double> alpha, beta;
  ExtremalSpectrum out;
  for (Eigen::Index k = 0; k < max_k; ++k) {
    v.col(k) = q;
    Eigen::VectorXd w = op(q);
    alpha.push_back(q.dot(w));
    deflate(w, v, k + 1);
    const double b = w.norm();
    const bool exhausted = b < 1e-13 || k + 1 == max_k;
    const bool check = exhausted || k + 1 >= 8;
    if (check) {
      const auto m = static_cast<Eigen::Index>(alpha.size());
      Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
      Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1))
                                  : Eigen::VectorXd(0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const Eigen::VectorXd& theta = es.eigenvalues();
      const double res_top = b * std::abs(es.eigenvectors()(m - 1, m - 1));
      const double res_bottom = b * std::abs(es.eigenvectors()(m - 1, 0));
      out.lambda2 = theta(m - 1);
      out.lambda_min = theta(0);
      out.residual = exhausted && b < 1e-13 ? 0.0 : std::max(res_top, res_bottom);
      out.krylov_dimension = static_cast<std::size_t>(m);
      if (exhausted || out.residual < opt.tolerance) {
        // a Krylov space spanning the whole deflated space is exact
        if (out.residual >= opt.tolerance && k + 1 < n - 1 && b >= 1e-13)
          throw NoConvergenceError("extremal_spectrum: Krylov dimension cap reached (residual " +
                                   std::to_string(out.residual) + ")");
        break;
      }
    }
    beta.push_back(b);
    q = w / b;
  }
  out.lambda_star = std::max(std::abs(out.lambda2), std::abs(out.lambda_min));
  out.t_rel = detail::relaxation_from(out.lambda2);
  return out;
}

/// 1/(1 - lambda2): dense eigensolver for small chains, Lanczos above `dense_limit`.
inline double relaxation_time(const FiniteChain& chain, std::size_t dense_limit = 1024) {
  if (chain.size() <= dense_limit) return spectrum(chain).t_rel;
  return extremal_spectrum(chain).t_rel;
}

// ---------------------------------------------------------------------------
// Mixing and separation times

struct ScanOptions {
  std::size_t t_cap = 10'000'000;
  /// Starting states to maximize over; empty means all states.
  std::vector<std::size_t> starts;
};

namespace detail {

inline std::vector<std::size_t> scan_starts(const FiniteChain& chain, const ScanOptions& opt) {
  if (!chain.irreducible() || !chain.has_stationary())
    throw NoConvergenceError("chain is not irreducible; distance to stationarity is undefined");
  return opt.starts.empty() ? DeviationRows::all_states(chain.size()) : opt.starts;
}

template <class Metric>
std::size_t first_time_below(const FiniteChain& chain, double eps, const ScanOptions& opt, Metric metric,
                             const char* what) {
  if (!(eps > 0.0 && eps < 1.0)) throw ArgumentError(std::string(what) + ": eps must lie in (0,1)");
  DeviationRows rows(chain, scan_starts(chain, opt));
  for (std::size_t t = 0; t <= opt.t_cap; ++t) {
    if (t > 0) rows.advance();
    if (metric(rows) <= eps) return t;
  }
  throw NoConvergenceError(std::string(what) + ": no t <= " + std::to_string(opt.t_cap) + " reached eps");
}

}  // namespace detail

/// min{t >= 0 : d(t) <= eps}, scanning t = 0, 1, 2, ...
inline std::size_t t_mix(const FiniteChain& chain, double eps = 0.25, const ScanOptions& opt = {}) {
  return detail::first_time_below(chain, eps, opt, [](const DeviationRows& r) { return r.max_tv(); }, "t_mix");
}

/// min{t >= 0 : s(t) <= eps}
inline std::size_t t_sep(const FiniteChain& chain, double eps = 0.25, const ScanOptions& opt = {}) {
  if (!(chain.stationary().min() > 0.0)) throw DomainError("t_sep: zero stationary mass");
  return detail::first_time_below(chain, eps, opt, [](const DeviationRows& r) { return r.max_separation(); },
                                  "t_sep");
}

struct DistanceCurve {
  std::vector<double> d;  ///< d(t), t = 0..t_max
  std::vector<double> s;  ///< s(t)
};

inline DistanceCurve distance_curve(const FiniteChain& chain, std::size_t t_max, const ScanOptions& opt = {}) {
  DeviationRows rows(chain, detail::scan_starts(chain, opt));
  DistanceCurve out;
  for (std::size_t t = 0; t <= t_max; ++t) {
    if (t > 0) rows.advance();
    out.d.push_back(rows.max_tv());
    out.s.push_back(rows.max_separation());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hitting times

/// Solves for E_x[tau_A] without assuming irreducibility; zero on A.
inline std::vector<double> hitting_times_to_set(const FiniteChain& chain, const std::vector<std::size_t>& target,
                                                std::size_t size_cap = 2000) {
  const std::size_t n = chain.size();
  if (n > size_cap) throw SizeError("hitting_times_to_set: chain too large for dense solve");
  std::vector<char> in_target(n, 0);
  for (std::size_t a : target) {
    if (a >= n) throw ArgumentError("hitting_times_to_set: target out of range");
    in_target[a] = 1;
  }
  if (target.empty()) throw ArgumentError("hitting_times_to_set: empty target");
  std::vector<std::size_t> rest;
  std::vector<Eigen::Index> pos(n, -1);
  for (std::size_t x = 0; x < n; ++x)
    if (!in_target[x]) {
      pos[x] = static_cast<Eigen::Index>(rest.size());
      rest.push_back(x);
    }
  std::vector<double> out(n, 0.0);
  if (rest.empty()) return out;
  const auto m = static_cast<Eigen::Index>(rest.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    chain.for_each_transition(rest[static_cast<std::size_t>(i)], [&](std::size_t y, double p) {
      if (pos[y] >= 0) a(i, pos[y]) -= p;
    });
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw SingularSystemError("hitting_times_to_set: target not reachable from every state");
  const Eigen::VectorXd h = lu.solve(Eigen::VectorXd::Ones(m));
  for (Eigen::Index i = 0; i < m; ++i) out[rest[static_cast<std::size_t>(i)]] = h(i);
  return out;
}

struct HittingTable {
  Eigen::MatrixXd expected;  ///< expected(x, y) = E_x[tau_y]

  double t_hit() const { return expected.maxCoeff(); }
};

/// One dense solve (I - P_{-y}) h = 1 per target y.
inline HittingTable hitting_times(const FiniteChain& chain, std::size_t size_cap = 400) {
  if (chain.size() > size_cap) throw SizeError("hitting_times: chain too large");
  if (!chain.irreducible()) throw SingularSystemError("hitting_times: chain is reducible");
  const auto n = static_cast<Eigen::Index>(chain.size());
  HittingTable out{Eigen::MatrixXd::Zero(n, n)};
  for (std::size_t y = 0; y < chain.size(); ++y) {
    const auto h = hitting_times_to_set(chain, {y}, size_cap);
    for (std::size_t x = 0; x < chain.size(); ++x)
      out.expected(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = h[x];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

/// Inverse-CDF sampler over the rows of a chain.
class ChainSampler {
public:
  explicit ChainSampler(const FiniteChain& chain) : offsets_(chain.size() + 1, 0) {
    for (std::size_t x = 0; x < chain.size(); ++x) {
      double c = 0.0;
      chain.for_each_transition(x, [&](std::size_t y, double p) {
        c += p;
        targets_.push_back(y);
        cumulative_.push_back(c);
      });
      cumulative_.back() = 2.0;  // absorbs round-off in the row sum
      offsets_[x + 1] = targets_.size();
    }
  }

  std::size_t step(std::size_t x, Rng& rng) const {
    const double u = rng.uniform01();
    const auto first = cumulative_.begin() + static_cast<std::ptrdiff_t>(offsets_[x]);
    const auto last = cumulative_.begin() + static_cast<std::ptrdiff_t>(offsets_[x + 1]);
    const auto it = std::upper_bound(first, last, u);
    return targets_[static_cast<std::size_t>(it - cumulative_.begin())];
  }

private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> targets_;
  std::vector<double> cumulative_;
};

// ---------------------------------------------------------------------------
// Cover times

inline constexpr std::size_t kExactCoverLimit = 14;

enum class CoverMethod { exact, monte_carlo };

struct CoverTimeResult {
  double value = 0.0;             ///< max over starting states of E_x[tau_cov]
  double std_error = 0.0;           ///< 0 for the exact method
  std::vector<double> per_state;  ///< E_x[tau_cov] (or its estimate) for each start evaluated
};

/// E_x[tau_cov] for every x via the (visited set, position) chain. Visited sets only
/// grow, so the sets are processed from the largest down, one |S| x |S| solve each.
inline std::vector<double> cover_times_exact(const FiniteChain& chain) {
  const std::size_t n = chain.size();
  if (n > kExactCoverLimit) throw SizeError("cover_time: exact method needs at most 14 states");
  if (!chain.irreducible()) throw SingularSystemError("cover_time: chain is reducible");
  const Eigen::MatrixXd p = chain.dense();
  const std::uint32_t full = (1U << n) - 1U;
  // h[mask * n + x]: expected remaining time from position x with visited set mask
  std::vector<double> h(static_cast<std::size_t>(full + 1) * n, 0.0);
  for (std::uint32_t mask = full; mask-- > 1;) {
    std::vector<std::size_t> members;
    for (std::size_t x = 0; x < n; ++x)
      if (mask >> x & 1U) members.push_back(x);
    const auto m = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const std::size_t x = members[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < m; ++j) a(i, j) -= p(static_cast<Eigen::Index>(x),
                                                       static_cast<Eigen::Index>(members[static_cast<std::size_t>(j)]));
      for (std::size_t y = 0; y < n; ++y) {
        if (mask >> y & 1U) continue;
        const double pxy = p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
        if (pxy > 0.0) b(i) += pxy * h[static_cast<std::size_t>(mask | (1U << y)) * n + y];
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const Eigen::VectorXd sol = lu.solve(b);
    if (!sol.allFinite()) throw SingularSystemError("cover_time: singular stratum");
    for (Eigen::Index i = 0; i < m; ++i) h[static_cast<std::size_t>(mask) * n + members[static_cast<std::size_t>(i)]] = sol(i);
  }
  std::vector<double> out(n);
  for (std::size_t x = 0; x < n; ++x) out[x] = h[static_cast<std::size_t>(1U << x) * n + x];
  return out;
}

/// Number of steps until every state has been visited (X_0 counts as visited).
inline std::uint64_t sample_cover_time(const ChainSampler& sampler, std::size_t n, std::size_t start, Rng& rng,
                                       std::uint64_t t_cap = std::uint64_t{1} << 40) {
  std::vector<char> seen(n, 0);
  seen[start] = 1;
  std::size_t remaining = n - 1;
  std::size_t x = start;
  std::uint64_t t = 0;
  while (remaining > 0) {
    if (t >= t_cap) throw NoConvergenceError("sample_cover_time: cap reached");
    x = sampler.step(x, rng);
    ++t;
    if (!seen[x]) {
      seen[x] = 1;
      --remaining;
    }
  }
  return t;
}

struct CoverOptions {
  CoverMethod method = CoverMethod::exact;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  /// Monte Carlo only: estimate from this start instead of maximizing over all starts.
  std::optional<std::size_t> start;
};

/// t_cov = max_x E_x[tau_cov]. The Monte Carlo estimate uses seed stream x for start x.
inline CoverTimeResult cover_time(const FiniteChain& chain, const CoverOptions& opt = {}) {
  CoverTimeResult out;
  if (opt.method == CoverMethod::exact) {
    out.per_state = cover_times_exact(chain);
    out.value = *std::max_element(out.per_state.begin(), out.per_state.end());
    return out;
  }
  if (!chain.irreducible()) throw SingularSystemError("cover_time: chain is reducible");
  if (opt.samples < 2) throw ArgumentError("cover_time: need at least two samples");
  const ChainSampler sampler(chain);
  std::vector<std::size_t> starts;
  if (opt.start) {
    if (*opt.start >= chain.size()) throw ArgumentError("cover_time: start out of range");
    starts.push_back(*opt.start);
  } else {
    starts = DeviationRows::all_states(chain.size());
  }
  out.value = -1.0;
  for (std::size_t x : starts) {
    Rng rng(stream_seed(opt.seed, x));
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < opt.samples; ++i) {
      const auto t = static_cast<double>(sample_cover_time(sampler, chain.size(), x, rng));
      sum += t;
      sum_sq += t * t;
    }
    const double k = static_cast<double>(opt.samples);
    const double mean = sum / k;
    const double var = std::max(0.0, (sum_sq - k * mean * mean) / (k - 1.0));
    out.per_state.push_back(mean);
    if (mean > out.value) {
      out.value = mean;
      out.std_error = std::sqrt(var / k);
    }
  }
  return out;
}

/// P_{x0}[tau_cov > t] for t = 0..t_max, from the exact law of (visited set, position).
inline std::vector<double> cover_tail(const FiniteChain& chain, std::size_t x0, std::size_t t_max) {
  const std::size_t n = chain.size();
  if (n > kExactCoverLimit) throw SizeError("cover_tail: at most 14 states");
  if (x0 >= n) throw ArgumentError("cover_tail: start out of range");
  const std::uint32_t full = (1U << n) - 1U;
  std::vector<double> mass(static_cast<std::size_t>(full + 1) * n, 0.0), next(mass.size());
  mass[static_cast<std::size_t>(1U << x0) * n + x0] = 1.0;
  std::vector<double> tail;
  const auto covered = [&](const std::vector<double>& m) {
    double c = 0.0;
    for (std::size_t x = 0; x < n; ++x) c += m[static_cast<std::size_t>(full) * n + x];
    return c;
  };
  tail.push_back(std::max(0.0, 1.0 - covered(mass)));
  for (std::size_t t = 1; t <= t_max; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::uint32_t mask = 1; mask <= full; ++mask)
      for (std::size_t x = 0; x < n; ++x) {
        const double w = mass[static_cast<std::size_t>(mask) * n + x];
        if (w == 0.0) continue;
        chain.for_each_transition(x, [&](std::size_t y, double p) {
          next[static_cast<std::size_t>(mask | (1U << y)) * n + y] += w * p;
        });
      }
    std::swap(mass, next);
    // summing the uncovered mass directly keeps tiny tails accurate
    double open = 0.0;
    for (std::uint32_t mask = 1; mask < full; ++mask)
      for (std::size_t x = 0; x < n; ++x) open += mass[static_cast<std::size_t>(mask) * n + x];
    tail.push_back(open);
  }
  return tail;
}

// ---------------------------------------------------------------------------
// Eigenvalue inequalities

struct SpectralInequalityRow {
  std::size_t t = 0;
  double d = 0.0;            ///< d(t)
  double s = 0.0;            ///< s(t)
  double sep_bound = 0.0;    ///< lambda_*^t / pi_min
  double lambda2_power = 0.0;  ///< |lambda_2|^t
  double d_root = 0.0;       ///< d(t)^{1/t}
  bool d_le_s = true;        ///< d_x(t) <= s_x(t) for every x
  bool s_le_bound = true;    ///< s_x(t) <= lambda_*^t / pi_min for every x
  bool lambda2_le_2d = true; ///< |lambda_2|^t <= 2 d(t)
};

struct SpectralInequalityReport {
  double lambda2 = 0.0;
  double lambda_star = 0.0;
  double pi_min = 0.0;
  std::vector<SpectralInequalityRow> rows;  ///< t = 1..t_max

  bool all_hold() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const auto& r) { return r.d_le_s && r.s_le_bound && r.lambda2_le_2d; });
  }
};

inline SpectralInequalityReport spectral_inequality_report(const FiniteChain& chain, std::size_t t_max,
                                                           double tol = kPowerTolerance) {
  const auto spec = spectrum(chain);
  SpectralInequalityReport rep;
  rep.lambda2 = spec.lambda2;
  rep.lambda_star = spec.lambda_star;
  rep.pi_min = chain.stationary().min();
  DeviationRows rows(chain);
  for (std::size_t t = 1; t <= t_max; ++t) {
    rows.advance();
    SpectralInequalityRow r;
    r.t = t;
    r.sep_bound = std::pow(spec.lambda_star, static_cast<double>(t)) / rep.pi_min;
    r.lambda2_power = std::pow(std::abs(spec.lambda2), static_cast<double>(t));
    for (std::size_t x = 0; x < rows.count(); ++x) {
      const double dx = rows.tv(x);
      const double sx = rows.separation(x);
      r.d = std::max(r.d, dx);
      r.s = std::max(r.s, sx);
      if (dx > sx + tol) r.d_le_s = false;
      if (sx > r.sep_bound + tol) r.s_le_bound = false;
    }
    r.lambda2_le_2d = r.lambda2_power <= 2.0 * r.d + tol;
    r.d_root = std::pow(r.d, 1.0 / static_cast<double>(t));
    rep.rows.push_back(r);
  }
  return rep;
}

struct ShortRangeViolation {
  std::size_t x = 0;
  std::size_t t = 0;
  double lhs = 0.0;  ///< |P^t(x,x) - pi(x)|
  double rhs = 0.0;  ///< sqrt(2) Delta^{5/2} / sqrt(t)
};

/// |P^t(x,x) - pi(x)| <= sqrt(2) Delta^{5/2} / sqrt(t) for t = 1..t_max.
inline std::vector<ShortRangeViolation> short_range_check(const FiniteChain& chain, std::size_t max_degree,
                                                          std::size_t t_max) {
  if (max_degree == 0) throw ArgumentError("short_range_check: max degree must be positive");
  std::vector<ShortRangeViolation> out;
  DeviationRows rows(chain);
  const double c = std::sqrt(2.0) * std::pow(static_cast<double>(max_degree), 2.5);
  for (std::size_t t = 1; t <= t_max; ++t) {
    rows.advance();
    const double rhs = c / std::sqrt(static_cast<double>(t));
    for (std::size_t x = 0; x < chain.size(); ++x) {
      const double lhs = std::abs(rows.deviations()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)));
      if (lhs > rhs + kProbabilityTolerance) out.push_back({x, t, lhs, rhs});
    }
  }
  return out;
}

}  // namespace mixlab
