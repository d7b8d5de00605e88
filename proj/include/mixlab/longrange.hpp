#pragma once

// Chebyshev functional calculus on transition matrices, the binomial-mixture
// identity for P^t, and the Varopoulos-Carne and Bernstein-Chernoff bounds.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>

#include "mixlab/binomial.hpp"
#include "mixlab/chain_core.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/graph_builders.hpp"

namespace mixlab {

/// Monomial coefficients of Q_0..Q_k, Q_{j+1}(x) = 2x Q_j(x) - Q_{j-1}(x).
/// coefficients[j][i] multiplies x^i.
struct ChebyshevTable {
  std::vector<std::vector<std::int64_t>> coefficients;

  std::size_t degree() const { return coefficients.size() - 1; }

  /// Q_j(x) by the three-term recurrence.
  static double evaluate(std::size_t j, double x) {
    if (j == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (std::size_t i = 1; i < j; ++i) {
      const double next = 2.0 * x * cur - prev;
      prev = cur;
      cur = next;
    }
    return cur;
  }

  /// Q_j(x) from the stored integer coefficients (Horner).
  double evaluate_monomial(std::size_t j, double x) const {
    double acc = 0.0;
    const auto& c = coefficients.at(j);
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + static_cast<double>(c[i]);
    return acc;
  }
};

/// Exact integer coefficients; throws SizeError once they leave the int64 range.
inline ChebyshevTable chebyshev_table(std::size_t k) {
  ChebyshevTable t;
  t.coefficients.push_back({1});
  if (k == 0) return t;
  t.coefficients.push_back({0, 1});
  constexpr std::int64_t lim = std::numeric_limits<std::int64_t>::max() / 4;
  for (std::size_t j = 1; j < k; ++j) {
    const auto& a = t.coefficients[j];
    const auto& b = t.coefficients[j - 1];
    std::vector<std::int64_t> c(j + 2, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > lim || a[i] < -lim) throw SizeError("chebyshev_table: coefficients overflow 64 bits");
      c[i + 1] += 2 * a[i];
    }
    for (std::size_t i = 0; i < b.size(); ++i) c[i] -= b[i];
    t.coefficients.push_back(std::move(c));
  }
  return t;
}

/// Q_0(P), ..., Q_k(P) by the matrix recurrence.
inline std::vector<Eigen::MatrixXd> chebyshev_sequence(const FiniteChain& chain, std::size_t k) {
  const Eigen::MatrixXd p = chain.dense();
  const auto n = p.rows();
  std::vector<Eigen::MatrixXd> q;
  q.push_back(Eigen::MatrixXd::Identity(n, n));
  if (k >= 1) q.push_back(p);
  for (std::size_t j = 1; j < k; ++j) q.push_back(2.0 * p * q[j] - q[j - 1]);
  return q;
}

/// Q_k(P)
inline Eigen::MatrixXd chebyshev_apply(const FiniteChain& chain, std::int64_t k) {
  if (k < 0) throw ArgumentError("chebyshev_apply: negative degree");
  return chebyshev_sequence(chain, static_cast<std::size_t>(k)).back();
}

struct MixtureIdentityCheck {
  double deviation = 0.0;  ///< max |P^t - sum_k P(S_t = k) Q_{|k|}(P)|
  double tolerance = 0.0;  ///< 1e-10 with exact weights (t <= 30), 1e-8 in log-weight mode
  bool log_mode = false;
  bool ok() const { return deviation < tolerance; }
};

inline constexpr std::int64_t kExactMixtureLimit = 30;

/// P^t = sum_{k=-t}^{t} P(S_t = k) Q_{|k|}(P), S_t simple random walk on Z.
inline MixtureIdentityCheck binomial_mixture_identity_check(const FiniteChain& chain, std::int64_t t) {
  if (t < 0) throw ArgumentError("binomial_mixture_identity_check: negative t");
  MixtureIdentityCheck out;
  out.log_mode = t > kExactMixtureLimit;
  out.tolerance = out.log_mode ? 1e-8 : 1e-10;
  const auto q = chebyshev_sequence(chain, static_cast<std::size_t>(t));
  const Eigen::MatrixXd p = chain.dense();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(p.rows(), p.cols());
  for (std::int64_t i = 0; i < t; ++i) power = power * p;
  Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(p.rows(), p.cols());
  for (std::int64_t k = -t; k <= t; ++k) {
    if ((t + k) % 2 != 0) continue;
    const std::int64_t ups = (t + k) / 2;
    const double w = out.log_mode ? std::exp(log_choose(t, ups) - static_cast<double>(t) * std::log(2.0))
                                  : std::ldexp(choose(t, ups), static_cast<int>(-t));
    mix += w * q[static_cast<std::size_t>(std::abs(k))];
  }
  out.deviation = (power - mix).cwiseAbs().maxCoeff();
  return out;
}

/// Graph distances on the support graph of the chain (x ~ y iff P(x,y) > 0 or P(y,x) > 0).
inline std::vector<std::vector<std::size_t>> support_distances(const FiniteChain& chain) {
  const std::size_t n = chain.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t x = 0; x < n; ++x)
    chain.for_each_transition(x, [&](std::size_t y, double) {
      if (y != x) edges.emplace_back(x, y);
    });
  return distance_table(Graph(n, edges));
}

/// P(S_t >= R) for simple random walk on Z.
inline double srw_upper_tail(std::int64_t t, std::int64_t r) {
  double s = 0.0;
  for (std::int64_t k = std::max<std::int64_t>(r, -t); k <= t; ++k) s += srw_position_probability(t, k);
  return std::min(1.0, s);
}

struct TailBound {
  double exact = 0.0;  ///< P(S_t >= R)
  double bound = 0.0;  ///< exp(-R^2 / 2t)
};

inline TailBound bernstein_tail(std::int64_t t, std::int64_t r) {
  if (t < 0 || r < 0 || r > t) throw ArgumentError("bernstein_tail: need 0 <= R <= t");
  TailBound out;
  out.exact = srw_upper_tail(t, r);
  out.bound = t == 0 ? 1.0 : std::exp(-static_cast<double>(r) * static_cast<double>(r) / (2.0 * static_cast<double>(t)));
  return out;
}

struct VcViolation {
  std::size_t x = 0, y = 0, t = 0;
  double lhs = 0.0;  ///< p^t(x,y)
  double rhs = 0.0;  ///< violated bound
  bool gaussian = false;  ///< false: 2 sqrt(pi(y)/pi(x)) P(S_t >= rho); true: the Gaussian form
};

/// Checks p^t(x,y) <= 2 sqrt(pi(y)/pi(x)) P(S_t >= rho(x,y)) <= 2 sqrt(pi(y)/pi(x)) e^{-rho^2/2t}
/// for all x, y and t = 1..t_max.
inline std::vector<VcViolation> vc_bound_check(const FiniteChain& chain,
                                               const std::vector<std::vector<std::size_t>>& distance,
                                               std::size_t t_max, double tol = kProbabilityTolerance) {
  if (!chain.reversible()) throw UnsupportedError("vc_bound_check: chain must be reversible");
  const std::size_t n = chain.size();
  if (distance.size() != n) throw DimensionError("vc_bound_check: distance table has wrong size");
  const Eigen::MatrixXd p = chain.dense();
  Eigen::MatrixXd pt = Eigen::MatrixXd::Identity(p.rows(), p.cols());
  const auto& pi = chain.stationary();
  std::vector<VcViolation> out;
  for (std::size_t t = 1; t <= t_max; ++t) {
    pt = pt * p;
    const auto ti = static_cast<std::int64_t>(t);
    std::vector<double> tail(t + 2, 0.0);
    for (std::int64_t r = static_cast<std::int64_t>(t); r >= 0; --r)
      tail[static_cast<std::size_t>(r)] = tail[static_cast<std::size_t>(r) + 1] + srw_position_probability(ti, r);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y) {
        if (distance[x].size() != n) throw DimensionError("vc_bound_check: ragged distance table");
        const std::size_t rho = distance[x][y];
        const double lhs = pt(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
        const double pre = 2.0 * std::sqrt(pi[y] / pi[x]);
        const double middle = rho == kUnreachable ? 0.0 : pre * (rho <= t ? std::min(1.0, tail[rho]) : 0.0);
        const double rho_d = rho == kUnreachable ? std::numeric_limits<double>::infinity() : static_cast<double>(rho);
        const double gauss = pre * std::exp(-rho_d * rho_d / (2.0 * static_cast<double>(t)));
        if (lhs > middle + tol) out.push_back({x, y, t, lhs, middle, false});
        if (middle > gauss + tol) out.push_back({x, y, t, middle, gauss, true});
      }
  }
  return out;
}

/// CSV with header x,y,t,lhs,rhs.
inline void write_vc_violations(std::ostream& os, const std::vector<VcViolation>& v) {
  os << "x,y,t,lhs,rhs\n";
  char buf[128];
  for (const auto& r : v) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g\n", r.x, r.y, r.t, r.lhs, r.rhs);
    os << buf;
  }
}

}  // namespace mixlab
