#pragma once

// Probability measures on finite sets, finite Markov chains, total variation
// in its equivalent forms, optimal couplings and the distance-to-stationarity
// functionals d(t), dbar(t), s(t).

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixlab/binomial.hpp"
#include "mixlab/errors.hpp"

namespace mixlab {

/// Absolute tolerance for single probability comparisons.
inline constexpr double kProbabilityTolerance = 1e-12;
/// Absolute tolerance for statements about iterated matrix powers.
inline constexpr double kPowerTolerance = 1e-10;

// ---------------------------------------------------------------------------
// Distribution

class Distribution {
public:
  Distribution() = default;

  /// Throws DomainError unless all weights are >= 0 and sum to 1 within 1e-12.
  explicit Distribution(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw DomainError("Distribution: empty support");
    double total = 0.0;
    for (double x : w_) {
      if (!(x >= 0.0)) throw DomainError("Distribution: negative or NaN weight");
      total += x;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance)
      throw DomainError("Distribution: weights sum to " + std::to_string(total));
  }

  static Distribution uniform(std::size_t n) { return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n))); }

  static Distribution point_mass(std::size_t n, std::size_t at) {
    if (at >= n) throw ArgumentError("point_mass: index out of range");
    std::vector<double> w(n, 0.0);
    w[at] = 1.0;
    return Distribution(std::move(w));
  }

  /// Clamps tiny negative round-off and renormalizes; for numerically computed laws.
  static Distribution normalized(std::vector<double> w) {
    double total = 0.0;
    for (double& x : w) {
      if (x < 0.0) {
        if (x < -1e-9) throw DomainError("Distribution::normalized: materially negative weight");
        x = 0.0;
      }
      total += x;
    }
    if (!(total > 0.0)) throw DomainError("Distribution::normalized: zero total mass");
    for (double& x : w) x /= total;
    return Distribution(std::move(w));
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> weights() const { return w_; }
  double min() const { return *std::min_element(w_.begin(), w_.end()); }

  Eigen::RowVectorXd row() const {
    return Eigen::Map<const Eigen::RowVectorXd>(w_.data(), static_cast<Eigen::Index>(w_.size()));
  }

  friend bool operator==(const Distribution&, const Distribution&) = default;

private:
  std::vector<double> w_;
};

namespace detail {
inline void require_same_size(const Distribution& mu, const Distribution& nu, const char* what) {
  if (mu.size() != nu.size())
    throw DimensionError(std::string(what) + ": distributions on different index sets (" + std::to_string(mu.size()) +
                         " vs " + std::to_string(nu.size()) + ")");
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Total variation

/// Half the l1 distance.
inline double tv_distance(const Distribution& mu, const Distribution& nu) {
  detail::require_same_size(mu, nu, "tv_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += std::abs(mu[i] - nu[i]);
  return 0.5 * s;
}

/// Sum of the positive part of mu - nu.
inline double tv_positive_part(const Distribution& mu, const Distribution& nu) {
  detail::require_same_size(mu, nu, "tv_positive_part");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] > nu[i]) s += mu[i] - nu[i];
  return s;
}

struct MaxEvent {
  std::vector<std::size_t> event;  ///< the set B = {x : mu(x) >= nu(x)}
  double value = 0.0;              ///< mu(B) - nu(B)
};

/// The event maximizing |mu(A) - nu(A)|, together with the attained value.
inline MaxEvent tv_max_event(const Distribution& mu, const Distribution& nu) {
  detail::require_same_size(mu, nu, "tv_max_event");
  MaxEvent out;
  double mu_b = 0.0, nu_b = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] >= nu[i]) {
      out.event.push_back(i);
      mu_b += mu[i];
      nu_b += nu[i];
    }
  }
  out.value = mu_b - nu_b;
  return out;
}

// ---------------------------------------------------------------------------
// Coupling

/// Joint law q on S x S. Marginals are checked against (mu, nu) at construction.
class Coupling {
public:
  Coupling(Eigen::MatrixXd q, const Distribution& mu, const Distribution& nu) : q_(std::move(q)) {
    detail::require_same_size(mu, nu, "Coupling");
    const auto n = static_cast<Eigen::Index>(mu.size());
    if (q_.rows() != n || q_.cols() != n) throw DimensionError("Coupling: joint matrix has wrong shape");
    if ((q_.array() < 0.0).any()) throw DomainError("Coupling: negative joint mass");
    const Eigen::VectorXd rows = q_.rowwise().sum();
    const Eigen::RowVectorXd cols = q_.colwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(rows(i) - mu[static_cast<std::size_t>(i)]) > kProbabilityTolerance ||
          std::abs(cols(i) - nu[static_cast<std::size_t>(i)]) > kProbabilityTolerance)
        throw DomainError("Coupling: marginals do not match");
    }
  }

  const Eigen::MatrixXd& joint() const { return q_; }
  Eigen::VectorXd first_marginal() const { return q_.rowwise().sum(); }
  Eigen::RowVectorXd second_marginal() const { return q_.colwise().sum(); }

  /// P[X != Y] under q.
  double prob_unequal() const { return std::max(0.0, 1.0 - q_.trace()); }

private:
  Eigen::MatrixXd q_;
};

/// The coupling attaining the infimum of P[X != Y]: min(mu, nu) on the diagonal,
/// the excess of mu over nu spread over the excess of nu over mu as an independent product.
inline Coupling optimal_coupling(const Distribution& mu, const Distribution& nu) {
  detail::require_same_size(mu, nu, "optimal_coupling");
  const std::size_t n = mu.size();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  double excess = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) = std::min(mu[x], nu[x]);
    if (nu[x] > mu[x]) excess += nu[x] - mu[x];
  }
  // excess = 1 - sum_z q(z,z); zero exactly when mu == nu, leaving no off-diagonal mass.
  if (excess > 0.0) {
    for (std::size_t x = 0; x < n; ++x) {
      if (!(mu[x] > nu[x])) continue;
      for (std::size_t y = 0; y < n; ++y) {
        if (!(nu[y] > mu[y])) continue;
        q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = (mu[x] - nu[x]) * (nu[y] - mu[y]) / excess;
      }
    }
  }
  return Coupling(std::move(q), mu, nu);
}

// ---------------------------------------------------------------------------
// FiniteChain

class FiniteChain {
public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  /// Chains up to this size get their stationary law from a dense LU solve.
  static constexpr std::size_t kDenseStationaryLimit = 3000;

  /// Validates row-stochasticity. If `stationary` is given it must satisfy
  /// pi P = pi within 1e-10; otherwise it is solved for when the chain is irreducible.
  explicit FiniteChain(Matrix transition, std::optional<Distribution> stationary = std::nullopt,
                       std::vector<std::string> labels = {})
      : p_(std::move(transition)), labels_(std::move(labels)) {
    p_.makeCompressed();
    validate_rows();
    if (!labels_.empty() && labels_.size() != size()) throw DimensionError("FiniteChain: label count mismatch");
    irreducible_ = check_irreducible();
    if (stationary) {
      if (stationary->size() != size()) throw DimensionError("FiniteChain: stationary law has wrong size");
      pi_ = std::move(stationary);
    } else if (irreducible_) {
      pi_ = solve_stationary();
    }
    if (pi_) {
      const double residual = stationarity_residual(*pi_);
      if (residual > kPowerTolerance)
        throw ConstructionError("FiniteChain: pi P != pi (residual " + std::to_string(residual) + ")");
      reversible_ = check_reversible();
    }
  }

  static FiniteChain from_dense(const Eigen::MatrixXd& p, std::optional<Distribution> stationary = std::nullopt,
                                std::vector<std::string> labels = {}) {
    if (p.rows() != p.cols()) throw DimensionError("FiniteChain: transition matrix not square");
    Matrix sparse = p.sparseView(0.0, 0.0);
    return FiniteChain(std::move(sparse), std::move(stationary), std::move(labels));
  }

  std::size_t size() const { return static_cast<std::size_t>(p_.rows()); }
  const Matrix& transition() const { return p_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(p_); }
  double operator()(std::size_t x, std::size_t y) const {
    return p_.coeff(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }

  bool has_stationary() const { return pi_.has_value(); }
  const Distribution& stationary() const {
    if (!pi_) throw DomainError("chain has no (unique) stationary distribution");
    return *pi_;
  }
  bool reversible() const { return reversible_; }
  bool irreducible() const { return irreducible_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// (P f)(x) = sum_y P(x,y) f(y).
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const { return p_ * f; }
  /// (mu P)(y) = sum_x mu(x) P(x,y).
  Eigen::RowVectorXd push(const Eigen::RowVectorXd& mu) const { return mu * p_; }

  /// Out-neighbours in the support graph (y with P(x,y) > 0).
  template <class F>
  void for_each_transition(std::size_t x, F&& f) const {
    for (Matrix::InnerIterator it(p_, static_cast<Eigen::Index>(x)); it; ++it)
      if (it.value() > 0.0) f(static_cast<std::size_t>(it.col()), it.value());
  }

  /// max_y |(pi P)(y) - pi(y)|
  double stationarity_residual(const Distribution& pi) const {
    const Eigen::RowVectorXd r = pi.row() * p_ - pi.row();
    return r.cwiseAbs().maxCoeff();
  }

private:
  void validate_rows() const {
    if (p_.rows() != p_.cols()) throw DimensionError("FiniteChain: transition matrix not square");
    if (p_.rows() == 0) throw DimensionError("FiniteChain: empty state space");
    for (Eigen::Index x = 0; x < p_.outerSize(); ++x) {
      double total = 0.0;
      for (Matrix::InnerIterator it(p_, x); it; ++it) {
        if (!(it.value() >= 0.0 && it.value() <= 1.0 + kProbabilityTolerance))
          throw ConstructionError("FiniteChain: entry outside [0,1] in row " + std::to_string(x));
        total += it.value();
      }
      if (std::abs(total - 1.0) > kProbabilityTolerance)
        throw ConstructionError("FiniteChain: row " + std::to_string(x) + " sums to " + std::to_string(total));
    }
  }

  bool check_irreducible() const {
    const std::size_t n = size();
    // forward reachability from 0 on P and on P^T
    const Matrix pt = Matrix(p_.transpose());
    for (const Matrix* m : {&p_, &pt}) {
      std::vector<char> seen(n, 0);
      std::vector<std::size_t> stack{0};
      seen[0] = 1;
      std::size_t count = 1;
      while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        for (Matrix::InnerIterator it(*m, static_cast<Eigen::Index>(x)); it; ++it) {
          const auto y = static_cast<std::size_t>(it.col());
          if (it.value() > 0.0 && !seen[y]) {
            seen[y] = 1;
            ++count;
            stack.push_back(y);
          }
        }
      }
      if (count != n) return false;
    }
    return true;
  }

  // (P^T - I) pi = 0 with one (redundant) equation replaced by sum(pi) = 1.
  Distribution solve_stationary() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::VectorXd pi;
    if (size() <= kDenseStationaryLimit) {
      Eigen::MatrixXd a = Eigen::MatrixXd(p_.transpose()) - Eigen::MatrixXd::Identity(n, n);
      a.row(n - 1).setOnes();
      pi = a.partialPivLu().solve(rhs);
    } else {
      Eigen::SparseMatrix<double> a = Eigen::SparseMatrix<double>(p_.transpose());
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<std::size_t>(a.nonZeros() + 2 * n));
      for (Eigen::Index k = 0; k < a.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
          if (it.row() != n - 1) trips.emplace_back(it.row(), it.col(), it.value());
      for (Eigen::Index i = 0; i < n - 1; ++i) trips.emplace_back(i, i, -1.0);
      for (Eigen::Index j = 0; j < n; ++j) trips.emplace_back(n - 1, j, 1.0);
      Eigen::SparseMatrix<double> sys(n, n);
      sys.setFromTriplets(trips.begin(), trips.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(sys);
      if (lu.info() != Eigen::Success) throw SingularSystemError("FiniteChain: stationary system is singular");
      pi = lu.solve(rhs);
    }
    return Distribution::normalized(std::vector<double>(pi.data(), pi.data() + n));
  }

  bool check_reversible() const {
    const Distribution& pi = *pi_;
    for (Eigen::Index x = 0; x < p_.outerSize(); ++x) {
      for (Matrix::InnerIterator it(p_, x); it; ++it) {
        const auto y = it.col();
        if (y <= x) continue;
        const double flow = pi[static_cast<std::size_t>(x)] * it.value();
        const double back = pi[static_cast<std::size_t>(y)] * p_.coeff(y, x);
        if (std::abs(flow - back) > kProbabilityTolerance) return false;
      }
      // entries with y < x and P(y,x) == 0 are caught from row y's side only if stored there
      for (Matrix::InnerIterator it(p_, x); it; ++it) {
        const auto y = it.col();
        if (y < x && it.value() > 0.0 && p_.coeff(y, x) == 0.0) return false;
      }
    }
    return true;
  }

  Matrix p_;
  std::vector<std::string> labels_;
  std::optional<Distribution> pi_;
  bool irreducible_ = false;
  bool reversible_ = false;
};

// ---------------------------------------------------------------------------
// Distance rows: P^t(x, .) - pi for a set of starting states

/// Tracks the signed deviations P^t(x,.) - pi for chosen starting states,
/// advanced one step at a time by row-vector x matrix products. The component
/// along pi (which P leaves invariant) is projected out after every step, so
/// geometrically small deviations keep their relative accuracy.
///
/// Holds a reference to the chain; the chain must outlive this object.
class DeviationRows {
public:
  DeviationRows(const FiniteChain& chain, std::vector<std::size_t> starts)
      : chain_(chain), pi_(chain.stationary().row()), starts_(std::move(starts)) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    e_.resize(static_cast<Eigen::Index>(starts_.size()), n);
    for (std::size_t i = 0; i < starts_.size(); ++i) {
      if (starts_[i] >= chain.size()) throw ArgumentError("DeviationRows: start out of range");
      e_.row(static_cast<Eigen::Index>(i)) = -pi_;
      e_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(starts_[i])) += 1.0;
    }
  }

  explicit DeviationRows(const FiniteChain& chain) : DeviationRows(chain, all_states(chain.size())) {}

  void advance() {
    Eigen::MatrixXd next = e_ * chain_.transition();
    const Eigen::VectorXd mass = next.rowwise().sum();
    next.noalias() -= mass * pi_;
    e_ = std::move(next);
    ++t_;
  }

  void advance_to(std::size_t t) {
    if (t < t_) throw ArgumentError("DeviationRows: cannot go back in time");
    while (t_ < t) advance();
  }

  std::size_t time() const { return t_; }
  std::size_t count() const { return starts_.size(); }
  std::size_t start(std::size_t i) const { return starts_[i]; }
  const std::vector<std::size_t>& starts() const { return starts_; }
  const Eigen::MatrixXd& deviations() const { return e_; }
  const Eigen::RowVectorXd& stationary_row() const { return pi_; }

  /// P^t(x_i, .)
  Eigen::RowVectorXd law(std::size_t i) const { return e_.row(static_cast<Eigen::Index>(i)) + pi_; }

  /// d_x(t) = ||P^t(x,.) - pi||_TV
  double tv(std::size_t i) const { return 0.5 * e_.row(static_cast<Eigen::Index>(i)).cwiseAbs().sum(); }

  /// s_x(t) = max_y (1 - P^t(x,y)/pi(y)); requires pi > 0.
  double separation(std::size_t i) const {
    require_positive_pi();
    double s = -std::numeric_limits<double>::infinity();
    const auto row = e_.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index y = 0; y < row.size(); ++y) s = std::max(s, -row(y) / pi_(y));
    return s;
  }

  /// ||P^t(x_i,.) - P^t(x_j,.)||_TV
  double tv_between(std::size_t i, std::size_t j) const {
    return 0.5 * (e_.row(static_cast<Eigen::Index>(i)) - e_.row(static_cast<Eigen::Index>(j))).cwiseAbs().sum();
  }

  std::vector<double> tv_all() const {
    std::vector<double> out(count());
    for (std::size_t i = 0; i < count(); ++i) out[i] = tv(i);
    return out;
  }

  std::vector<double> separation_all() const {
    std::vector<double> out(count());
    for (std::size_t i = 0; i < count(); ++i) out[i] = separation(i);
    return out;
  }

  double max_tv() const {
    double m = 0.0;
    for (std::size_t i = 0; i < count(); ++i) m = std::max(m, tv(i));
    return m;
  }

  double max_separation() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count(); ++i) m = std::max(m, separation(i));
    return m;
  }

  /// max over ordered pairs of tracked starts
  double max_pairwise_tv() const {
    double m = 0.0;
    for (std::size_t i = 0; i < count(); ++i)
      for (std::size_t j = i + 1; j < count(); ++j) m = std::max(m, tv_between(i, j));
    return m;
  }

  static std::vector<std::size_t> all_states(std::size_t n) {
    std::vector<std::size_t> s(n);
    std::iota(s.begin(), s.end(), std::size_t{0});
    return s;
  }

private:
  void require_positive_pi() const {
    if (!(pi_.minCoeff() > 0.0)) throw DomainError("separation distance needs strictly positive stationary mass");
  }

  const FiniteChain& chain_;
  Eigen::RowVectorXd pi_;
  std::vector<std::size_t> starts_;
  Eigen::MatrixXd e_;
  std::size_t t_ = 0;
};

struct StateProfile {
  double max = 0.0;                ///< max over starting states
  std::vector<double> per_state;   ///< indexed by starting state
};

namespace detail {
inline std::size_t checked_time(std::int64_t t, const char* what) {
  if (t < 0) throw ArgumentError(std::string(what) + ": negative time");
  return static_cast<std::size_t>(t);
}
}  // namespace detail

/// d(t) and d_x(t) for all x.
inline StateProfile dist_from_stationarity(const FiniteChain& chain, std::int64_t t) {
  const std::size_t steps = detail::checked_time(t, "dist_from_stationarity");
  DeviationRows rows(chain);
  rows.advance_to(steps);
  StateProfile out{0.0, rows.tv_all()};
  out.max = *std::max_element(out.per_state.begin(), out.per_state.end());
  return out;
}

/// dbar(t) = max_{x,y} ||P^t(x,.) - P^t(y,.)||_TV
inline double dbar(const FiniteChain& chain, std::int64_t t) {
  const std::size_t steps = detail::checked_time(t, "dbar");
  DeviationRows rows(chain);
  rows.advance_to(steps);
  return rows.max_pairwise_tv();
}

/// s(t) and s_x(t) for all x.
inline StateProfile separation_distance(const FiniteChain& chain, std::int64_t t) {
  const std::size_t steps = detail::checked_time(t, "separation_distance");
  if (!(chain.stationary().min() > 0.0)) throw DomainError("separation_distance: zero stationary mass");
  DeviationRows rows(chain);
  rows.advance_to(steps);
  StateProfile out{0.0, rows.separation_all()};
  out.max = *std::max_element(out.per_state.begin(), out.per_state.end());
  return out;
}

/// ||Bin(n,1/2) - Bin(n+1,1/2)||_TV = 2^{-n-1} C(n, floor(n/2)).
inline double binomial_tv_gap(std::int64_t n) {
  if (n < 0) throw ArgumentError("binomial_tv_gap: negative n");
  if (n <= 1020) return std::ldexp(choose(n, n / 2), static_cast<int>(-n - 1));
  return std::exp(log_choose(n, n / 2) - static_cast<double>(n + 1) * std::log(2.0));
}

}  // namespace mixlab
