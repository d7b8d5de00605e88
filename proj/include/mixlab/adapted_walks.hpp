#pragma once

// Martingales on Z^d whose step law is picked from a finite family by an adapted
// rule: simulators for the four examples, Lyapunov and excessive-measure tests for
// transience, and the covariance normalization for pairs of step laws.

#include <boost/rational.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mixlab/chain_core.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/random.hpp"

namespace mixlab {

using Rational = boost::rational<std::int64_t>;
using LatticePoint = std::vector<std::int64_t>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Finite step law on Z^d with rational probabilities and mean zero.
class StepMeasure {
public:
  StepMeasure() = default;

  StepMeasure(std::string name, std::vector<LatticePoint> support, std::vector<Rational> probabilities)
      : name_(std::move(name)), support_(std::move(support)), prob_(std::move(probabilities)) {
    if (support_.empty()) throw ConstructionError("StepMeasure: empty support");
    if (support_.size() != prob_.size()) throw DimensionError("StepMeasure: support and probabilities differ in size");
    dim_ = support_.front().size();
    if (dim_ == 0) throw ConstructionError("StepMeasure: zero dimension");
    Rational total = 0;
    std::vector<Rational> mean(dim_, Rational(0));
    for (std::size_t j = 0; j < support_.size(); ++j) {
      if (support_[j].size() != dim_) throw DimensionError("StepMeasure: increments of mixed dimension");
      if (prob_[j] <= Rational(0)) throw ConstructionError("StepMeasure: probabilities must be positive");
      total += prob_[j];
      for (std::size_t i = 0; i < dim_; ++i) mean[i] += prob_[j] * support_[j][i];
    }
    if (total != Rational(1)) throw ConstructionError("StepMeasure: probabilities do not sum to 1");
    for (const auto& m : mean)
      if (m != Rational(0)) throw ConstructionError("StepMeasure: mean is not zero");
    denominator_ = 1;
    for (const auto& p : prob_) denominator_ = std::lcm(denominator_, p.denominator());
    std::uint64_t acc = 0;
    for (const auto& p : prob_) {
      acc += static_cast<std::uint64_t>(p.numerator() * (denominator_ / p.denominator()));
      cumulative_.push_back(acc);
    }
  }

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return support_.size(); }
  const std::vector<LatticePoint>& support() const { return support_; }
  const std::vector<Rational>& probabilities() const { return prob_; }

  /// E[Z Z^T]
  Eigen::MatrixXd covariance() const {
    const auto d = static_cast<Eigen::Index>(dim_);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t j = 0; j < support_.size(); ++j)
      for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b)
          m(a, b) += to_double(prob_[j]) * static_cast<double>(support_[j][static_cast<std::size_t>(a)] *
                                                              support_[j][static_cast<std::size_t>(b)]);
    return m;
  }

  /// The increments span R^d.
  bool full_dimensional() const {
    Eigen::MatrixXd s(static_cast<Eigen::Index>(support_.size()), static_cast<Eigen::Index>(dim_));
    for (std::size_t j = 0; j < support_.size(); ++j)
      for (std::size_t i = 0; i < dim_; ++i)
        s(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = static_cast<double>(support_[j][i]);
    return static_cast<std::size_t>(Eigen::FullPivLU<Eigen::MatrixXd>(s).rank()) == dim_;
  }

  /// Index of a sampled increment; exact, using the common denominator.
  std::size_t sample(Rng& rng) const {
    const std::uint64_t u = rng.below(static_cast<std::uint64_t>(denominator_));
    return static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
  }

private:
  std::string name_;
  std::size_t dim_ = 0;
  std::vector<LatticePoint> support_;
  std::vector<Rational> prob_;
  std::int64_t denominator_ = 1;
  std::vector<std::uint64_t> cumulative_;
};

inline LatticePoint unit_vector(std::size_t d, std::size_t i, std::int64_t sign) {
  LatticePoint e(d, 0);
  e[i] = sign;
  return e;
}

/// +-e_i with probability weight[i]/2 each.
inline StepMeasure axis_measure(std::string name, const std::vector<Rational>& weight) {
  const std::size_t d = weight.size();
  std::vector<LatticePoint> support;
  std::vector<Rational> prob;
  for (std::size_t i = 0; i < d; ++i) {
    if (weight[i] == Rational(0)) continue;
    for (std::int64_t s : {1, -1}) {
      support.push_back(unit_vector(d, i, s));
      prob.push_back(weight[i] / 2);
    }
  }
  return StepMeasure(std::move(name), std::move(support), std::move(prob));
}

inline StepMeasure simple_measure(std::size_t d) {
  return axis_measure("simple", std::vector<Rational>(d, Rational(1, static_cast<std::int64_t>(d))));
}
inline StepMeasure horizontal_measure() { return axis_measure("horizontal", {Rational(1), Rational(0)}); }
inline StepMeasure vertical_measure() { return axis_measure("vertical", {Rational(0), Rational(1)}); }

/// Coordinate `axis` with probability 1 - (d-1) eps, every other coordinate with eps.
inline StepMeasure max_coordinate_measure(std::size_t d, std::size_t axis, Rational eps) {
  std::vector<Rational> w(d, eps);
  w[axis] = Rational(1) - eps * static_cast<std::int64_t>(d - 1);
  if (w[axis] <= Rational(0) || eps <= Rational(0)) throw ArgumentError("max_coordinate_measure: need 0 < eps < 1/(d-1)");
  return axis_measure("axis" + std::to_string(axis), w);
}

enum class RuleKind { first_visit, region, time_blocks, max_coordinate };

/// Which step law to use, as a function of the visible history.
///   first_visit:    measures[0] on the first visit to a site, measures[1] afterwards
///   region:         measures[0] when |x_1| < |x_2|, measures[1] otherwise
///   time_blocks:    step at time t uses measures[0] iff floor(log2 t) is even (t = 0 included)
///   max_coordinate: measures[i] for i the coordinate of largest |x_i| (lowest index on ties)
struct AdaptedRule {
  RuleKind kind = RuleKind::first_visit;
  std::vector<StepMeasure> measures;
  std::string name;

  std::size_t dim() const { return measures.at(0).dim(); }

  void validate() const {
    if (measures.empty()) throw ArgumentError("AdaptedRule: no step laws");
    for (const auto& m : measures)
      if (m.dim() != dim()) throw DimensionError("AdaptedRule: step laws of different dimension");
    const std::size_t need = kind == RuleKind::max_coordinate ? dim() : 2;
    if (measures.size() != need) throw ArgumentError("AdaptedRule: wrong number of step laws for this rule");
    if (kind == RuleKind::region && dim() != 2) throw DimensionError("AdaptedRule: region rule lives on Z^2");
  }
};

/// Benjamini-Kozma-Schapira: vertical on first visits, horizontal afterwards.
inline AdaptedRule bks_rule() { return {RuleKind::first_visit, {vertical_measure(), horizontal_measure()}, "bks"}; }

/// Horizontal with probability 2/3 when |x| < |y|, vertical with 2/3 otherwise.
inline AdaptedRule gantert_rule() {
  return {RuleKind::region,
          {axis_measure("horizontal-heavy", {Rational(2, 3), Rational(1, 3)}),
           axis_measure("vertical-heavy", {Rational(1, 3), Rational(2, 3)})},
          "gantert"};
}

/// Horizontal on [2^{2k}, 2^{2k+1}), vertical on [2^{2k+1}, 2^{2k+2}).
inline AdaptedRule time_block_rule() {
  return {RuleKind::time_blocks, {horizontal_measure(), vertical_measure()}, "blocks"};
}

inline AdaptedRule max_coordinate_rule(std::size_t d = 3, Rational eps = Rational(1, 20)) {
  AdaptedRule r{RuleKind::max_coordinate, {}, "max-coordinate"};
  for (std::size_t i = 0; i < d; ++i) r.measures.push_back(max_coordinate_measure(d, i, eps));
  return r;
}

/// floor(log2 t) even, with t = 0 counted as even.
inline bool time_block_first(std::uint64_t t) {
  if (t == 0) return true;
  const int level = 63 - __builtin_clzll(t);
  return level % 2 == 0;
}

/// Index of the step law the rule picks at x, time t. `first_visit` tells whether x is new.
inline std::size_t rule_choice(const AdaptedRule& rule, const LatticePoint& x, std::uint64_t t, bool first_visit) {
  switch (rule.kind) {
    case RuleKind::first_visit:
      return first_visit ? 0 : 1;
    case RuleKind::region:
      return std::abs(x[0]) < std::abs(x[1]) ? 0 : 1;
    case RuleKind::time_blocks:
      return time_block_first(t) ? 0 : 1;
    case RuleKind::max_coordinate: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < x.size(); ++i)
        if (std::abs(x[i]) > std::abs(x[best])) best = i;
      return best;
    }
  }
  return 0;
}

struct LatticePointHash {
  std::size_t operator()(const LatticePoint& x) const noexcept {
    std::uint64_t h = 0x2545F4914F6CDD1DULL;
    for (auto c : x) h = splitmix64(h ^ static_cast<std::uint64_t>(c));
    return static_cast<std::size_t>(h);
  }
};

struct AdaptedOptions {
  bool record_path = false;
  std::uint64_t returns_after = 0;  ///< returns_late counts visits to 0 at times > returns_after
};

struct AdaptedSample {
  LatticePoint position;
  std::vector<LatticePoint> path;     ///< X_0..X_n when recorded
  std::uint64_t steps = 0;
  std::uint64_t returns = 0;          ///< #{1 <= t <= n : X_t = 0}
  std::uint64_t returns_late = 0;
  double max_radius = 0.0;            ///< max Euclidean |X_t|
  std::vector<std::uint64_t> choice_counts;             ///< steps taken with each law
  std::vector<std::vector<std::uint64_t>> increment_counts;  ///< [law][support index]
  std::size_t distinct_sites = 0;     ///< first_visit rule only

  double final_radius() const {
    double s = 0.0;
    for (auto c : position) s += static_cast<double>(c) * static_cast<double>(c);
    return std::sqrt(s);
  }
};

inline AdaptedSample simulate_adapted(const AdaptedRule& rule, std::uint64_t n_steps, std::uint64_t seed,
                                      const AdaptedOptions& opt = {}) {
  rule.validate();
  const std::size_t d = rule.dim();
  AdaptedSample out;
  out.position.assign(d, 0);
  out.choice_counts.assign(rule.measures.size(), 0);
  for (const auto& m : rule.measures) out.increment_counts.emplace_back(m.size(), 0);
  if (opt.record_path) out.path.push_back(out.position);
  std::unordered_set<LatticePoint, LatticePointHash> visited;
  Rng rng(seed);
  auto& x = out.position;
  for (std::uint64_t t = 0; t < n_steps; ++t) {
    bool first = false;
    if (rule.kind == RuleKind::first_visit) first = visited.insert(x).second;
    const std::size_t k = rule_choice(rule, x, t, first);
    const auto& mu = rule.measures[k];
    const std::size_t j = mu.sample(rng);
    ++out.choice_counts[k];
    ++out.increment_counts[k][j];
    for (std::size_t i = 0; i < d; ++i) x[i] += mu.support()[j][i];
    ++out.steps;
    if (std::all_of(x.begin(), x.end(), [](std::int64_t c) { return c == 0; })) {
      ++out.returns;
      if (t + 1 > opt.returns_after) ++out.returns_late;
    }
    out.max_radius = std::max(out.max_radius, out.final_radius());
    if (opt.record_path) out.path.push_back(x);
  }
  if (rule.kind == RuleKind::first_visit) {
    visited.insert(x);
    out.distinct_sites = visited.size();
  }
  return out;
}

/// CSV with header t,x1,..,xd.
inline void write_adapted_path(std::ostream& os, const AdaptedSample& s) {
  if (s.path.empty()) throw ArgumentError("write_adapted_path: path was not recorded");
  os << "t";
  for (std::size_t i = 0; i < s.path.front().size(); ++i) os << ",x" << (i + 1);
  os << "\n";
  for (std::size_t t = 0; t < s.path.size(); ++t) {
    os << t;
    for (auto c : s.path[t]) os << "," << c;
    os << "\n";
  }
}

// ---------------------------------------------------------------------------
// Markov kernels on Z^d

/// x -> list of (x + z, p) with exact probabilities; `reach` bounds |z|_inf.
struct LatticeKernel {
  std::size_t dim = 2;
  std::int64_t reach = 1;
  std::function<std::vector<std::pair<LatticePoint, Rational>>(const LatticePoint&)> transitions;
};

/// The Markov chain driven by a state-dependent rule (region or max_coordinate).
inline LatticeKernel rule_kernel(const AdaptedRule& rule) {
  rule.validate();
  if (rule.kind == RuleKind::first_visit || rule.kind == RuleKind::time_blocks)
    throw UnsupportedError("rule_kernel: rule depends on more than the current site");
  LatticeKernel k;
  k.dim = rule.dim();
  for (const auto& m : rule.measures)
    for (const auto& z : m.support())
      for (auto c : z) k.reach = std::max(k.reach, std::abs(c));
  k.transitions = [rule](const LatticePoint& x) {
    const auto& mu = rule.measures[rule_choice(rule, x, 0, false)];
    std::vector<std::pair<LatticePoint, Rational>> out;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      LatticePoint y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += mu.support()[j][i];
      out.emplace_back(std::move(y), mu.probabilities()[j]);
    }
    return out;
  };
  return k;
}

/// Walk with a single step law.
inline LatticeKernel measure_kernel(const StepMeasure& mu) {
  LatticeKernel k;
  k.dim = mu.dim();
  for (const auto& z : mu.support())
    for (auto c : z) k.reach = std::max(k.reach, std::abs(c));
  k.transitions = [mu](const LatticePoint& x) {
    std::vector<std::pair<LatticePoint, Rational>> out;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      LatticePoint y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += mu.support()[j][i];
      out.emplace_back(std::move(y), mu.probabilities()[j]);
    }
    return out;
  };
  return k;
}

namespace detail {

/// Calls f on every point of [-r, r]^d.
template <class F>
void for_each_box_point(std::size_t d, std::int64_t r, F&& f) {
  const double cells = std::pow(static_cast<double>(2 * r + 1), static_cast<double>(d));
  if (cells > static_cast<double>(std::size_t{1} << 28)) throw SizeError("lattice box too large");
  LatticePoint x(d, -r);
  while (true) {
    f(static_cast<const LatticePoint&>(x));
    std::size_t i = 0;
    while (i < d && x[i] == r) x[i++] = -r;
    if (i == d) return;
    ++x[i];
  }
}

}  // namespace detail

struct ExcessiveReport {
  Rational max_column_sum = 0;
  LatticePoint argmax;
  Rational origin_value = 0;
  std::size_t points = 0;
  bool at_most_one() const { return max_column_sum <= Rational(1); }
  bool strict_at_origin() const { return origin_value < Rational(1); }
  bool passes() const { return at_most_one() && strict_at_origin(); }
};

/// (mu P)(x) = sum_y p(y, x) for mu = 1, at every x with |x|_inf <= radius, in exact arithmetic.
inline ExcessiveReport excessive_measure_check(const LatticeKernel& kernel, std::int64_t radius) {
  if (radius < 1) throw ArgumentError("excessive_measure_check: need radius >= 1");
  const std::size_t d = kernel.dim;
  const std::int64_t outer = radius + kernel.reach;
  const auto side = static_cast<std::size_t>(2 * radius + 1);
  std::vector<Rational> column(static_cast<std::size_t>(std::pow(static_cast<double>(side), static_cast<double>(d))), Rational(0));
  auto index = [&](const LatticePoint& x) -> std::optional<std::size_t> {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < d; ++i) {
      if (x[i] < -radius || x[i] > radius) return std::nullopt;
      idx = idx * side + static_cast<std::size_t>(x[i] + radius);
    }
    return idx;
  };
  detail::for_each_box_point(d, outer, [&](const LatticePoint& y) {
    for (const auto& [x, p] : kernel.transitions(y))
      if (auto i = index(x)) column[*i] += p;
  });
  ExcessiveReport out;
  out.points = column.size();
  bool first = true;
  detail::for_each_box_point(d, radius, [&](const LatticePoint& x) {
    const Rational v = column[*index(x)];
    if (first || v > out.max_column_sum) {
      out.max_column_sum = v;
      out.argmax = x;
      first = false;
    }
  });
  out.origin_value = column[*index(LatticePoint(d, 0))];
  return out;
}

// ---------------------------------------------------------------------------
// Covariance conditions

struct LyapunovCondition {
  bool satisfied = false;
  double margin = 0.0;  ///< tr M - 2 lambda_max
};

/// 2 lambda_max < tr M.
inline LyapunovCondition lyapunov_condition(const Eigen::MatrixXd& m, double tol = 1e-12) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DimensionError("lyapunov_condition: matrix must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw DomainError("lyapunov_condition: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol) throw DomainError("lyapunov_condition: matrix is not positive semidefinite");
  LyapunovCondition out;
  out.margin = m.trace() - 2.0 * es.eigenvalues().maxCoeff();
  out.satisfied = out.margin > 0.0;
  return out;
}

/// S^{-1/2} for symmetric positive definite S.
inline Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw DomainError("inverse_sqrt: matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

struct SpdNormalization {
  Eigen::Matrix3d a;              ///< A
  Eigen::Matrix3d m1, m2;         ///< A M_i A^T
  std::array<double, 3> labels{}; ///< (a, b, c) as used in diag(sqrt(b/a), 1, 1)
  double margin1 = 0.0, margin2 = 0.0;
};

/// A with A M_1 A^T and A M_2 A^T both satisfying 2 lambda_max < tr.
/// A = diag(sqrt(b/a),1,1) Pi U^T M_1^{-1/2}, U diagonalizing M_1^{-1/2} M_2 M_1^{-1/2}
/// and Pi ordering its eigenvalues as (a, b, c); every labelling is tried.
inline SpdNormalization normalize_spd_pair(const Eigen::Matrix3d& m1, const Eigen::Matrix3d& m2) {
  for (const auto* m : {&m1, &m2})
    if ((*m - m->transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m->cwiseAbs().maxCoeff()))
      throw DomainError("normalize_spd_pair: matrices must be symmetric");
  const Eigen::Matrix3d a1 = inverse_sqrt(m1);
  Eigen::Matrix3d b = a1 * m2 * a1.transpose();
  b = 0.5 * (b + b.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(b);
  if (es.eigenvalues().minCoeff() <= 0.0) throw DomainError("normalize_spd_pair: M2 is not positive definite");
  const Eigen::Matrix3d u = es.eigenvectors();

  std::array<int, 3> perm{0, 1, 2};
  std::optional<SpdNormalization> best;
  do {
    Eigen::Matrix3d pi = Eigen::Matrix3d::Zero();
    for (int r = 0; r < 3; ++r) pi(r, perm[static_cast<std::size_t>(r)]) = 1.0;
    const double la = es.eigenvalues()(perm[0]), lb = es.eigenvalues()(perm[1]), lc = es.eigenvalues()(perm[2]);
    Eigen::Matrix3d scale = Eigen::Matrix3d::Identity();
    scale(0, 0) = std::sqrt(lb / la);
    SpdNormalization cand;
    cand.a = scale * pi * u.transpose() * a1;
    cand.m1 = cand.a * m1 * cand.a.transpose();
    cand.m2 = cand.a * m2 * cand.a.transpose();
    cand.m1 = 0.5 * (cand.m1 + cand.m1.transpose()).eval();
    cand.m2 = 0.5 * (cand.m2 + cand.m2.transpose()).eval();
    cand.labels = {la, lb, lc};
    cand.margin1 = lyapunov_condition(cand.m1, 1e-9).margin;
    cand.margin2 = lyapunov_condition(cand.m2, 1e-9).margin;
    if (cand.margin1 > 0.0 && cand.margin2 > 0.0 &&
        (!best || std::min(cand.margin1, cand.margin2) > std::min(best->margin1, best->margin2)))
      best = cand;
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (!best) throw ClaimViolation("normalize_spd_pair: no labelling satisfies the condition for both matrices");
  return *best;
}

// ---------------------------------------------------------------------------
// Superharmonic test functions

struct ProbeOptions {
  double alpha = 0.01;
  std::vector<std::int64_t> radii{25, 50, 100};
};

struct ProbeShell {
  std::int64_t radius = 0;
  std::size_t points = 0;
  double worst = 0.0;  ///< max over the shell and the laws of E[phi(x+Z)]/phi(x) - 1
  LatticePoint where;
};

struct ProbeReport {
  std::vector<ProbeShell> shells;
  double worst = -std::numeric_limits<double>::infinity();
  LatticePoint where;
  std::size_t measure = 0;
  bool nonpositive() const { return worst <= 0.0; }
};

/// E[phi(x+Z)]/phi(x) - 1 for phi(x) = |A x|^{-2 alpha}, exact over the finite support.
inline double phi_drift(const StepMeasure& mu, const Eigen::MatrixXd& a, const LatticePoint& x, double alpha) {
  Eigen::VectorXd xv(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) xv(static_cast<Eigen::Index>(i)) = static_cast<double>(x[i]);
  const Eigen::VectorXd ax = a * xv;
  const double r2 = ax.squaredNorm();
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) z(static_cast<Eigen::Index>(i)) = static_cast<double>(mu.support()[j][i]);
    const Eigen::VectorXd az = a * z;
    const double rel = (2.0 * ax.dot(az) + az.squaredNorm()) / r2;  // |A(x+z)|^2 / |Ax|^2 - 1
    s += to_double(mu.probabilities()[j]) * std::expm1(-alpha * std::log1p(rel));
  }
  return s;
}

/// Worst value of E[phi(x+Z)]/phi(x) - 1 over lattice points with round(|x|) = r, r in the
/// radius grid, over all given laws. Requires d >= 3 and the condition 2 lambda_max < tr
/// for every transformed covariance A M A^T.
inline ProbeReport superharmonicity_probe(const std::vector<StepMeasure>& measures, const Eigen::MatrixXd& a,
                                          const ProbeOptions& opt = {}) {
  if (measures.empty()) throw ArgumentError("superharmonicity_probe: no step laws");
  const std::size_t d = measures.front().dim();
  if (d < 3) throw DomainError("superharmonicity_probe: needs dimension d >= 3");
  if (a.rows() != static_cast<Eigen::Index>(d) || a.cols() != static_cast<Eigen::Index>(d))
    throw DimensionError("superharmonicity_probe: transform has wrong size");
  for (const auto& mu : measures) {
    if (mu.dim() != d) throw DimensionError("superharmonicity_probe: laws of different dimension");
    if (!lyapunov_condition(a * mu.covariance() * a.transpose(), 1e-9).satisfied)
      throw DomainError("superharmonicity_probe: transformed covariance violates 2 lambda_max < tr M");
  }
  if (!(opt.alpha > 0.0)) throw ArgumentError("superharmonicity_probe: need alpha > 0");
  ProbeReport out;
  for (auto r : opt.radii) {
    if (r < 1) throw ArgumentError("superharmonicity_probe: radii must be positive");
    ProbeShell shell;
    shell.radius = r;
    shell.worst = -std::numeric_limits<double>::infinity();
    const double lo = (static_cast<double>(r) - 0.5) * (static_cast<double>(r) - 0.5);
    const double hi = (static_cast<double>(r) + 0.5) * (static_cast<double>(r) + 0.5);
    detail::for_each_box_point(d, r + 1, [&](const LatticePoint& x) {
      double n2 = 0.0;
      for (auto c : x) n2 += static_cast<double>(c) * static_cast<double>(c);
      if (n2 < lo || n2 >= hi) return;
      ++shell.points;
      for (std::size_t k = 0; k < measures.size(); ++k) {
        const double v = phi_drift(measures[k], a, x, opt.alpha);
        if (v > shell.worst) {
          shell.worst = v;
          shell.where = x;
        }
        if (v > out.worst) {
          out.worst = v;
          out.where = x;
          out.measure = k;
        }
      }
    });
    out.shells.push_back(shell);
  }
  return out;
}

/// M^{-1/2} for the covariance of a single law.
inline Eigen::MatrixXd normalizing_transform(const StepMeasure& mu) { return inverse_sqrt(mu.covariance()); }

struct SupermartingaleReport {
  double max_excess = -std::numeric_limits<double>::infinity();  ///< max over interior of (P phi - phi)(x)
  std::size_t argmax = 0;
  bool positive = true;      ///< phi > 0 at every evaluated point
  bool non_constant = false;
  /// phi qualifies as a Lyapunov function on the interior and P phi <= phi there.
  bool passes(double tol = 0.0) const { return positive && non_constant && max_excess <= tol; }
};

/// Exact evaluation of P phi - phi at the interior points of a lattice kernel.
inline SupermartingaleReport supermartingale_check(const LatticeKernel& kernel,
                                                   const std::function<double(const LatticePoint&)>& phi,
                                                   const std::vector<LatticePoint>& interior) {
  SupermartingaleReport out;
  std::optional<double> seen;
  auto note = [&](double v) {
    if (!(v > 0.0)) out.positive = false;
    if (!seen) seen = v;
    else if (v != *seen) out.non_constant = true;
  };
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const double fx = phi(interior[i]);
    note(fx);
    double pf = 0.0;
    for (const auto& [y, p] : kernel.transitions(interior[i])) {
      const double fy = phi(y);
      note(fy);
      pf += to_double(p) * fy;
    }
    if (pf - fx > out.max_excess) {
      out.max_excess = pf - fx;
      out.argmax = i;
    }
  }
  return out;
}

inline SupermartingaleReport supermartingale_check(const FiniteChain& chain, const std::vector<double>& phi,
                                                   const std::vector<std::size_t>& interior) {
  if (phi.size() != chain.size()) throw DimensionError("supermartingale_check: phi has wrong size");
  SupermartingaleReport out;
  for (double v : phi) {
    if (!(v > 0.0)) out.positive = false;
    if (v != phi.front()) out.non_constant = true;
  }
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const std::size_t x = interior[i];
    double pf = 0.0;
    chain.for_each_transition(x, [&](std::size_t y, double p) { pf += p * phi[y]; });
    if (pf - phi[x] > out.max_excess) {
      out.max_excess = pf - phi[x];
      out.argmax = i;
    }
  }
  return out;
}

/// min(|A x|^{-2 alpha}, cap) with cap the value at radius r_min (the truncation near 0).
inline std::function<double(const LatticePoint&)> capped_lyapunov(const Eigen::MatrixXd& a, double alpha, double r_min) {
  const double cap = std::pow(r_min, -2.0 * alpha);
  return [a, alpha, cap](const LatticePoint& x) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = static_cast<double>(x[i]);
    const double r2 = (a * v).squaredNorm();
    if (r2 == 0.0) return cap;
    return std::min(cap, std::pow(r2, -alpha));
  };
}

}  // namespace mixlab
