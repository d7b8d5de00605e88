#pragma once

// Random walks on infinite finitely generated groups: Z^d, the free product
// Pi_d of d copies of Z_2 (the d-regular tree) and the lamplighter groups G_d.
// Elements are generated on the fly; exact laws are available for Z^d and Pi_d.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "mixlab/chain_core.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/random.hpp"

namespace mixlab {

using ZdElement = std::vector<std::int64_t>;
/// Reduced word in the generators 0..d-1 of Pi_d (no letter repeated consecutively).
using TreeWord = std::vector<std::uint8_t>;

struct LampGroupElement {
  std::set<ZdElement> on_lamps;
  ZdElement marker;

  bool operator==(const LampGroupElement&) const = default;
  auto operator<=>(const LampGroupElement&) const = default;
};

/// Word length; lower == upper when it is known exactly.
struct WordLength {
  std::uint64_t lower = 0;
  std::uint64_t upper = 0;
  bool exact() const { return lower == upper; }
};

enum class ModelKind { lattice, tree, lamplighter };

template <class E>
struct GroupWalkModel {
  std::string name;
  ModelKind kind = ModelKind::lattice;
  std::size_t rank = 1;        ///< the d in Z^d, Pi_d, G_d
  std::size_t generators = 0;  ///< |S|
  E identity{};
  std::function<void(E&, std::size_t)> apply;          ///< x <- x s_g
  std::function<std::size_t(std::size_t)> inverse;     ///< index of s_g^{-1}
  std::function<WordLength(const E&)> word_length;
  bool lazy = false;

  std::vector<E> neighbors(const E& x) const {
    std::vector<E> out;
    out.reserve(generators);
    for (std::size_t g = 0; g < generators; ++g) {
      E y = x;
      apply(y, g);
      out.push_back(std::move(y));
    }
    return out;
  }
};

inline std::uint64_t l1_norm(const ZdElement& x) {
  std::uint64_t s = 0;
  for (auto c : x) s += static_cast<std::uint64_t>(c < 0 ? -c : c);
  return s;
}

inline std::uint64_t l1_distance(const ZdElement& a, const ZdElement& b) {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<std::uint64_t>(std::abs(a[i] - b[i]));
  return s;
}

/// Z^d with generators +-e_i (generator 2i is +e_i, 2i+1 is -e_i).
inline GroupWalkModel<ZdElement> zd_model(std::size_t d, bool lazy = false) {
  if (d < 1) throw ArgumentError("zd_model: need d >= 1");
  GroupWalkModel<ZdElement> m;
  m.name = "Z^" + std::to_string(d);
  m.kind = ModelKind::lattice;
  m.rank = d;
  m.generators = 2 * d;
  m.identity = ZdElement(d, 0);
  m.apply = [](ZdElement& x, std::size_t g) { x[g / 2] += (g % 2 == 0) ? 1 : -1; };
  m.inverse = [](std::size_t g) { return g ^ std::size_t{1}; };
  m.word_length = [](const ZdElement& x) {
    const auto n = l1_norm(x);
    return WordLength{n, n};
  };
  m.lazy = lazy;
  return m;
}

/// Pi_d: free product of d copies of Z_2, whose Cayley graph is the d-regular tree.
inline GroupWalkModel<TreeWord> tree_model(std::size_t d, bool lazy = false) {
  if (d < 2 || d > 255) throw ArgumentError("tree_model: need 2 <= d <= 255");
  GroupWalkModel<TreeWord> m;
  m.name = "Pi_" + std::to_string(d);
  m.kind = ModelKind::tree;
  m.rank = d;
  m.generators = d;
  m.apply = [](TreeWord& w, std::size_t g) {
    if (!w.empty() && w.back() == g)
      w.pop_back();
    else
      w.push_back(static_cast<std::uint8_t>(g));
  };
  m.inverse = [](std::size_t g) { return g; };
  m.word_length = [](const TreeWord& w) { return WordLength{w.size(), w.size()}; };
  m.lazy = lazy;
  return m;
}

/// Exact word length in G_1: switches plus the shortest walk from 0 to the
/// marker that visits every on-lamp.
inline std::uint64_t lamplighter1_word_length(const std::set<ZdElement>& lamps, std::int64_t x) {
  std::int64_t lo = std::min<std::int64_t>(0, x), hi = std::max<std::int64_t>(0, x);
  for (const auto& s : lamps) {
    lo = std::min(lo, s[0]);
    hi = std::max(hi, s[0]);
  }
  const std::int64_t left_first = -lo + (hi - lo) + (hi - x);
  const std::int64_t right_first = hi + (hi - lo) + (x - lo);
  return lamps.size() + static_cast<std::uint64_t>(std::min(left_first, right_first));
}

/// Certified interval for the word length in G_d. Exact for d = 1.
/// Lower: switches plus max(longest detour 0 -> s -> marker, number of sites other than 0
/// that must be entered). Upper: switches plus a nearest-neighbour tour ending at the marker.
inline WordLength lamplighter_word_length(const LampGroupElement& e) {
  const std::size_t d = e.marker.size();
  if (d == 1) {
    const auto n = lamplighter1_word_length(e.on_lamps, e.marker[0]);
    return {n, n};
  }
  const ZdElement origin(d, 0);
  std::uint64_t detour = l1_norm(e.marker);
  std::size_t sites = e.marker == origin ? 0 : 1;
  for (const auto& s : e.on_lamps) {
    detour = std::max(detour, l1_norm(s) + l1_distance(s, e.marker));
    if (s != origin && s != e.marker) ++sites;
  }
  WordLength out;
  out.lower = e.on_lamps.size() + std::max<std::uint64_t>(detour, sites);

  std::vector<ZdElement> todo(e.on_lamps.begin(), e.on_lamps.end());
  std::vector<bool> done(todo.size(), false);
  ZdElement at = origin;
  std::uint64_t tour = 0;
  for (std::size_t k = 0; k < todo.size(); ++k) {
    std::size_t best = 0;
    std::uint64_t best_d = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t i = 0; i < todo.size(); ++i)
      if (!done[i]) {
        const auto dist = l1_distance(at, todo[i]);
        if (dist < best_d) {
          best_d = dist;
          best = i;
        }
      }
    done[best] = true;
    tour += best_d;
    at = todo[best];
  }
  tour += l1_distance(at, e.marker);
  out.upper = e.on_lamps.size() + tour;
  return out;
}

/// G_d: generators 0..2d-1 move the marker by +-e_i, generator 2d switches the lamp at the marker.
inline GroupWalkModel<LampGroupElement> lamplighter_group_model(std::size_t d, bool lazy = false) {
  if (d < 1) throw ArgumentError("lamplighter_group_model: need d >= 1");
  GroupWalkModel<LampGroupElement> m;
  m.name = "G_" + std::to_string(d);
  m.kind = ModelKind::lamplighter;
  m.rank = d;
  m.generators = 2 * d + 1;
  m.identity = LampGroupElement{{}, ZdElement(d, 0)};
  m.apply = [d](LampGroupElement& x, std::size_t g) {
    if (g == 2 * d) {
      auto it = x.on_lamps.find(x.marker);
      if (it != x.on_lamps.end())
        x.on_lamps.erase(it);
      else
        x.on_lamps.insert(x.marker);
    } else {
      x.marker[g / 2] += (g % 2 == 0) ? 1 : -1;
    }
  };
  m.inverse = [d](std::size_t g) { return g == 2 * d ? g : (g ^ std::size_t{1}); };
  m.word_length = lamplighter_word_length;
  m.lazy = lazy;
  return m;
}

struct BuiltinModels {
  GroupWalkModel<ZdElement> lattice;
  GroupWalkModel<TreeWord> tree;
  GroupWalkModel<LampGroupElement> lamplighter;
};

/// Z^d, Pi_max(d,2) and G_d with a common laziness flag.
inline BuiltinModels builtin_models(std::size_t d, bool lazy = false) {
  return {zd_model(d, lazy), tree_model(std::max<std::size_t>(d, 2), lazy), lamplighter_group_model(d, lazy)};
}

template <class E>
E walk_sample(const GroupWalkModel<E>& model, std::int64_t n_steps, Rng& rng) {
  E x = model.identity;
  for (std::int64_t i = 0; i < n_steps; ++i) {
    if (model.lazy && rng.coin()) continue;
    model.apply(x, static_cast<std::size_t>(rng.below(model.generators)));
  }
  return x;
}

struct SpeedEstimate {
  double v_hat = 0.0;      ///< mean of |X_n|/n (lower word-length bound when not exact)
  double std_error = 0.0;
  double v_upper = 0.0;    ///< same with the upper word-length bound
  double std_error_upper = 0.0;
  bool exact = true;       ///< all sampled word lengths were exact
};

/// Walk w uses the stream stream_seed(seed, w).
template <class E>
SpeedEstimate speed_estimate(const GroupWalkModel<E>& model, std::int64_t n_steps, std::size_t n_walks,
                             std::uint64_t seed) {
  if (n_steps < 1) throw ArgumentError("speed_estimate: need n_steps >= 1");
  if (n_walks < 2) throw ArgumentError("speed_estimate: need at least two walks");
  double s_lo = 0.0, ss_lo = 0.0, s_hi = 0.0, ss_hi = 0.0;
  SpeedEstimate out;
  const double n = static_cast<double>(n_steps);
  for (std::size_t w = 0; w < n_walks; ++w) {
    Rng rng(stream_seed(seed, w));
    const auto len = model.word_length(walk_sample(model, n_steps, rng));
    if (!len.exact()) out.exact = false;
    const double lo = static_cast<double>(len.lower) / n, hi = static_cast<double>(len.upper) / n;
    s_lo += lo;
    ss_lo += lo * lo;
    s_hi += hi;
    ss_hi += hi * hi;
  }
  const double k = static_cast<double>(n_walks);
  auto se = [k](double s, double ss) { return std::sqrt(std::max(0.0, (ss - s * s / k) / (k - 1.0)) / k); };
  out.v_hat = s_lo / k;
  out.std_error = se(s_lo, ss_lo);
  out.v_upper = s_hi / k;
  out.std_error_upper = se(s_hi, ss_hi);
  return out;
}

/// Exact law of X_n grouped into classes of equally likely elements.
/// Lattice: one class per point of the box [-n, n]^d. Tree: one class per sphere.
struct ExactLaw {
  std::int64_t n = 0;
  std::vector<double> mass;            ///< total probability of each class
  std::vector<double> log_multiplicity;  ///< log of the class size
  std::vector<std::uint64_t> length;   ///< word length of the class
  std::vector<ZdElement> points;       ///< lattice only

  /// H(X_n) in nats.
  double entropy() const {
    double h = 0.0;
    for (std::size_t c = 0; c < mass.size(); ++c)
      if (mass[c] > 0.0) h += mass[c] * (log_multiplicity[c] - std::log(mass[c]));
    return h;
  }

  double mean_length() const {
    double s = 0.0;
    for (std::size_t c = 0; c < mass.size(); ++c) s += mass[c] * static_cast<double>(length[c]);
    return s;
  }

  double mean_square_length() const {
    double s = 0.0;
    for (std::size_t c = 0; c < mass.size(); ++c) s += mass[c] * static_cast<double>(length[c] * length[c]);
    return s;
  }

  /// E of the Euclidean norm; lattice only.
  double mean_euclidean() const {
    if (points.empty()) throw UnsupportedError("ExactLaw::mean_euclidean: lattice laws only");
    double s = 0.0;
    for (std::size_t c = 0; c < mass.size(); ++c) {
      double r2 = 0.0;
      for (auto v : points[c]) r2 += static_cast<double>(v * v);
      s += mass[c] * std::sqrt(r2);
    }
    return s;
  }

  /// log of the number of elements with positive probability.
  double log_support() const {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < mass.size(); ++c)
      if (mass[c] > 0.0) mx = std::max(mx, log_multiplicity[c]);
    double s = 0.0;
    for (std::size_t c = 0; c < mass.size(); ++c)
      if (mass[c] > 0.0) s += std::exp(log_multiplicity[c] - mx);
    return mx + std::log(s);
  }

  double total() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
  }
};

inline constexpr std::int64_t kLatticeExactLimit = 40;
inline constexpr std::int64_t kTreeExactLimit = 200;

namespace detail {

/// Evolves the law of X_n on Z^d over the box [-n_max, n_max]^d.
class LatticeLawStepper {
public:
  LatticeLawStepper(std::size_t d, std::int64_t n_max, bool lazy)
      : d_(d), r_(n_max), side_(static_cast<std::size_t>(2 * n_max + 1)), lazy_(lazy) {
    std::size_t cells = 1;
    for (std::size_t i = 0; i < d; ++i) {
      if (cells > (std::size_t{1} << 26) / side_) throw SizeError("exact_distribution: lattice box too large");
      cells *= side_;
    }
    mass_.assign(cells, 0.0);
    stride_.assign(d, 1);
    for (std::size_t i = d; i-- > 1;) stride_[i - 1] = stride_[i] * side_;
    std::size_t origin = 0;
    for (std::size_t i = 0; i < d; ++i) origin += static_cast<std::size_t>(r_) * stride_[i];
    mass_[origin] = 1.0;
  }

  void step() {
    std::vector<double> next(mass_.size(), 0.0);
    const double hold = lazy_ ? 0.5 : 0.0;
    const double move = (1.0 - hold) / static_cast<double>(2 * d_);
    for (std::size_t c = 0; c < mass_.size(); ++c) {
      const double m = mass_[c];
      if (m == 0.0) continue;
      next[c] += hold * m;
      for (std::size_t i = 0; i < d_; ++i) {
        const auto coord = static_cast<std::int64_t>((c / stride_[i]) % side_);
        if (coord + 1 >= static_cast<std::int64_t>(side_) || coord == 0)
          throw SizeError("exact_distribution: walk left the box");
        next[c + stride_[i]] += move * m;
        next[c - stride_[i]] += move * m;
      }
    }
    mass_ = std::move(next);
    ++n_;
  }

  ExactLaw law() const {
    ExactLaw out;
    out.n = n_;
    for (std::size_t c = 0; c < mass_.size(); ++c) {
      if (mass_[c] == 0.0) continue;
      ZdElement p(d_);
      for (std::size_t i = 0; i < d_; ++i)
        p[i] = static_cast<std::int64_t>((c / stride_[i]) % side_) - r_;
      out.mass.push_back(mass_[c]);
      out.log_multiplicity.push_back(0.0);
      out.length.push_back(l1_norm(p));
      out.points.push_back(std::move(p));
    }
    return out;
  }

private:
  std::size_t d_;
  std::int64_t r_;
  std::size_t side_;
  bool lazy_;
  std::int64_t n_ = 0;
  std::vector<double> mass_;
  std::vector<std::size_t> stride_;
};

/// Radial law of the walk on Pi_d; all vertices of a sphere are equally likely.
class TreeLawStepper {
public:
  TreeLawStepper(std::size_t d, bool lazy) : d_(d), lazy_(lazy), radial_{1.0} {}

  void step() {
    std::vector<double> next(radial_.size() + 1, 0.0);
    const double hold = lazy_ ? 0.5 : 0.0;
    const double move = 1.0 - hold;
    const double up = static_cast<double>(d_ - 1) / static_cast<double>(d_);
    for (std::size_t r = 0; r < radial_.size(); ++r) {
      const double m = radial_[r];
      if (m == 0.0) continue;
      next[r] += hold * m;
      if (r == 0) {
        next[1] += move * m;
      } else {
        next[r + 1] += move * up * m;
        next[r - 1] += move * (1.0 - up) * m;
      }
    }
    radial_ = std::move(next);
    ++n_;
  }

  ExactLaw law() const {
    ExactLaw out;
    out.n = n_;
    const double log_d = std::log(static_cast<double>(d_)), log_d1 = std::log(static_cast<double>(d_ - 1));
    for (std::size_t r = 0; r < radial_.size(); ++r) {
      out.mass.push_back(radial_[r]);
      out.log_multiplicity.push_back(r == 0 ? 0.0 : log_d + static_cast<double>(r - 1) * log_d1);
      out.length.push_back(r);
    }
    return out;
  }

private:
  std::size_t d_;
  bool lazy_;
  std::int64_t n_ = 0;
  std::vector<double> radial_;
};

}  // namespace detail

/// Exact law of X_n: Z^d for n <= 40, Pi_d for n <= 200. Lamplighter groups are unsupported.
template <class E>
ExactLaw exact_distribution(const GroupWalkModel<E>& model, std::int64_t n) {
  if (n < 0) throw ArgumentError("exact_distribution: negative n");
  switch (model.kind) {
    case ModelKind::lattice: {
      if (n > kLatticeExactLimit) throw SizeError("exact_distribution: lattice laws limited to n <= 40");
      detail::LatticeLawStepper s(model.rank, n + 1, model.lazy);
      for (std::int64_t i = 0; i < n; ++i) s.step();
      return s.law();
    }
    case ModelKind::tree: {
      if (n > kTreeExactLimit) throw SizeError("exact_distribution: tree laws limited to n <= 200");
      detail::TreeLawStepper s(model.rank, model.lazy);
      for (std::int64_t i = 0; i < n; ++i) s.step();
      return s.law();
    }
    case ModelKind::lamplighter:
      break;
  }
  throw UnsupportedError("exact_distribution: no exact law for " + model.name);
}

struct EntropyCurve {
  std::vector<double> entropy;      ///< H(X_n), n = 0..n_max, nats
  std::vector<double> increment;    ///< h_n = H(X_n) - H(X_{n-1}); increment[0] = 0
  std::vector<double> mean_length;  ///< E|X_n|
  std::vector<double> mean_square_length;
  std::vector<double> log_support;  ///< log of the number of reachable elements
  double h_estimate = 0.0;          ///< h_{n_max}
  bool increments_monotone = true;  ///< h_n non-increasing within the tolerance

  std::size_t n_max() const { return entropy.size() - 1; }

  /// First (n, m) with E|X_{n+m}| > E|X_n| + E|X_m| + tol, if any.
  std::optional<std::pair<std::size_t, std::size_t>> subadditivity_violation(double tol = 1e-9) const {
    for (std::size_t a = 1; a <= n_max(); ++a)
      for (std::size_t b = a; a + b <= n_max(); ++b)
        if (mean_length[a + b] > mean_length[a] + mean_length[b] + tol) return std::make_pair(a, b);
    return std::nullopt;
  }
};

template <class E>
EntropyCurve entropy_curve(const GroupWalkModel<E>& model, std::int64_t n_max, double tol = 1e-9) {
  if (n_max < 1) throw ArgumentError("entropy_curve: need n_max >= 1");
  EntropyCurve out;
  auto record = [&](const ExactLaw& law) {
    out.entropy.push_back(law.entropy());
    out.increment.push_back(out.entropy.size() == 1 ? 0.0 : out.entropy.back() - out.entropy[out.entropy.size() - 2]);
    out.mean_length.push_back(law.mean_length());
    out.mean_square_length.push_back(law.mean_square_length());
    out.log_support.push_back(law.log_support());
  };
  auto run = [&](auto& stepper) {
    record(stepper.law());
    for (std::int64_t i = 0; i < n_max; ++i) {
      stepper.step();
      record(stepper.law());
    }
  };
  switch (model.kind) {
    case ModelKind::lattice: {
      if (n_max > kLatticeExactLimit) throw SizeError("entropy_curve: lattice laws limited to n <= 40");
      detail::LatticeLawStepper s(model.rank, n_max + 1, model.lazy);
      run(s);
      break;
    }
    case ModelKind::tree: {
      if (n_max > kTreeExactLimit) throw SizeError("entropy_curve: tree laws limited to n <= 200");
      detail::TreeLawStepper s(model.rank, model.lazy);
      run(s);
      break;
    }
    case ModelKind::lamplighter:
      throw UnsupportedError("entropy_curve: no exact law for " + model.name);
  }
  for (std::size_t n = 2; n < out.increment.size(); ++n)
    if (out.increment[n] > out.increment[n - 1] + tol) out.increments_monotone = false;
  out.h_estimate = out.increment.back();
  return out;
}

/// CSV with header n,H,h,mean_length.
inline void write_entropy_curve(std::ostream& os, const EntropyCurve& c) {
  os << "n,H,h,mean_length\n";
  char buf[160];
  for (std::size_t n = 0; n < c.entropy.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", n, c.entropy[n], c.increment[n], c.mean_length[n]);
    os << buf;
  }
}

struct KvvRow {
  std::size_t n = 0;
  double entropy_side = 0.0;   ///< (log 2 + H(X_n)) / n
  double second_moment = 0.0;  ///< E|X_n|^2 / (2n^2)
  double speed_side = 0.0;     ///< (E|X_n|)^2 / (2n^2)
  double sphere_gap = 0.0;     ///< (E|X_n| + 1) log(2|S|) / n - H(X_n) / n
  bool holds = true;
};

struct KvvReport {
  std::vector<KvvRow> rows;
  bool all_hold() const {
    return std::all_of(rows.begin(), rows.end(), [](const KvvRow& r) { return r.holds; });
  }
};

/// Both entropy/speed bridges at every n = 1..n_max of the exact curve.
/// |S| is the number of generators, so spheres satisfy |S_k| <= |S|^k.
template <class E>
KvvReport kvv_cross_check(const GroupWalkModel<E>& model, const EntropyCurve& curve, double tol = 1e-9) {
  KvvReport out;
  const double log2s = std::log(2.0 * static_cast<double>(model.generators));
  for (std::size_t n = 1; n <= curve.n_max(); ++n) {
    KvvRow r;
    r.n = n;
    const double nn = static_cast<double>(n);
    r.entropy_side = (std::log(2.0) + curve.entropy[n]) / nn;
    r.second_moment = curve.mean_square_length[n] / (2.0 * nn * nn);
    r.speed_side = curve.mean_length[n] * curve.mean_length[n] / (2.0 * nn * nn);
    r.sphere_gap = (curve.mean_length[n] + 1.0) * log2s / nn - curve.entropy[n] / nn;
    r.holds = r.entropy_side + tol >= r.second_moment && r.second_moment + tol >= r.speed_side && r.sphere_gap >= -tol;
    out.rows.push_back(r);
  }
  return out;
}

template <class E>
KvvReport kvv_cross_check(const GroupWalkModel<E>& model, std::int64_t n_max) {
  return kvv_cross_check(model, entropy_curve(model, n_max));
}

struct HarmonicReport {
  double max_residual = 0.0;
  std::size_t argmax = 0;           ///< index into the interior list
  bool touches_boundary = false;    ///< an interior point has a neighbour outside the domain
};

/// max over the interior of |u(x) - (Pu)(x)| for a finite chain. `domain` marks the
/// states on which u is meaningful; an empty mask means all states.
inline HarmonicReport harmonic_check(const FiniteChain& chain, const std::vector<double>& u,
                                     const std::vector<std::size_t>& interior,
                                     const std::vector<bool>& domain = {}) {
  if (u.size() != chain.size()) throw DimensionError("harmonic_check: u has wrong size");
  if (!domain.empty() && domain.size() != chain.size()) throw DimensionError("harmonic_check: domain mask has wrong size");
  HarmonicReport out;
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const std::size_t x = interior[i];
    if (x >= chain.size()) throw DomainError("harmonic_check: interior state out of range");
    double pu = 0.0;
    chain.for_each_transition(x, [&](std::size_t y, double p) {
      pu += p * u[y];
      if (!domain.empty() && !domain[y]) out.touches_boundary = true;
    });
    const double r = std::abs(u[x] - pu);
    if (r > out.max_residual) {
      out.max_residual = r;
      out.argmax = i;
    }
  }
  return out;
}

/// Same for a group walk; u returns nullopt outside its truncated domain, and such
/// neighbours count as 0 with the boundary flag raised.
template <class E>
HarmonicReport harmonic_check(const GroupWalkModel<E>& model, const std::function<std::optional<double>(const E&)>& u,
                              const std::vector<E>& interior) {
  HarmonicReport out;
  const double hold = model.lazy ? 0.5 : 0.0;
  const double move = (1.0 - hold) / static_cast<double>(model.generators);
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const auto ux = u(interior[i]);
    if (!ux) throw DomainError("harmonic_check: interior point outside the domain of u");
    double pu = hold * *ux;
    for (const auto& y : model.neighbors(interior[i])) {
      const auto uy = u(y);
      if (uy)
        pu += move * *uy;
      else
        out.touches_boundary = true;
    }
    const double r = std::abs(*ux - pu);
    if (r > out.max_residual) {
      out.max_residual = r;
      out.argmax = i;
    }
  }
  return out;
}

struct LampWalkSample {
  LampGroupElement state;
  std::size_t lamps_on = 0;
  std::uint64_t marker_l1 = 0;
  WordLength length;
};

/// Non-lazy walk on G_d driven by its 2d+1 generators.
inline LampWalkSample lamp_group_walk(std::size_t d, std::int64_t n_steps, std::uint64_t seed) {
  if (d < 1) throw ArgumentError("lamp_group_walk: need d >= 1");
  if (n_steps < 0) throw ArgumentError("lamp_group_walk: negative n_steps");
  // Coordinates are packed into one word while walking: |x_i| <= n_steps.
  std::size_t bits = 1;
  while ((std::int64_t{1} << bits) < 2 * n_steps + 1) ++bits;
  if (bits * d > 64) throw SizeError("lamp_group_walk: n_steps too large for this dimension");
  const std::uint64_t mask = bits == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
  auto pack = [&](const ZdElement& x) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < d; ++i) key |= (static_cast<std::uint64_t>(x[i] + n_steps) & mask) << (bits * i);
    return key;
  };

  Rng rng(seed);
  ZdElement x(d, 0);
  std::unordered_set<std::uint64_t> lamps;
  std::vector<ZdElement> visited;
  for (std::int64_t t = 0; t < n_steps; ++t) {
    const auto g = static_cast<std::size_t>(rng.below(2 * d + 1));
    if (g == 2 * d) {
      const auto key = pack(x);
      if (!lamps.erase(key)) {
        lamps.insert(key);
        visited.push_back(x);
      }
    } else {
      x[g / 2] += (g % 2 == 0) ? 1 : -1;
    }
  }
  LampWalkSample out;
  for (auto& v : visited)
    if (lamps.count(pack(v))) out.state.on_lamps.insert(v);
  out.state.marker = x;
  out.lamps_on = out.state.on_lamps.size();
  out.marker_l1 = l1_norm(x);
  out.length = lamplighter_word_length(out.state);
  return out;
}

}  // namespace mixlab
