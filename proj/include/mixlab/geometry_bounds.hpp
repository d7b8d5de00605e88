#pragma once

// Dirichlet forms, distance second moments of walks on transitive graphs, the
// diameter bounds on t_rel and t_mix, and the Foelner-set construction on Z^d.
// Inner products use counting measure throughout.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mixlab/chain_core.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/graph_builders.hpp"
#include "mixlab/spectral_metrics.hpp"

namespace mixlab {

/// Q_n(f) = <(I - P^n) f, f>.
inline double dirichlet_form(const FiniteChain& chain, const Eigen::VectorXd& f, std::int64_t n) {
  if (n < 0) throw ArgumentError("dirichlet_form: negative n");
  if (static_cast<std::size_t>(f.size()) != chain.size()) throw DimensionError("dirichlet_form: f has wrong size");
  if (!f.allFinite()) throw DomainError("dirichlet_form: f must be finite");
  Eigen::VectorXd g = f;
  for (std::int64_t i = 0; i < n; ++i) g = chain.apply(g);
  return (f - g).dot(f);
}

/// Smallest positive off-diagonal transition probability.
inline double min_edge_probability(const FiniteChain& chain) {
  double m = 1.0;
  for (std::size_t x = 0; x < chain.size(); ++x)
    chain.for_each_transition(x, [&](std::size_t y, double p) {
      if (y != x) m = std::min(m, p);
    });
  return m;
}

struct DirichletRow {
  std::size_t n = 0;
  double second_moment = 0.0;  ///< E[rho(X_0, X_n)^2]
  double q_n = 0.0;            ///< Q_n(f), f the unit second eigenfunction
  double ratio = 0.0;          ///< Q_n / Q_1
  double lemma_bound = 0.0;    ///< p_edge * Q_n / Q_1
  double theorem_bound = 0.0;  ///< n / 2d
  bool holds = true;
};

struct DirichletReport {
  double lambda2 = 0.0;
  double t_rel = 0.0;
  std::size_t degree = 0;
  double p_edge = 0.0;
  std::vector<DirichletRow> rows;
  bool all_hold() const {
    for (const auto& r : rows)
      if (!r.holds) return false;
    return true;
  }
};

/// E[rho(X_0,X_n)^2] >= n/2d for n <= t_rel and the Dirichlet-form ratio bound
/// E[rho^2] >= p_edge Q_n(f)/Q_1(f), on a vertex-transitive d-regular graph.
/// p_edge = 1/d for simple random walk and 1/2d for its lazy version.
/// Rows cover n = 1..n_max (default floor(t_rel)).
inline DirichletReport distance_moment_check(const FiniteChain& chain, const Graph& g,
                                             std::optional<std::size_t> n_max = std::nullopt, double tol = 1e-10) {
  if (!g.vertex_transitive()) throw UnsupportedError("distance_moment_check: graph must be vertex-transitive");
  if (g.size() != chain.size()) throw DimensionError("distance_moment_check: chain and graph sizes differ");
  if (g.size() > kDenseSpectrumLimit) throw SizeError("distance_moment_check: graph too large");
  DirichletReport out;
  out.degree = g.max_degree();
  out.p_edge = min_edge_probability(chain);

  const Eigen::MatrixXd p = chain.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (p + p.transpose()));
  if (es.info() != Eigen::Success) throw NoConvergenceError("distance_moment_check: eigensolver failed");
  const Eigen::Index k = p.rows() - 2;  // eigenvalues ascending
  out.lambda2 = es.eigenvalues()(k);
  out.t_rel = detail::relaxation_from(out.lambda2);
  const Eigen::VectorXd f = es.eigenvectors().col(k).normalized();
  const std::size_t last = n_max.value_or(static_cast<std::size_t>(std::floor(out.t_rel + 1e-9)));

  const auto dist = bfs_distances(g, 0);
  Eigen::RowVectorXd law = Eigen::RowVectorXd::Zero(p.rows());
  law(0) = 1.0;
  Eigen::VectorXd pnf = f;
  const double q1 = dirichlet_form(chain, f, 1);
  const double d = static_cast<double>(out.degree);
  for (std::size_t n = 1; n <= last; ++n) {
    law = chain.push(law);
    pnf = chain.apply(pnf);
    DirichletRow r;
    r.n = n;
    for (Eigen::Index x = 0; x < law.size(); ++x) {
      const auto rho = static_cast<double>(dist[static_cast<std::size_t>(x)]);
      r.second_moment += law(x) * rho * rho;
    }
    r.q_n = (f - pnf).dot(f);
    r.ratio = r.q_n / q1;
    r.lemma_bound = out.p_edge * r.ratio;
    r.theorem_bound = static_cast<double>(n) / (2.0 * d);
    r.holds = r.second_moment + tol >= r.theorem_bound && r.second_moment + tol >= r.lemma_bound;
    out.rows.push_back(r);
  }
  return out;
}

struct DiameterBounds {
  double t_rel = 0.0;
  std::size_t t_mix = 0;
  std::size_t diameter = 0;
  std::size_t degree = 0;
  double trel_bound = 0.0;  ///< 2 d diam^2
  double tmix_bound = 0.0;  ///< 2 d diam^2 log|G|
  double trel_margin = 0.0;  ///< bound / value
  double tmix_margin = 0.0;
  bool holds() const { return t_rel <= trel_bound && static_cast<double>(t_mix) <= tmix_bound; }
};

/// t_rel <= 2d diam^2 and t_mix <= 2d diam^2 log|G| for the lazy walk on a transitive graph.
inline DiameterBounds corollary_trel_diam(const Graph& g) {
  if (!g.vertex_transitive()) throw UnsupportedError("corollary_trel_diam: graph must be vertex-transitive");
  const auto chain = lazy_srw(g);
  DiameterBounds out;
  out.t_rel = relaxation_time(chain);
  ScanOptions opt;
  opt.starts = {0};
  out.t_mix = t_mix(chain, 0.25, opt);
  out.diameter = diameter(g);
  out.degree = g.max_degree();
  const double d2 = static_cast<double>(out.diameter) * static_cast<double>(out.diameter);
  out.trel_bound = 2.0 * static_cast<double>(out.degree) * d2;
  out.tmix_bound = out.trel_bound * std::log(static_cast<double>(g.size()));
  out.trel_margin = out.trel_bound / out.t_rel;
  out.tmix_margin = out.t_mix == 0 ? std::numeric_limits<double>::infinity() : out.tmix_bound / static_cast<double>(out.t_mix);
  return out;
}

/// max over j = 1..j_max of |Delta_j - Delta_{j-1}| - ||(I-P)f||^2 with Delta_j = Q_{j+1}(f) - Q_j(f).
/// Nonpositive for symmetric P.
inline double second_difference_excess(const FiniteChain& chain, const Eigen::VectorXd& f, std::size_t j_max) {
  const Eigen::VectorXd pf = chain.apply(f);
  const double delta = (f - pf).squaredNorm();
  std::vector<double> q{0.0};
  Eigen::VectorXd g = f;
  for (std::size_t j = 1; j <= j_max + 1; ++j) {
    g = chain.apply(g);
    q.push_back((f - g).dot(f));
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= j_max; ++j) {
    const double dj = q[j + 1] - q[j], dj1 = q[j] - q[j - 1];
    worst = std::max(worst, std::abs(dj - dj1) - delta);
  }
  return worst;
}

/// n/d - (n^2/2d) ||(I-P)f||^2 / Q_1(f).
inline double distance_lower_bound(std::size_t n, std::size_t generators, double energy_ratio) {
  const double nn = static_cast<double>(n), d = static_cast<double>(generators);
  return nn / d - nn * nn / (2.0 * d) * energy_ratio;
}

// ---------------------------------------------------------------------------
// Foelner construction on Z^d

struct FolnerOptions {
  bool lazy = false;
  /// The dyadic search looks at phi_{2^m} for m <= max_doublings and needs P^i f for i < 2^{m+1}.
  std::size_t max_doublings = 8;
};

struct FolnerResult {
  std::size_t dim = 0;
  std::size_t side = 0;
  double box_volume = 0.0;
  double boundary_edges = 0.0;
  double delta = 0.0;        ///< |boundary| / |A_k|
  double theta = 0.0;        ///< ||P psi - psi||, psi = 1_A / sqrt|A|
  std::size_t ell = 0;       ///< 2^ell theta <= 1/2 < 2^{ell+1} theta
  std::size_t m = 0;         ///< first m >= ell with 2 a_m - a_{m+1} >= 1/(8 theta)
  double target = 0.0;       ///< 1 / (8 theta)
  double achieved = 0.0;     ///< 2 a_m - a_{m+1}
  std::vector<double> a;     ///< a_j = <phi_{2^j}, psi>, j = 0..m+1
  double energy = 0.0;       ///< ||(I-P) phi||^2
  double form = 0.0;         ///< <phi, (I-P) phi> = Q_1(phi)
  double ratio = 0.0;        ///< energy / form
  double bound = 0.0;        ///< 32 theta
  bool ratio_ok() const { return ratio <= bound; }
  bool theta_ok() const { return theta * theta <= delta; }
};

namespace detail {

/// Z^d walk on a box of side `side`, flat row-major storage. Mass reaching the outer
/// layer is reported so callers can detect truncation.
class LatticeGrid {
public:
  LatticeGrid(std::size_t d, std::size_t side, bool lazy) : d_(d), side_(side), lazy_(lazy) {
    std::size_t cells = 1;
    stride_.assign(d, 1);
    for (std::size_t i = 0; i < d; ++i) {
      if (cells > (std::size_t{1} << 26) / side) throw SizeError("folner_ratio: padded box too large");
      cells *= side;
    }
    for (std::size_t i = d; i-- > 1;) stride_[i - 1] = stride_[i] * side;
    cells_ = cells;
  }

  std::size_t cells() const { return cells_; }
  std::size_t side() const { return side_; }

  std::size_t coord(std::size_t c, std::size_t i) const { return (c / stride_[i]) % side_; }

  bool on_edge(std::size_t c) const {
    for (std::size_t i = 0; i < d_; ++i) {
      const auto v = coord(c, i);
      if (v == 0 || v + 1 == side_) return true;
    }
    return false;
  }

  /// (P f)(x) = hold f(x) + (1-hold)/2d sum_{y ~ x} f(y), with f = 0 outside the box.
  std::vector<double> apply(const std::vector<double>& f) const {
    std::vector<double> g(cells_, 0.0);
    const double hold = lazy_ ? 0.5 : 0.0;
    const double move = (1.0 - hold) / static_cast<double>(2 * d_);
    for (std::size_t c = 0; c < cells_; ++c) {
      const double v = f[c];
      if (v == 0.0) continue;
      if (on_edge(c)) throw HorizonError("folner_ratio: walk reached the truncation boundary");
      g[c] += hold * v;
      for (std::size_t i = 0; i < d_; ++i) {
        g[c + stride_[i]] += move * v;
        g[c - stride_[i]] += move * v;
      }
    }
    return g;
  }

private:
  std::size_t d_, side_;
  bool lazy_;
  std::size_t cells_ = 0;
  std::vector<std::size_t> stride_;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// A_k = box of side k in Z^d, psi = 1_{A_k}/sqrt|A_k|. Runs the dyadic search for
/// phi = sum_{i < 2^m} P^i psi and reports ||(I-P)phi||^2 / <phi,(I-P)phi>.
/// The box is padded by 2^{max_doublings+1} + 1 so no evaluation feels the truncation.
inline FolnerResult folner_ratio(std::size_t d, std::size_t k, const FolnerOptions& opt = {}) {
  if (d < 1) throw ArgumentError("folner_ratio: need d >= 1");
  if (k < 1) throw ArgumentError("folner_ratio: need k >= 1");
  if (opt.max_doublings > 20) throw ArgumentError("folner_ratio: max_doublings too large");
  const std::size_t horizon = std::size_t{1} << (opt.max_doublings + 1);
  const std::size_t pad = horizon + 1;
  detail::LatticeGrid grid(d, k + 2 * pad, opt.lazy);

  FolnerResult out;
  out.dim = d;
  out.side = k;
  out.box_volume = std::pow(static_cast<double>(k), static_cast<double>(d));
  out.boundary_edges = 2.0 * static_cast<double>(d) * std::pow(static_cast<double>(k), static_cast<double>(d - 1));
  out.delta = out.boundary_edges / out.box_volume;

  std::vector<double> psi(grid.cells(), 0.0);
  const double level = 1.0 / std::sqrt(out.box_volume);
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    bool inside = true;
    for (std::size_t i = 0; i < d && inside; ++i) {
      const auto v = grid.coord(c, i);
      inside = v >= pad && v < pad + k;
    }
    if (inside) psi[c] = level;
  }

  std::vector<double> cur = grid.apply(psi);
  {
    double s = 0.0;
    for (std::size_t c = 0; c < cur.size(); ++c) s += (cur[c] - psi[c]) * (cur[c] - psi[c]);
    out.theta = std::sqrt(s);
  }
  if (!(out.theta > 0.0 && out.theta < 0.5)) throw DomainError("folner_ratio: need 0 < theta < 1/2; enlarge the box");
  out.target = 1.0 / (8.0 * out.theta);
  while ((std::size_t{2} << out.ell) * out.theta <= 0.5) ++out.ell;

  // c_i = <P^i psi, psi>; a_j = sum_{i < 2^j} c_i.
  std::vector<double> c{detail::dot(psi, psi), detail::dot(cur, psi)};
  auto extend_to = [&](std::size_t count) {
    while (c.size() < count) {
      cur = grid.apply(cur);
      c.push_back(detail::dot(cur, psi));
    }
  };
  auto a_of = [&](std::size_t j) {
    const std::size_t len = std::size_t{1} << j;
    extend_to(len);
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += c[i];
    return s;
  };
  std::optional<std::size_t> found;
  double last = 0.0;
  for (std::size_t m = out.ell; m <= opt.max_doublings; ++m) {
    last = 2.0 * a_of(m) - a_of(m + 1);
    if (last >= out.target) {
      found = m;
      break;
    }
  }
  if (!found)
    throw HorizonError("folner_ratio: no m <= " + std::to_string(opt.max_doublings) +
                       " with 2a_m - a_{m+1} >= 1/(8 theta); last value " + std::to_string(last) + ", target " +
                       std::to_string(out.target) + ", theta " + std::to_string(out.theta));
  out.m = *found;
  out.achieved = last;
  for (std::size_t j = 0; j <= out.m + 1; ++j) out.a.push_back(a_of(j));

  std::vector<double> phi(grid.cells(), 0.0), term = psi;
  for (std::size_t i = 0; i < (std::size_t{1} << out.m); ++i) {
    for (std::size_t x = 0; x < phi.size(); ++x) phi[x] += term[x];
    term = grid.apply(term);
  }
  const std::vector<double> pphi = grid.apply(phi);
  for (std::size_t x = 0; x < phi.size(); ++x) {
    const double lap = phi[x] - pphi[x];
    out.energy += lap * lap;
    out.form += phi[x] * lap;
  }
  out.ratio = out.energy / out.form;
  out.bound = 32.0 * out.theta;
  return out;
}

}  // namespace mixlab
