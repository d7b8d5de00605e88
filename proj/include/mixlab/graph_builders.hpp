#pragma once

// Undirected graphs, the standard families, Cayley graphs from a composition
// callback, lazy/simple random walks and the wreath-product (lamplighter) chains.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixlab/chain_core.hpp"
#include "mixlab/errors.hpp"

namespace mixlab {

class Graph {
public:
  Graph() = default;

  /// Builds from an edge list; duplicate edges are merged, loops rejected.
  Graph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges, bool vertex_transitive = false)
      : adj_(n), transitive_(vertex_transitive) {
    for (auto [u, v] : edges) {
      if (u >= n || v >= n) throw ConstructionError("Graph: edge endpoint out of range");
      if (u == v) throw ConstructionError("Graph: self-loops are not supported");
      adj_[u].push_back(v);
      adj_[v].push_back(u);
    }
    for (auto& a : adj_) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
  }

  std::size_t size() const { return adj_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return adj_[v]; }
  std::size_t degree(std::size_t v) const { return adj_[v].size(); }

  std::size_t max_degree() const {
    std::size_t d = 0;
    for (const auto& a : adj_) d = std::max(d, a.size());
    return d;
  }

  std::size_t edge_count() const {
    std::size_t s = 0;
    for (const auto& a : adj_) s += a.size();
    return s / 2;
  }

  bool adjacent(std::size_t u, std::size_t v) const { return std::binary_search(adj_[u].begin(), adj_[u].end(), v); }

  /// Degree if every vertex has the same degree.
  std::optional<std::size_t> regular_degree() const {
    if (adj_.empty()) return std::nullopt;
    const std::size_t d = adj_[0].size();
    for (const auto& a : adj_)
      if (a.size() != d) return std::nullopt;
    return d;
  }

  /// Set by constructors that produce vertex-transitive graphs; never inferred.
  bool vertex_transitive() const { return transitive_; }

  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t u = 0; u < adj_.size(); ++u)
      for (std::size_t v : adj_[u])
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  bool connected() const {
    if (adj_.empty()) return false;
    std::vector<char> seen(size(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : adj_[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
    }
    return count == size();
  }

private:
  std::vector<std::vector<std::size_t>> adj_;
  bool transitive_ = false;
};

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

/// Graph distances from `source`; kUnreachable for other components.
inline std::vector<std::size_t> bfs_distances(const Graph& g, std::size_t source) {
  if (source >= g.size()) throw ArgumentError("bfs_distances: source out of range");
  std::vector<std::size_t> dist(g.size(), kUnreachable);
  std::queue<std::size_t> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v : g.neighbors(u))
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
  }
  return dist;
}

inline std::vector<std::vector<std::size_t>> distance_table(const Graph& g) {
  std::vector<std::vector<std::size_t>> out(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) out[v] = bfs_distances(g, v);
  return out;
}

inline std::size_t diameter(const Graph& g) {
  if (!g.connected()) throw DomainError("diameter: graph is disconnected");
  std::size_t best = 0;
  const std::size_t roots = g.vertex_transitive() ? 1 : g.size();
  for (std::size_t v = 0; v < roots; ++v) {
    const auto d = bfs_distances(g, v);
    best = std::max(best, *std::max_element(d.begin(), d.end()));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Families

inline Graph cycle(std::size_t n) {
  if (n < 3) throw ConstructionError("cycle: need n >= 3");
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph(n, e, true);
}

/// Z_n^d; vertex index is the base-n number with the first coordinate most significant.
inline Graph torus(std::size_t n, std::size_t d) {
  if (n < 3) throw ConstructionError("torus: need n >= 3");
  if (d < 1) throw ConstructionError("torus: need d >= 1");
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (total > (std::size_t{1} << 40) / n) throw SizeError("torus: too many vertices");
    total *= n;
  }
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t v = 0; v < total; ++v) {
    std::size_t stride = 1;
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t coord = (v / stride) % n;
      const std::size_t up = v - coord * stride + ((coord + 1) % n) * stride;
      e.emplace_back(v, up);
      stride *= n;
    }
  }
  return Graph(total, e, true);
}

inline std::vector<std::size_t> torus_coordinates(std::size_t v, std::size_t n, std::size_t d) {
  std::vector<std::size_t> c(d);
  for (std::size_t i = d; i-- > 0;) {
    c[i] = v % n;
    v /= n;
  }
  return c;
}

/// {0,1}^d; coordinate i is bit i of the vertex index.
inline Graph hypercube(std::size_t d) {
  if (d < 1) throw ConstructionError("hypercube: need d >= 1");
  if (d > 24) throw SizeError("hypercube: dimension too large");
  const std::size_t n = std::size_t{1} << d;
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t i = 0; i < d; ++i)
      if (!(v >> i & 1U)) e.emplace_back(v, v | (std::size_t{1} << i));
  return Graph(n, e, true);
}

inline Graph complete(std::size_t n) {
  if (n < 2) throw ConstructionError("complete: need n >= 2");
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) e.emplace_back(u, v);
  return Graph(n, e, true);
}

/// Ball of the given radius around the root (vertex 0) of the d-regular tree.
/// Vertices are numbered in breadth-first order, so sphere r occupies a contiguous block.
inline Graph dary_tree_ball(std::size_t d, std::size_t radius) {
  if (d < 2) throw ConstructionError("dary_tree_ball: need d >= 2");
  if (radius < 1) throw ConstructionError("dary_tree_ball: need radius >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> e;
  std::vector<std::size_t> frontier{0};
  std::size_t next = 1;
  for (std::size_t r = 0; r < radius; ++r) {
    std::vector<std::size_t> grown;
    const std::size_t children = r == 0 ? d : d - 1;
    if (frontier.size() * children > (std::size_t{1} << 22)) throw SizeError("dary_tree_ball: ball too large");
    for (std::size_t v : frontier)
      for (std::size_t c = 0; c < children; ++c) {
        e.emplace_back(v, next);
        grown.push_back(next++);
      }
    frontier = std::move(grown);
  }
  return Graph(next, e, false);
}

template <class Element>
struct CayleyGraph {
  Graph graph;
  std::vector<Element> elements;  ///< elements[v] is the group element at vertex v; vertex 0 is the identity
};

/// Right Cayley graph x ~ x*s for s in `generators`, enumerated by BFS from the
/// identity. With radius == nullopt the whole (finite) group is enumerated.
/// Element needs operator< ; compose(x, s) returns x*s.
template <class Element, class Compose>
CayleyGraph<Element> cayley_graph(const Element& identity, const std::vector<Element>& generators, Compose compose,
                                  std::optional<std::size_t> radius = std::nullopt,
                                  std::size_t max_elements = std::size_t{1} << 22) {
  for (const auto& s : generators) {
    if (!(s < identity) && !(identity < s)) throw ConstructionError("cayley_graph: identity in generating set");
    bool has_inverse = false;
    for (const auto& u : generators) {
      const Element p = compose(s, u);
      if (!(p < identity) && !(identity < p)) {
        has_inverse = true;
        break;
      }
    }
    if (!has_inverse) throw ConstructionError("cayley_graph: generating set is not symmetric");
  }
  std::map<Element, std::size_t> index;
  std::vector<Element> elems{identity};
  std::vector<std::size_t> depth{0};
  index.emplace(identity, 0);
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t head = 0; head < elems.size(); ++head) {
    if (radius && depth[head] >= *radius) continue;
    for (const auto& s : generators) {
      Element y = compose(elems[head], s);
      auto it = index.find(y);
      std::size_t j;
      if (it == index.end()) {
        if (elems.size() >= max_elements) throw SizeError("cayley_graph: element cap exceeded");
        j = elems.size();
        index.emplace(y, j);
        elems.push_back(std::move(y));
        depth.push_back(depth[head] + 1);
      } else {
        j = it->second;
      }
      if (j != head) e.emplace_back(head, j);
    }
  }
  const bool whole_group = !radius.has_value();
  return {Graph(elems.size(), e, whole_group), std::move(elems)};
}

// ---------------------------------------------------------------------------
// Edge-list text format: one "u v" pair per line, 0-based; '#' starts a comment.

inline void write_edge_list(std::ostream& os, const Graph& g) {
  for (auto [u, v] : g.edges()) os << u << ' ' << v << '\n';
}

inline Graph read_edge_list(std::istream& is, std::optional<std::size_t> n_vertices = std::nullopt) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  std::size_t n = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long u = 0, v = 0;
    if (!(ls >> u)) continue;
    std::string rest;
    if (!(ls >> v) || u < 0 || v < 0 || (ls >> rest))
      throw ArgumentError("read_edge_list: malformed line " + std::to_string(lineno));
    e.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    n = std::max(n, static_cast<std::size_t>(std::max(u, v)) + 1);
  }
  if (n_vertices) {
    if (*n_vertices < n) throw ArgumentError("read_edge_list: vertex count smaller than largest label");
    n = *n_vertices;
  }
  return Graph(n, e);
}

// ---------------------------------------------------------------------------
// Random walks on graphs

/// P(x,x) = 1/2, P(x,y) = 1/(2 deg x) for y ~ x; pi(x) = deg(x) / 2|E|.
inline FiniteChain lazy_srw(const Graph& g) {
  if (!g.connected()) throw ConstructionError("lazy_srw: graph is disconnected");
  std::vector<Eigen::Triplet<double>> t;
  std::vector<double> pi(g.size());
  const double twice_edges = 2.0 * static_cast<double>(g.edge_count());
  for (std::size_t x = 0; x < g.size(); ++x) {
    const double deg = static_cast<double>(g.degree(x));
    t.emplace_back(x, x, 0.5);
    for (std::size_t y : g.neighbors(x)) t.emplace_back(x, y, 0.5 / deg);
    pi[x] = deg / twice_edges;
  }
  FiniteChain::Matrix p(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  p.setFromTriplets(t.begin(), t.end());
  return FiniteChain(std::move(p), Distribution::normalized(std::move(pi)));
}

/// Non-lazy simple random walk: P(x,y) = 1/deg x for y ~ x.
inline FiniteChain srw(const Graph& g) {
  if (!g.connected()) throw ConstructionError("srw: graph is disconnected");
  std::vector<Eigen::Triplet<double>> t;
  std::vector<double> pi(g.size());
  const double twice_edges = 2.0 * static_cast<double>(g.edge_count());
  for (std::size_t x = 0; x < g.size(); ++x) {
    const double deg = static_cast<double>(g.degree(x));
    for (std::size_t y : g.neighbors(x)) t.emplace_back(x, y, 1.0 / deg);
    pi[x] = deg / twice_edges;
  }
  FiniteChain::Matrix p(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  p.setFromTriplets(t.begin(), t.end());
  return FiniteChain(std::move(p), Distribution::normalized(std::move(pi)));
}

/// Walk on {0..n} absorbed at 0 and n; interior steps +-1 with probability 1/2 each,
/// or with probability 1/4 each and holding 1/2 when `lazy`.
inline FiniteChain gamblers_ruin_chain(std::size_t n, bool lazy = false) {
  if (n < 2) throw ConstructionError("gamblers_ruin_chain: need n >= 2");
  std::vector<Eigen::Triplet<double>> t;
  t.emplace_back(0, 0, 1.0);
  t.emplace_back(n, n, 1.0);
  const double step = lazy ? 0.25 : 0.5;
  for (std::size_t k = 1; k < n; ++k) {
    t.emplace_back(k, k - 1, step);
    t.emplace_back(k, k + 1, step);
    if (lazy) t.emplace_back(k, k, 0.5);
  }
  FiniteChain::Matrix p(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
  p.setFromTriplets(t.begin(), t.end());
  return FiniteChain(std::move(p));
}

// ---------------------------------------------------------------------------
// Wreath products

struct LampState {
  std::vector<std::size_t> lamps;  ///< lamps[v] in [0, |H|)
  std::size_t marker = 0;

  friend bool operator==(const LampState&, const LampState&) = default;
};

/// index = marker * |H|^{|G|} + sum_v lamps[v] * |H|^v
class LampCodec {
public:
  LampCodec(std::size_t sites, std::size_t lamp_states, std::size_t cap = std::size_t{1} << 20)
      : sites_(sites), h_(lamp_states) {
    if (sites == 0 || lamp_states < 2) throw ConstructionError("LampCodec: degenerate parameters");
    configs_ = 1;
    for (std::size_t i = 0; i < sites; ++i) {
      if (configs_ > cap / lamp_states) throw SizeError("lamplighter: state space exceeds cap");
      configs_ *= lamp_states;
    }
    if (configs_ > cap / sites) throw SizeError("lamplighter: state space exceeds cap");
  }

  std::size_t sites() const { return sites_; }
  std::size_t lamp_states() const { return h_; }
  std::size_t configurations() const { return configs_; }
  std::size_t size() const { return configs_ * sites_; }

  std::size_t encode(const LampState& s) const {
    if (s.lamps.size() != sites_ || s.marker >= sites_) throw ArgumentError("LampCodec: malformed state");
    std::size_t f = 0;
    for (std::size_t v = sites_; v-- > 0;) {
      if (s.lamps[v] >= h_) throw ArgumentError("LampCodec: lamp value out of range");
      f = f * h_ + s.lamps[v];
    }
    return s.marker * configs_ + f;
  }

  LampState decode(std::size_t index) const {
    if (index >= size()) throw ArgumentError("LampCodec: index out of range");
    LampState s;
    s.marker = index / configs_;
    std::size_t f = index % configs_;
    s.lamps.resize(sites_);
    for (std::size_t v = 0; v < sites_; ++v) {
      s.lamps[v] = f % h_;
      f /= h_;
    }
    return s;
  }

  /// Lamp value at site v of configuration index f.
  std::size_t lamp(std::size_t f, std::size_t v) const { return (f / power(v)) % h_; }

  /// Configuration f with site v set to value a.
  std::size_t with_lamp(std::size_t f, std::size_t v, std::size_t a) const {
    const std::size_t p = power(v);
    return f - ((f / p) % h_) * p + a * p;
  }

private:
  std::size_t power(std::size_t v) const {
    std::size_t p = 1;
    for (std::size_t i = 0; i < v; ++i) p *= h_;
    return p;
  }

  std::size_t sites_;
  std::size_t h_;
  std::size_t configs_ = 1;
};

namespace detail {

// Row (f, x): lamp chain Q on the departure lamp, lazy base move x -> y, Q on the
// arrival lamp (so Q^2 on the single lamp when the walker stays).
inline FiniteChain wreath_chain(const Graph& g, const Eigen::MatrixXd& q, const Distribution& pi_h, std::size_t cap) {
  if (!g.connected()) throw ConstructionError("lamplighter: base graph is disconnected");
  const std::size_t h = static_cast<std::size_t>(q.rows());
  const LampCodec codec(g.size(), h, cap);
  const FiniteChain base = lazy_srw(g);
  const Eigen::MatrixXd q2 = q * q;
  const std::size_t configs = codec.configurations();

  std::vector<std::size_t> powers(g.size(), 1);
  for (std::size_t v = 1; v < g.size(); ++v) powers[v] = powers[v - 1] * h;

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> pi(codec.size());
  for (std::size_t x = 0; x < g.size(); ++x) {
    for (std::size_t f = 0; f < configs; ++f) {
      const std::size_t row = x * configs + f;
      const std::size_t fx = (f / powers[x]) % h;
      double lamp_weight = 1.0;
      for (std::size_t v = 0; v < g.size(); ++v) lamp_weight *= pi_h[(f / powers[v]) % h];
      pi[row] = base.stationary()[x] * lamp_weight;

      base.for_each_transition(x, [&](std::size_t y, double pxy) {
        if (y == x) {
          for (std::size_t a = 0; a < h; ++a) {
            const double w = pxy * q2(static_cast<Eigen::Index>(fx), static_cast<Eigen::Index>(a));
            if (w > 0.0) trips.emplace_back(row, x * configs + f - fx * powers[x] + a * powers[x], w);
          }
          return;
        }
        const std::size_t fy = (f / powers[y]) % h;
        for (std::size_t a = 0; a < h; ++a) {
          const double wa = q(static_cast<Eigen::Index>(fx), static_cast<Eigen::Index>(a));
          if (wa == 0.0) continue;
          const std::size_t f1 = f - fx * powers[x] + a * powers[x];
          for (std::size_t b = 0; b < h; ++b) {
            const double wb = q(static_cast<Eigen::Index>(fy), static_cast<Eigen::Index>(b));
            if (wb == 0.0) continue;
            trips.emplace_back(row, y * configs + f1 - fy * powers[y] + b * powers[y], pxy * wa * wb);
          }
        }
      });
    }
  }
  FiniteChain::Matrix p(static_cast<Eigen::Index>(codec.size()), static_cast<Eigen::Index>(codec.size()));
  p.setFromTriplets(trips.begin(), trips.end());
  return FiniteChain(std::move(p), Distribution::normalized(std::move(pi)));
}

}  // namespace detail

/// Z_2 wr G with the randomize-move-randomize step; states encoded by LampCodec(|G|, 2).
inline FiniteChain lamplighter_chain(const Graph& g, std::size_t cap = std::size_t{1} << 20) {
  Eigen::MatrixXd refresh = Eigen::MatrixXd::Constant(2, 2, 0.5);
  return detail::wreath_chain(g, refresh, Distribution::uniform(2), cap);
}

/// H wr G for a lazy, irreducible, reversible lamp chain on H.
inline FiniteChain generalized_lamplighter_chain(const Graph& g, const FiniteChain& lamp,
                                                 std::size_t cap = std::size_t{1} << 20) {
  if (!lamp.irreducible()) throw ConstructionError("generalized_lamplighter_chain: lamp chain is not irreducible");
  if (!lamp.reversible()) throw ConstructionError("generalized_lamplighter_chain: lamp chain is not reversible");
  for (std::size_t a = 0; a < lamp.size(); ++a)
    if (lamp(a, a) < 0.5 - kProbabilityTolerance)
      throw ConstructionError("generalized_lamplighter_chain: lamp chain is not lazy");
  return detail::wreath_chain(g, lamp.dense(), lamp.stationary(), cap);
}

}  // namespace mixlab
