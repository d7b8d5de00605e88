// mixlab: batch front-end for the mixing laboratory.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mixlab/mixlab.hpp"

namespace {

using namespace mixlab;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSizeCap = 3;
constexpr int kExitViolation = 4;

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("table " + name + ": row width mismatch");
    rows.push_back(std::move(row));
  }
};

template <std::integral T>
Cell num(T v) {
  return static_cast<std::int64_t>(v);
}
Cell num(double v) { return v; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const std::string& v) const { return v; }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(V{}, c);
}

json cell_json(const Cell& c) {
  struct V {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(std::int64_t v) const { return v; }
    json operator()(double v) const { return std::isfinite(v) ? json(v) : json(format_double(v)); }
    json operator()(const std::string& v) const { return v; }
    json operator()(bool v) const { return v; }
  };
  return std::visit(V{}, c);
}

void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_field(t.columns[i]);
  os << "\r\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(cell_text(row[i]));
    os << "\r\n";
  }
}

void write_json(std::ostream& os, const Table& t) {
  json arr = json::array();
  for (const auto& row : t.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
    arr.push_back(std::move(obj));
  }
  os << arr.dump(2) << "\n";
}

struct Outcome {
  std::vector<Table> tables;  ///< first table is the primary result
  bool violation = false;
};

// ---------------------------------------------------------------------------
// Shared options

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

struct GraphOptions {
  std::string family = "cycle";
  std::size_t n = 16;
  std::size_t d = 2;
  std::size_t radius = 3;
  std::string walk = "lazy";
  std::size_t max_states = 20000;
};

void add_graph_options(CLI::App* sub, GraphOptions& g) {
  sub->add_option("--graph", g.family, "graph family")
      ->check(CLI::IsMember({"cycle", "torus", "hypercube", "complete", "tree"}))
      ->capture_default_str();
  sub->add_option("--n", g.n, "side length / number of vertices")->capture_default_str();
  sub->add_option("--d", g.d, "dimension (torus, hypercube) or degree (tree)")->capture_default_str();
  sub->add_option("--radius", g.radius, "tree ball radius")->capture_default_str();
  sub->add_option("--walk", g.walk, "lazy or simple random walk")
      ->check(CLI::IsMember({"lazy", "srw"}))
      ->capture_default_str();
  sub->add_option("--max-states", g.max_states, "state-count cap")->capture_default_str();
}

double graph_size(const GraphOptions& o) {
  if (o.family == "cycle" || o.family == "complete") return static_cast<double>(o.n);
  if (o.family == "torus") return std::pow(static_cast<double>(o.n), static_cast<double>(o.d));
  if (o.family == "hypercube") return std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(o.d, 1000)));
  double total = 1.0, sphere = static_cast<double>(o.d);
  for (std::size_t r = 1; r <= o.radius; ++r) {
    total += sphere;
    sphere *= static_cast<double>(o.d) - 1.0;
  }
  return total;
}

Graph build_graph(const GraphOptions& o) {
  if (graph_size(o) > static_cast<double>(o.max_states))
    throw SizeError(o.family + " has more than --max-states=" + std::to_string(o.max_states) + " vertices");
  if (o.family == "cycle") return cycle(o.n);
  if (o.family == "torus") return torus(o.n, o.d);
  if (o.family == "hypercube") return hypercube(o.d);
  if (o.family == "complete") return complete(o.n);
  return dary_tree_ball(o.d, o.radius);
}

FiniteChain build_walk(const GraphOptions& o, const Graph& g) { return o.walk == "lazy" ? lazy_srw(g) : srw(g); }

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ArgumentError("cannot parse number '" + item + "'");
    }
    if (used != item.size()) throw ArgumentError("cannot parse number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

/// "a,b,c;d,e,f;g,h,i" row-major
Eigen::MatrixXd parse_matrix(const std::string& s) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(s);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_list(row));
  if (rows.empty()) throw ArgumentError("empty matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ArgumentError("ragged matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

Table matrix_table(const std::string& name, const Eigen::MatrixXd& m) {
  Table t{name, {"matrix", "row", "col", "value"}, {}};
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      t.add({name, num(static_cast<std::int64_t>(i)), num(static_cast<std::int64_t>(j)), m(i, j)});
  return t;
}

// ---------------------------------------------------------------------------
// Subcommands

struct TvOptions {
  std::size_t n = 10;
  std::size_t pairs = 1;
  std::string p, q;
};

Outcome run_tv(const Common& c, const TvOptions& o) {
  Table t{"tv", {"pair", "n", "half_l1", "positive_part", "max_event", "coupling_unequal", "spread"}, {}};
  Outcome out;
  auto record = [&](std::size_t i, const Distribution& mu, const Distribution& nu) {
    const double a = tv_distance(mu, nu), b = tv_positive_part(mu, nu), e = tv_max_event(mu, nu).value;
    const double k = optimal_coupling(mu, nu).prob_unequal();
    const double spread = std::max({a, b, e, k}) - std::min({a, b, e, k});
    if (spread > 1e-12) out.violation = true;
    t.add({num(i), num(mu.size()), a, b, e, k, spread});
  };
  if (!o.p.empty() || !o.q.empty()) {
    if (o.p.empty() || o.q.empty()) throw ArgumentError("tv: --p and --q go together");
    record(0, Distribution(parse_list(o.p)), Distribution(parse_list(o.q)));
  } else {
    if (o.n < 1) throw ArgumentError("tv: need n >= 1");
    for (std::size_t i = 0; i < o.pairs; ++i) {
      Rng rng(stream_seed(c.seed, i));
      auto draw = [&] {
        std::vector<double> w(o.n);
        double s = 0.0;
        for (auto& x : w) s += (x = rng.uniform01());
        for (auto& x : w) x /= s;
        return Distribution::normalized(std::move(w));
      };
      const auto mu = draw(), nu = draw();
      record(i, mu, nu);
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

struct MixOptions {
  double eps = 0.25;
  std::size_t t_max = 0;
  std::size_t t_cap = 1000000;
};

Outcome run_mix(const GraphOptions& g, const MixOptions& o) {
  const auto graph = build_graph(g);
  const auto chain = build_walk(g, graph);
  ScanOptions scan;
  scan.t_cap = o.t_cap;
  const std::size_t tm = t_mix(chain, o.eps, scan);
  const std::size_t ts = t_sep(chain, o.eps, scan);
  const std::size_t horizon = o.t_max ? o.t_max : std::max(tm, ts);
  const auto curve = distance_curve(chain, horizon, scan);
  Table t{"curve", {"t", "d", "s"}, {}};
  for (std::size_t i = 0; i <= horizon; ++i) t.add({num(i), curve.d[i], curve.s[i]});
  Table s{"summary", {"states", "eps", "t_mix", "t_sep"}, {}};
  s.add({num(chain.size()), o.eps, num(tm), num(ts)});
  return {{std::move(t), std::move(s)}, false};
}

Outcome run_spectrum(const GraphOptions& g) {
  const auto graph = build_graph(g);
  const auto chain = build_walk(g, graph);
  Table s{"summary", {"states", "lambda2", "lambda_min", "lambda_star", "t_rel"}, {}};
  Table t{"eigenvalues", {"k", "lambda"}, {}};
  if (chain.size() <= kDenseSpectrumLimit) {
    const auto sp = spectrum(chain);
    for (std::size_t k = 0; k < sp.eigenvalues.size(); ++k) t.add({num(k), sp.eigenvalues[k]});
    s.add({num(chain.size()), sp.lambda2, sp.lambda_min, sp.lambda_star, sp.t_rel});
    return {{std::move(t), std::move(s)}, false};
  }
  const auto ex = extremal_spectrum(chain);
  t.add({num(0), 1.0});
  t.add({num(1), ex.lambda2});
  s.add({num(chain.size()), ex.lambda2, ex.lambda_min, std::max(std::abs(ex.lambda2), std::abs(ex.lambda_min)),
         detail::relaxation_from(ex.lambda2)});
  return {{std::move(t), std::move(s)}, false};
}

Outcome run_hitting(const GraphOptions& g) {
  const auto graph = build_graph(g);
  const auto chain = build_walk(g, graph);
  const auto h = hitting_times(chain);
  Table t{"hitting", {"x", "y", "expected"}, {}};
  for (std::size_t x = 0; x < chain.size(); ++x)
    for (std::size_t y = 0; y < chain.size(); ++y)
      t.add({num(x), num(y), h.expected(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))});
  Table s{"summary", {"states", "t_hit"}, {}};
  s.add({num(chain.size()), h.t_hit()});
  return {{std::move(t), std::move(s)}, false};
}

struct CoverCliOptions {
  std::string method = "exact";
  std::size_t samples = 1000;
  std::size_t tail = 0;
};

Outcome run_cover(const Common& c, const GraphOptions& g, const CoverCliOptions& o) {
  const auto graph = build_graph(g);
  const auto chain = build_walk(g, graph);
  CoverOptions opt;
  opt.method = o.method == "exact" ? CoverMethod::exact : CoverMethod::monte_carlo;
  opt.samples = o.samples;
  opt.seed = c.seed;
  const auto r = cover_time(chain, opt);
  Table t{"cover", {"x", "expected"}, {}};
  for (std::size_t x = 0; x < r.per_state.size(); ++x) t.add({num(x), r.per_state[x]});
  Table s{"summary", {"states", "method", "t_cov", "std_error"}, {}};
  s.add({num(chain.size()), o.method, r.value, r.std_error});
  Outcome out{{std::move(t), std::move(s)}, false};
  if (o.tail > 0) {
    const auto tail = cover_tail(chain, 0, o.tail);
    Table tt{"tail", {"t", "p_not_covered"}, {}};
    for (std::size_t i = 0; i < tail.size(); ++i) tt.add({num(i), tail[i]});
    out.tables.push_back(std::move(tt));
  }
  return out;
}

struct LampOptions {
  std::size_t n_min = 3;
  std::size_t n_max = 8;
};

Outcome run_lamplighter(const LampOptions& o) {
  if (o.n_min < 3 || o.n_max < o.n_min) throw ArgumentError("lamplighter: need 3 <= n-min <= n-max");
  if (o.n_max > kExactCoverLimit) throw SizeError("lamplighter: exact cover times need n <= 14");
  Table t{"lamplighter",
          {"n", "states", "t_mix", "t_cov", "t_rel", "t_hit", "mix_over_cov", "rel_over_hit", "mix_lower_ok",
           "mix_upper_ok", "rel_upper_ok"},
          {}};
  bool bad = false;
  for (std::size_t n = o.n_min; n <= o.n_max; ++n) {
    const auto g = cycle(n);
    const auto chain = lamplighter_chain(g);
    ScanOptions scan;
    scan.starts = {LampCodec(n, 2).encode({std::vector<std::size_t>(n, 0), 0})};
    const double tm = static_cast<double>(t_mix(chain, 0.25, scan));
    const auto base = lazy_srw(g);
    const double tc = cover_time(base).value;
    const double tr = relaxation_time(chain);
    const double th = hitting_times(base).t_hit();
    const bool lo = tc / 12.0 <= tm, hi = tm <= 18.0 * tc, rel = tr <= 4.0 / std::log(2.0) * th;
    bad = bad || !lo || !hi || !rel;
    t.add({num(n), num(chain.size()), tm, tc, tr, th, tm / tc, tr / th, lo, hi, rel});
  }
  return {{std::move(t)}, bad};
}

struct CouplingCliOptions {
  std::string family = "cycle";
  std::size_t n = 16;
  std::size_t d = 2;
  std::size_t x0 = 0, y0 = 0;
  std::size_t runs = 100;
  std::size_t t_max = 0;
  bool path = false;
};

Outcome run_coupling(const Common& c, const CouplingCliOptions& o) {
  CouplingOptions opt;
  if (o.t_max) opt.t_max = o.t_max;
  opt.record_paths = o.path;
  Table t{"runs", {"run", "coupled", "tau", "steps"}, {}};
  Table p{"path", {"t", "x", "y"}, {}};
  double total = 0.0;
  std::size_t coupled = 0;
  for (std::size_t r = 0; r < o.runs; ++r) {
    const std::uint64_t s = stream_seed(c.seed, r);
    const auto tr = o.family == "cycle" ? cycle_coupling_run(o.n, o.x0, o.y0, s, opt)
                                        : torus_coupling_run(o.n, o.d, o.x0, o.y0, s, opt);
    t.add({num(r), tr.tau_couple.has_value(), tr.tau_couple ? num(*tr.tau_couple) : Cell{}, num(tr.steps)});
    if (tr.tau_couple) {
      total += static_cast<double>(*tr.tau_couple);
      ++coupled;
    }
    if (o.path && r == 0)
      for (std::size_t i = 0; i < tr.x_path.size(); ++i) p.add({num(i), num(tr.x_path[i]), num(tr.y_path[i])});
  }
  Table s{"summary", {"runs", "coupled", "mean_tau"}, {}};
  s.add({num(o.runs), num(coupled), coupled ? Cell{total / static_cast<double>(coupled)} : Cell{}});
  Outcome out{{std::move(t), std::move(s)}, false};
  if (o.path) out.tables.push_back(std::move(p));
  return out;
}

struct SstCliOptions {
  std::string family = "hypercube";
  std::size_t d = 4;
  std::size_t n = 4;
  std::size_t runs = 1000;
};

Outcome run_sst(const Common& c, const SstCliOptions& o) {
  Table t{"runs", {"run", "tau", "state", "halting_hit_early"}, {}};
  std::vector<std::size_t> taus;
  bool early = false;
  if (o.family == "hypercube") {
    for (std::size_t r = 0; r < o.runs; ++r) {
      const auto rec = hypercube_refresh_sst(o.d, 0, stream_seed(c.seed, r));
      t.add({num(r), num(rec.tau), num(rec.state_at_tau), rec.halting_hit_early});
      taus.push_back(rec.tau);
      early = early || rec.halting_hit_early;
    }
  } else {
    const LamplighterSST sst(cycle(o.n));
    for (std::size_t r = 0; r < o.runs; ++r) {
      const auto rec = sst.run(0, stream_seed(c.seed, r));
      t.add({num(r), num(rec.sst.tau), num(rec.sst.state_at_tau), rec.sst.halting_hit_early});
      taus.push_back(rec.sst.tau);
      early = early || rec.sst.halting_hit_early;
    }
  }
  double mean = 0.0;
  for (auto x : taus) mean += static_cast<double>(x);
  Table s{"summary", {"runs", "mean_tau"}, {}};
  s.add({num(o.runs), o.runs ? mean / static_cast<double>(o.runs) : 0.0});
  Outcome out{{std::move(t), std::move(s)}, early};
  if (o.family == "hypercube") {
    const std::size_t horizon = taus.empty() ? 0 : *std::max_element(taus.begin(), taus.end());
    Table tail{"tail", {"t", "empirical", "coupon_collector"}, {}};
    for (std::size_t u = 0; u <= horizon; ++u) {
      const auto above = std::count_if(taus.begin(), taus.end(), [&](std::size_t x) { return x > u; });
      tail.add({num(u), static_cast<double>(above) / static_cast<double>(o.runs), coupon_collector_tail(o.d, u)});
    }
    out.tables.push_back(std::move(tail));
  }
  return out;
}

struct VcOptions {
  std::size_t t_max = 50;
  std::size_t identity_t_max = 15;
};

Outcome run_vc(const GraphOptions& g, const VcOptions& o) {
  const auto graph = build_graph(g);
  const auto chain = build_walk(g, graph);
  const auto v = vc_bound_check(chain, distance_table(graph), o.t_max);
  Table t{"violations", {"x", "y", "t", "lhs", "rhs", "gaussian"}, {}};
  for (const auto& e : v) t.add({num(e.x), num(e.y), num(e.t), e.lhs, e.rhs, e.gaussian});
  Table id{"identity", {"t", "deviation", "tolerance", "log_mode", "ok"}, {}};
  bool bad = !v.empty();
  for (std::size_t s = 0; s <= o.identity_t_max; ++s) {
    const auto r = binomial_mixture_identity_check(chain, static_cast<std::int64_t>(s));
    id.add({num(s), r.deviation, r.tolerance, r.log_mode, r.ok()});
    bad = bad || !r.ok();
  }
  return {{std::move(t), std::move(id)}, bad};
}

struct GroupOptions {
  std::string model = "tree";
  std::size_t d = 3;
  bool lazy = false;
  std::int64_t steps = 1000;
  std::size_t walks = 1000;
  std::int64_t n_max = 20;
};

template <class F>
auto with_model(const GroupOptions& o, F&& f) {
  if (o.model == "lattice") return f(zd_model(o.d, o.lazy));
  if (o.model == "tree") return f(tree_model(o.d, o.lazy));
  return f(lamplighter_group_model(o.d, o.lazy));
}

Outcome run_speed(const Common& c, const GroupOptions& o) {
  Table t{"speed",
          {"model", "d", "lazy", "steps", "walks", "v_hat", "std_error", "v_upper", "std_error_upper", "exact"},
          {}};
  with_model(o, [&](const auto& m) {
    const auto e = speed_estimate(m, o.steps, o.walks, c.seed);
    t.add({o.model, num(o.d), o.lazy, num(o.steps), num(o.walks), e.v_hat, e.std_error, e.v_upper, e.std_error_upper,
           e.exact});
    return 0;
  });
  return {{std::move(t)}, false};
}

Outcome run_entropy(const GroupOptions& o) {
  if (o.model == "lamplighter") throw UnsupportedError("entropy: exact laws exist for lattice and tree models only");
  return with_model(o, [&](const auto& m) {
    const auto curve = entropy_curve(m, o.n_max);
    const auto kvv = kvv_cross_check(m, curve);
    Table t{"entropy", {"n", "H", "h", "mean_length", "mean_square_length", "log_support"}, {}};
    for (std::size_t n = 0; n <= curve.n_max(); ++n)
      t.add({num(n), curve.entropy[n], curve.increment[n], curve.mean_length[n], curve.mean_square_length[n],
             curve.log_support[n]});
    Table k{"kvv", {"n", "entropy_side", "second_moment", "speed_side", "sphere_gap", "holds"}, {}};
    for (const auto& r : kvv.rows) k.add({num(r.n), r.entropy_side, r.second_moment, r.speed_side, r.sphere_gap, r.holds});
    return Outcome{{std::move(t), std::move(k)}, !kvv.all_hold() || !curve.increments_monotone};
  });
}

struct GeomOptions {
  std::string task = "moment";
  std::size_t n_max = 0;
  std::size_t dim = 2;
  std::size_t k = 10;
  bool lazy = false;
  std::size_t max_doublings = 8;
};

Outcome run_geom(const GraphOptions& g, const GeomOptions& o) {
  if (o.task == "folner") {
    FolnerOptions fo;
    fo.lazy = o.lazy;
    fo.max_doublings = o.max_doublings;
    const auto r = folner_ratio(o.dim, o.k, fo);
    Table t{"folner",
            {"dim", "side", "delta", "theta", "ell", "m", "target", "achieved", "energy", "form", "ratio", "bound",
             "ratio_ok", "theta_ok"},
            {}};
    t.add({num(r.dim), num(r.side), r.delta, r.theta, num(r.ell), num(r.m), r.target, r.achieved, r.energy, r.form,
           r.ratio, r.bound, r.ratio_ok(), r.theta_ok()});
    return {{std::move(t)}, !r.ratio_ok() || !r.theta_ok()};
  }
  const auto graph = build_graph(g);
  if (o.task == "diameter") {
    const auto b = corollary_trel_diam(graph);
    Table t{"diameter",
            {"states", "degree", "diameter", "t_rel", "t_mix", "trel_bound", "tmix_bound", "trel_margin",
             "tmix_margin", "holds"},
            {}};
    t.add({num(graph.size()), num(b.degree), num(b.diameter), b.t_rel, num(b.t_mix), b.trel_bound, b.tmix_bound,
           b.trel_margin, b.tmix_margin, b.holds()});
    return {{std::move(t)}, !b.holds()};
  }
  const auto chain = build_walk(g, graph);
  const auto r = distance_moment_check(chain, graph, o.n_max ? std::optional<std::size_t>(o.n_max) : std::nullopt);
  Table t{"moments", {"n", "second_moment", "q_n", "ratio", "lemma_bound", "theorem_bound", "holds"}, {}};
  for (const auto& row : r.rows)
    t.add({num(row.n), row.second_moment, row.q_n, row.ratio, row.lemma_bound, row.theorem_bound, row.holds});
  Table s{"summary", {"lambda2", "t_rel", "degree", "p_edge", "all_hold"}, {}};
  s.add({r.lambda2, r.t_rel, num(r.degree), r.p_edge, r.all_hold()});
  return {{std::move(t), std::move(s)}, !r.all_hold()};
}

struct AdaptedCliOptions {
  std::string task = "simulate";
  std::string rule = "gantert";
  std::uint64_t steps = 10000;
  std::size_t runs = 10;
  std::uint64_t returns_after = 0;
  std::int64_t eps_num = 1, eps_den = 20;
  std::size_t dim = 3;
  bool path = false;
  std::int64_t radius = 50;
  std::string matrix, m1, m2;
  double alpha = 0.01;
  std::vector<std::int64_t> radii{25, 50, 100};
};

AdaptedRule make_rule(const AdaptedCliOptions& o) {
  if (o.rule == "bks") return bks_rule();
  if (o.rule == "gantert") return gantert_rule();
  if (o.rule == "blocks") return time_block_rule();
  if (o.eps_den <= 0) throw ArgumentError("adapted: eps denominator must be positive");
  return max_coordinate_rule(o.dim, Rational(o.eps_num, o.eps_den));
}

Outcome run_adapted(const Common& c, const AdaptedCliOptions& o) {
  if (o.task == "simulate") {
    const auto rule = make_rule(o);
    AdaptedOptions opt;
    opt.returns_after = o.returns_after;
    Table t{"runs",
            {"run", "steps", "returns", "returns_late", "max_radius", "final_radius", "distinct_sites"},
            {}};
    Table p{"path", {"run", "t"}, {}};
    for (std::size_t i = 0; i < rule.dim(); ++i) p.columns.push_back("x" + std::to_string(i + 1));
    for (std::size_t r = 0; r < o.runs; ++r) {
      opt.record_path = o.path && r == 0;
      const auto s = simulate_adapted(rule, o.steps, stream_seed(c.seed, r), opt);
      t.add({num(r), num(s.steps), num(s.returns), num(s.returns_late), s.max_radius, s.final_radius(),
             rule.kind == RuleKind::first_visit ? num(s.distinct_sites) : Cell{}});
      for (std::size_t u = 0; u < s.path.size(); ++u) {
        std::vector<Cell> row{num(r), num(u)};
        for (auto x : s.path[u]) row.push_back(num(x));
        p.add(std::move(row));
      }
    }
    Outcome out{{std::move(t)}, false};
    if (o.path) out.tables.push_back(std::move(p));
    return out;
  }
  if (o.task == "excessive") {
    const auto r = excessive_measure_check(rule_kernel(make_rule(o)), o.radius);
    auto frac = [](const Rational& q) { return std::to_string(q.numerator()) + "/" + std::to_string(q.denominator()); };
    Table t{"excessive", {"radius", "points", "max_column_sum", "max_column_sum_decimal", "origin_value", "origin_value_decimal", "passes"}, {}};
    t.add({num(o.radius), num(r.points), frac(r.max_column_sum), to_double(r.max_column_sum), frac(r.origin_value),
           to_double(r.origin_value), r.passes()});
    return {{std::move(t)}, !r.passes()};
  }
  if (o.task == "lyapunov") {
    if (o.matrix.empty()) throw ArgumentError("adapted lyapunov: --matrix is required");
    const auto r = lyapunov_condition(parse_matrix(o.matrix));
    Table t{"lyapunov", {"satisfied", "margin"}, {}};
    t.add({r.satisfied, r.margin});
    return {{std::move(t)}, false};
  }
  if (o.task == "normalize") {
    if (o.m1.empty() || o.m2.empty()) throw ArgumentError("adapted normalize: --m1 and --m2 are required");
    const Eigen::MatrixXd a = parse_matrix(o.m1), b = parse_matrix(o.m2);
    if (a.rows() != 3 || a.cols() != 3 || b.rows() != 3 || b.cols() != 3)
      throw DimensionError("adapted normalize: matrices must be 3x3");
    const auto r = normalize_spd_pair(a, b);
    Table s{"normalize", {"label_a", "label_b", "label_c", "margin1", "margin2"}, {}};
    s.add({r.labels[0], r.labels[1], r.labels[2], r.margin1, r.margin2});
    Table m = matrix_table("A", r.a);
    for (auto& row : matrix_table("AM1At", r.m1).rows) m.rows.push_back(row);
    for (auto& row : matrix_table("AM2At", r.m2).rows) m.rows.push_back(row);
    return {{std::move(s), std::move(m)}, false};
  }
  // probe: the simple walk in Z^dim, normalized by its covariance
  const auto mu = simple_measure(o.dim);
  ProbeOptions po;
  po.alpha = o.alpha;
  po.radii = o.radii;
  const auto r = superharmonicity_probe({mu}, normalizing_transform(mu), po);
  Table t{"probe", {"radius", "points", "worst", "where"}, {}};
  for (const auto& s : r.shells) {
    std::string where;
    for (std::size_t i = 0; i < s.where.size(); ++i) where += (i ? " " : "") + std::to_string(s.where[i]);
    t.add({num(s.radius), num(s.points), s.worst, where});
  }
  return {{std::move(t)}, !r.nonpositive()};
}

// ---------------------------------------------------------------------------
// Output

std::string started_at() {
  std::time_t now = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0') now = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json collect_params(const CLI::App* sub) {
  json p = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "seed" || name == "out" || name == "format") continue;
    if (opt->get_type_size() == 0) {
      p[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      if (res.size() == 1) {
        p[name] = res.front();
      } else {
        p[name] = res;
      }
    } else {
      p[name] = opt->get_default_str();
    }
  }
  return p;
}

void write_table(std::ostream& os, const Table& t, const std::string& format) {
  if (format == "json") write_json(os, t);
  else write_csv(os, t);
}

std::string sibling_path(const std::string& out, const std::string& suffix) {
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  const std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? out.substr(0, dot) : out;
  return stem + suffix;
}

void emit(const Outcome& outcome, const Common& c, const std::string& command, const CLI::App* sub) {
  json manifest = json::object();
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = c.seed;
  manifest["params"] = collect_params(sub);
  manifest["started_at"] = started_at();
  json files = json::array();
  const std::string ext = c.format == "json" ? ".json" : ".csv";
  if (c.out.empty()) {
    for (std::size_t i = 0; i < outcome.tables.size(); ++i) {
      if (i) std::cout << "\n";
      write_table(std::cout, outcome.tables[i], c.format);
    }
    manifest["files"] = files;
    std::cerr << manifest.dump() << "\n";
    return;
  }
  if (const auto parent = std::filesystem::path(c.out).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  for (std::size_t i = 0; i < outcome.tables.size(); ++i) {
    const std::string path = i == 0 ? c.out : sibling_path(c.out, "." + outcome.tables[i].name + ext);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_table(f, outcome.tables[i], c.format);
    files.push_back(path);
  }
  manifest["files"] = files;
  const std::string mpath = sibling_path(c.out, ".manifest.json");
  std::ofstream m(mpath, std::ios::binary);
  if (!m) throw std::runtime_error("cannot open " + mpath + " for writing");
  m << manifest.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixlab: mixing times, couplings, long-range bounds, speed and entropy, adapted walks"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "64-bit seed")->capture_default_str();
    sub->add_option("--out", common.out, "primary output file; other tables and the manifest go next to it");
    sub->add_option("--format", common.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
  };

  std::map<std::string, std::function<Outcome()>> handlers;
  GraphOptions graph;

  TvOptions tv;
  auto* s_tv = app.add_subcommand("tv", "total variation characterizations on random or given pairs");
  s_tv->add_option("--n", tv.n, "support size of random pairs")->capture_default_str();
  s_tv->add_option("--pairs", tv.pairs, "number of random pairs")->capture_default_str();
  s_tv->add_option("--p", tv.p, "comma-separated distribution");
  s_tv->add_option("--q", tv.q, "comma-separated distribution");
  handlers["tv"] = [&] { return run_tv(common, tv); };

  MixOptions mix;
  auto* s_mix = app.add_subcommand("mix", "d(t), s(t) curves with t_mix and t_sep");
  add_graph_options(s_mix, graph);
  s_mix->add_option("--eps", mix.eps, "threshold")->capture_default_str();
  s_mix->add_option("--tmax", mix.t_max, "curve horizon (0: up to max(t_mix, t_sep))")->capture_default_str();
  s_mix->add_option("--tcap", mix.t_cap, "give up after this many steps")->capture_default_str();
  handlers["mix"] = [&] { return run_mix(graph, mix); };

  auto* s_spec = app.add_subcommand("spectrum", "eigenvalues and relaxation time");
  add_graph_options(s_spec, graph);
  handlers["spectrum"] = [&] { return run_spectrum(graph); };

  auto* s_hit = app.add_subcommand("hitting", "expected hitting times E_x[tau_y]");
  add_graph_options(s_hit, graph);
  handlers["hitting"] = [&] { return run_hitting(graph); };

  CoverCliOptions cover;
  auto* s_cov = app.add_subcommand("cover", "cover times");
  add_graph_options(s_cov, graph);
  s_cov->add_option("--method", cover.method, "exact or mc")
      ->check(CLI::IsMember({"exact", "mc"}))
      ->capture_default_str();
  s_cov->add_option("--samples", cover.samples, "Monte Carlo samples per start")->capture_default_str();
  s_cov->add_option("--tail", cover.tail, "also tabulate P_0[tau_cov > t] up to this t")->capture_default_str();
  handlers["cover"] = [&] { return run_cover(common, graph, cover); };

  LampOptions lamp;
  auto* s_lamp = app.add_subcommand("lamplighter", "Z_2 wr C_n: t_mix against t_cov, t_rel against t_hit");
  s_lamp->add_option("--n-min", lamp.n_min, "smallest cycle")->capture_default_str();
  s_lamp->add_option("--n-max", lamp.n_max, "largest cycle")->capture_default_str();
  handlers["lamplighter"] = [&] { return run_lamplighter(lamp); };

  CouplingCliOptions coup;
  auto* s_coup = app.add_subcommand("coupling", "coupled lazy walks on cycles and tori");
  s_coup->add_option("--graph", coup.family, "cycle or torus")
      ->check(CLI::IsMember({"cycle", "torus"}))
      ->capture_default_str();
  s_coup->add_option("--n", coup.n, "side length")->capture_default_str();
  s_coup->add_option("--d", coup.d, "torus dimension")->capture_default_str();
  s_coup->add_option("--x0", coup.x0, "first start")->capture_default_str();
  s_coup->add_option("--y0", coup.y0, "second start")->capture_default_str();
  s_coup->add_option("--runs", coup.runs, "independent runs")->capture_default_str();
  s_coup->add_option("--tmax", coup.t_max, "step cap (0: 100 n^2)")->capture_default_str();
  s_coup->add_flag("--path", coup.path, "write the trajectory of run 0");
  handlers["coupling"] = [&] { return run_coupling(common, coup); };

  SstCliOptions sst;
  auto* s_sst = app.add_subcommand("sst", "strong stationary times");
  s_sst->add_option("--graph", sst.family, "hypercube or lamplighter (over C_n)")
      ->check(CLI::IsMember({"hypercube", "lamplighter"}))
      ->capture_default_str();
  s_sst->add_option("--d", sst.d, "hypercube dimension")->capture_default_str();
  s_sst->add_option("--n", sst.n, "base cycle length")->capture_default_str();
  s_sst->add_option("--runs", sst.runs, "independent runs")->capture_default_str();
  handlers["sst"] = [&] { return run_sst(common, sst); };

  VcOptions vc;
  auto* s_vc = app.add_subcommand("vc", "Chebyshev mixture identity and heat-kernel bound sweep");
  add_graph_options(s_vc, graph);
  s_vc->add_option("--tmax", vc.t_max, "bound sweep horizon")->capture_default_str();
  s_vc->add_option("--identity-tmax", vc.identity_t_max, "identity check horizon")->capture_default_str();
  handlers["vc"] = [&] { return run_vc(graph, vc); };

  GroupOptions grp;
  auto add_group = [&](CLI::App* sub) {
    sub->add_option("--model", grp.model, "lattice, tree or lamplighter")
        ->check(CLI::IsMember({"lattice", "tree", "lamplighter"}))
        ->capture_default_str();
    sub->add_option("--d", grp.d, "rank")->capture_default_str();
    sub->add_flag("--lazy", grp.lazy, "lazy walk");
  };
  auto* s_speed = app.add_subcommand("speed", "Monte Carlo speed estimate");
  add_group(s_speed);
  s_speed->add_option("--steps", grp.steps, "walk length")->capture_default_str();
  s_speed->add_option("--walks", grp.walks, "number of walks")->capture_default_str();
  handlers["speed"] = [&] { return run_speed(common, grp); };

  auto* s_ent = app.add_subcommand("entropy", "exact entropy curve and KVV bridges");
  add_group(s_ent);
  s_ent->add_option("--nmax", grp.n_max, "largest n")->capture_default_str();
  handlers["entropy"] = [&] { return run_entropy(grp); };

  GeomOptions geom;
  auto* s_geom = app.add_subcommand("geom", "distance moments, diameter bounds, Folner construction");
  add_graph_options(s_geom, graph);
  s_geom->add_option("--task", geom.task, "moment, diameter or folner")
      ->check(CLI::IsMember({"moment", "diameter", "folner"}))
      ->capture_default_str();
  s_geom->add_option("--nmax", geom.n_max, "moment rows (0: floor(t_rel))")->capture_default_str();
  s_geom->add_option("--dim", geom.dim, "Folner lattice dimension")->capture_default_str();
  s_geom->add_option("--k", geom.k, "Folner box side")->capture_default_str();
  s_geom->add_flag("--lazy", geom.lazy, "Folner: lazy walk");
  s_geom->add_option("--max-doublings", geom.max_doublings, "Folner search depth")->capture_default_str();
  handlers["geom"] = [&] { return run_geom(graph, geom); };

  AdaptedCliOptions ad;
  auto* s_ad = app.add_subcommand("adapted", "adapted walk simulators and transience tools");
  s_ad->add_option("--task", ad.task, "simulate, excessive, lyapunov, normalize or probe")
      ->check(CLI::IsMember({"simulate", "excessive", "lyapunov", "normalize", "probe"}))
      ->capture_default_str();
  s_ad->add_option("--rule", ad.rule, "bks, gantert, blocks or maxcoord")
      ->check(CLI::IsMember({"bks", "gantert", "blocks", "maxcoord"}))
      ->capture_default_str();
  s_ad->add_option("--steps", ad.steps, "steps per run")->capture_default_str();
  s_ad->add_option("--runs", ad.runs, "independent runs")->capture_default_str();
  s_ad->add_option("--returns-after", ad.returns_after, "count late returns after this time")->capture_default_str();
  s_ad->add_option("--eps-num", ad.eps_num, "maxcoord: eps numerator")->capture_default_str();
  s_ad->add_option("--eps-den", ad.eps_den, "maxcoord: eps denominator")->capture_default_str();
  s_ad->add_option("--dim", ad.dim, "maxcoord and probe dimension")->capture_default_str();
  s_ad->add_flag("--path", ad.path, "write the trajectory of run 0");
  s_ad->add_option("--radius", ad.radius, "excessive: box radius")->capture_default_str();
  s_ad->add_option("--matrix", ad.matrix, "lyapunov: rows separated by ';'");
  s_ad->add_option("--m1", ad.m1, "normalize: first 3x3 matrix");
  s_ad->add_option("--m2", ad.m2, "normalize: second 3x3 matrix");
  s_ad->add_option("--alpha", ad.alpha, "probe exponent")->capture_default_str();
  s_ad->add_option("--radii", ad.radii, "probe shells")->capture_default_str()->delimiter(',');
  handlers["adapted"] = [&] { return run_adapted(common, ad); };

  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    const Outcome outcome = handlers.at(command)();
    emit(outcome, common, command, sub);
    return outcome.violation ? kExitViolation : kExitOk;
  } catch (const SizeError& e) {
    std::cerr << "size cap: " << e.what() << "\n";
    return kExitSizeCap;
  } catch (const ClaimViolation& e) {
    std::cerr << "violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n" << sub->help();
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConstructionError& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
