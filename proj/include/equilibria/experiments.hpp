#pragma once

#include "bounds.hpp"
#include "configuration.hpp"
#include "hull.hpp"
#include "morse.hpp"
#include "potential.hpp"
#include "solids.hpp"
#include "solver.hpp"
#include "voronoi.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef EQUILIBRIA_DATA_DIR
#define EQUILIBRIA_DATA_DIR "data"
#endif

namespace equilibria {

inline constexpr const char* kVersion = "1.0.0";

inline std::string toolchain() {
  std::ostringstream s;
  s << "equilibria " << kVersion;
#ifdef __VERSION__
  s << "; compiler " << __VERSION__;
#endif
  s << "; C++ " << __cplusplus;
  return s.str();
}

struct ExperimentOptions {
  SolveOptions solve;
  SignatureOptions signature;
  std::string data_dir = EQUILIBRIA_DATA_DIR;
};

// ---------------------------------------------------------------------------
// Expected values

struct ExpectedRow {
  std::string name;
  std::string display;
  std::array<int, 4> f_vector{};
  int saddles2 = 0;
  int saddles1 = 0;
  int center = 0;  // alternating sum of the centre's local homology ranks
};

struct ExpectedFixture {
  std::map<Family, std::vector<ExpectedRow>> tables;
  std::map<std::string, std::array<int, 4>> center_ranks;

  const ExpectedRow* find(const std::string& name) const {
    for (const auto& [fam, rows] : tables)
      for (const auto& r : rows)
        if (r.name == name) return &r;
    return nullptr;
  }
};

inline ExpectedFixture load_expected(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open expected-values file '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in);
  ExpectedFixture fx;
  for (Family f : {Family::Platonic, Family::Archimedean, Family::Catalan})
    for (const auto& r : j.at(family_name(f))) {
      ExpectedRow row;
      row.name = r.at("name");
      row.display = r.at("display");
      auto fv = r.at("f_vector").get<std::vector<int>>();
      if (fv.size() != 4) throw std::runtime_error("f_vector of '" + row.name + "' must have four entries");
      std::copy(fv.begin(), fv.end(), row.f_vector.begin());
      row.saddles2 = r.at("saddles2");
      row.saddles1 = r.at("saddles1");
      row.center = r.at("center");
      fx.tables[f].push_back(row);
    }
  if (j.contains("center_ranks"))
    for (const auto& [name, ranks] : j.at("center_ranks").items()) {
      auto v = ranks.get<std::vector<int>>();
      fx.center_ranks[name] = {v.at(0), v.at(1), v.at(2), v.at(3)};
    }
  return fx;
}

inline ExpectedFixture load_expected_default(const ExperimentOptions& o) {
  return load_expected(o.data_dir + "/expected_tables.json");
}

// ---------------------------------------------------------------------------
// Reports

struct EquilibriumRecord {
  Vec3 x = Vec3::Zero();
  std::string kind;
  int index = -1;
  Vec3 eigenvalues = Vec3::Zero();
  double grad_norm = 0;
  bool degenerate = false;
  bool center = false;
  std::optional<std::array<int, 4>> ranks;
  std::string provenance;
};

struct ExperimentReport {
  std::string id;
  std::string label;
  double p = 1;
  std::uint64_t rng_seed = 0;
  std::vector<EquilibriumRecord> equilibria;
  std::array<int, 4> counts{0, 0, 0, 0};  // nondegenerate, off-centre, by index
  std::optional<std::array<int, 4>> center_ranks;
  std::optional<int> center_alt_sum;
  std::optional<std::array<int, 4>> limit_counts;
  std::vector<LedgerEntry> bounds_ledger;
  double wall_seconds = 0;
  std::string toolchain;
  bool pass = true;
  std::vector<std::string> failures;
  nlohmann::json details = nlohmann::json::object();

  void fail(const std::string& why) {
    pass = false;
    failures.push_back(why);
  }
  void check(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

inline nlohmann::json ranks_json(const std::array<int, 4>& r) { return nlohmann::json::array({r[0], r[1], r[2], r[3]}); }

inline std::array<int, 4> json_ranks(const nlohmann::json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

inline nlohmann::json to_json(const EquilibriumRecord& e) {
  nlohmann::json j{{"x", vec_json(e.x)},         {"kind", e.kind},           {"index", e.index},
                   {"eigenvalues", vec_json(e.eigenvalues)}, {"grad_norm", e.grad_norm},
                   {"degenerate", e.degenerate}, {"center", e.center},       {"provenance", e.provenance}};
  if (e.ranks) j["ranks"] = ranks_json(*e.ranks);
  return j;
}

inline EquilibriumRecord equilibrium_from_json(const nlohmann::json& j) {
  EquilibriumRecord e;
  e.x = json_vec(j.at("x"));
  e.kind = j.at("kind");
  e.index = j.at("index");
  e.eigenvalues = json_vec(j.at("eigenvalues"));
  e.grad_norm = j.at("grad_norm");
  e.degenerate = j.at("degenerate");
  e.center = j.at("center");
  e.provenance = j.at("provenance");
  if (j.contains("ranks")) e.ranks = json_ranks(j.at("ranks"));
  return e;
}

inline nlohmann::json to_json(const ExperimentReport& r, bool with_timing = true) {
  nlohmann::json j;
  j["experiment"] = r.id;
  j["label"] = r.label;
  j["p"] = r.p;
  j["rng_seed"] = r.rng_seed;
  j["equilibria"] = nlohmann::json::array();
  for (const auto& e : r.equilibria) j["equilibria"].push_back(to_json(e));
  j["counts"] = ranks_json(r.counts);
  if (r.center_ranks) j["center_ranks"] = ranks_json(*r.center_ranks);
  if (r.center_alt_sum) j["center_alt_sum"] = *r.center_alt_sum;
  if (r.limit_counts) j["limit_counts"] = ranks_json(*r.limit_counts);
  j["bounds_ledger"] = nlohmann::json::array();
  for (const auto& e : r.bounds_ledger)
    j["bounds_ledger"].push_back(
        {{"check", e.check}, {"observed", e.observed}, {"bound", e.bound}, {"pass", e.pass}, {"discovery", e.discovery}});
  if (with_timing) j["wall_seconds"] = r.wall_seconds;
  j["toolchain"] = r.toolchain;
  j["pass"] = r.pass;
  j["failures"] = r.failures;
  j["details"] = r.details;
  return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.id = j.at("experiment");
  r.label = j.at("label");
  r.p = j.at("p");
  r.rng_seed = j.at("rng_seed");
  for (const auto& e : j.at("equilibria")) r.equilibria.push_back(equilibrium_from_json(e));
  r.counts = json_ranks(j.at("counts"));
  if (j.contains("center_ranks")) r.center_ranks = json_ranks(j.at("center_ranks"));
  if (j.contains("center_alt_sum")) r.center_alt_sum = j.at("center_alt_sum").get<int>();
  if (j.contains("limit_counts")) r.limit_counts = json_ranks(j.at("limit_counts"));
  for (const auto& e : j.at("bounds_ledger"))
    r.bounds_ledger.push_back({e.at("check"), e.at("observed"), e.at("bound"), e.at("pass"), e.at("discovery")});
  if (j.contains("wall_seconds")) r.wall_seconds = j.at("wall_seconds");
  r.toolchain = j.at("toolchain");
  r.pass = j.at("pass");
  r.failures = j.at("failures").get<std::vector<std::string>>();
  r.details = j.at("details");
  return r;
}

// ---------------------------------------------------------------------------
// Solve, classify and resolve the centre

struct Analysis {
  ChargeConfiguration config;
  PotentialParams params;
  SolveResult solve;
  std::vector<ClassifiedPoint> points;  // same order as solve.points
  int center = -1;                      // index of the equilibrium at the centroid
  EulerPoincareReport euler;
  bool signatures_stable = true;

  int count(int index) const {
    int k = 0;
    for (int i = 0; i < int(points.size()); ++i)
      if (i != center && points[i].classification.index == index) ++k;
    return k;
  }
  int total() const { return int(points.size()); }
  int degenerate() const {
    int k = 0;
    for (const auto& p : points) k += p.classification.kind == Kind::Degenerate;
    return k;
  }
  std::optional<LocalHomologySignature> center_signature() const {
    if (center < 0) return std::nullopt;
    return points[center].signature;
  }
};

inline LocalHomologySignature nondegenerate_signature(int index) {
  LocalHomologySignature s;
  s.ranks[index] = 1;
  return s;
}

// Solves, classifies every equilibrium and gives each degenerate one (and the
// centre) a local homology signature.  If the centroid is an equilibrium the
// solver did not report, it is added.
inline Analysis analyze(const ChargeConfiguration& c, const PotentialParams& pp, const ExperimentOptions& o) {
  Analysis a;
  a.config = c;
  a.params = pp;
  a.solve = find_equilibria(c, pp, o.solve);
  const double diam = c.diameter();
  const Vec3 g = c.centroid();

  double best = 1e-3 * diam;
  for (int i = 0; i < int(a.solve.points.size()); ++i) {
    double d = (a.solve.points[i].x - g).norm();
    if (d <= best) {
      best = d;
      a.center = i;
    }
  }
  if (a.center < 0 && nearest_charge_distance(c, g) > 1e-6 * diam) {
    CriticalPoint cp = critical_point_at(c, pp, g, o.solve, "centroid");
    if (cp.grad_norm <= o.solve.tol_residual * cp.grad_scale) {
      a.solve.points.push_back(cp);
      a.center = int(a.solve.points.size()) - 1;
    }
  }

  const bool positive = c.all_positive();
  for (int i = 0; i < int(a.solve.points.size()); ++i) {
    ClassifiedPoint p{a.solve.points[i], classify(a.solve.points[i], positive), std::nullopt};
    if (p.classification.kind == Kind::Degenerate) {
      p.signature = signature_at(c, pp, p.point.x, o.signature);
      a.signatures_stable = a.signatures_stable && p.signature->stable;
    } else if (i == a.center) {
      p.signature = nondegenerate_signature(p.classification.index);
    }
    a.points.push_back(std::move(p));
  }
  a.euler = euler_poincare_check(a.points, int(c.size()));
  return a;
}

inline ExperimentReport make_report(const std::string& id, const Analysis& a, const ExperimentOptions& o) {
  ExperimentReport r;
  r.id = id;
  r.label = a.config.label;
  r.p = a.params.p;
  r.rng_seed = o.solve.rng_seed;
  r.toolchain = toolchain();
  for (int i = 0; i < int(a.points.size()); ++i) {
    const auto& p = a.points[i];
    EquilibriumRecord e;
    e.x = p.point.x;
    e.kind = kind_name(p.classification.kind);
    e.index = p.classification.index;
    e.eigenvalues = p.point.hess_eigs;
    e.grad_norm = p.point.grad_norm;
    e.degenerate = p.point.degenerate;
    e.center = i == a.center;
    if (p.signature) e.ranks = p.signature->ranks;
    e.provenance = p.point.seed_provenance;
    r.equilibria.push_back(e);
    if (!e.center && e.index >= 0) r.counts[e.index]++;
    if (!p.classification.warning.empty()) r.details["warnings"].push_back(p.classification.warning);
  }
  if (auto s = a.center_signature()) {
    r.center_ranks = s->ranks;
    r.center_alt_sum = s->alt_sum();
  }
  EmpiricalCounts ec{long(a.config.size()), a.params.p, long(a.total()), long(a.degenerate())};
  const double pr = std::round(a.params.p);
  std::optional<long> even;
  if (a.params.p == pr && long(pr) % 2 == 0 && pr > 0) even = long(pr);
  r.bounds_ledger = compare_empirical(ec, evaluate_bounds(long(a.config.size()), even)).entries;
  for (const auto& e : r.bounds_ledger)
    if (!e.pass) r.fail("bound " + e.check + " violated: " + e.observed + " vs " + e.bound);
  r.details["euler_poincare"] = {{"lhs", a.euler.lhs}, {"expected", a.euler.expected}, {"complete", a.euler.complete}};
  r.details["signatures_stable"] = a.signatures_stable;
  r.details["seeds"] = a.solve.seeds;
  r.details["failed_seeds"] = a.solve.failed;
  return r;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Tables

struct TableRow {
  ExpectedRow expected;
  std::array<int, 4> f_vector{};
  int saddles2 = 0;
  int saddles1 = 0;
  std::optional<int> center;
  std::optional<std::array<int, 4>> center_ranks;
  bool center_stable = true;
  int extrema = 0;  // minima plus maxima, none expected
  int euler_residual = 0;
  bool match = false;
  bool ranks_match = true;  // against the expected centre ranks when known
  double seconds = 0;
  ExperimentReport report;
};

struct TableReport {
  Family family = Family::Platonic;
  std::vector<TableRow> rows;
  int mismatches() const {
    int k = 0;
    for (const auto& r : rows) k += !(r.match && r.ranks_match);
    return k;
  }
};

inline TableRow run_solid(const ExpectedRow& ex, const ExpectedFixture& fx, const ExperimentOptions& o) {
  Stopwatch sw;
  TableRow row;
  row.expected = ex;
  auto c = named_solid(ex.name);
  auto fv = hull::f_vector(c.points);
  std::copy(fv.begin(), fv.end(), row.f_vector.begin());
  auto a = analyze(c, {1.0}, o);
  row.saddles2 = a.count(2);
  row.saddles1 = a.count(1);
  row.extrema = a.count(0) + a.count(3);
  if (auto s = a.center_signature()) {
    row.center = s->alt_sum();
    row.center_ranks = s->ranks;
    row.center_stable = s->stable;
  }
  row.euler_residual = a.euler.residual;
  row.match = row.f_vector == ex.f_vector && row.saddles2 == ex.saddles2 && row.saddles1 == ex.saddles1 &&
              row.center == ex.center;
  if (auto it = fx.center_ranks.find(ex.name); it != fx.center_ranks.end())
    row.ranks_match = row.center_ranks == it->second;
  row.report = make_report("table", a, o);
  row.report.check(row.match, "row differs from the expected values");
  row.report.check(row.ranks_match, "centre ranks differ from the expected values");
  row.seconds = row.report.wall_seconds = sw.seconds();
  return row;
}

inline TableReport run_table(Family f, const ExperimentOptions& o, const ExpectedFixture& fx) {
  TableReport t;
  t.family = f;
  auto it = fx.tables.find(f);
  if (it == fx.tables.end()) throw std::runtime_error("no expected rows for " + family_name(f));
  for (const auto& ex : it->second) t.rows.push_back(run_solid(ex, fx, o));
  return t;
}

inline std::string fvec_string(const std::array<int, 4>& f) {
  return "(" + std::to_string(f[0]) + "," + std::to_string(f[1]) + "," + std::to_string(f[2]) + "," +
         std::to_string(f[3]) + ")";
}

inline void write_table_csv(const TableReport& t, std::ostream& out) {
  out << "solid,f-vector,2-saddles,1-saddles,center,expected 2-saddles,expected 1-saddles,expected center,match\n";
  for (const auto& r : t.rows)
    out << r.expected.display << ",\"" << fvec_string(r.f_vector) << "\"," << r.saddles2 << "," << r.saddles1 << ","
        << (r.center ? std::to_string(*r.center) : "") << "," << r.expected.saddles2 << "," << r.expected.saddles1
        << "," << r.expected.center << "," << (r.match && r.ranks_match ? "yes" : "no") << "\n";
}

inline nlohmann::json to_json(const TableReport& t, bool with_timing = true) {
  nlohmann::json j;
  j["family"] = family_name(t.family);
  j["mismatches"] = t.mismatches();
  for (const auto& r : t.rows) {
    nlohmann::json row{{"name", r.expected.name},
                       {"f_vector", ranks_json(r.f_vector)},
                       {"saddles2", r.saddles2},
                       {"saddles1", r.saddles1},
                       {"center_stable", r.center_stable},
                       {"euler_residual", r.euler_residual},
                       {"match", r.match && r.ranks_match},
                       {"expected", {{"f_vector", ranks_json(r.expected.f_vector)},
                                     {"saddles2", r.expected.saddles2},
                                     {"saddles1", r.expected.saddles1},
                                     {"center", r.expected.center}}},
                       {"report", to_json(r.report, with_timing)}};
    if (r.center) row["center"] = *r.center;
    if (r.center_ranks) row["center_ranks"] = ranks_json(*r.center_ranks);
    j["rows"].push_back(row);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Counterexample: the truncated octahedron has more equilibria for V than
// the weighted distance function has critical points.

struct CounterexampleReport {
  int v_saddles1 = 0, v_saddles2 = 0;
  int e_saddles1 = 0, e_saddles2 = 0;
  int line_equilibria = 0;
  ExperimentReport report;
};

// Lines through the centroid and the midpoints of edges shared by two facets
// with the given number of vertices.
inline std::vector<Vec3> edge_midpoint_directions(const ChargeConfiguration& c, int facet_size) {
  auto pts = hull::to_vecx(c.points);
  auto fs = hull::facets(pts, hull::iota(int(c.size())), 1e-9 * c.diameter());
  const Vec3 g = c.centroid();
  std::vector<Vec3> dirs;
  for (std::size_t a = 0; a < fs.size(); ++a)
    for (std::size_t b = a + 1; b < fs.size(); ++b) {
      if (int(fs[a].vertices.size()) != facet_size || int(fs[b].vertices.size()) != facet_size) continue;
      hull::Index common;
      std::set_intersection(fs[a].vertices.begin(), fs[a].vertices.end(), fs[b].vertices.begin(),
                            fs[b].vertices.end(), std::back_inserter(common));
      if (common.size() == 2) dirs.push_back((0.5 * (c.points[common[0]] + c.points[common[1]]) - g).normalized());
    }
  return dirs;
}

inline CounterexampleReport run_counterexample(const ExperimentOptions& o) {
  Stopwatch sw;
  CounterexampleReport cr;
  auto c = named_solid("truncated_octahedron");
  auto a = analyze(c, {1.0}, o);
  cr.v_saddles1 = a.count(1);
  cr.v_saddles2 = a.count(2);
  auto lc = limit_counts(c);
  cr.e_saddles1 = lc[1];
  cr.e_saddles2 = lc[2];

  auto dirs = edge_midpoint_directions(c, 6);
  const Vec3 g = c.centroid();
  const double tol = 1e-6 * c.diameter();
  if (!dirs.empty()) {
    for (const auto& p : a.points) {
      Vec3 v = p.point.x - g;
      if ((v - v.dot(dirs[0]) * dirs[0]).norm() < tol) cr.line_equilibria++;
    }
  }

  auto& r = cr.report = make_report("counterexample", a, o);
  r.limit_counts = lc;
  r.details["v_counts"] = {{"saddles1", cr.v_saddles1}, {"saddles2", cr.v_saddles2}};
  r.details["e_counts"] = {{"saddles1", cr.e_saddles1}, {"saddles2", cr.e_saddles2}};
  r.details["hexagon_edge_lines"] = dirs.size();
  r.details["line_equilibria"] = cr.line_equilibria;
  r.check(cr.v_saddles1 == 18 && cr.v_saddles2 == 36, "potential saddle counts differ from (18, 36)");
  r.check(cr.e_saddles1 == 14 && cr.e_saddles2 == 36, "distance saddle counts differ from (14, 36)");
  r.check(cr.v_saddles1 > cr.e_saddles1, "no excess of 1-saddles");
  r.check(cr.v_saddles1 + cr.v_saddles2 > cr.e_saddles1 + cr.e_saddles2, "no excess of saddles");
  r.check(cr.line_equilibria == 5, "symmetry line does not carry five equilibria");
  r.wall_seconds = sw.seconds();
  return cr;
}

// ---------------------------------------------------------------------------
// Anti-prism height scan

struct ScanSample {
  double h = 0;  // relative height h / R
  int total = 0;
  int saddles1 = 0;
  int saddles2 = 0;
  int degenerate = 0;
  Vec3 center_eigs = Vec3::Zero();
};

struct AntiprismScan {
  int k = 0;
  std::vector<ScanSample> samples;  // coarse grid, then the refined one
  double optimal_h = 0;
  int optimal_count = 0;
  std::optional<BigRational> ratio;
  ExperimentReport report;
};

struct ScanGrid {
  int points = 60;
  double lo = 0.5;
  double hi = 2.5;
  int refine = 4;
};

inline ScanSample scan_sample(int k, double h, const ExperimentOptions& o) {
  auto c = antiprism(k, 1.0, h);
  auto res = find_equilibria(c, {1.0}, o.solve);
  ScanSample s;
  s.h = h;
  s.total = int(res.points.size());
  s.saddles1 = res.count_index(1);
  s.saddles2 = res.count_index(2);
  s.degenerate = res.count_degenerate();
  s.center_eigs = critical_point_at(c, {1.0}, Vec3::Zero(), o.solve).hess_eigs;
  return s;
}

// Middle of the longest run of samples attaining the maximum count.
inline double plateau_middle(const std::vector<ScanSample>& s, int best) {
  int run_start = -1, best_start = 0, best_len = 0;
  for (int i = 0; i <= int(s.size()); ++i) {
    bool on = i < int(s.size()) && s[i].total == best;
    if (on && run_start < 0) run_start = i;
    if (!on && run_start >= 0) {
      if (i - run_start > best_len) {
        best_len = i - run_start;
        best_start = run_start;
      }
      run_start = -1;
    }
  }
  return 0.5 * (s[best_start].h + s[best_start + best_len - 1].h);
}

inline AntiprismScan run_antiprism_scan(int k, const ExperimentOptions& o, const ScanGrid& grid = {}) {
  Stopwatch sw;
  AntiprismScan sc;
  sc.k = k;
  std::vector<ScanSample> coarse;
  for (int i = 0; i < grid.points; ++i)
    coarse.push_back(scan_sample(k, grid.lo + (grid.hi - grid.lo) * i / std::max(1, grid.points - 1), o));
  int best = 0;
  for (const auto& s : coarse) best = std::max(best, s.total);
  int first = int(coarse.size()), last = -1;
  for (int i = 0; i < int(coarse.size()); ++i)
    if (coarse[i].total == best) {
      first = std::min(first, i);
      last = std::max(last, i);
    }
  const double lo = coarse[std::max(0, first - 1)].h, hi = coarse[std::min(int(coarse.size()) - 1, last + 1)].h;
  const int fine_points = std::max(3, (std::max(1, last + 1 - std::max(0, first - 1))) * grid.refine + 1);
  std::vector<ScanSample> fine;
  for (int i = 0; i < fine_points; ++i) fine.push_back(scan_sample(k, lo + (hi - lo) * i / (fine_points - 1), o));
  int fine_best = 0;
  for (const auto& s : fine) fine_best = std::max(fine_best, s.total);

  sc.optimal_h = fine_best >= best ? plateau_middle(fine, fine_best) : plateau_middle(coarse, best);
  auto c = antiprism(k, 1.0, sc.optimal_h);
  auto a = analyze(c, {1.0}, o);
  sc.optimal_count = a.total();
  sc.samples = coarse;
  sc.samples.insert(sc.samples.end(), fine.begin(), fine.end());
  if (k >= 4) sc.ratio = BigRational(sc.optimal_count, 2 * k);

  auto& r = sc.report = make_report("antiprism-scan", a, o);
  r.details["k"] = k;
  r.details["optimal_h"] = sc.optimal_h;
  r.details["optimal_count"] = sc.optimal_count;
  if (sc.ratio) r.details["ratio"] = to_string(*sc.ratio);
  for (const auto& s : sc.samples)
    r.details["samples"].push_back({{"h", s.h},
                                    {"total", s.total},
                                    {"saddles1", s.saddles1},
                                    {"saddles2", s.saddles2},
                                    {"degenerate", s.degenerate},
                                    {"center_eigenvalues", vec_json(s.center_eigs)}});
  // The doubled transverse eigenvalue at the centre changes sign at sqrt(2).
  std::optional<double> below, above;
  for (const auto& s : coarse) {
    if (s.h < std::numbers::sqrt2) below = s.center_eigs.maxCoeff();
    if (s.h > std::numbers::sqrt2 && !above) above = s.center_eigs.minCoeff();
  }
  if (below && above) {
    r.details["center_flip"] = *below > 0 && *above < 0;
  }
  if (k >= 4) {
    r.check(sc.optimal_count == 6 * k + 1, "optimal count " + std::to_string(sc.optimal_count) + " differs from " +
                                               std::to_string(6 * k + 1));
    r.check(*sc.ratio == antiprism_ratio(k), "ratio differs from the closed form");
  }
  r.wall_seconds = sw.seconds();
  return sc;
}

// ---------------------------------------------------------------------------
// Prism centre transition at h = sqrt(2) R

struct PrismTransition {
  int N = 0;
  double beta = 0;
  double R = 1;
  int index_below = -1;
  int index_above = -1;
  Vec3 eigs_at = Vec3::Zero();       // at h = sqrt(2) R
  double transverse_relative = 0;    // smallest |eigenvalue| / Hessian scale at h = sqrt(2) R
  double literal_ratio = 0;          // |lambda_1| / |lambda_3| there
  std::vector<double> axis_saddles;  // heights of the axis 1-saddles above the transition
  ExperimentReport report;
};

inline PrismTransition run_prism_transition(int N, double beta, double R, const ExperimentOptions& o,
                                            double delta = 0.05) {
  Stopwatch sw;
  PrismTransition t;
  t.N = N;
  t.beta = beta;
  t.R = R;
  const double hc = std::numbers::sqrt2 * R;
  const PotentialParams pp{1.0};
  auto centre = [&](double h) { return critical_point_at(prism(N, R, h, beta), pp, Vec3::Zero(), o.solve); };
  auto lo = centre(hc * (1 - delta)), hi = centre(hc * (1 + delta)), at = centre(hc);
  t.index_below = lo.degenerate ? -1 : lo.negative_eigs();
  t.index_above = hi.degenerate ? -1 : hi.negative_eigs();
  t.eigs_at = at.hess_eigs;
  Vec3 mags = at.hess_eigs.cwiseAbs();
  std::sort(mags.data(), mags.data() + 3);
  t.transverse_relative = mags[0] / at.hess_scale;
  t.literal_ratio = mags[2] > 0 ? mags[0] / mags[2] : std::numeric_limits<double>::infinity();

  const double h = hc * (1 + delta);
  auto c = prism(N, R, h, beta);
  LineSegment axis{Vec3::Zero(), Vec3::UnitZ(), -h / 2, h / 2};
  for (const auto& root : symmetry_line_roots(c, pp, axis, 401)) {
    if (std::abs(root.t) < 1e-6 * h || std::abs(root.t) >= h / 2) continue;
    auto cp = critical_point_at(c, pp, root.x, o.solve);
    if (!cp.degenerate && cp.negative_eigs() == 1) t.axis_saddles.push_back(root.t);
  }

  auto a = analyze(c, pp, o);
  auto& r = t.report = make_report("prism-transition", a, o);
  r.details["N"] = N;
  r.details["beta"] = beta;
  r.details["R"] = R;
  r.details["index_below"] = t.index_below;
  r.details["index_above"] = t.index_above;
  r.details["eigenvalues_at_transition"] = vec_json(t.eigs_at);
  r.details["transverse_relative"] = t.transverse_relative;
  r.details["literal_ratio"] = t.literal_ratio;
  r.details["axis_saddles"] = t.axis_saddles;
  r.check(t.index_below == 1, "centre is not a 1-saddle below the transition");
  r.check(t.index_above == 2, "centre is not a 2-saddle above the transition");
  r.check(t.transverse_relative < 1e-6, "transverse eigenvalue does not vanish at the transition");
  r.check(t.axis_saddles.size() == 2, "expected two axis 1-saddles above the transition");
  r.wall_seconds = sw.seconds();
  return t;
}

// ---------------------------------------------------------------------------
// Iterated square anti-prism

struct IterateRun {
  int layers = 1;
  double h = 0;
  double shrink = 0;
  int count = 0;
  BigInt expected;
  BigRational ratio;
  bool interaction = false;  // some finest copy did not keep its own equilibria
  int retries = 0;
  ExperimentReport report;
};

// Equilibria within the finest copies' balls; each should hold the base count.
inline bool copies_intact(const ChargeConfiguration& c, const SolveResult& res, int base_n, int base_count,
                          double radius) {
  for (std::size_t s = 0; s < c.size(); s += base_n) {
    Vec3 m = Vec3::Zero();
    for (int b = 0; b < base_n; ++b) m += c.points[s + b];
    m /= base_n;
    int k = 0;
    for (const auto& p : res.points) k += (p.x - m).norm() < radius;
    if (k != base_count) return false;
  }
  return true;
}

inline IterateRun run_iterate_ratio(int layers, const ExperimentOptions& o, std::optional<double> h = std::nullopt,
                                    double shrink = 0.02) {
  Stopwatch sw;
  IterateRun run;
  run.layers = layers;
  run.h = h ? *h : run_antiprism_scan(4, o).optimal_h;
  const int base_count = 25, base_n = 8;
  auto f = iterate_formulas(base_count, base_n, layers);
  run.expected = f.count;
  auto base = antiprism(4, 1.0, run.h);
  const double rho = base.circumradius(base.centroid());
  std::optional<Analysis> a;
  for (int attempt = 0; attempt < 2; ++attempt) {
    run.shrink = shrink;
    auto c = layers == 1 ? base : iterate_substitution(base, layers, shrink);
    a = analyze(c, {1.0}, o);
    const double radius = 1.5 * rho * std::pow(shrink, layers - 1);
    run.interaction = layers > 1 && !copies_intact(c, a->solve, base_n, base_count, radius);
    if (!run.interaction) break;
    shrink /= 2;
    ++run.retries;
  }
  run.count = a->total();
  run.ratio = BigRational(run.count, boost::multiprecision::pow(BigInt(base_n), layers));
  auto& r = run.report = make_report("iterate-ratio", *a, o);
  r.details["layers"] = layers;
  r.details["h"] = run.h;
  r.details["shrink"] = run.shrink;
  r.details["retries"] = run.retries;
  r.details["count"] = run.count;
  r.details["expected"] = run.expected.str();
  r.details["ratio"] = to_string(run.ratio);
  r.details["limit"] = to_string(f.limit);
  r.check(!run.interaction, "copies interact even after reducing the shrink factor");
  r.check(BigInt(run.count) == run.expected, "count " + std::to_string(run.count) + " differs from " + run.expected.str());
  r.wall_seconds = sw.seconds();
  return run;
}

// ---------------------------------------------------------------------------
// Sweep over the exponent p

struct SweepEntry {
  double p = 1;
  std::array<int, 4> counts{0, 0, 0, 0};  // including the centre when nondegenerate
  int degenerate = 0;
  std::string center_kind;
  Vec3 center_eigs = Vec3::Zero();
  std::optional<std::array<int, 4>> center_ranks;
  int total = 0;
};

struct VpSweep {
  std::vector<SweepEntry> entries;
  bool monotone = true;  // recorded only
  ExperimentReport report;
};

inline VpSweep run_vp_sweep(const ChargeConfiguration& c, const std::vector<double>& ps, const ExperimentOptions& o) {
  Stopwatch sw;
  VpSweep sweep;
  ExperimentReport r;
  r.id = "vp-sweep";
  r.label = c.label;
  r.rng_seed = o.solve.rng_seed;
  r.toolchain = toolchain();
  for (double p : ps) {
    auto a = analyze(c, {p}, o);
    SweepEntry e;
    e.p = p;
    e.total = a.total();
    e.degenerate = a.degenerate();
    for (int i = 0; i < int(a.points.size()); ++i)
      if (a.points[i].classification.index >= 0) e.counts[a.points[i].classification.index]++;
    if (a.center >= 0) {
      const auto& cp = a.points[a.center];
      e.center_kind = kind_name(cp.classification.kind);
      e.center_eigs = cp.point.hess_eigs;
      if (cp.signature) e.center_ranks = cp.signature->ranks;
    }
    if (p == 1.0 && c.all_positive())
      r.check(e.counts[0] == 0 && e.counts[3] == 0, "harmonic potential reported a minimum or maximum");
    nlohmann::json ej{{"p", p},
                      {"counts", ranks_json(e.counts)},
                      {"degenerate", e.degenerate},
                      {"total", e.total},
                      {"center_kind", e.center_kind},
                      {"center_eigenvalues", vec_json(e.center_eigs)}};
    if (e.center_ranks) ej["center_ranks"] = ranks_json(*e.center_ranks);
    r.details["sweep"].push_back(ej);
    if (!sweep.entries.empty() && e.total < sweep.entries.back().total) sweep.monotone = false;
    sweep.entries.push_back(e);
  }
  r.details["monotone"] = sweep.monotone;
  r.wall_seconds = sw.seconds();
  sweep.report = r;
  return sweep;
}

// ---------------------------------------------------------------------------
// Equilibria of V_p restricted to random lines

// Lines through a uniform point of the ball of half the circumradius around
// the centroid, with a uniform direction.
inline std::vector<LineSegment> random_lines(const ChargeConfiguration& c, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 g = c.centroid();
  const double R = c.circumradius(g);
  auto ball = [&] {
    Vec3 d;
    do {
      d = Vec3(u(rng), u(rng), u(rng));
    } while (d.squaredNorm() > 1.0 || d.squaredNorm() < 1e-6);
    return d;
  };
  std::vector<LineSegment> lines;
  for (int k = 0; k < count; ++k) {
    Vec3 base = g + 0.5 * R * ball();
    lines.push_back({base, ball().normalized(), -R, R});
  }
  return lines;
}

struct SliceRun {
  std::vector<SliceCount> counts;
  int max_count = 0;
  long long bound = 0;
  bool within_bound = true;
  bool resolved = true;
  ExperimentReport report;
};

inline SliceRun run_slice(const ChargeConfiguration& c, double p, int lines, const ExperimentOptions& o) {
  Stopwatch sw;
  SliceRun run;
  auto& r = run.report;
  r.id = "slice";
  r.label = c.label;
  r.p = p;
  r.rng_seed = o.solve.rng_seed;
  r.toolchain = toolchain();
  for (const auto& line : random_lines(c, lines, o.solve.rng_seed)) {
    auto s = count_slice_equilibria(c, {p}, line);
    run.max_count = std::max(run.max_count, s.count);
    run.bound = s.bound;
    run.within_bound = run.within_bound && s.within_bound;
    run.resolved = run.resolved && s.resolved;
    r.details["lines"].push_back({{"base", vec_json(line.base)},
                                  {"direction", vec_json(line.direction)},
                                  {"count", s.count},
                                  {"resolved", s.resolved}});
    run.counts.push_back(std::move(s));
  }
  r.details["max_count"] = run.max_count;
  r.details["bound"] = run.bound;
  r.details["resolved"] = run.resolved;
  r.check(run.within_bound, "a line carries more equilibria than the slice bound");
  r.wall_seconds = sw.seconds();
  return run;
}

}  // namespace equilibria
