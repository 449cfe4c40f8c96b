#pragma once

#include "configuration.hpp"
#include "potential.hpp"
#include "voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace equilibria {

struct SolveOptions {
  double tol_residual = 1e-10;       // on |grad V|, relative to sum p |z|^p / r^(p+1)
  double dedup_radius = 1e-6;        // relative to the configuration diameter
  double degenerate_threshold = 1e-6;  // min |eigenvalue| relative to sum p (p+1) |z|^p / r^(p+2)
  double degenerate_cluster_radius = 1e-2;  // relative to the diameter
  int grid_density = 12;
  int max_newton_iters = 300;
  double max_step_fraction = 0.5;  // of the nearest-charge distance
  double search_radius = 1.5;      // in circumradii around the centroid
  int random_seeds = 1000;
  bool seed_grid = true;
  bool seed_pairs = true;
  bool seed_delaunay = true;
  bool seed_voronoi = true;
  bool seed_symmetry_axes = true;
  bool seed_random = true;
  std::uint64_t rng_seed = 1;
  int threads = 1;
};

struct CriticalPoint {
  Vec3 x = Vec3::Zero();
  double grad_norm = 0;
  double grad_scale = 0;
  Vec3 hess_eigs = Vec3::Zero();  // ascending
  double hess_scale = 0;
  double p_used = 1;
  std::string seed_provenance;
  bool degenerate = false;
  int cluster_size = 1;

  int negative_eigs() const { return int((hess_eigs.array() < 0).count()); }
};

struct DegenerateCluster {
  Vec3 barycenter = Vec3::Zero();
  int members = 0;
  double spread = 0;
};

struct SolveResult {
  std::vector<CriticalPoint> points;  // lexicographic order
  std::vector<DegenerateCluster> clusters;
  int seeds = 0;
  int converged = 0;
  int failed = 0;

  int count_index(int j) const {
    return int(std::count_if(points.begin(), points.end(),
                             [&](const CriticalPoint& c) { return !c.degenerate && c.negative_eigs() == j; }));
  }
  int count_degenerate() const {
    return int(std::count_if(points.begin(), points.end(), [](const CriticalPoint& c) { return c.degenerate; }));
  }
  int count_nondegenerate() const { return int(points.size()) - count_degenerate(); }
};

struct NewtonOutcome {
  bool converged = false;
  CriticalPoint point;
  int iterations = 0;
  std::string reason;
};

inline CriticalPoint critical_point_at(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x,
                                       const SolveOptions& opts, std::string provenance = {}) {
  Derivatives d = derivatives(c, pp, x);
  Eigen::SelfAdjointEigenSolver<Mat3> es(d.hess, Eigen::EigenvaluesOnly);
  CriticalPoint cp;
  cp.x = x;
  cp.grad_norm = d.grad.norm();
  cp.grad_scale = d.grad_scale;
  cp.hess_eigs = es.eigenvalues();
  cp.hess_scale = d.hess_scale;
  cp.p_used = pp.p;
  cp.seed_provenance = std::move(provenance);
  cp.degenerate = cp.hess_eigs.cwiseAbs().minCoeff() < opts.degenerate_threshold * d.hess_scale;
  return cp;
}

namespace solver_detail {

// Pseudo-inverse Newton step; nearly singular directions are left alone.
inline Vec3 newton_step(const Derivatives& d) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(d.hess);
  const Vec3& ev = es.eigenvalues();
  const double big = ev.cwiseAbs().maxCoeff();
  Vec3 step = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(ev[k]) <= 1e-14 * big || big == 0) continue;
    Vec3 v = es.eigenvectors().col(k);
    step += (v.dot(d.grad) / ev[k]) * v;
  }
  return step;
}

}  // namespace solver_detail

// Damped Newton on grad V_p.  Once the residual test passes, iteration
// continues while the steps keep shrinking, which drives points near a
// degenerate equilibrium as close to it as rounding allows.
inline NewtonOutcome refine_newton(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x0,
                                   const SolveOptions& opts, std::string provenance = {}) {
  NewtonOutcome out;
  const double diam = std::max(c.diameter(), 1e-300);
  const double cut = potential_detail::cutoff(c);
  const Vec3 centre = c.centroid();
  const double region = opts.search_radius * std::max(c.circumradius(centre), 0.5 * diam) + diam * 1e-9;
  Vec3 x = x0;
  if (nearest_charge_distance(c, x) < cut) {
    out.reason = "start point coincides with a charge";
    return out;
  }
  bool passed = false;
  double prev = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opts.max_newton_iters; ++it) {
    Derivatives d = derivatives(c, pp, x);
    if (d.grad.norm() < opts.tol_residual * d.grad_scale) passed = true;
    Vec3 step = solver_detail::newton_step(d);
    double sn = step.norm();
    if (!std::isfinite(sn)) {
      out.reason = "non-finite step";
      return out;
    }
    if (sn > opts.max_step_fraction * d.rmin) {
      step *= opts.max_step_fraction * d.rmin / sn;
      sn = step.norm();
    }
    if (passed && (sn < 1e-15 * diam || sn >= prev)) break;
    prev = sn;
    Vec3 trial = x - step;
    for (int h = 0; h < 60 && nearest_charge_distance(c, trial) < cut; ++h) {
      step *= 0.5;
      trial = x - step;
    }
    if (nearest_charge_distance(c, trial) < cut) {
      out.reason = "step into a charge";
      return out;
    }
    x = trial;
    if ((x - centre).norm() > region) {
      out.reason = "left the search region";
      out.iterations = it + 1;
      return out;
    }
  }
  out.iterations = it;
  out.point = critical_point_at(c, pp, x, opts, std::move(provenance));
  out.converged = out.point.grad_norm < opts.tol_residual * out.point.grad_scale;
  if (!out.converged) out.reason = "no convergence within the iteration limit";
  return out;
}

struct LineSegment {
  Vec3 base = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  double t0 = -1, t1 = 1;

  Vec3 at(double t) const { return base + t * direction; }
};

struct LineRoot {
  double t;
  Vec3 x;
};

namespace solver_detail {

// Parameters where the line passes through (or within tol of) a charge.
inline std::vector<double> poles(const ChargeConfiguration& c, const LineSegment& line, double tol) {
  std::vector<double> out;
  for (const auto& a : c.points) {
    double t = (a - line.base).dot(line.direction);
    if ((line.at(t) - a).norm() < tol) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline bool brackets_pole(const std::vector<double>& poles, double a, double b) {
  return std::any_of(poles.begin(), poles.end(), [&](double t) { return t >= a && t <= b; });
}

// Roots of f between consecutive samples with a sign change, refined by bisection.
template <class F>
std::vector<double> bracket_roots(F&& f, const std::vector<double>& ts, const std::vector<double>& poles, double width) {
  std::vector<double> roots;
  std::vector<double> fs(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) fs[k] = f(ts[k]);
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    double a = ts[k], b = ts[k + 1], fa = fs[k], fb = fs[k + 1];
    if (!std::isfinite(fa) || !std::isfinite(fb) || brackets_pole(poles, a, b)) continue;
    if (fa == 0) {
      if (roots.empty() || roots.back() != a) roots.push_back(a);
      continue;
    }
    if (fb == 0 || (fa < 0) == (fb < 0)) continue;
    while (b - a > width) {
      double m = 0.5 * (a + b), fm = f(m);
      if (fm == 0) {
        a = b = m;
        break;
      }
      if ((fm < 0) == (fa < 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  if (!ts.empty() && fs.back() == 0) roots.push_back(ts.back());
  return roots;
}

}  // namespace solver_detail

// Zeros of the tangential derivative along a line that is fixed by mirror
// symmetries; there the normal derivative vanishes, so each zero is an
// equilibrium of the full field.
inline std::vector<LineRoot> symmetry_line_roots(const ChargeConfiguration& c, const PotentialParams& pp,
                                                 LineSegment line, int samples = 400, double normal_tol = 1e-9) {
  if (samples < 2) throw std::invalid_argument("symmetry_line_roots: need at least two samples");
  line.direction.normalize();
  const double diam = std::max(c.diameter(), 1e-300);
  auto ps = solver_detail::poles(c, line, 1e-9 * diam);
  std::vector<double> ts;
  for (int k = 0; k <= samples; ++k) ts.push_back(line.t0 + (line.t1 - line.t0) * k / samples);
  auto f = [&](double t) {
    try {
      Derivatives d = derivatives(c, pp, line.at(t));
      Vec3 normal = d.grad - d.grad.dot(line.direction) * line.direction;
      if (normal.norm() > normal_tol * d.grad_scale)
        throw std::domain_error("line is not a symmetry locus: normal derivative does not vanish");
      return d.grad.dot(line.direction);
    } catch (const NearChargeError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  std::vector<LineRoot> out;
  for (double t : solver_detail::bracket_roots(f, ts, ps, 1e-12 * diam)) out.push_back({t, line.at(t)});
  return out;
}

struct SliceCount {
  int count = 0;
  long long bound = 0;
  bool within_bound = true;
  bool resolved = true;  // false when two roots are closer than the resolution
  std::vector<double> roots;
};

// Critical points of V_p restricted to a line, for even p.
inline SliceCount count_slice_equilibria(const ChargeConfiguration& c, const PotentialParams& pp, LineSegment line) {
  const double p = pp.p;
  if (p != std::floor(p) || std::fmod(p, 2.0) != 0.0)
    throw std::invalid_argument("count_slice_equilibria needs an even integer p");
  line.direction.normalize();
  const double diam = std::max(c.diameter(), 1e-300);
  const double cut = potential_detail::cutoff(c);
  auto ps = solver_detail::poles(c, line, cut);

  // Beyond the outermost charge projections every term pushes the same way,
  // so all roots lie between them.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<std::pair<double, double>> feet;
  for (const auto& a : c.points) {
    double t = (a - line.base).dot(line.direction);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
    feet.push_back({t, (line.at(t) - a).norm()});
  }
  lo -= 0.1 * diam;
  hi += 0.1 * diam;
  std::vector<double> ts;
  const int uniform = 4000;
  for (int k = 0; k <= uniform; ++k) ts.push_back(lo + (hi - lo) * k / uniform);
  for (const auto& [t, dist] : feet) {
    double s = std::max(dist, 1e-6 * diam);
    for (int e = -30; e <= 30; ++e) {
      double off = s * std::pow(10.0, e / 10.0);
      if (off > hi - lo) continue;
      ts.push_back(t + off);
      ts.push_back(t - off);
    }
    ts.push_back(t);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  ts.erase(std::remove_if(ts.begin(), ts.end(), [&](double t) { return t < lo || t > hi; }), ts.end());

  auto f = [&](double t) {
    Vec3 x = line.at(t);
    if (nearest_charge_distance(c, x) < cut) return std::numeric_limits<double>::quiet_NaN();
    return gradient(c, pp, x).dot(line.direction);
  };
  SliceCount out;
  out.roots = solver_detail::bracket_roots(f, ts, ps, 1e-13 * diam);
  out.count = int(out.roots.size());
  for (std::size_t k = 1; k < out.roots.size(); ++k)
    if (out.roots[k] - out.roots[k - 1] < 1e-9 * diam) out.resolved = false;
  const long long n = (long long)c.size();
  out.bound = (long long)p * (n - 1) + 2 * n - 1;
  out.within_bound = out.count <= out.bound;
  return out;
}

struct Seed {
  Vec3 x;
  std::string kind;
};

inline std::vector<Seed> generate_seeds(const ChargeConfiguration& c, const PotentialParams& pp,
                                        const SolveOptions& opts) {
  std::vector<Seed> seeds;
  const std::size_t n = c.size();
  const double diam = std::max(c.diameter(), 1e-300);
  const Vec3 centre = c.centroid();
  const double R = std::max(c.circumradius(centre), 0.5 * diam);

  if (opts.seed_grid && opts.grid_density > 0) {
    Vec3 lo = c.points[0], hi = c.points[0];
    for (const auto& p : c.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    Vec3 mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int k = 0; k < 3; ++k) half[k] = 1.5 * std::max(half[k], 0.25 * diam);
    const int g = opts.grid_density;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j)
        for (int k = 0; k < g; ++k) {
          auto s = [&](int a) { return g == 1 ? 0.0 : -1.0 + 2.0 * a / (g - 1); };
          seeds.push_back({mid + Vec3(s(i) * half.x(), s(j) * half.y(), s(k) * half.z()), "grid"});
        }
  }

  std::optional<DelaunayMosaic> mosaic;
  if (n >= 2 && (opts.seed_delaunay || opts.seed_voronoi || opts.seed_symmetry_axes || n > 150))
    mosaic = delaunay(c.points);

  if (opts.seed_pairs && n >= 2) {
    if (n <= 150 || !mosaic) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) seeds.push_back({0.5 * (c.points[i] + c.points[j]), "pair"});
    } else {
      for (const auto& e : mosaic->faces[1]) seeds.push_back({0.5 * (c.points[e[0]] + c.points[e[1]]), "pair"});
    }
  }

  auto barycenter = [&](const hull::Index& f) {
    Vec3 b = Vec3::Zero();
    for (int i : f) b += c.points[i];
    return Vec3(b / double(f.size()));
  };

  if (mosaic && opts.seed_delaunay) {
    const double fr[] = {0.25, 0.5, 0.75, 0.9, 1.0};
    for (const auto& cell : mosaic->cells) {
      Vec3 g = barycenter(cell);
      seeds.push_back({g, "delaunay"});
      auto pts = hull::to_vecx(c.points);
      auto lat = hull::face_lattice(pts, cell, 1e-9 * diam);
      for (std::size_t k = 0; k + 1 < lat.size(); ++k)
        for (const auto& f : lat[k]) {
          Vec3 b = barycenter(f);
          for (double s : fr) seeds.push_back({g + s * (b - g), "delaunay"});
        }
    }
  }

  if (mosaic && opts.seed_voronoi) {
    auto vc = build_voronoi(c.points);
    for (const auto& cell : vc.cells)
      if (cell.dim < 3 && (cell.anchor - centre).norm() < opts.search_radius * R) seeds.push_back({cell.anchor, "voronoi"});
  }

  if (mosaic && opts.seed_symmetry_axes) {
    std::vector<Vec3> dirs;
    for (const auto& level : mosaic->faces)
      for (const auto& f : level) {
        Vec3 d = barycenter(f) - centre;
        if (d.norm() < 1e-6 * diam) continue;
        d.normalize();
        bool dup = std::any_of(dirs.begin(), dirs.end(), [&](const Vec3& e) { return std::abs(e.dot(d)) > 1 - 1e-10; });
        if (!dup) dirs.push_back(d);
      }
    for (const auto& d : dirs) {
      LineSegment line{centre, d, -opts.search_radius * R, opts.search_radius * R};
      bool symmetric = true;
      for (double s : {0.113, 0.371, 0.619, 0.837}) {
        Vec3 x = line.at(s * R);
        if (nearest_charge_distance(c, x) < 1e-6 * diam) continue;
        Derivatives dv = derivatives(c, pp, x);
        if ((dv.grad - dv.grad.dot(d) * d).norm() > 1e-9 * dv.grad_scale) {
          symmetric = false;
          break;
        }
      }
      if (!symmetric) continue;
      try {
        for (const auto& r : symmetry_line_roots(c, pp, line, 600)) seeds.push_back({r.x, "axis"});
      } catch (const std::domain_error&) {
      }
    }
  }

  if (opts.seed_random && opts.random_seeds > 0) {
    std::mt19937_64 rng(opts.rng_seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < opts.random_seeds; ++k) {
      Vec3 d;
      do {
        d = Vec3(u(rng), u(rng), u(rng));
      } while (d.squaredNorm() > 1.0);
      seeds.push_back({centre + opts.search_radius * R * d, "random"});
    }
  }

  const double cut = 1e-9 * diam;
  seeds.erase(std::remove_if(seeds.begin(), seeds.end(),
                             [&](const Seed& s) { return nearest_charge_distance(c, s.x) < cut; }),
              seeds.end());
  return seeds;
}

namespace solver_detail {

inline bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

// Single-linkage clusters within radius r, found through a hash grid.
inline std::vector<std::vector<int>> cluster(const std::vector<Vec3>& xs, double r) {
  const int n = int(xs.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  struct KeyHash {
    std::size_t operator()(const std::array<long long, 3>& k) const {
      return std::size_t(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
    }
  };
  std::unordered_map<std::array<long long, 3>, std::vector<int>, KeyHash> grid;
  auto key = [&](const Vec3& x) {
    return std::array<long long, 3>{(long long)std::floor(x.x() / r), (long long)std::floor(x.y() / r),
                                    (long long)std::floor(x.z() / r)};
  };
  for (int i = 0; i < n; ++i) grid[key(xs[i])].push_back(i);
  for (int i = 0; i < n; ++i) {
    auto k = key(xs[i]);
    for (long long a = -1; a <= 1; ++a)
      for (long long b = -1; b <= 1; ++b)
        for (long long d = -1; d <= 1; ++d) {
          auto it = grid.find({k[0] + a, k[1] + b, k[2] + d});
          if (it == grid.end()) continue;
          for (int j : it->second)
            if (j > i && (xs[i] - xs[j]).norm() <= r) parent[find(i)] = find(j);
        }
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, g] : groups) out.push_back(std::move(g));
  return out;
}

}  // namespace solver_detail

inline SolveResult find_equilibria(const ChargeConfiguration& c, const PotentialParams& pp,
                                   const SolveOptions& opts = {}) {
  c.validate();
  SolveResult res;
  auto seeds = generate_seeds(c, pp, opts);
  res.seeds = int(seeds.size());
  std::vector<NewtonOutcome> outcomes(seeds.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) outcomes[k] = refine_newton(c, pp, seeds[k].x, opts, seeds[k].kind);
  };
  int threads = std::max(1, opts.threads);
  if (threads == 1) {
    work(0, seeds.size());
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (seeds.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      std::size_t b = std::min(seeds.size(), t * chunk), e = std::min(seeds.size(), b + chunk);
      pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<CriticalPoint> good, degen;
  for (auto& o : outcomes) {
    if (!o.converged) {
      ++res.failed;
      continue;
    }
    ++res.converged;
    (o.point.degenerate ? degen : good).push_back(std::move(o.point));
  }

  const double diam = std::max(c.diameter(), 1e-300);
  {
    std::vector<Vec3> xs;
    for (const auto& g : good) xs.push_back(g.x);
    for (const auto& grp : solver_detail::cluster(xs, opts.dedup_radius * diam)) {
      int best = grp[0];
      for (int i : grp)
        if (good[i].grad_norm < good[best].grad_norm) best = i;
      CriticalPoint cp = good[best];
      cp.cluster_size = int(grp.size());
      res.points.push_back(std::move(cp));
    }
  }
  {
    std::vector<Vec3> xs;
    for (const auto& g : degen) xs.push_back(g.x);
    for (const auto& grp : solver_detail::cluster(xs, opts.degenerate_cluster_radius * diam)) {
      DegenerateCluster cl;
      for (int i : grp) cl.barycenter += degen[i].x;
      cl.barycenter /= double(grp.size());
      cl.members = int(grp.size());
      for (int i : grp) cl.spread = std::max(cl.spread, (degen[i].x - cl.barycenter).norm());
      CriticalPoint cp = critical_point_at(c, pp, cl.barycenter, opts, "cluster");
      cp.degenerate = true;
      cp.cluster_size = cl.members;
      res.clusters.push_back(cl);
      res.points.push_back(std::move(cp));
    }
  }
  std::sort(res.points.begin(), res.points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return solver_detail::lex_less(a.x, b.x); });
  std::sort(res.clusters.begin(), res.clusters.end(), [](const DegenerateCluster& a, const DegenerateCluster& b) {
    return solver_detail::lex_less(a.barycenter, b.barycenter);
  });
  return res;
}

struct Certificate {
  bool ok = false;
  double condition = 0;
  double contraction = 0;
  double poly_residual = 0;
  std::string reason;
};

// Nondegeneracy evidence: a well-conditioned Hessian, quadratic contraction of
// a Newton step taken from a slightly displaced point, and (for p = 1) a
// vanishing residual of the cleared-denominator system at the lifted point.
inline Certificate certify_nondegenerate(const ChargeConfiguration& c, const PotentialParams& pp,
                                         const CriticalPoint& cp, const SolveOptions& opts = {}) {
  Certificate cert;
  Derivatives d = derivatives(c, pp, cp.x);
  Eigen::SelfAdjointEigenSolver<Mat3> es(d.hess, Eigen::EigenvaluesOnly);
  Vec3 ev = es.eigenvalues().cwiseAbs();
  cert.condition = ev.minCoeff() > 0 ? ev.maxCoeff() / ev.minCoeff() : std::numeric_limits<double>::infinity();

  const double diam = std::max(c.diameter(), 1e-300);
  Vec3 x1 = cp.x + 1e-6 * diam * Vec3(1, 2, 3).normalized();
  Derivatives d1 = derivatives(c, pp, x1);
  Vec3 x2 = x1 - solver_detail::newton_step(d1);
  double g1 = d1.grad.norm(), g2 = gradient(c, pp, x2).norm();
  cert.contraction = g1 > 0 ? g2 / g1 : 0;

  if (pp.p == 1.0) {
    auto ps = build_poly_system(c);
    cert.poly_residual = poly_relative_residual(ps, cp.x, lift(ps, cp.x));
  }

  bool conditioned = ev.minCoeff() >= opts.degenerate_threshold * d.hess_scale;
  bool contracts = cert.contraction < 1e-3;
  bool lifted = cert.poly_residual < 1e-8;
  bool small = d.grad.norm() < opts.tol_residual * d.grad_scale;
  cert.ok = conditioned && contracts && lifted && small;
  if (!small) cert.reason = "residual above tolerance";
  else if (!conditioned) cert.reason = "Hessian nearly singular";
  else if (!contracts) cert.reason = "Newton step does not contract quadratically";
  else if (!lifted) cert.reason = "polynomial lift residual too large";
  return cert;
}

}  // namespace equilibria
