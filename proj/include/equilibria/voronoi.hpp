#pragma once

#include "configuration.hpp"
#include "hull.hpp"

#include <array>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace equilibria {

// Delaunay mosaic of a point set, computed in the affine hull of the points.
// Cells are convex polytopes: cospherical groups form a single cell.
struct DelaunayMosaic {
  int dim = 0;
  std::vector<hull::Index> cells;
  std::vector<std::vector<hull::Index>> faces;  // faces[k]: k-dimensional faces
  std::vector<hull::Index> hull_facets;         // boundary facets of conv(points); empty if dim < 3
};

inline DelaunayMosaic delaunay(const std::vector<Vec3>& points, double rel_tol = 1e-9) {
  if (points.empty()) throw std::invalid_argument("delaunay: no points");
  DelaunayMosaic m;
  const int n = int(points.size());
  const auto all = hull::iota(n);
  auto pts = hull::to_vecx(points);
  double diam = 0;
  for (const auto& p : points) diam = std::max(diam, (p - points[0]).norm());
  auto frame = hull::affine_frame(pts, all, rel_tol * std::max(diam, 1e-300));
  m.dim = frame.dim();

  // Local coordinates, centred and scaled into the unit ball, then lifted.
  std::vector<hull::VecX> y(n);
  hull::VecX mean = hull::VecX::Zero(m.dim);
  for (int i = 0; i < n; ++i) {
    y[i] = frame.coords(pts[i]);
    mean += y[i];
  }
  mean /= n;
  double s = 0;
  for (auto& v : y) {
    v -= mean;
    s = std::max(s, v.norm());
  }
  if (s > 0)
    for (auto& v : y) v /= s;

  if (m.dim == 0) {
    m.cells = {all};
  } else {
    std::vector<hull::VecX> z(n);
    for (int i = 0; i < n; ++i) {
      z[i].resize(m.dim + 1);
      z[i].head(m.dim) = y[i];
      z[i][m.dim] = y[i].squaredNorm();
    }
    if (hull::affine_frame(z, all, rel_tol).dim() == m.dim) {
      m.cells = {all};
    } else {
      for (const auto& f : hull::facets(z, all, rel_tol))
        if (f.normal[m.dim] < -rel_tol) m.cells.push_back(f.vertices);
      std::sort(m.cells.begin(), m.cells.end());
    }
  }

  std::vector<std::set<hull::Index>> acc(m.dim + 1);
  for (const auto& cell : m.cells) {
    auto lat = hull::face_lattice(y, cell, rel_tol);
    for (std::size_t k = 0; k < lat.size() && k < acc.size(); ++k) acc[k].insert(lat[k].begin(), lat[k].end());
  }
  m.faces.resize(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) m.faces[k].assign(acc[k].begin(), acc[k].end());
  if (m.dim == 3)
    for (const auto& f : hull::facets(y, all, rel_tol)) m.hull_facets.push_back(f.vertices);
  return m;
}

// Voronoi cell dual to a Delaunay face F: the points equidistant from the
// generators of F and farther from all others.  Its affine hull is the
// orthogonal complement of aff(F) through the circumcentre of F.
struct VoronoiCell {
  int dim = 0;
  int delaunay_dim = 0;
  hull::Index generators;
  Vec3 anchor = Vec3::Zero();  // circumcentre of F inside aff(F)
  double radius = 0;
  std::vector<Vec3> delaunay_basis;
  std::vector<Vec3> basis;
  std::vector<int> vertices;  // Voronoi vertices on the cell (indices into VoronoiComplex::vertices)
  bool bounded = false;
};

struct VoronoiComplex {
  std::vector<Vec3> points;
  DelaunayMosaic mosaic;
  std::vector<Vec3> vertices;  // circumcentres of the top-dimensional Delaunay cells
  std::vector<VoronoiCell> cells;
  Vec3 box_lo = Vec3::Zero(), box_hi = Vec3::Zero();
  double diameter = 0;

  std::vector<const VoronoiCell*> cells_of_dim(int d) const {
    std::vector<const VoronoiCell*> out;
    for (const auto& c : cells)
      if (c.dim == d) out.push_back(&c);
    return out;
  }
};

namespace voronoi_detail {

inline std::vector<Vec3> span_basis(const std::vector<Vec3>& pts, const hull::Index& idx, double tol) {
  auto fr = hull::affine_frame(hull::to_vecx(pts), idx, tol);
  std::vector<Vec3> out;
  for (int k = 0; k < fr.dim(); ++k) out.emplace_back(fr.basis(0, k), fr.basis(1, k), fr.basis(2, k));
  return out;
}

inline std::vector<Vec3> complement(const std::vector<Vec3>& basis) {
  std::vector<Vec3> out;
  for (int k = 0; k < 3 && int(basis.size() + out.size()) < 3; ++k) {
    Vec3 e = Vec3::Unit(k);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) e -= b.dot(e) * b;
      for (const auto& b : out) e -= b.dot(e) * b;
    }
    if (e.norm() > 1e-6) out.push_back(e.normalized());
  }
  return out;
}

// Point of p0 + span(basis) equidistant from all pts[idx].
inline Vec3 circumcenter(const std::vector<Vec3>& pts, const hull::Index& idx, const std::vector<Vec3>& basis) {
  const Vec3& p0 = pts[idx[0]];
  if (basis.empty()) return p0;
  Eigen::MatrixXd A(int(idx.size()) - 1, int(basis.size()));
  Eigen::VectorXd b(int(idx.size()) - 1);
  for (std::size_t i = 1; i < idx.size(); ++i) {
    Vec3 d = pts[idx[i]] - p0;
    for (std::size_t k = 0; k < basis.size(); ++k) A(int(i) - 1, int(k)) = 2 * d.dot(basis[k]);
    b[int(i) - 1] = d.squaredNorm();
  }
  Eigen::VectorXd t = A.colPivHouseholderQr().solve(b);
  Vec3 c = p0;
  for (std::size_t k = 0; k < basis.size(); ++k) c += t[int(k)] * basis[k];
  return c;
}

}  // namespace voronoi_detail

inline VoronoiComplex build_voronoi(const std::vector<Vec3>& points, double rel_tol = 1e-9) {
  if (points.size() < 2) throw std::invalid_argument("build_voronoi: need at least two points");
  {
    auto cfg = make_configuration(points);  // rejects duplicates
    (void)cfg;
  }
  VoronoiComplex vc;
  vc.points = points;
  vc.mosaic = delaunay(points, rel_tol);
  Vec3 lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  vc.diameter = (hi - lo).norm();
  Vec3 mid = 0.5 * (lo + hi);
  vc.box_lo = mid - Vec3::Constant(1.5 * vc.diameter);
  vc.box_hi = mid + Vec3::Constant(1.5 * vc.diameter);
  const double tol = rel_tol * vc.diameter;

  std::map<hull::Index, int> top_index;
  if (vc.mosaic.dim == 3) {
    for (const auto& cell : vc.mosaic.cells) {
      auto basis = voronoi_detail::span_basis(points, cell, tol);
      top_index[cell] = int(vc.vertices.size());
      vc.vertices.push_back(voronoi_detail::circumcenter(points, cell, basis));
    }
  }

  for (int k = 0; k <= vc.mosaic.dim; ++k)
    for (const auto& face : vc.mosaic.faces[k]) {
      VoronoiCell cell;
      cell.delaunay_dim = k;
      cell.dim = 3 - k;
      cell.generators = face;
      cell.delaunay_basis = voronoi_detail::span_basis(points, face, tol);
      cell.basis = voronoi_detail::complement(cell.delaunay_basis);
      cell.anchor = voronoi_detail::circumcenter(points, face, cell.delaunay_basis);
      cell.radius = (cell.anchor - points[face[0]]).norm();
      if (vc.mosaic.dim == 3) {
        std::set<int> fs(face.begin(), face.end());
        for (const auto& [top, id] : top_index)
          if (std::includes(top.begin(), top.end(), face.begin(), face.end())) cell.vertices.push_back(id);
        cell.bounded = std::none_of(vc.mosaic.hull_facets.begin(), vc.mosaic.hull_facets.end(),
                                    [&](const hull::Index& f) {
                                      return std::includes(f.begin(), f.end(), face.begin(), face.end());
                                    });
      }
      vc.cells.push_back(std::move(cell));
    }
  return vc;
}

struct EffectiveCell {
  int cell = -1;  // index into VoronoiComplex::cells
  int dim = 0;    // dimension of the Voronoi cell
  Vec3 point = Vec3::Zero();
  double delaunay_margin = 0;  // distance of the point inside the Delaunay cell
  double voronoi_margin = 0;   // distance gap to the nearest non-generator
};

struct EffectiveCellReport {
  std::vector<EffectiveCell> effective;
  std::vector<EffectiveCell> borderline;
  std::array<int, 4> counts{0, 0, 0, 0};  // indexed by Voronoi cell dimension
  double margin = 0;
};

// A cell is effective iff the circumcentre of its Delaunay dual lies in the
// relative interior of that Delaunay cell and strictly closer to the
// generators of the cell than to any other point.
inline EffectiveCellReport effective_cells(const VoronoiComplex& vc, double rel_margin = 1e-9) {
  EffectiveCellReport rep;
  rep.margin = rel_margin * vc.diameter;
  const double tol = 1e-9 * vc.diameter;
  const auto pts = hull::to_vecx(vc.points);
  for (std::size_t ci = 0; ci < vc.cells.size(); ++ci) {
    const auto& cell = vc.cells[ci];
    EffectiveCell e;
    e.cell = int(ci);
    e.dim = cell.dim;
    e.point = cell.anchor;

    e.delaunay_margin = std::numeric_limits<double>::infinity();
    if (cell.delaunay_dim > 0) {
      auto fr = hull::affine_frame(pts, cell.generators, tol);
      std::vector<hull::VecX> local(pts.size());
      for (int i : cell.generators) local[i] = fr.coords(pts[i]);
      hull::VecX c = fr.coords(hull::VecX(cell.anchor));
      for (const auto& f : hull::facets(local, cell.generators, tol))
        e.delaunay_margin = std::min(e.delaunay_margin, f.offset - f.normal.dot(c));
    }

    e.voronoi_margin = std::numeric_limits<double>::infinity();
    std::set<int> gens(cell.generators.begin(), cell.generators.end());
    for (int q = 0; q < int(vc.points.size()); ++q)
      if (!gens.count(q)) e.voronoi_margin = std::min(e.voronoi_margin, (vc.points[q] - cell.anchor).norm() - cell.radius);

    double worst = std::min(e.delaunay_margin, e.voronoi_margin);
    if (worst > rep.margin) {
      rep.effective.push_back(e);
      rep.counts[cell.dim]++;
    } else if (worst >= -rep.margin) {
      rep.borderline.push_back(e);
    }
  }
  return rep;
}

// Effective cell counts by Voronoi cell dimension; entry 3 counts the
// domains, i.e. the generators themselves.
inline std::array<int, 4> limit_counts(const ChargeConfiguration& c) {
  if (!c.all_positive() ||
      std::any_of(c.charges.begin(), c.charges.end(), [&](double z) { return z != c.charges[0]; }))
    throw std::invalid_argument("limit_counts requires equal positive charges");
  if (c.size() == 1) return {0, 0, 0, 1};
  return effective_cells(build_voronoi(c.points)).counts;
}

// Does x lie in the Voronoi domain of generator i?  Only Delaunay neighbours
// are consulted, so agreement with brute force checks the adjacency.
inline bool domain_contains(const VoronoiComplex& vc, int i, const Vec3& x, double slack = 0) {
  for (const auto& e : vc.mosaic.faces.size() > 1 ? vc.mosaic.faces[1] : std::vector<hull::Index>{}) {
    if (e[0] != i && e[1] != i) continue;
    int j = e[0] == i ? e[1] : e[0];
    const Vec3 &a = vc.points[i], &b = vc.points[j];
    if ((x - 0.5 * (a + b)).dot(b - a) > slack) return false;
  }
  // Two-dimensional mosaics only know neighbours inside their plane, which
  // is enough: the bisectors are perpendicular to that plane.
  return true;
}

namespace voronoi_detail {

inline std::vector<Vec3> clip(const std::vector<Vec3>& poly, const Vec3& n, double b) {
  std::vector<Vec3> out;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec3 &p = poly[k], &q = poly[(k + 1) % poly.size()];
    double sp = n.dot(p) - b, sq = n.dot(q) - b;
    if (sp <= 0) out.push_back(p);
    if ((sp < 0 && sq > 0) || (sp > 0 && sq < 0)) out.push_back(p + (sp / (sp - sq)) * (q - p));
  }
  return out;
}

}  // namespace voronoi_detail

// Polygon of the Voronoi 2-cell between generators a and b, clipped to the box.
inline std::vector<Vec3> voronoi_facet_polygon(const VoronoiComplex& vc, int a, int b) {
  const Vec3 &pa = vc.points[a], &pb = vc.points[b];
  Vec3 n = (pb - pa).normalized();
  Vec3 m = 0.5 * (pa + pb);
  auto basis = voronoi_detail::complement({n});
  double big = 10 * vc.diameter;
  std::vector<Vec3> poly{m + big * (basis[0] + basis[1]), m + big * (-basis[0] + basis[1]),
                         m + big * (-basis[0] - basis[1]), m + big * (basis[0] - basis[1])};
  for (int q = 0; q < int(vc.points.size()) && !poly.empty(); ++q) {
    if (q == a || q == b) continue;
    Vec3 d = vc.points[q] - pa;
    poly = voronoi_detail::clip(poly, d, d.dot(0.5 * (pa + vc.points[q])));
  }
  for (int k = 0; k < 3 && !poly.empty(); ++k) {
    poly = voronoi_detail::clip(poly, Vec3::Unit(k), vc.box_hi[k]);
    poly = voronoi_detail::clip(poly, -Vec3::Unit(k), -vc.box_lo[k]);
  }
  return poly;
}

// OFF mesh of all Voronoi 2-cells, clipped to the bounding box.
inline void write_off(const VoronoiComplex& vc, std::ostream& out) {
  std::vector<Vec3> verts;
  std::vector<std::vector<int>> faces;
  if (vc.mosaic.faces.size() > 1)
    for (const auto& e : vc.mosaic.faces[1]) {
      auto poly = voronoi_facet_polygon(vc, e[0], e[1]);
      if (poly.size() < 3) continue;
      std::vector<int> f;
      for (const auto& p : poly) {
        f.push_back(int(verts.size()));
        verts.push_back(p);
      }
      faces.push_back(std::move(f));
    }
  out << "OFF\n" << verts.size() << " " << faces.size() << " 0\n";
  out.precision(12);
  for (const auto& v : verts) out << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& f : faces) {
    out << f.size();
    for (int i : f) out << " " << i;
    out << "\n";
  }
}

}  // namespace equilibria
