#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

// Convex hulls in low dimension (d <= 4) by gift wrapping.  Facets are
// polytopal: coplanar points within `tol` all belong to the same facet, which
// is what symmetric inputs such as regular solids need.
namespace equilibria::hull {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Index = std::vector<int>;

struct AffineFrame {
  VecX origin;
  MatX basis;  // orthonormal columns
  int dim() const { return int(basis.cols()); }

  VecX coords(const VecX& p) const { return basis.transpose() * (p - origin); }
  VecX point(const VecX& y) const { return origin + basis * y; }
};

// Greedy orthonormalisation: repeatedly adds the point farthest from the
// current affine span until every point is within tol of it.
inline AffineFrame affine_frame(const std::vector<VecX>& pts, const Index& idx, double tol) {
  if (idx.empty()) throw std::invalid_argument("affine_frame: empty point set");
  const int d = int(pts[idx[0]].size());
  AffineFrame f;
  f.origin = pts[idx[0]];
  std::vector<VecX> dirs;
  for (int round = 0; round < d; ++round) {
    double best = tol;
    VecX best_r;
    for (int i : idx) {
      VecX r = pts[i] - f.origin;
      for (const auto& b : dirs) r -= b.dot(r) * b;
      for (const auto& b : dirs) r -= b.dot(r) * b;
      double nr = r.norm();
      if (nr > best) {
        best = nr;
        best_r = r;
      }
    }
    if (best_r.size() == 0) break;
    dirs.push_back(best_r / best_r.norm());
  }
  f.basis.resize(d, int(dirs.size()));
  for (int k = 0; k < int(dirs.size()); ++k) f.basis.col(k) = dirs[k];
  return f;
}

// Unit vector orthogonal to all the given (orthonormal) columns.
inline VecX orthogonal_complement_vector(const MatX& cols, int d) {
  VecX best;
  double best_norm = 0;
  for (int k = 0; k < d; ++k) {
    VecX e = VecX::Zero(d);
    e[k] = 1;
    for (int c = 0; c < cols.cols(); ++c) e -= cols.col(c).dot(e) * cols.col(c);
    for (int c = 0; c < cols.cols(); ++c) e -= cols.col(c).dot(e) * cols.col(c);
    if (e.norm() > best_norm) {
      best_norm = e.norm();
      best = e;
    }
  }
  return best / best_norm;
}

struct Facet {
  Index vertices;  // sorted
  VecX normal;     // outward unit normal
  double offset;   // normal . x <= offset on the hull, equality on the facet
};

namespace detail {

inline Index on_plane(const std::vector<VecX>& pts, const Index& idx, const VecX& n, double b, double tol) {
  Index out;
  for (int i : idx)
    if (std::abs(n.dot(pts[i]) - b) <= tol) out.push_back(i);
  std::sort(out.begin(), out.end());
  return out;
}

// Rotate the supporting hyperplane (normal u through point r0) about the
// ridge towards direction w until it hits another point.
inline VecX wrap(const std::vector<VecX>& pts, const Index& idx, const Index& exclude, const VecX& u,
                 const VecX& w, const VecX& r0) {
  std::set<int> ex(exclude.begin(), exclude.end());
  double best = std::numeric_limits<double>::infinity();
  for (int q : idx) {
    if (ex.count(q)) continue;
    VecX dq = pts[q] - r0;
    double a = u.dot(dq), c = w.dot(dq);
    double psi = std::atan2(-a, c);
    if (psi < best) best = psi;
  }
  if (!std::isfinite(best)) throw std::runtime_error("hull: wrapping found no point");
  VecX n = std::cos(best) * u + std::sin(best) * w;
  return n / n.norm();
}

}  // namespace detail

// Facets of conv(pts[idx]); the subset must be full-dimensional in R^d.
inline std::vector<Facet> facets(const std::vector<VecX>& pts, const Index& idx, double tol) {
  const int d = int(pts[idx[0]].size());
  std::vector<Facet> out;
  if (d == 1) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i : idx) {
      lo = std::min(lo, pts[i][0]);
      hi = std::max(hi, pts[i][0]);
    }
    Facet a, b;
    a.normal = VecX::Constant(1, -1.0);
    a.offset = -lo;
    b.normal = VecX::Constant(1, 1.0);
    b.offset = hi;
    for (int i : idx) {
      if (pts[i][0] <= lo + tol) a.vertices.push_back(i);
      if (pts[i][0] >= hi - tol) b.vertices.push_back(i);
    }
    std::sort(a.vertices.begin(), a.vertices.end());
    std::sort(b.vertices.begin(), b.vertices.end());
    out.push_back(a);
    out.push_back(b);
    return out;
  }

  // Initial facet: start from the minimum of the first coordinate and wrap
  // until the supporting plane touches d affinely independent points.
  VecX u = VecX::Zero(d);
  u[0] = -1;
  double b = -std::numeric_limits<double>::infinity();
  for (int i : idx) b = std::max(b, u.dot(pts[i]));
  Index cur = detail::on_plane(pts, idx, u, b, tol);
  for (int guard = 0; affine_frame(pts, cur, tol).dim() < d - 1; ++guard) {
    if (guard > d) throw std::runtime_error("hull: initial facet search failed");
    AffineFrame fr = affine_frame(pts, cur, tol);
    MatX cols(d, fr.dim() + 1);
    cols.leftCols(fr.dim()) = fr.basis;
    cols.col(fr.dim()) = u;
    VecX w = orthogonal_complement_vector(cols, d);
    VecX r0 = pts[cur[0]];
    u = detail::wrap(pts, idx, cur, u, w, r0);
    b = u.dot(r0);
    cur = detail::on_plane(pts, idx, u, b, tol);
  }

  std::map<Index, int> seen;
  std::deque<int> queue;
  auto add = [&](Index verts, VecX n, double off) {
    if (seen.count(verts)) return;
    seen[verts] = int(out.size());
    out.push_back({std::move(verts), std::move(n), off});
    queue.push_back(int(out.size()) - 1);
  };
  add(cur, u, b);

  while (!queue.empty()) {
    Facet f = out[queue.front()];
    queue.pop_front();
    AffineFrame fr = affine_frame(pts, f.vertices, tol);
    if (fr.dim() != d - 1) throw std::runtime_error("hull: facet has wrong dimension");
    std::vector<VecX> local(pts.size());
    for (int i : f.vertices) local[i] = fr.coords(pts[i]);
    for (const auto& ridge : facets(local, f.vertices, tol)) {
      VecX w = fr.basis * ridge.normal;
      w -= w.dot(f.normal) * f.normal;
      w /= w.norm();
      VecX r0 = pts[ridge.vertices[0]];
      VecX n = detail::wrap(pts, idx, f.vertices, f.normal, w, r0);
      double off = n.dot(r0);
      add(detail::on_plane(pts, idx, n, off, tol), n, off);
    }
  }
  return out;
}

// All faces of conv(pts[idx]) grouped by dimension; faces[k] holds the
// vertex sets of the k-dimensional faces, the polytope itself included.
inline std::vector<std::vector<Index>> face_lattice(const std::vector<VecX>& pts, const Index& idx, double tol) {
  AffineFrame top = affine_frame(pts, idx, tol);
  std::vector<std::set<Index>> acc(top.dim() + 1);
  std::vector<std::pair<Index, int>> stack;
  Index sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  stack.push_back({sorted, top.dim()});
  while (!stack.empty()) {
    auto [verts, k] = stack.back();
    stack.pop_back();
    if (!acc[k].insert(verts).second) continue;
    if (k == 0) continue;
    AffineFrame fr = affine_frame(pts, verts, tol);
    std::vector<VecX> local(pts.size());
    for (int i : verts) local[i] = fr.coords(pts[i]);
    for (const auto& f : facets(local, verts, tol)) stack.push_back({f.vertices, k - 1});
  }
  std::vector<std::vector<Index>> out(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) out[k].assign(acc[k].begin(), acc[k].end());
  return out;
}

inline std::vector<VecX> to_vecx(const std::vector<Eigen::Vector3d>& pts) {
  std::vector<VecX> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(VecX(p));
  return out;
}

inline Index iota(int n) {
  Index out(n);
  for (int i = 0; i < n; ++i) out[i] = i;
  return out;
}

// f-vector (vertices, edges, 2-faces, ...) of the convex hull of 3D points.
inline std::vector<int> f_vector(const std::vector<Eigen::Vector3d>& pts, double rel_tol = 1e-9) {
  double scale = 0;
  for (const auto& p : pts) scale = std::max(scale, p.norm());
  auto lat = face_lattice(to_vecx(pts), iota(int(pts.size())), rel_tol * std::max(scale, 1.0));
  std::vector<int> out;
  for (const auto& l : lat) out.push_back(int(l.size()));
  return out;
}

}  // namespace equilibria::hull
