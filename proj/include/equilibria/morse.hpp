#pragma once

#include "configuration.hpp"
#include "icosphere.hpp"
#include "potential.hpp"
#include "solver.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace equilibria {

enum class Kind { Minimum = 0, Saddle1 = 1, Saddle2 = 2, Maximum = 3, Degenerate = 4 };

inline std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Minimum: return "minimum";
    case Kind::Saddle1: return "1-saddle";
    case Kind::Saddle2: return "2-saddle";
    case Kind::Maximum: return "maximum";
    case Kind::Degenerate: return "degenerate";
  }
  return "?";
}

struct Classification {
  Kind kind = Kind::Degenerate;
  int index = -1;  // Morse index, -1 when degenerate
  std::string warning;
};

// Index from the Hessian signature.  V itself is harmonic for positive
// charges, so a minimum or maximum of V there points to a numerical problem.
inline Classification classify(const CriticalPoint& cp, bool all_positive = true) {
  Classification c;
  if (cp.degenerate) return c;
  c.index = cp.negative_eigs();
  c.kind = Kind(c.index);
  if (cp.p_used == 1.0 && all_positive && (c.kind == Kind::Minimum || c.kind == Kind::Maximum))
    c.warning = "harmonic potential cannot have a " + kind_name(c.kind);
  return c;
}

struct SphereLabeling {
  std::shared_ptr<const Icosphere> mesh;
  std::vector<char> white;  // 1 where the potential does not increase
  double epsilon = 0;
  int level = 0;
};

inline std::shared_ptr<const Icosphere> shared_icosphere(int level) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const Icosphere>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[level];
  if (!slot) slot = std::make_shared<const Icosphere>(make_icosphere(level));
  return slot;
}

// Black/white labels of the directions on a sphere of radius eps around x.
// Increments are evaluated in long double; a white vertex is one where the
// increment is at most a few units of long-double rounding of V(x).
inline SphereLabeling binary_sphere_function(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x,
                                             double eps, int level) {
  if (!(eps > 0) || eps >= nearest_charge_distance(c, x))
    throw std::invalid_argument("binary_sphere_function: epsilon must be below the nearest-charge distance");
  SphereLabeling lab;
  lab.mesh = shared_icosphere(level);
  lab.epsilon = eps;
  lab.level = level;
  const long double slack = 64.0L * LDBL_EPSILON * std::abs((long double)eval_V(c, pp, x));
  lab.white.resize(lab.mesh->vertices.size());
  for (std::size_t v = 0; v < lab.white.size(); ++v)
    lab.white[v] = increment<long double>(c, pp, x, eps * lab.mesh->vertices[v]) <= slack;
  return lab;
}

struct LocalHomologySignature {
  std::array<int, 4> ranks{0, 0, 0, 0};
  double epsilon = 0;
  int mesh_level = 0;
  bool stable = true;

  int alt_sum() const { return ranks[0] - ranks[1] + ranks[2] - ranks[3]; }
  bool operator==(const LocalHomologySignature& o) const { return ranks == o.ranks; }
};

// Ranks of the homology of the ball relative to the white region W: the
// reduced Betti numbers of W shifted up by one.  b1 of W comes from its Euler
// characteristic on the induced subcomplex.
inline LocalHomologySignature local_homology(const SphereLabeling& lab) {
  LocalHomologySignature sig;
  sig.epsilon = lab.epsilon;
  sig.mesh_level = lab.level;
  const auto& m = *lab.mesh;
  const int nv = int(m.vertices.size());
  int nw = int(std::count(lab.white.begin(), lab.white.end(), 1));
  if (nw == 0) {
    sig.ranks = {1, 0, 0, 0};
    return sig;
  }
  if (nw == nv) {
    sig.ranks = {0, 0, 0, 1};
    return sig;
  }
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  int ne = 0, nt = 0;
  for (const auto& [a, b] : m.edges)
    if (lab.white[a] && lab.white[b]) {
      ++ne;
      parent[find(a)] = find(b);
    }
  for (const auto& t : m.triangles)
    if (lab.white[t[0]] && lab.white[t[1]] && lab.white[t[2]]) ++nt;
  int comps = 0;
  for (int v = 0; v < nv; ++v)
    if (lab.white[v] && find(v) == v) ++comps;
  int chi = nw - ne + nt;
  sig.ranks = {0, comps - 1, comps - chi, 0};
  return sig;
}

struct SignatureOptions {
  double epsilon_rel = 0.05;  // times the nearest-charge distance
  int level = 5;
  bool check_stability = true;
};

// Signature at x; stability compares against one finer mesh and a ten times
// smaller radius.
inline LocalHomologySignature signature_at(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x,
                                           const SignatureOptions& opts = {}) {
  const double eps = opts.epsilon_rel * nearest_charge_distance(c, x);
  auto sig = local_homology(binary_sphere_function(c, pp, x, eps, opts.level));
  if (opts.check_stability) {
    auto finer = local_homology(binary_sphere_function(c, pp, x, eps, opts.level + 1));
    auto smaller = local_homology(binary_sphere_function(c, pp, x, eps / 10, opts.level));
    sig.stable = sig == finer && sig == smaller;
  }
  return sig;
}

struct ClassifiedPoint {
  CriticalPoint point;
  Classification classification;
  std::optional<LocalHomologySignature> signature;
};

struct EulerPoincareReport {
  std::array<int, 4> m{0, 0, 0, 0};
  int degenerate = 0;
  int degenerate_alt_sum = 0;
  bool complete = true;  // every degenerate point carried a signature
  int lhs = 0;           // m0 - m1 + m2 - m3 + sum of degenerate alternating sums
  int expected = 0;      // n - 1
  int residual = 0;
};

inline EulerPoincareReport euler_poincare_check(const std::vector<ClassifiedPoint>& pts, int n) {
  EulerPoincareReport r;
  for (const auto& p : pts) {
    if (p.classification.kind != Kind::Degenerate) {
      r.m[p.classification.index]++;
      continue;
    }
    r.degenerate++;
    if (p.signature)
      r.degenerate_alt_sum += p.signature->alt_sum();
    else
      r.complete = false;
  }
  r.lhs = r.m[0] - r.m[1] + r.m[2] - r.m[3] + r.degenerate_alt_sum;
  r.expected = n - 1;
  r.residual = r.lhs - r.expected;
  return r;
}

struct UnfoldCount {
  int N = 0;
  int count = 0;  // |N|
  int index = 0;  // 1 for 1-saddles (N < 0), 2 for 2-saddles (N > 0), 0 if none
};

// Lower bound on the equilibria a degenerate centre splits into.
inline UnfoldCount unfold_count(int m1, int m2, int n) {
  UnfoldCount u;
  u.N = m1 - m2 + n - 1;
  u.count = std::abs(u.N);
  u.index = u.N < 0 ? 1 : u.N > 0 ? 2 : 0;
  return u;
}

inline void write_labeling_csv(const SphereLabeling& lab, std::ostream& out) {
  out << "x,y,z,white\n";
  out.precision(10);
  for (std::size_t v = 0; v < lab.white.size(); ++v) {
    const auto& u = lab.mesh->vertices[v];
    out << u.x() << "," << u.y() << "," << u.z() << "," << int(lab.white[v]) << "\n";
  }
}

}  // namespace equilibria
