#pragma once

#include "configuration.hpp"
#include "hull.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace equilibria {

enum class Family { Platonic, Archimedean, Catalan };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::Platonic: return "platonic";
    case Family::Archimedean: return "archimedean";
    case Family::Catalan: return "catalan";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "platonic") return Family::Platonic;
  if (s == "archimedean") return Family::Archimedean;
  if (s == "catalan") return Family::Catalan;
  throw ConfigError("unknown family '" + s + "'");
}

struct NamedSolid {
  std::string name;
};
struct Prism {
  int N;
  double R, h, beta;
};
struct AntiPrism {
  int N;
  double R, h;
};
struct IteratedAntiPrism {
  int N = 4;
  double R, h;
  int layers;
  double shrink;
};
struct Line {
  int n;
  double spacing = 1.0;
};
struct Custom {
  std::string path;
};

using SolidSpec = std::variant<NamedSolid, Prism, AntiPrism, IteratedAntiPrism, Line, Custom>;

// Names in table order.  The fourteenth Archimedean entry is the elongated
// square gyrobicupola and the fourteenth Catalan entry its dual.
inline const std::vector<std::string>& solid_names(Family f) {
  static const std::vector<std::string> platonic{"tetrahedron", "cube", "octahedron", "dodecahedron",
                                                 "icosahedron"};
  static const std::vector<std::string> archimedean{
      "truncated_tetrahedron",  "cuboctahedron",           "truncated_cube",
      "truncated_octahedron",   "rhombicuboctahedron",     "truncated_cuboctahedron",
      "snub_cube",              "icosidodecahedron",       "truncated_dodecahedron",
      "truncated_icosahedron",  "rhombicosidodecahedron",  "truncated_icosidodecahedron",
      "snub_dodecahedron",      "elongated_square_gyrobicupola"};
  static const std::vector<std::string> catalan{
      "triakis_tetrahedron",       "rhombic_dodecahedron",        "triakis_octahedron",
      "tetrakis_hexahedron",       "deltoidal_icositetrahedron",  "disdyakis_dodecahedron",
      "pentagonal_icositetrahedron", "rhombic_triacontahedron",   "triakis_icosahedron",
      "pentakis_dodecahedron",     "deltoidal_hexecontahedron",   "disdyakis_triacontahedron",
      "pentagonal_hexecontahedron", "pseudo_deltoidal_icositetrahedron"};
  switch (f) {
    case Family::Platonic: return platonic;
    case Family::Archimedean: return archimedean;
    case Family::Catalan: return catalan;
  }
  return platonic;
}

inline std::optional<Family> family_of(const std::string& name) {
  for (Family f : {Family::Platonic, Family::Archimedean, Family::Catalan}) {
    const auto& v = solid_names(f);
    if (std::find(v.begin(), v.end(), name) != v.end()) return f;
  }
  return std::nullopt;
}

namespace solids_detail {

inline const double phi = std::numbers::phi;
inline const double sqrt2 = std::numbers::sqrt2;

using Triple = std::array<double, 3>;

struct TripleLess {
  bool operator()(const Vec3& a, const Vec3& b) const {
    for (int k = 0; k < 3; ++k) {
      if (a[k] < b[k] - 1e-9) return true;
      if (a[k] > b[k] + 1e-9) return false;
    }
    return false;
  }
};

using PointSet = std::set<Vec3, TripleLess>;

inline std::vector<Triple> sign_variants(const Triple& v) {
  std::vector<Triple> out;
  for (int s = 0; s < 8; ++s) {
    Triple w = v;
    for (int k = 0; k < 3; ++k)
      if (s & (1 << k)) w[k] = -w[k];
    out.push_back(w);
  }
  return out;
}

inline std::vector<Triple> cyclic(const Triple& v) {
  return {v, {v[1], v[2], v[0]}, {v[2], v[0], v[1]}};
}

inline std::vector<Triple> all_perms(const Triple& v) {
  Triple w = v;
  std::array<int, 3> ix{0, 1, 2};
  std::vector<Triple> out;
  do {
    out.push_back({w[ix[0]], w[ix[1]], w[ix[2]]});
  } while (std::next_permutation(ix.begin(), ix.end()));
  return out;
}

// Every sign choice of every base vector, then the given permutation class.
inline PointSet rule(const std::vector<Triple>& bases, bool even_only) {
  PointSet pts;
  for (const auto& b : bases)
    for (const auto& s : sign_variants(b))
      for (const auto& p : even_only ? cyclic(s) : all_perms(s)) pts.insert(Vec3(p[0], p[1], p[2]));
  return pts;
}

inline std::vector<Vec3> to_vector(const PointSet& s) { return {s.begin(), s.end()}; }

inline Mat3 axis_rotation(Vec3 axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline std::vector<Mat3> rotation_group(const std::vector<Mat3>& gens) {
  std::vector<Mat3> group{Mat3::Identity()};
  std::vector<Mat3> frontier = group;
  while (!frontier.empty()) {
    std::vector<Mat3> next;
    for (const auto& g : frontier)
      for (const auto& h : gens) {
        Mat3 m = h * g;
        bool known = std::any_of(group.begin(), group.end(),
                                 [&](const Mat3& x) { return (m - x).cwiseAbs().maxCoeff() < 1e-9; });
        if (!known) {
          group.push_back(m);
          next.push_back(m);
        }
      }
    frontier = std::move(next);
  }
  return group;
}

// Orbit of the point equidistant from its images under the face rotation,
// the triangle rotation and the half-turn; this yields the snub solids.  The
// three axes must meet one face, one adjacent triangle and their common edge.
inline std::vector<Vec3> snub(const Vec3& face_axis, int face_order, const Vec3& tri_axis, const Vec3& edge_axis) {
  Mat3 r1 = axis_rotation(face_axis, 2 * std::numbers::pi / face_order);
  Mat3 r3 = axis_rotation(tri_axis, 2 * std::numbers::pi / 3);
  Mat3 r2 = axis_rotation(edge_axis, std::numbers::pi);
  auto resid = [&](const Vec3& v) {
    double a = (v - r1 * v).norm(), b = (v - r3 * v).norm(), c = (v - r2 * v).norm();
    return Vec3(a - b, b - c, v.squaredNorm() - 1);
  };
  Vec3 v = face_axis.normalized() + tri_axis.normalized() + edge_axis.normalized();
  v.normalize();
  for (int it = 0; it < 100; ++it) {
    Vec3 f = resid(v);
    if (f.norm() < 1e-15) break;
    Mat3 J;
    const double h = 1e-7;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = h;
      J.col(k) = (resid(v + e) - resid(v - e)) / (2 * h);
    }
    v -= J.fullPivLu().solve(f);
  }
  PointSet pts;
  for (const auto& g : rotation_group({r1, r3})) pts.insert(g * v);
  return to_vector(pts);
}

inline std::vector<Vec3> platonic(const std::string& name) {
  if (name == "tetrahedron") return {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  if (name == "cube") return to_vector(rule({{1, 1, 1}}, false));
  if (name == "octahedron") return to_vector(rule({{1, 0, 0}}, false));
  if (name == "dodecahedron") {
    PointSet s = rule({{1, 1, 1}}, false);
    for (const auto& p : rule({{0, 1 / phi, phi}}, true)) s.insert(p);
    return to_vector(s);
  }
  if (name == "icosahedron") return to_vector(rule({{0, 1, phi}}, true));
  throw ConfigError("unknown Platonic solid '" + name + "'");
}

inline std::vector<Vec3> archimedean(const std::string& name) {
  const double p2 = phi * phi, p3 = p2 * phi;
  if (name == "truncated_tetrahedron") {
    std::vector<Vec3> out;
    for (const auto& p : rule({{3, 1, 1}}, false)) {
      int neg = (p.x() < 0) + (p.y() < 0) + (p.z() < 0);
      if (neg % 2 == 0) out.push_back(p);
    }
    return out;
  }
  if (name == "cuboctahedron") return to_vector(rule({{1, 1, 0}}, false));
  if (name == "truncated_cube") return to_vector(rule({{sqrt2 - 1, 1, 1}}, false));
  if (name == "truncated_octahedron") return to_vector(rule({{0, 1, 2}}, false));
  if (name == "rhombicuboctahedron") return to_vector(rule({{1, 1, 1 + sqrt2}}, false));
  if (name == "truncated_cuboctahedron") return to_vector(rule({{1, 1 + sqrt2, 1 + 2 * sqrt2}}, false));
  if (name == "snub_cube") return snub({0, 0, 1}, 4, {1, 1, 1}, {1, 0, 1});
  if (name == "icosidodecahedron") {
    PointSet s = rule({{0, 0, phi}}, true);
    for (const auto& p : rule({{0.5, phi / 2, p2 / 2}}, true)) s.insert(p);
    return to_vector(s);
  }
  if (name == "truncated_dodecahedron")
    return to_vector(rule({{0, 1 / phi, 2 + phi}, {1 / phi, phi, 2 * phi}, {phi, 2, phi + 1}}, true));
  if (name == "truncated_icosahedron")
    return to_vector(rule({{0, 1, 3 * phi}, {1, 2 + phi, 2 * phi}, {phi, 2, p3}}, true));
  if (name == "rhombicosidodecahedron")
    return to_vector(rule({{1, 1, p3}, {p2, phi, 2 * phi}, {2 + phi, 0, p2}}, true));
  if (name == "truncated_icosidodecahedron")
    return to_vector(rule({{1 / phi, 1 / phi, 3 + phi},
                           {2 / phi, phi, 1 + 2 * phi},
                           {1 / phi, p2, -1 + 3 * phi},
                           {2 * phi - 1, 2, 2 + phi},
                           {phi, 3, 2 * phi}},
                          true));
  if (name == "snub_dodecahedron") return snub({0, 1, phi}, 5, {1, 1, 1}, {1, 1 + phi, phi});
  if (name == "elongated_square_gyrobicupola") {
    // The rhombicuboctahedron with its lower square cupola turned by 45 degrees.
    Mat3 turn = axis_rotation({0, 0, 1}, std::numbers::pi / 4);
    std::vector<Vec3> out;
    for (const auto& p : rule({{1, 1, 1 + sqrt2}}, false)) out.push_back(p.z() < -1.5 ? Vec3(turn * p) : p);
    return out;
  }
  throw ConfigError("unknown Archimedean solid '" + name + "'");
}

inline std::vector<Vec3> normalized(std::vector<Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= double(pts.size());
  double r = 0;
  for (auto& p : pts) {
    p -= c;
    r = std::max(r, p.norm());
  }
  for (auto& p : pts) p /= r;
  return pts;
}

// Polar dual: one vertex n / b per facet {n . x <= b} of the partner solid.
inline std::vector<Vec3> polar_dual(const std::vector<Vec3>& partner) {
  auto pts = normalized(partner);
  auto fs = hull::facets(hull::to_vecx(pts), hull::iota(int(pts.size())), 1e-9);
  std::vector<Vec3> out;
  for (const auto& f : fs) out.push_back(Vec3(f.normal[0], f.normal[1], f.normal[2]) / f.offset);
  return out;
}

inline std::vector<Vec3> catalan(const std::string& name) {
  const auto& cat = solid_names(Family::Catalan);
  auto it = std::find(cat.begin(), cat.end(), name);
  if (it == cat.end()) throw ConfigError("unknown Catalan solid '" + name + "'");
  return polar_dual(archimedean(solid_names(Family::Archimedean)[it - cat.begin()]));
}

inline std::vector<Vec3> ring(int N, double R, double z, double phase) {
  std::vector<Vec3> out;
  const double alpha = 2 * std::numbers::pi / N;
  for (int l = 0; l < N; ++l) out.emplace_back(R * std::cos(l * alpha + phase), R * std::sin(l * alpha + phase), z);
  return out;
}

}  // namespace solids_detail

// Unit charges at the vertices of a named solid, centred at the vertex
// centroid and scaled to unit circumradius.
inline ChargeConfiguration named_solid(const std::string& name) {
  auto fam = family_of(name);
  if (!fam) throw ConfigError("unknown solid '" + name + "'");
  std::vector<Vec3> pts;
  switch (*fam) {
    case Family::Platonic: pts = solids_detail::platonic(name); break;
    case Family::Archimedean: pts = solids_detail::archimedean(name); break;
    case Family::Catalan: pts = solids_detail::catalan(name); break;
  }
  return make_configuration(solids_detail::normalized(std::move(pts)), {}, name);
}

// Top ring at height h/2 turned by beta/2, bottom ring at -h/2 turned by
// -beta/2; beta = alpha/2 gives the anti-prism.
inline ChargeConfiguration prism(int N, double R, double h, double beta) {
  if (N < 3 || !(R > 0) || !(h > 0) || beta < 0 || beta >= 2 * std::numbers::pi)
    throw ConfigError("invalid prism parameters");
  auto top = solids_detail::ring(N, R, h / 2, beta / 2);
  auto bottom = solids_detail::ring(N, R, -h / 2, -beta / 2);
  top.insert(top.end(), bottom.begin(), bottom.end());
  return make_configuration(std::move(top), {},
                            "prism N=" + std::to_string(N) + " R=" + std::to_string(R) + " h=" +
                                std::to_string(h) + " beta=" + std::to_string(beta));
}

inline ChargeConfiguration antiprism(int N, double R, double h) {
  if (N < 3) throw ConfigError("anti-prism needs N >= 3");
  auto c = prism(N, R, h, std::numbers::pi / N);
  c.label = "antiprism N=" + std::to_string(N) + " R=" + std::to_string(R) + " h=" + std::to_string(h);
  return c;
}

inline ChargeConfiguration line_configuration(int n, double spacing = 1.0) {
  if (n < 1 || !(spacing > 0)) throw ConfigError("invalid line parameters");
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back((i - 0.5 * (n - 1)) * spacing, 0, 0);
  return make_configuration(std::move(pts), {}, "line n=" + std::to_string(n));
}

// Replace every vertex by a copy of the base scaled by shrink^k at depth k.
inline ChargeConfiguration iterate_substitution(const ChargeConfiguration& base, int layers, double shrink) {
  if (layers < 1) throw ConfigError("layers must be >= 1");
  if (!(shrink > 0 && shrink < 1)) throw ConfigError("shrink factor must lie in (0, 1)");
  const Vec3 c = base.centroid();
  const double rho = base.circumradius(c);
  ChargeConfiguration cur = base;
  double scale = 1.0;
  for (int k = 1; k < layers; ++k) {
    scale *= shrink;
    if (cur.size() > 1) {
      auto [i, j] = cur.closest_pair();
      if ((cur.points[i] - cur.points[j]).norm() <= 2 * scale * rho)
        throw ConfigError("copies at parent vertices " + std::to_string(i) + " and " + std::to_string(j) +
                          " overlap");
    }
    std::vector<Vec3> pts;
    std::vector<double> q;
    for (std::size_t v = 0; v < cur.size(); ++v)
      for (std::size_t b = 0; b < base.size(); ++b) {
        pts.push_back(cur.points[v] + scale * (base.points[b] - c));
        q.push_back(base.charges[b]);
      }
    cur = make_configuration(std::move(pts), std::move(q));
  }
  cur.label = base.label + " iterated layers=" + std::to_string(layers);
  return cur;
}

inline ChargeConfiguration perturb(const ChargeConfiguration& c, double magnitude, std::uint64_t seed) {
  if (magnitude < 0) throw ConfigError("perturbation magnitude must be >= 0");
  ChargeConfiguration out = c;
  if (magnitude == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& p : out.points) {
    Vec3 d;
    do {
      d = Vec3(u(rng), u(rng), u(rng));
    } while (d.squaredNorm() > 1.0);
    p += magnitude * d;
  }
  out.label = c.label + " perturbed";
  out.validate();
  return out;
}

struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  bool reflect = false;

  Vec3 apply(const Vec3& x) const {
    Vec3 y = x;
    if (reflect) y.x() = -y.x();
    return scale * (rotation * y) + translation;
  }
};

inline ChargeConfiguration apply_similarity(const ChargeConfiguration& c, const Similarity& s) {
  if (!(s.scale > 0)) throw ConfigError("similarity scale must be positive");
  if ((s.rotation.transpose() * s.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw ConfigError("rotation is not orthogonal");
  ChargeConfiguration out = c;
  for (auto& p : out.points) p = s.apply(p);
  return out;
}

inline ChargeConfiguration generate(const SolidSpec& spec) {
  return std::visit(
      [](const auto& s) -> ChargeConfiguration {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NamedSolid>) return named_solid(s.name);
        if constexpr (std::is_same_v<T, Prism>) return prism(s.N, s.R, s.h, s.beta);
        if constexpr (std::is_same_v<T, AntiPrism>) return antiprism(s.N, s.R, s.h);
        if constexpr (std::is_same_v<T, IteratedAntiPrism>)
          return iterate_substitution(antiprism(s.N, s.R, s.h), s.layers, s.shrink);
        if constexpr (std::is_same_v<T, Line>) return line_configuration(s.n, s.spacing);
        if constexpr (std::is_same_v<T, Custom>) return load_configuration(s.path);
      },
      spec);
}

// Textual specs: "cube", "antiprism:N=4,R=1,h=1.2", "prism:N=6,R=1,h=1.6,beta=0",
// "iterated:N=4,R=1,h=1.1,layers=2,shrink=0.02", "line:n=4,spacing=1", "file:cfg.json".
inline SolidSpec parse_spec(const std::string& text) {
  auto colon = text.find(':');
  std::string head = text.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "file") return Custom{rest};
  if (colon == std::string::npos) {
    if (text.size() > 5 && text.substr(text.size() - 5) == ".json") return Custom{text};
    if (!family_of(text)) throw ConfigError("unknown solid '" + text + "'");
    return NamedSolid{text};
  }
  if (head == "platonic" || head == "archimedean" || head == "catalan") {
    if (!family_of(rest) || *family_of(rest) != parse_family(head))
      throw ConfigError("unknown " + head + " solid '" + rest + "'");
    return NamedSolid{rest};
  }
  std::map<std::string, double> kv;
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed parameter '" + item + "'");
    try {
      kv[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("malformed value in '" + item + "'");
    }
  }
  auto get = [&](const std::string& k, std::optional<double> def = std::nullopt) {
    auto it = kv.find(k);
    if (it != kv.end()) return it->second;
    if (def) return *def;
    throw ConfigError("missing parameter '" + k + "' in '" + text + "'");
  };
  if (head == "prism") return Prism{int(get("N")), get("R", 1.0), get("h"), get("beta", 0.0)};
  if (head == "antiprism") return AntiPrism{int(get("N")), get("R", 1.0), get("h")};
  if (head == "iterated")
    return IteratedAntiPrism{int(get("N", 4.0)), get("R", 1.0), get("h"), int(get("layers")), get("shrink", 0.02)};
  if (head == "line") return Line{int(get("n")), get("spacing", 1.0)};
  throw ConfigError("unknown spec kind '" + head + "'");
}

}  // namespace equilibria
