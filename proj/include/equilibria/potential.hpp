#pragma once

#include "configuration.hpp"
#include "icosphere.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace equilibria {

struct PotentialParams {
  double p = 1.0;
};

class NearChargeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace potential_detail {

inline double cutoff(const ChargeConfiguration& c) {
  double d = c.diameter();
  return 1e-12 * (d > 0 ? d : 1.0);
}

inline void check_params(const ChargeConfiguration& c, const PotentialParams& pp) {
  if (!(pp.p > 0)) throw std::invalid_argument("exponent p must be positive");
  if (pp.p != std::floor(pp.p) && !c.all_positive())
    throw std::domain_error("non-integer p needs positive charges");
}

inline double charge_power(double z, double p) { return p == 1.0 ? z : p == 2.0 ? z * z : std::pow(z, p); }

// r^-(p+k) with cheap paths for the common exponents.
inline double inv_pow(double r, double p, int k) {
  if (p == 1.0) {
    double ir = 1.0 / r;
    double out = ir;
    for (int i = 0; i < k; ++i) out *= ir;
    return out;
  }
  if (p == 2.0) {
    double ir = 1.0 / r;
    double out = ir * ir;
    for (int i = 0; i < k; ++i) out *= ir;
    return out;
  }
  return std::pow(r, -(p + k));
}

}  // namespace potential_detail

// Value, gradient and Hessian in one pass, plus the magnitude scales used to
// make tolerances relative.
struct Derivatives {
  double value = 0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
  double grad_scale = 0;  // sum p |z|^p / r^(p+1)
  double hess_scale = 0;  // sum p (p+1) |z|^p / r^(p+2)
  double rmin = std::numeric_limits<double>::infinity();
};

inline Derivatives derivatives(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x) {
  using namespace potential_detail;
  check_params(c, pp);
  const double p = pp.p, cut = cutoff(c);
  Derivatives d;
  for (std::size_t i = 0; i < c.size(); ++i) {
    Vec3 dx = x - c.points[i];
    double r = dx.norm();
    if (r < cut) throw NearChargeError("point coincides with charge " + std::to_string(i));
    d.rmin = std::min(d.rmin, r);
    double zp = charge_power(c.charges[i], p);
    double t2 = inv_pow(r, p, 2);  // r^-(p+2)
    double w = p * zp * t2;
    d.value += zp * t2 * r * r;
    d.grad -= w * dx;
    d.hess -= w * (Mat3::Identity() - (p + 2) * dx * dx.transpose() / (r * r));
    d.grad_scale += p * std::abs(zp) * t2 * r;
    d.hess_scale += p * (p + 1) * std::abs(zp) * t2;
  }
  return d;
}

inline double eval_V(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x) {
  using namespace potential_detail;
  check_params(c, pp);
  const double cut = cutoff(c);
  double v = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double r = (x - c.points[i]).norm();
    if (r < cut) throw NearChargeError("point coincides with charge " + std::to_string(i));
    v += pp.p == 1.0 ? c.charges[i] / r : std::pow(c.charges[i] / r, pp.p);
  }
  return v;
}

inline Vec3 gradient(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x) {
  return derivatives(c, pp, x).grad;
}

inline Mat3 hessian(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x) {
  return derivatives(c, pp, x).hess;
}

// Closed form p (p-1) sum z^p / r^(p+2); vanishes identically for p = 1.
inline double laplacian(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x) {
  using namespace potential_detail;
  check_params(c, pp);
  const double p = pp.p, cut = cutoff(c);
  double s = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double r = (x - c.points[i]).norm();
    if (r < cut) throw NearChargeError("point coincides with charge " + std::to_string(i));
    s += charge_power(c.charges[i], p) * inv_pow(r, p, 2);
  }
  return p * (p - 1) * s;
}

// Limit of V_p^(-1/p): the multiplicatively weighted distance.
inline double eval_E(const ChargeConfiguration& c, const Vec3& x) {
  double e = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) e = std::min(e, (x - c.points[i]).norm() / c.charges[i]);
  return e;
}

inline double nearest_charge_distance(const ChargeConfiguration& c, const Vec3& x) {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& a : c.points) r = std::min(r, (x - a).norm());
  return r;
}

// V(x + disp) - V(x) evaluated in scalar type T without cancellation:
// a - b = (2 disp.d + |disp|^2) / (a + b) and a^-p - b^-p through expm1/log1p.
template <class T>
T increment(const ChargeConfiguration& c, const PotentialParams& pp, const Vec3& x, const Vec3& disp) {
  const T p = T(pp.p);
  T total = 0;
  const T dx = disp.x(), dy = disp.y(), dz = disp.z();
  const T dd = dx * dx + dy * dy + dz * dz;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const T ex = T(x.x()) - T(c.points[i].x()), ey = T(x.y()) - T(c.points[i].y()),
            ez = T(x.z()) - T(c.points[i].z());
    const T b = std::sqrt(ex * ex + ey * ey + ez * ez);
    const T fx = ex + dx, fy = ey + dy, fz = ez + dz;
    const T a = std::sqrt(fx * fx + fy * fy + fz * fz);
    const T diff = (2 * (dx * ex + dy * ey + dz * ez) + dd) / (a + b);  // a - b
    const T z = T(c.charges[i]);
    if (pp.p == 1.0) {
      total -= z * diff / (a * b);
    } else {
      const T zp = std::pow(z, p);
      total += zp * std::pow(b, -p) * std::expm1(-p * std::log1p(diff / b));
    }
  }
  return total;
}

// Cleared-denominator system: R_j = sum z_i (x_j - p_ij) prod_{l != i} u_l^3
// and Q_m = u_m^2 - |x - p_m|^2.  A zero with u_i = |x - A_i| > 0 is an
// equilibrium of V.
struct PolySystem {
  std::size_t n = 0;
  std::vector<Vec3> points;
  std::vector<double> charges;
  std::vector<int> degrees;  // three R components, then n Q components
};

inline PolySystem build_poly_system(const ChargeConfiguration& c) {
  PolySystem ps;
  ps.n = c.size();
  ps.points = c.points;
  ps.charges = c.charges;
  ps.degrees.assign(3, int(3 * ps.n - 2));
  ps.degrees.insert(ps.degrees.end(), ps.n, 2);
  return ps;
}

inline Eigen::VectorXd eval_poly_system(const PolySystem& ps, const Vec3& x, const Eigen::VectorXd& u) {
  if (std::size_t(u.size()) != ps.n) throw std::invalid_argument("eval_poly_system: u has wrong length");
  const std::size_t n = ps.n;
  std::vector<double> prefix(n + 1, 1.0), suffix(n + 1, 1.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * u[i] * u[i] * u[i];
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * u[i] * u[i] * u[i];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(3 + n);
  for (std::size_t i = 0; i < n; ++i) {
    double others = prefix[i] * suffix[i + 1];
    for (int j = 0; j < 3; ++j) out[j] += ps.charges[i] * (x[j] - ps.points[i][j]) * others;
    out[3 + i] = u[i] * u[i] - (x - ps.points[i]).squaredNorm();
  }
  return out;
}

// Largest component of the residual, each measured against the sum of the
// magnitudes of its own terms (products of u^3 are divided out first).
inline double poly_relative_residual(const PolySystem& ps, const Vec3& x, const Eigen::VectorXd& u) {
  if (std::size_t(u.size()) != ps.n) throw std::invalid_argument("poly_relative_residual: u has wrong length");
  Vec3 num = Vec3::Zero(), den = Vec3::Zero();
  double worst = 0;
  for (std::size_t i = 0; i < ps.n; ++i) {
    double u3 = u[i] * u[i] * u[i];
    if (u3 == 0) throw std::domain_error("poly_relative_residual: zero lift coordinate");
    Vec3 d = x - ps.points[i];
    num += ps.charges[i] * d / u3;
    den += (std::abs(ps.charges[i]) * d.cwiseAbs()) / std::abs(u3);
    double q = u[i] * u[i] - d.squaredNorm();
    worst = std::max(worst, std::abs(q) / (u[i] * u[i] + d.squaredNorm()));
  }
  for (int j = 0; j < 3; ++j)
    if (den[j] > 0) worst = std::max(worst, std::abs(num[j]) / den[j]);
  return worst;
}

inline Eigen::VectorXd lift(const PolySystem& ps, const Vec3& x) {
  Eigen::VectorXd u(ps.n);
  for (std::size_t i = 0; i < ps.n; ++i) u[i] = (x - ps.points[i]).norm();
  return u;
}

struct TaylorTerm {
  std::array<int, 3> exponent;
  double coefficient;
};

struct TaylorExpansion {
  Vec3 center;
  double value = 0;
  double stencil_radius = 0;
  double condition = 0;
  int max_order = 4;
  std::vector<TaylorTerm> terms;  // degree 1..max_order

  double coefficient(int a, int b, int c) const {
    for (const auto& t : terms)
      if (t.exponent == std::array<int, 3>{a, b, c}) return t.coefficient;
    if (a == 0 && b == 0 && c == 0) return value;
    throw std::out_of_range("no such Taylor term");
  }

  double max_abs_of_degree(int k) const {
    double m = 0;
    for (const auto& t : terms)
      if (t.exponent[0] + t.exponent[1] + t.exponent[2] == k) m = std::max(m, std::abs(t.coefficient));
    return m;
  }
};

inline std::vector<std::array<int, 3>> monomials(int min_degree, int max_degree) {
  std::vector<std::array<int, 3>> out;
  for (int k = min_degree; k <= max_degree; ++k)
    for (int a = k; a >= 0; --a)
      for (int b = k - a; b >= 0; --b) out.push_back({a, b, k - a - b});
  return out;
}

// Least-squares fit of V(center + y) - V(center) by all monomials up to a
// degree two above max_order, on shells of radius up to 1e-2 times the
// nearest-charge distance.  Only coefficients up to max_order are returned.
inline TaylorExpansion taylor_coefficients(const ChargeConfiguration& c, const Vec3& center, int max_order = 4,
                                           const PotentialParams& pp = {}) {
  if (max_order < 1 || max_order > 4) throw std::invalid_argument("taylor_coefficients: max_order must be 1..4");
  const double dmin = nearest_charge_distance(c, center);
  if (dmin < potential_detail::cutoff(c)) throw NearChargeError("Taylor centre coincides with a charge");
  const double rho = 1e-2 * dmin;
  const int fit_order = max_order + 2;
  const auto mons = monomials(1, fit_order);
  const Icosphere dirs = make_icosphere(2);
  const std::array<double, 4> shells{0.25, 0.5, 0.75, 1.0};
  const int rows = int(dirs.vertices.size() * shells.size());
  Eigen::MatrixXd A(rows, int(mons.size()));
  Eigen::VectorXd rhs(rows);
  int r = 0;
  for (double s : shells)
    for (const auto& u : dirs.vertices) {
      Vec3 y = s * u;  // scaled coordinates; the actual displacement is rho * y
      for (std::size_t m = 0; m < mons.size(); ++m)
        A(r, int(m)) = std::pow(y.x(), mons[m][0]) * std::pow(y.y(), mons[m][1]) * std::pow(y.z(), mons[m][2]);
      rhs[r] = double(increment<long double>(c, pp, center, rho * y));
      ++r;
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  TaylorExpansion out;
  out.center = center;
  out.value = eval_V(c, pp, center);
  out.stencil_radius = rho;
  out.max_order = max_order;
  out.condition = sv[0] / sv[sv.size() - 1];
  if (!(out.condition < 1e10)) throw std::runtime_error("taylor_coefficients: ill-conditioned stencil");
  Eigen::VectorXd coef = svd.solve(rhs);
  for (std::size_t m = 0; m < mons.size(); ++m) {
    int deg = mons[m][0] + mons[m][1] + mons[m][2];
    if (deg > max_order) continue;
    out.terms.push_back({mons[m], coef[int(m)] / std::pow(rho, deg)});
  }
  return out;
}

}  // namespace equilibria
