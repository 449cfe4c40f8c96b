#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace equilibria {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

struct BoundsReport {
  long n = 0;
  std::optional<long> p;  // set only for even p
  BigInt maxwell;
  BigInt morse_lower;
  BigInt gns2007;
  BigInt zolotov;
  BigInt bezout_main;
  std::optional<BigInt> bezout_p;
  std::optional<BigInt> zolotov_p_prior;
  std::optional<BigInt> slice_bound;
};

inline BigInt big_pow(BigInt base, unsigned long e) {
  BigInt r = 1;
  while (e) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

inline BigInt maxwell_bound(long n) { return BigInt(n - 1) * (n - 1); }
inline BigInt morse_lower_bound(long n) { return BigInt(n - 1); }
inline BigInt gns2007_bound(long n) { return big_pow(2, 2ul * n * n) * big_pow(BigInt(3) * n, 2ul * n); }
inline BigInt zolotov_bound(long n) { return 5 * big_pow(9, 3ul + n); }
inline BigInt bezout_main_bound(long n) { return big_pow(2, n) * big_pow(BigInt(3) * n - 2, 3); }

// Bounds for V_p with p = 2r.
inline BigInt bezout_p_bound(long n, long r) { return big_pow(BigInt(r) * (n - 1) + 2 - r, 3); }
inline BigInt zolotov_p_prior_bound(long n, long r) {
  const BigInt m = n - 1;
  return (1 + 2 * (1 + BigInt(r)) * m) * big_pow(1 + 4 * (BigInt(r) + 1) * m, 2);
}
inline BigInt slice_bound(long n, long p) { return BigInt(p) * (n - 1) + 2 * BigInt(n) - 1; }

// p, when given, must be a positive even integer.
inline BoundsReport evaluate_bounds(long n, std::optional<long> p = std::nullopt) {
  if (n < 1) throw std::invalid_argument("evaluate_bounds: n must be at least 1");
  BoundsReport b;
  b.n = n;
  b.maxwell = maxwell_bound(n);
  b.morse_lower = morse_lower_bound(n);
  b.gns2007 = gns2007_bound(n);
  b.zolotov = zolotov_bound(n);
  b.bezout_main = bezout_main_bound(n);
  if (p) {
    if (*p <= 0 || *p % 2 != 0) throw std::invalid_argument("evaluate_bounds: p must be a positive even integer");
    b.p = p;
    b.bezout_p = bezout_p_bound(n, *p / 2);
    b.zolotov_p_prior = zolotov_p_prior_bound(n, *p / 2);
    b.slice_bound = slice_bound(n, *p);
  }
  return b;
}

struct IterateFormula {
  BigInt count;
  BigRational ratio;
  BigRational limit;  // m / (n - 1)
};

// Equilibria of the configuration built by substituting a scaled copy of an
// (n, m) configuration at every charge, l times.
inline IterateFormula iterate_formulas(long m, long n, long layers) {
  if (n < 2 || layers < 1) throw std::invalid_argument("iterate_formulas: need n >= 2 and layers >= 1");
  IterateFormula f;
  const BigInt nl = big_pow(n, layers);
  f.count = BigInt(m) * (nl - 1) / (n - 1);
  f.ratio = BigRational(f.count, nl);
  f.limit = BigRational(BigInt(m), BigInt(n - 1));
  return f;
}

// Equilibria per charge of the anti-prism over a regular k-gon at its best
// height.
inline BigRational antiprism_ratio(long k) {
  if (k < 4) throw std::invalid_argument("antiprism_ratio: k must be at least 4");
  return BigRational(BigInt(6 * k + 1), BigInt(2 * k));
}

inline std::string to_string(const BigRational& q) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

struct EmpiricalCounts {
  long n = 0;
  double p = 1;
  long total = 0;        // all equilibria found
  long degenerate = 0;
};

struct LedgerEntry {
  std::string check;
  std::string observed;
  std::string bound;
  bool pass = true;
  bool discovery = false;  // a result that would contradict a conjecture
};

struct BoundsLedger {
  std::vector<LedgerEntry> entries;
  bool pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return true;
  }
  bool discovery() const {
    for (const auto& e : entries)
      if (e.discovery) return true;
    return false;
  }
};

inline BoundsLedger compare_empirical(const EmpiricalCounts& counts, const BoundsReport& b) {
  BoundsLedger ledger;
  const BigInt total = counts.total;
  const std::string obs = total.str();
  if (counts.p == 1.0 && counts.degenerate == 0) {
    ledger.entries.push_back({"morse_lower", obs, b.morse_lower.str(), total >= b.morse_lower, false});
    ledger.entries.push_back({"bezout_main", obs, b.bezout_main.str(), total <= b.bezout_main, false});
    LedgerEntry mx{"maxwell", obs, b.maxwell.str(), true, total > b.maxwell};
    ledger.entries.push_back(mx);
  }
  const double pr = std::round(counts.p);
  if (counts.p == pr && long(pr) % 2 == 0 && counts.degenerate == 0) {
    BigInt bp = bezout_p_bound(b.n, long(pr) / 2);
    ledger.entries.push_back({"bezout_p", obs, bp.str(), total <= bp, false});
  }
  return ledger;
}

}  // namespace equilibria
