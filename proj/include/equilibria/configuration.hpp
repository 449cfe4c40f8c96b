#pragma once

#include <Eigen/Dense>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace equilibria {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point charges A_i with magnitudes zeta_i.
struct ChargeConfiguration {
  std::vector<Vec3> points;
  std::vector<double> charges;
  std::string label;

  std::size_t size() const { return points.size(); }

  bool all_positive() const {
    return std::all_of(charges.begin(), charges.end(), [](double z) { return z > 0; });
  }

  // Diagonal of the axis-aligned bounding box.
  double diameter() const {
    if (points.empty()) return 0.0;
    Vec3 lo = points.front(), hi = points.front();
    for (const auto& p : points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
  }

  Vec3 centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : points) c += p;
    return points.empty() ? c : Vec3(c / double(points.size()));
  }

  double circumradius(const Vec3& c) const {
    double r = 0;
    for (const auto& p : points) r = std::max(r, (p - c).norm());
    return r;
  }

  double min_pairwise_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j)
        best = std::min(best, (points[i] - points[j]).norm());
    return best;
  }

  std::pair<std::size_t, std::size_t> closest_pair() const {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> out{0, 0};
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j) {
        double d = (points[i] - points[j]).norm();
        if (d < best) {
          best = d;
          out = {i, j};
        }
      }
    return out;
  }

  void validate() const {
    if (points.empty()) throw ConfigError("configuration has no points");
    if (points.size() != charges.size())
      throw ConfigError("points and charges differ in length");
    for (std::size_t i = 0; i < charges.size(); ++i) {
      if (!std::isfinite(charges[i]) || charges[i] == 0.0)
        throw ConfigError("charge " + std::to_string(i) + " is zero or not finite");
      if (!points[i].allFinite()) throw ConfigError("point " + std::to_string(i) + " is not finite");
    }
    if (points.size() > 1) {
      auto [i, j] = closest_pair();
      double diam = diameter();
      if ((points[i] - points[j]).norm() <= 1e-9 * diam)
        throw ConfigError("points " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
    }
  }
};

inline ChargeConfiguration make_configuration(std::vector<Vec3> points, std::vector<double> charges = {},
                                              std::string label = {}) {
  ChargeConfiguration c;
  c.points = std::move(points);
  c.charges = charges.empty() ? std::vector<double>(c.points.size(), 1.0) : std::move(charges);
  c.label = std::move(label);
  c.validate();
  return c;
}

inline nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

inline Vec3 json_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json to_json(const ChargeConfiguration& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points) pts.push_back(vec_json(p));
  return {{"label", c.label}, {"points", pts}, {"charges", c.charges}};
}

inline ChargeConfiguration configuration_from_json(const nlohmann::json& j) {
  if (!j.contains("points")) throw ConfigError("configuration JSON lacks 'points'");
  std::vector<Vec3> pts;
  for (const auto& p : j.at("points")) pts.push_back(json_vec(p));
  std::vector<double> q;
  if (j.contains("charges")) q = j.at("charges").get<std::vector<double>>();
  return make_configuration(std::move(pts), std::move(q), j.value("label", std::string{}));
}

inline ChargeConfiguration load_configuration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return configuration_from_json(j);
}

inline void save_configuration(const ChargeConfiguration& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << to_json(c).dump(2) << "\n";
}

}  // namespace equilibria
