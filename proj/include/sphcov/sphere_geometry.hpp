// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sphcov/error.hpp"
#include "sphcov/random.hpp"

namespace sphcov {

/// A point on the unit sphere S^d, stored as a unit vector in R^{d+1}.
class SpherePoint {
public:
  /// Takes a unit vector; the norm must equal 1 within 1e-12.
  explicit SpherePoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
    detail::require(coords_.size() >= 2, ErrorKind::invalid_argument,
                    "sphere point needs at least 2 coordinates (d >= 1)");
    detail::require(std::abs(coords_.norm() - 1.0) <= 1e-12, ErrorKind::invalid_argument,
                    "sphere point coordinates must have unit norm");
  }

  /// Projects a nonzero vector onto the sphere.
  static SpherePoint normalized(const Eigen::VectorXd& v) {
    const double n = v.norm();
    detail::require(n > 0.0 && std::isfinite(n), ErrorKind::invalid_argument,
                    "cannot normalize a zero or non-finite vector");
    return SpherePoint(v / n);
  }

  /// Uniformly distributed point on S^dim.
  static SpherePoint random(int dim, Rng& rng) {
    Eigen::VectorXd v(dim + 1);
    do {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = rng.normal();
      }
    } while (v.norm() < 1e-8);
    return normalized(v);
  }

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
  [[nodiscard]] const Eigen::VectorXd& coords() const noexcept { return coords_; }

  friend bool operator==(const SpherePoint& a, const SpherePoint& b) {
    return a.coords_.size() == b.coords_.size() && a.coords_ == b.coords_;
  }

private:
  Eigen::VectorXd coords_;
};

/// A point on a product of spheres and lines.
struct SpaceTimePoint {
  std::vector<SpherePoint> spheres;
  std::vector<double> times;

  friend bool operator==(const SpaceTimePoint&, const SpaceTimePoint&) = default;
};

struct ObservationRecord {
  double lat = 0.0;
  double lon = 0.0;
  double t = 0.0;
  double value = 0.0;
};

/// Cosine of the geodesic distance, i.e. the clamped dot product. Exactly 1
/// for identical points, so nuggets and zero-separation values are hit.
inline double geodesic_cosine(const SpherePoint& p, const SpherePoint& q) {
  detail::require(p.dim() == q.dim(), ErrorKind::invalid_argument,
                  "geodesic_cosine: sphere dimension mismatch");
  if (p.coords() == q.coords()) {
    return 1.0;
  }
  return std::clamp(p.coords().dot(q.coords()), -1.0, 1.0);
}

/// Great-circle distance on the unit sphere, in [0, pi].
inline double geodesic_distance(const SpherePoint& p, const SpherePoint& q) {
  return std::acos(geodesic_cosine(p, q));
}

inline bool valid_latitude(double lat) { return std::isfinite(lat) && lat >= -90.0 && lat <= 90.0; }
inline bool valid_longitude(double lon) { return std::isfinite(lon) && lon > -180.0 && lon <= 180.0; }

/// Geographic degrees to a point on S^2. Longitude 0 is +x, 90E is +y.
inline SpherePoint from_lat_lon(double lat_deg, double lon_deg) {
  detail::require(valid_latitude(lat_deg), ErrorKind::invalid_argument,
                  "latitude out of range [-90, 90]: " + std::to_string(lat_deg));
  detail::require(std::isfinite(lon_deg), ErrorKind::invalid_argument, "longitude is not finite");
  constexpr double deg = std::numbers::pi / 180.0;
  const double phi = lat_deg * deg;
  const double lam = lon_deg * deg;
  Eigen::VectorXd v(3);
  v << std::cos(phi) * std::cos(lam), std::cos(phi) * std::sin(lam), std::sin(phi);
  // cos/sin rounding can leave the norm a few ulps off.
  return SpherePoint(v / v.norm());
}

inline SpaceTimePoint to_space_time(const ObservationRecord& r) {
  return SpaceTimePoint{{from_lat_lon(r.lat, r.lon)}, {r.t}};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

/// Locale-independent parse of a full field. Returns false on any leftover.
inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') {
    s.remove_prefix(1);
  }
  if (s.empty()) {
    return false;
  }
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace detail

/// Reads observation records from CSV text with header `lat,lon,t,value`.
/// Extra trailing columns are ignored. Blank lines are skipped. Errors name
/// the 1-based line number.
inline std::vector<ObservationRecord> ingest_csv(std::istream& in) {
  std::vector<ObservationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  auto bad = [&](const std::string& why) {
    detail::fail(ErrorKind::invalid_argument, "line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) {
      view.remove_prefix(3);
    }
    if (detail::trim(view).empty()) {
      continue;
    }
    const auto fields = detail::split_csv(view);
    if (!header_seen) {
      if (fields.size() < 4 || fields[0] != "lat" || fields[1] != "lon" || fields[2] != "t" ||
          fields[3] != "value") {
        bad("expected header 'lat,lon,t,value'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() < 4) {
      bad("expected 4 fields, got " + std::to_string(fields.size()));
    }
    ObservationRecord r;
    if (!detail::parse_double(fields[0], r.lat) || !detail::parse_double(fields[1], r.lon) ||
        !detail::parse_double(fields[2], r.t) || !detail::parse_double(fields[3], r.value)) {
      bad("malformed number");
    }
    if (!valid_latitude(r.lat)) {
      bad("latitude out of range [-90, 90]");
    }
    if (!valid_longitude(r.lon)) {
      bad("longitude out of range (-180, 180]");
    }
    if (!std::isfinite(r.t) || !std::isfinite(r.value)) {
      bad("non-finite time or value");
    }
    records.push_back(r);
  }
  detail::require(header_seen, ErrorKind::invalid_argument, "missing CSV header 'lat,lon,t,value'");
  return records;
}

}  // namespace sphcov
