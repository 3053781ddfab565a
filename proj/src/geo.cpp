// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/geo.hpp"

#include <cmath>
#include <numbers>

#include "ksfusion/error.hpp"

namespace ksf {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double normalize_course(double deg) {
  double v = std::fmod(deg, 360.0);
  if (v < 0.0) v += 360.0;
  // fmod of a tiny negative value can round up to exactly 360
  if (v >= 360.0) v = 0.0;
  return v;
}

}  // namespace

CourseDeg::CourseDeg(double degrees) : value_(normalize_course(degrees)) {}

bool is_valid(const GeoPosition& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

std::int32_t to_e7(double degrees) {
  return static_cast<std::int32_t>(std::llround(degrees * 1e7));
}

double from_e7(std::int32_t e7) { return static_cast<double>(e7) / 1e7; }

double haversine_distance(const GeoPosition& a, const GeoPosition& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  if (h > 1.0) h = 1.0;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

CourseDeg initial_bearing(const GeoPosition& a, const GeoPosition& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  return CourseDeg(std::atan2(y, x) * kRadToDeg);
}

LocalPoint to_local_enu(const GeoPosition& origin, const GeoPosition& p) {
  if (haversine_distance(origin, p) >= kLocalPlaneLimitM) {
    throw Error(ErrorCode::RangeExceeded, "point is 10 km or more from the projection origin");
  }
  const double east = kEarthRadiusM * (p.lon - origin.lon) * kDegToRad * std::cos(origin.lat * kDegToRad);
  const double north = kEarthRadiusM * (p.lat - origin.lat) * kDegToRad;
  return {east, north};
}

GeoPosition from_local_enu(const GeoPosition& origin, const LocalPoint& lp) {
  const double lat = origin.lat + (lp.north / kEarthRadiusM) * kRadToDeg;
  const double lon =
      origin.lon + (lp.east / (kEarthRadiusM * std::cos(origin.lat * kDegToRad))) * kRadToDeg;
  return {lat, lon};
}

std::pair<double, double> course_to_unit_vector(CourseDeg c) {
  const double r = c.value() * kDegToRad;
  return {std::sin(r), std::cos(r)};
}

double angular_difference(CourseDeg a, CourseDeg b) {
  const double d = std::fabs(a.value() - b.value());
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace ksf
