// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>

namespace ksf {

/// Mean Earth radius used by every distance and projection in the library.
inline constexpr double kEarthRadiusM = 6371008.8;

/// Maximum distance from the projection origin accepted by to_local_enu.
inline constexpr double kLocalPlaneLimitM = 10000.0;

struct GeoPosition {
  double lat = 0.0;  // degrees WGS84
  double lon = 0.0;

  friend bool operator==(const GeoPosition&, const GeoPosition&) = default;
};

struct LocalPoint {
  double east = 0.0;  // meters
  double north = 0.0;

  friend bool operator==(const LocalPoint&, const LocalPoint&) = default;
};

/// Heading in degrees, clockwise from true north, normalized to [0, 360).
class CourseDeg {
 public:
  constexpr CourseDeg() = default;
  explicit CourseDeg(double degrees);

  constexpr double value() const { return value_; }

  friend bool operator==(const CourseDeg&, const CourseDeg&) = default;

 private:
  double value_ = 0.0;
};

bool is_valid(const GeoPosition& p);

/// Position in integer units of 1e-7 degree, the absolute wire resolution.
std::int32_t to_e7(double degrees);
double from_e7(std::int32_t e7);

/// Great-circle distance on the sphere of radius kEarthRadiusM.
double haversine_distance(const GeoPosition& a, const GeoPosition& b);

/// Initial bearing from a to b, degrees clockwise from north.
CourseDeg initial_bearing(const GeoPosition& a, const GeoPosition& b);

/// Equirectangular projection around `origin`. Throws Error(RangeExceeded)
/// when p is 10 km or more away from the origin.
LocalPoint to_local_enu(const GeoPosition& origin, const GeoPosition& p);
GeoPosition from_local_enu(const GeoPosition& origin, const LocalPoint& lp);

/// (east, north) components of a unit vector pointing along the course.
std::pair<double, double> course_to_unit_vector(CourseDeg c);

/// Smallest angle between two courses, in [0, 180].
double angular_difference(CourseDeg a, CourseDeg b);

}  // namespace ksf
