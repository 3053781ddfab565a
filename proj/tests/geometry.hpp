// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>

#include "ksfusion/geo.hpp"
#include "ksfusion/metrics.hpp"
#include "support.hpp"

namespace ksf::test {

inline constexpr GeoPosition kGeometryOrigin{49.2339667, 6.9822499};

struct Crossing {
  KinematicState vut, obj;
  std::int64_t obj_ms, vut_ms;
};

/// Both parties placed behind a crossing point P at known distances along
/// their courses; courses differ by 10..170 degrees.
inline Crossing random_crossing(Rng& rng) {
  for (;;) {
    const double cv = uniform(rng, 0.0, 360.0);
    const double co = uniform(rng, 0.0, 360.0);
    const double diff = angular_difference(CourseDeg(cv), CourseDeg(co));
    if (diff < 10.0 || diff > 170.0) continue;
    const double sv = uniform(rng, 1.0, 20.0), so = uniform(rng, 0.5, 20.0);
    const double dv = uniform(rng, 0.0, 200.0), dobj = uniform(rng, 0.0, 200.0);
    const auto [uve, uvn] = course_to_unit_vector(CourseDeg(cv));
    const auto [uoe, uon] = course_to_unit_vector(CourseDeg(co));
    const LocalPoint p{uve * dv, uvn * dv};
    Crossing g;
    g.vut = {kGeometryOrigin, sv, CourseDeg(cv)};
    g.obj = {from_local_enu(kGeometryOrigin, {p.east - uoe * dobj, p.north - uon * dobj}), so, CourseDeg(co)};
    g.obj_ms = std::llround(1000.0 * dobj / so);
    g.vut_ms = std::llround(1000.0 * dv / sv);
    return g;
  }
}

/// Object state with the given velocity (east, north) in m/s.
inline KinematicState with_velocity(const GeoPosition& p, double ve, double vn) {
  return {p, std::hypot(ve, vn), CourseDeg(std::atan2(ve, vn) * 180.0 / std::numbers::pi)};
}

}  // namespace ksf::test
