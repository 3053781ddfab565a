// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ksfusion/records.hpp"

namespace ksf::test {

using Rng = std::mt19937_64;

inline std::filesystem::path data_dir() { return KSF_DATA_DIR; }

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ksf_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// Position exactly representable at 1e-7 degree, within `spread_e7` of center.
inline GeoPosition grid_position(Rng& rng, const GeoPosition& center, int spread_e7) {
  return {from_e7(to_e7(center.lat) + uniform_int(rng, -spread_e7, spread_e7)),
          from_e7(to_e7(center.lon) + uniform_int(rng, -spread_e7, spread_e7))};
}

inline CourseDeg grid_course(Rng& rng) { return CourseDeg(uniform_int(rng, 0, 35999) / 100.0); }

inline ObjectClassification any_classification(Rng& rng) {
  static constexpr unsigned codes[] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 11};
  return classification_from_code(codes[uniform_int(rng, 0, 9)]);
}

/// A record whose every field survives the wire encoding unchanged.
inline RawRecord grid_record(Rng& rng, wire::RecordKind kind, TimeMs time, const GeoPosition& center,
                             int spread_e7 = 20000) {
  const StationId reporter{static_cast<std::uint32_t>(uniform_int(rng, 1, 5000))};
  const GeoPosition pos = grid_position(rng, center, spread_e7);
  switch (kind) {
    case wire::RecordKind::Cam: {
      CamExtract c{StationId{static_cast<std::uint32_t>(uniform_int(rng, 1, 100000))}, time, pos,
                   uniform_int(rng, 0, 4000) / 100.0, grid_course(rng), any_classification(rng)};
      return make_record(reporter, c);
    }
    case wire::RecordKind::CpmDetection: {
      CpmDetection d{static_cast<std::uint32_t>(uniform_int(rng, 0, 1 << 30)), any_classification(rng), pos,
                     uniform_int(rng, 0, 4000) / 100.0, grid_course(rng)};
      return make_record(reporter, CpmDetectionRecord{StationId{static_cast<std::uint32_t>(uniform_int(rng, 1, 99))},
                                                      time, d});
    }
    case wire::RecordKind::Spat: {
      SpatExtract s{static_cast<std::uint32_t>(uniform_int(rng, 1, 1000)),
                    static_cast<std::uint16_t>(uniform_int(rng, 1, 16)),
                    static_cast<SignalPhase>(uniform_int(rng, 0, 4)), time};
      return make_record(reporter, s, pos);
    }
    case wire::RecordKind::VutSensor: {
      VutSensorExtract s;
      s.timestamp = time;
      s.groups = static_cast<std::uint8_t>(uniform_int(rng, 1, kAllVutGroups));
      s.brake_actuated = uniform_int(rng, 0, 1);
      s.abs_active = uniform_int(rng, 0, 1);
      s.panic_braking = uniform_int(rng, 0, 1);
      s.clutch_pressed = uniform_int(rng, 0, 1);
      s.gear = static_cast<std::int8_t>(uniform_int(rng, -1, 6));
      for (auto& d : s.doors) d = static_cast<DoorState>(uniform_int(rng, 0, 2));
      s.exterior_lights = static_cast<std::uint8_t>(uniform_int(rng, 0, lights::kAll));
      s.gnss = pos;
      s.gnss_heading = grid_course(rng);
      s.speed = uniform_int(rng, 0, 5000) / 100.0;
      s.accel_longitudinal = uniform_int(rng, -1000, 1000) / 100.0;
      s.accel_lateral = uniform_int(rng, -1000, 1000) / 100.0;
      s.rain_intensity = static_cast<std::uint8_t>(uniform_int(rng, 0, 7));
      s.wiper_active = uniform_int(rng, 0, 1);
      s.yaw_rate = uniform_int(rng, -9000, 9000) / 100.0;
      s.steering_wheel_angle = uniform_int(rng, -7200, 7200) / 10.0;
      s.steering_wheel_velocity = uniform_int(rng, -5000, 5000) / 10.0;
      return make_record(reporter, s);
    }
    case wire::RecordKind::DriverState: {
      DriverStateSample d;
      d.timestamp = time;
      d.valence = static_cast<std::uint8_t>(uniform_int(rng, 1, 5));
      d.arousal = static_cast<std::uint8_t>(uniform_int(rng, 1, 5));
      if (uniform_int(rng, 0, 1)) d.heart_rate_bpm = uniform_int(rng, 400, 1800) / 10.0;
      d.self_reported = uniform_int(rng, 0, 1);
      return make_record(reporter, d, pos);
    }
    case wire::RecordKind::Environment: {
      EnvironmentSample e;
      e.timestamp = time;
      e.validity_duration_s = static_cast<std::uint32_t>(uniform_int(rng, 60, 86400));
      e.area_center = pos;
      e.area_radius_m = uniform_int(rng, 100, 100000) / 10.0;
      e.temperature_c = uniform_int(rng, -300, 400) / 10.0;
      e.precipitation_mm_h = uniform_int(rng, 0, 500) / 10.0;
      e.wind_speed_ms = uniform_int(rng, 0, 400) / 10.0;
      e.wind_direction = grid_course(rng);
      e.illuminance_lux = uniform_int(rng, 0, 100000);
      e.visibility_m = uniform_int(rng, 0, 20000);
      e.pressure_hpa = uniform_int(rng, 9500, 10500) / 10.0;
      e.humidity_pct = uniform_int(rng, 0, 10000) / 100.0;
      e.cloudiness_pct = uniform_int(rng, 0, 10000) / 100.0;
      return make_record(reporter, e);
    }
    case wire::RecordKind::Hazard: {
      HazardEvent h{static_cast<HazardKind>(uniform_int(rng, 1, 3)), time, pos,
                    StationId{static_cast<std::uint32_t>(uniform_int(rng, 1, 5000))}};
      return make_record(reporter, h);
    }
  }
  return {};
}

inline wire::RecordKind any_kind(Rng& rng) { return wire::kAllRecordKinds[uniform_int(rng, 0, 6)]; }

/// Time on the 10 ms wire grid.
inline TimeMs grid_time(Rng& rng, TimeMs base, TimeMs spread_ms) {
  return base + 10 * std::uniform_int_distribution<TimeMs>(0, spread_ms / 10)(rng);
}

/// Envelope with arbitrary header, offsets and payload bytes.
inline wire::BatchEnvelope random_envelope(Rng& rng) {
  wire::BatchEnvelope e;
  e.meta.station = StationId{static_cast<std::uint32_t>(rng())};
  e.meta.ref_time = rng() >> 20;
  e.meta.ref_lat_e7 = uniform_int(rng, -900000000, 900000000);
  e.meta.ref_lon_e7 = uniform_int(rng, -1800000000, 1800000000);
  const int n = uniform_int(rng, 0, 40);
  for (int i = 0; i < n; ++i) {
    wire::DeltaRecord d;
    d.kind = any_kind(rng);
    d.rel_time = static_cast<std::uint16_t>(uniform_int(rng, 0, 65535));
    d.rel_lat = static_cast<std::int16_t>(uniform_int(rng, -32767, 32767));
    d.rel_lon = static_cast<std::int16_t>(uniform_int(rng, -32767, 32767));
    d.payload.resize(wire::payload_size(d.kind));
    for (auto& b : d.payload) b = static_cast<std::uint8_t>(rng());
    e.records.push_back(std::move(d));
  }
  e.meta.record_count = static_cast<std::uint16_t>(e.records.size());
  return e;
}

}  // namespace ksf::test
