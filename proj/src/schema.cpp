// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/schema.hpp"

namespace ksf {

namespace {

// Generated from docs/schema.sql; tests check that both stay equal.
constexpr std::string_view kDdl = R"sql(-- Raw aggregated data: one append-only table per record kind.
-- Common columns: reporter (forwarding station), receive_time (backend
-- arrival, ms), time_ms and lat/lon of the record.

CREATE TABLE IF NOT EXISTS raw_cam (
  reporter INTEGER NOT NULL,
  receive_time INTEGER NOT NULL,
  time_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  originator INTEGER NOT NULL,
  speed REAL NOT NULL,
  course REAL NOT NULL,
  classification INTEGER NOT NULL,
  UNIQUE (originator, time_ms)
);
CREATE INDEX IF NOT EXISTS raw_cam_time ON raw_cam (time_ms);

CREATE TABLE IF NOT EXISTS raw_cpm_detection (
  reporter INTEGER NOT NULL,
  receive_time INTEGER NOT NULL,
  time_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  originator INTEGER NOT NULL,
  object_id INTEGER NOT NULL,
  classification INTEGER NOT NULL,
  speed REAL NOT NULL,
  course REAL NOT NULL,
  UNIQUE (originator, time_ms, object_id)
);
CREATE INDEX IF NOT EXISTS raw_cpm_detection_time ON raw_cpm_detection (time_ms);

CREATE TABLE IF NOT EXISTS raw_spat (
  reporter INTEGER NOT NULL,
  receive_time INTEGER NOT NULL,
  time_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  intersection_id INTEGER NOT NULL,
  signal_group INTEGER NOT NULL,
  phase INTEGER NOT NULL,
  UNIQUE (intersection_id, time_ms, signal_group)
);
CREATE INDEX IF NOT EXISTS raw_spat_time ON raw_spat (time_ms);

CREATE TABLE IF NOT EXISTS raw_vut_sensor (
  reporter INTEGER NOT NULL,
  receive_time INTEGER NOT NULL,
  time_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  groups INTEGER NOT NULL,
  brake_actuated INTEGER NOT NULL,
  abs_active INTEGER NOT NULL,
  panic_braking INTEGER NOT NULL,
  clutch_pressed INTEGER NOT NULL,
  gear INTEGER NOT NULL,
  door_fl INTEGER NOT NULL,
  door_fr INTEGER NOT NULL,
  door_rl INTEGER NOT NULL,
  door_rr INTEGER NOT NULL,
  exterior_lights INTEGER NOT NULL,
  gnss_heading REAL NOT NULL,
  speed REAL NOT NULL,
  accel_longitudinal REAL NOT NULL,
  accel_lateral REAL NOT NULL,
  rain_intensity INTEGER NOT NULL,
  wiper_active INTEGER NOT NULL,
  yaw_rate REAL NOT NULL,
  steering_wheel_angle REAL NOT NULL,
  steering_wheel_velocity REAL NOT NULL,
  UNIQUE (reporter, time_ms)
);
CREATE INDEX IF NOT EXISTS raw_vut_sensor_time ON raw_vut_sensor (time_ms);

CREATE TABLE IF NOT EXISTS raw_driver (
  reporter INTEGER NOT NULL,
  receive_time INTEGER NOT NULL,
  time_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  valence INTEGER NOT NULL,
  arousal INTEGER NOT NULL,
  heart_rate REAL,
  self_reported INTEGER NOT NULL,
  UNIQUE (reporter, time_ms)
);
CREATE INDEX IF NOT EXISTS raw_driver_time ON raw_driver (time_ms);

CREATE TABLE IF NOT EXISTS raw_environment (
  reporter INTEGER NOT NULL,
  receive_time INTEGER NOT NULL,
  time_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  validity_s INTEGER NOT NULL,
  area_radius_m REAL NOT NULL,
  temperature_c REAL NOT NULL,
  precipitation_mm_h REAL NOT NULL,
  wind_speed_ms REAL NOT NULL,
  wind_direction REAL NOT NULL,
  illuminance_lux REAL NOT NULL,
  visibility_m REAL NOT NULL,
  pressure_hpa REAL NOT NULL,
  humidity_pct REAL NOT NULL,
  cloudiness_pct REAL NOT NULL,
  UNIQUE (reporter, time_ms)
);
CREATE INDEX IF NOT EXISTS raw_environment_time ON raw_environment (time_ms);

CREATE TABLE IF NOT EXISTS raw_hazard (
  reporter INTEGER NOT NULL,
  receive_time INTEGER NOT NULL,
  time_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  kind INTEGER NOT NULL,
  source INTEGER NOT NULL,
  UNIQUE (source, time_ms, kind)
);
CREATE INDEX IF NOT EXISTS raw_hazard_time ON raw_hazard (time_ms);

-- Static intersection topologies (MAP).
CREATE TABLE IF NOT EXISTS map_lane (
  intersection_id INTEGER NOT NULL,
  ordinal INTEGER NOT NULL,
  lane_id INTEGER NOT NULL,
  signal_group INTEGER NOT NULL,
  ingress INTEGER NOT NULL,
  polyline BLOB NOT NULL,  -- little-endian f64 (lat, lon) pairs
  PRIMARY KEY (intersection_id, ordinal)
);

-- Fused situations. A NULL intersection_id means no topology was linked.
CREATE TABLE IF NOT EXISTS situation (
  situation_id INTEGER PRIMARY KEY AUTOINCREMENT,
  vut_station INTEGER NOT NULL,
  timestamp_ms INTEGER NOT NULL,
  center_lat REAL NOT NULL,
  center_lon REAL NOT NULL,
  radius_m REAL NOT NULL,
  intersection_id INTEGER
);
CREATE INDEX IF NOT EXISTS situation_time ON situation (timestamp_ms);

CREATE TABLE IF NOT EXISTS fused_object (
  situation_id INTEGER NOT NULL REFERENCES situation (situation_id) ON DELETE CASCADE,
  fused_id INTEGER NOT NULL,
  classification INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  speed REAL NOT NULL,
  course REAL NOT NULL,
  lane_id INTEGER,
  PRIMARY KEY (situation_id, fused_id)
);

CREATE TABLE IF NOT EXISTS provenance (
  situation_id INTEGER NOT NULL,
  fused_id INTEGER NOT NULL,
  ordinal INTEGER NOT NULL,
  source INTEGER NOT NULL,
  reporter INTEGER NOT NULL,
  source_object_id INTEGER NOT NULL,
  PRIMARY KEY (situation_id, fused_id, ordinal),
  FOREIGN KEY (situation_id, fused_id) REFERENCES fused_object (situation_id, fused_id) ON DELETE CASCADE
);

CREATE TABLE IF NOT EXISTS topology_lane (
  situation_id INTEGER NOT NULL REFERENCES situation (situation_id) ON DELETE CASCADE,
  ordinal INTEGER NOT NULL,
  lane_id INTEGER NOT NULL,
  signal_group INTEGER NOT NULL,
  ingress INTEGER NOT NULL,
  phase INTEGER NOT NULL,
  polyline BLOB NOT NULL,
  PRIMARY KEY (situation_id, ordinal)
);

CREATE TABLE IF NOT EXISTS vut_sensor (
  situation_id INTEGER PRIMARY KEY REFERENCES situation (situation_id) ON DELETE CASCADE,
  timestamp_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  groups INTEGER NOT NULL,
  brake_actuated INTEGER NOT NULL,
  abs_active INTEGER NOT NULL,
  panic_braking INTEGER NOT NULL,
  clutch_pressed INTEGER NOT NULL,
  gear INTEGER NOT NULL,
  door_fl INTEGER NOT NULL,
  door_fr INTEGER NOT NULL,
  door_rl INTEGER NOT NULL,
  door_rr INTEGER NOT NULL,
  exterior_lights INTEGER NOT NULL,
  gnss_heading REAL NOT NULL,
  speed REAL NOT NULL,
  accel_longitudinal REAL NOT NULL,
  accel_lateral REAL NOT NULL,
  rain_intensity INTEGER NOT NULL,
  wiper_active INTEGER NOT NULL,
  yaw_rate REAL NOT NULL,
  steering_wheel_angle REAL NOT NULL,
  steering_wheel_velocity REAL NOT NULL
);

CREATE TABLE IF NOT EXISTS driver_state (
  situation_id INTEGER PRIMARY KEY REFERENCES situation (situation_id) ON DELETE CASCADE,
  timestamp_ms INTEGER NOT NULL,
  valence INTEGER NOT NULL,
  arousal INTEGER NOT NULL,
  heart_rate REAL,
  self_reported INTEGER NOT NULL
);

CREATE TABLE IF NOT EXISTS hazard (
  situation_id INTEGER NOT NULL REFERENCES situation (situation_id) ON DELETE CASCADE,
  ordinal INTEGER NOT NULL,
  kind INTEGER NOT NULL,
  timestamp_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  source INTEGER NOT NULL,
  PRIMARY KEY (situation_id, ordinal)
);

CREATE TABLE IF NOT EXISTS environment (
  situation_id INTEGER PRIMARY KEY REFERENCES situation (situation_id) ON DELETE CASCADE,
  timestamp_ms INTEGER NOT NULL,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  validity_s INTEGER NOT NULL,
  area_radius_m REAL NOT NULL,
  temperature_c REAL NOT NULL,
  precipitation_mm_h REAL NOT NULL,
  wind_speed_ms REAL NOT NULL,
  wind_direction REAL NOT NULL,
  illuminance_lux REAL NOT NULL,
  visibility_m REAL NOT NULL,
  pressure_hpa REAL NOT NULL,
  humidity_pct REAL NOT NULL,
  cloudiness_pct REAL NOT NULL
);
)sql";

}  // namespace

std::string_view schema_ddl() { return kDdl; }

}  // namespace ksf
