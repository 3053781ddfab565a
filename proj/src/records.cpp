// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/records.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "byte_io.hpp"
#include "ksfusion/error.hpp"

namespace ksf {

namespace {

using detail::ByteReader;
using detail::ByteWriter;
using wire::RecordKind;

template <typename T>
T scaled(double value, double scale, const char* field) {
  const double v = std::round(value * scale);
  if (!std::isfinite(v) || v < static_cast<double>(std::numeric_limits<T>::min()) ||
      v > static_cast<double>(std::numeric_limits<T>::max())) {
    throw Error(ErrorCode::InvalidArgument, std::string(field) + " does not fit its wire encoding");
  }
  return static_cast<T>(v);
}

std::uint16_t course_code(CourseDeg c) {
  // 359.996 rounds up to 36000, which is 0 degrees
  return static_cast<std::uint16_t>(std::lround(c.value() * 100.0) % 36000);
}

CourseDeg course_from_code(std::uint16_t code) {
  if (code >= 36000) throw Error(ErrorCode::BadPayload, "course code out of range");
  return CourseDeg(code / 100.0);
}

std::int32_t rem10(std::int32_t v) {
  const std::int32_t r = v % 10;
  return r < 0 ? r + 10 : r;
}

std::uint8_t refine_byte(const GeoPosition& p) {
  return static_cast<std::uint8_t>(rem10(to_e7(p.lat)) * 10 + rem10(to_e7(p.lon)));
}

template <typename E>
E checked_enum(std::uint8_t v, std::uint8_t max, const char* field) {
  if (v > max) throw Error(ErrorCode::BadPayload, std::string(field) + " code out of range");
  return static_cast<E>(v);
}

void encode_body(ByteWriter& w, const CamExtract& c) {
  w.put(c.originator.value);
  w.put(static_cast<std::uint8_t>(to_code(c.classification)));
  w.put(scaled<std::uint16_t>(c.speed, 100.0, "speed"));
  w.put(course_code(c.course));
}

void encode_body(ByteWriter& w, const CpmDetectionRecord& c) {
  w.put(c.originator.value);
  w.put(c.detection.object_id);
  w.put(static_cast<std::uint8_t>(to_code(c.detection.classification)));
  w.put(scaled<std::uint16_t>(c.detection.speed, 100.0, "speed"));
  w.put(course_code(c.detection.course));
}

void encode_body(ByteWriter& w, const SpatExtract& s) {
  w.put(s.intersection_id);
  w.put(s.signal_group);
  w.put(static_cast<std::uint8_t>(s.phase));
}

void encode_body(ByteWriter& w, const VutSensorExtract& s) {
  validate(s);
  w.put(static_cast<std::uint8_t>(s.groups & kAllVutGroups));
  const auto flags = static_cast<std::uint8_t>((s.brake_actuated ? 1u : 0u) | (s.abs_active ? 2u : 0u) |
                                               (s.panic_braking ? 4u : 0u) | (s.clutch_pressed ? 8u : 0u) |
                                               (s.wiper_active ? 16u : 0u));
  w.put(flags);
  w.put(s.gear);
  std::uint8_t doors = 0;
  for (std::size_t i = 0; i < s.doors.size(); ++i) {
    doors = static_cast<std::uint8_t>(doors | (static_cast<unsigned>(s.doors[i]) << (2 * i)));
  }
  w.put(doors);
  w.put(static_cast<std::uint8_t>(s.exterior_lights & lights::kAll));
  w.put(course_code(s.gnss_heading));
  w.put(scaled<std::uint16_t>(s.speed, 100.0, "speed"));
  w.put(scaled<std::int16_t>(s.accel_longitudinal, 100.0, "accel_longitudinal"));
  w.put(scaled<std::int16_t>(s.accel_lateral, 100.0, "accel_lateral"));
  w.put(s.rain_intensity);
  w.put(scaled<std::int16_t>(s.yaw_rate, 100.0, "yaw_rate"));
  w.put(scaled<std::int16_t>(s.steering_wheel_angle, 10.0, "steering_wheel_angle"));
  w.put(scaled<std::int16_t>(s.steering_wheel_velocity, 10.0, "steering_wheel_velocity"));
}

void encode_body(ByteWriter& w, const DriverStateSample& d) {
  validate(d);
  w.put(d.valence);
  w.put(d.arousal);
  w.put(d.heart_rate_bpm ? scaled<std::uint16_t>(*d.heart_rate_bpm, 10.0, "heart_rate") : std::uint16_t{0});
  w.put(static_cast<std::uint8_t>(d.self_reported ? 1 : 0));
}

void encode_body(ByteWriter& w, const EnvironmentSample& e) {
  validate(e);
  w.put(e.validity_duration_s);
  w.put(scaled<std::uint32_t>(e.area_radius_m, 10.0, "area_radius"));
  w.put(scaled<std::int16_t>(e.temperature_c, 10.0, "temperature"));
  w.put(scaled<std::uint16_t>(e.precipitation_mm_h, 10.0, "precipitation"));
  w.put(scaled<std::uint16_t>(e.wind_speed_ms, 10.0, "wind_speed"));
  w.put(course_code(e.wind_direction));
  w.put(scaled<std::uint32_t>(e.illuminance_lux, 1.0, "illuminance"));
  w.put(scaled<std::uint32_t>(e.visibility_m, 1.0, "visibility"));
  w.put(scaled<std::uint16_t>(e.pressure_hpa, 10.0, "pressure"));
  w.put(scaled<std::uint16_t>(e.humidity_pct, 100.0, "humidity"));
  w.put(scaled<std::uint16_t>(e.cloudiness_pct, 100.0, "cloudiness"));
}

void encode_body(ByteWriter& w, const HazardEvent& h) {
  w.put(static_cast<std::uint8_t>(h.kind));
  w.put(h.source.value);
}

RecordBody decode_body(RecordKind kind, ByteReader& r, TimeMs time, const GeoPosition& pos) {
  switch (kind) {
    case RecordKind::Cam: {
      CamExtract c;
      c.originator.value = r.get<std::uint32_t>();
      c.classification = classification_from_code(r.get<std::uint8_t>());
      c.speed = r.get<std::uint16_t>() / 100.0;
      c.course = course_from_code(r.get<std::uint16_t>());
      c.generation_time = time;
      c.position = pos;
      return c;
    }
    case RecordKind::CpmDetection: {
      CpmDetectionRecord c;
      c.originator.value = r.get<std::uint32_t>();
      c.detection.object_id = r.get<std::uint32_t>();
      c.detection.classification = classification_from_code(r.get<std::uint8_t>());
      c.detection.speed = r.get<std::uint16_t>() / 100.0;
      c.detection.course = course_from_code(r.get<std::uint16_t>());
      c.detection.position = pos;
      c.generation_time = time;
      return c;
    }
    case RecordKind::Spat: {
      SpatExtract s;
      s.intersection_id = r.get<std::uint32_t>();
      s.signal_group = r.get<std::uint16_t>();
      s.phase = checked_enum<SignalPhase>(r.get<std::uint8_t>(), 4, "signal phase");
      s.change_time = time;
      return s;
    }
    case RecordKind::VutSensor: {
      VutSensorExtract s;
      s.timestamp = time;
      s.gnss = pos;
      s.groups = r.get<std::uint8_t>();
      if (s.groups & ~kAllVutGroups) throw Error(ErrorCode::BadPayload, "unknown signal group bits");
      const auto flags = r.get<std::uint8_t>();
      if (flags & ~0x1fu) throw Error(ErrorCode::BadPayload, "unknown brake/body flag bits");
      s.brake_actuated = flags & 1u;
      s.abs_active = flags & 2u;
      s.panic_braking = flags & 4u;
      s.clutch_pressed = flags & 8u;
      s.wiper_active = flags & 16u;
      s.gear = r.get<std::int8_t>();
      const auto doors = r.get<std::uint8_t>();
      for (std::size_t i = 0; i < s.doors.size(); ++i) {
        s.doors[i] = checked_enum<DoorState>(static_cast<std::uint8_t>((doors >> (2 * i)) & 3u), 2, "door");
      }
      s.exterior_lights = r.get<std::uint8_t>();
      if (s.exterior_lights & ~lights::kAll) throw Error(ErrorCode::BadPayload, "unknown light bits");
      s.gnss_heading = course_from_code(r.get<std::uint16_t>());
      s.speed = r.get<std::uint16_t>() / 100.0;
      s.accel_longitudinal = r.get<std::int16_t>() / 100.0;
      s.accel_lateral = r.get<std::int16_t>() / 100.0;
      s.rain_intensity = r.get<std::uint8_t>();
      s.yaw_rate = r.get<std::int16_t>() / 100.0;
      s.steering_wheel_angle = r.get<std::int16_t>() / 10.0;
      s.steering_wheel_velocity = r.get<std::int16_t>() / 10.0;
      if (s.rain_intensity > 7 || s.gear < -1) throw Error(ErrorCode::BadPayload, "vehicle sensor value out of range");
      return s;
    }
    case RecordKind::DriverState: {
      DriverStateSample d;
      d.timestamp = time;
      d.valence = r.get<std::uint8_t>();
      d.arousal = r.get<std::uint8_t>();
      if (const auto hr = r.get<std::uint16_t>(); hr != 0) d.heart_rate_bpm = hr / 10.0;
      const auto self = r.get<std::uint8_t>();
      if (d.valence < 1 || d.valence > 5 || d.arousal < 1 || d.arousal > 5 || self > 1) {
        throw Error(ErrorCode::BadPayload, "driver state value out of range");
      }
      d.self_reported = self == 1;
      return d;
    }
    case RecordKind::Environment: {
      EnvironmentSample e;
      e.timestamp = time;
      e.area_center = pos;
      e.validity_duration_s = r.get<std::uint32_t>();
      e.area_radius_m = r.get<std::uint32_t>() / 10.0;
      e.temperature_c = r.get<std::int16_t>() / 10.0;
      e.precipitation_mm_h = r.get<std::uint16_t>() / 10.0;
      e.wind_speed_ms = r.get<std::uint16_t>() / 10.0;
      e.wind_direction = course_from_code(r.get<std::uint16_t>());
      e.illuminance_lux = r.get<std::uint32_t>();
      e.visibility_m = r.get<std::uint32_t>();
      e.pressure_hpa = r.get<std::uint16_t>() / 10.0;
      e.humidity_pct = r.get<std::uint16_t>() / 100.0;
      e.cloudiness_pct = r.get<std::uint16_t>() / 100.0;
      if (e.humidity_pct > 100.0 || e.cloudiness_pct > 100.0) {
        throw Error(ErrorCode::BadPayload, "humidity or cloudiness above 100 %");
      }
      return e;
    }
    case RecordKind::Hazard: {
      HazardEvent h;
      h.timestamp = time;
      h.position = pos;
      const auto k = r.get<std::uint8_t>();
      if (k < 1 || k > 3) throw Error(ErrorCode::BadPayload, "hazard kind out of range");
      h.kind = static_cast<HazardKind>(k);
      h.source.value = r.get<std::uint32_t>();
      return h;
    }
  }
  throw Error(ErrorCode::UnknownKind, "record kind");
}

}  // namespace

wire::RecordKind kind_of(const RecordBody& body) {
  return static_cast<RecordKind>(body.index() + 1);
}

RawRecord make_record(StationId reporter, const CamExtract& cam) {
  return {reporter, cam.generation_time, cam.position, cam};
}

RawRecord make_record(StationId reporter, const CpmDetectionRecord& det) {
  return {reporter, det.generation_time, det.detection.position, det};
}

RawRecord make_record(StationId reporter, const SpatExtract& spat, const GeoPosition& where) {
  return {reporter, spat.change_time, where, spat};
}

RawRecord make_record(StationId reporter, const VutSensorExtract& s) {
  return {reporter, s.timestamp, s.gnss, s};
}

RawRecord make_record(StationId reporter, const DriverStateSample& d, const GeoPosition& where) {
  return {reporter, d.timestamp, where, d};
}

RawRecord make_record(StationId reporter, const EnvironmentSample& e) {
  return {reporter, e.timestamp, e.area_center, e};
}

RawRecord make_record(StationId reporter, const HazardEvent& h) {
  return {reporter, h.timestamp, h.position, h};
}

wire::AbsoluteRecord encode_record(const RawRecord& r) {
  if (!is_valid(r.position)) throw Error(ErrorCode::InvalidArgument, "record position out of range");
  if (r.time <= 0) throw Error(ErrorCode::InvalidArgument, "record time must be positive");
  wire::AbsoluteRecord a;
  a.kind = kind_of(r.body);
  a.time_ms = r.time;
  a.lat_e7 = to_e7(r.position.lat);
  a.lon_e7 = to_e7(r.position.lon);
  ByteWriter w(a.payload);
  w.put(refine_byte(r.position));
  std::visit([&w](const auto& body) { encode_body(w, body); }, r.body);
  return a;
}

RawRecord decode_record(const wire::AbsoluteRecord& a, StationId reporter) {
  if (a.payload.size() != wire::payload_size(a.kind)) {
    throw Error(ErrorCode::BadPayload, "payload length does not match the record kind");
  }
  ByteReader r(a.payload);
  const auto refine = r.get<std::uint8_t>();
  if (refine > 99) throw Error(ErrorCode::BadPayload, "position remainder out of range");
  const auto grid = wire::quantize(a);
  const GeoPosition pos{from_e7(grid.lat_e7 + refine / 10), from_e7(grid.lon_e7 + refine % 10)};
  if (!is_valid(pos)) throw Error(ErrorCode::BadPayload, "position out of range");
  RawRecord out;
  out.reporter = reporter;
  out.time = grid.time_ms;
  out.position = pos;
  out.body = decode_body(a.kind, r, grid.time_ms, pos);
  return out;
}

RawRecord quantize(const RawRecord& r) { return decode_record(encode_record(r), r.reporter); }

std::vector<RawRecord> decode_records(const wire::BatchEnvelope& e) {
  std::vector<RawRecord> out;
  out.reserve(e.records.size());
  for (const auto& a : wire::reconstruct(e)) out.push_back(decode_record(a, e.meta.station));
  return out;
}

std::vector<wire::BatchEnvelope> pack_records(std::vector<RawRecord> records, StationId station) {
  std::stable_sort(records.begin(), records.end(),
                   [](const RawRecord& a, const RawRecord& b) { return a.time < b.time; });
  std::vector<wire::AbsoluteRecord> abs;
  abs.reserve(records.size());
  for (const auto& r : records) abs.push_back(encode_record(r));
  return wire::plan_batches(abs, station);
}

}  // namespace ksf
