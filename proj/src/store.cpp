// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numbers>
#include <tuple>

#include "byte_io.hpp"
#include "ksfusion/error.hpp"
#include "ksfusion/schema.hpp"
#include "sqlite_db.hpp"

namespace ksf {

using detail::exec;
using detail::Statement;

namespace {

struct RawTable {
  wire::RecordKind kind;
  const char* name;
  const char* body_columns;  // after reporter, receive_time, time_ms, lat, lon
  int body_count;
};

constexpr const char* kVutColumns =
    "groups, brake_actuated, abs_active, panic_braking, clutch_pressed, gear, door_fl, door_fr, door_rl, door_rr, "
    "exterior_lights, gnss_heading, speed, accel_longitudinal, accel_lateral, rain_intensity, wiper_active, "
    "yaw_rate, steering_wheel_angle, steering_wheel_velocity";
constexpr int kVutColumnCount = 20;

constexpr const char* kEnvColumns =
    "validity_s, area_radius_m, temperature_c, precipitation_mm_h, wind_speed_ms, wind_direction, "
    "illuminance_lux, visibility_m, pressure_hpa, humidity_pct, cloudiness_pct";
constexpr int kEnvColumnCount = 11;

constexpr const char* kDriverColumns = "valence, arousal, heart_rate, self_reported";
constexpr int kDriverColumnCount = 4;

const std::array<RawTable, 7> kRawTables{{
    {wire::RecordKind::Cam, "raw_cam", "originator, speed, course, classification", 4},
    {wire::RecordKind::CpmDetection, "raw_cpm_detection", "originator, object_id, classification, speed, course", 5},
    {wire::RecordKind::Spat, "raw_spat", "intersection_id, signal_group, phase", 3},
    {wire::RecordKind::VutSensor, "raw_vut_sensor", kVutColumns, kVutColumnCount},
    {wire::RecordKind::DriverState, "raw_driver", kDriverColumns, kDriverColumnCount},
    {wire::RecordKind::Environment, "raw_environment", kEnvColumns, kEnvColumnCount},
    {wire::RecordKind::Hazard, "raw_hazard", "kind, source", 2},
}};

const RawTable& table_for(wire::RecordKind k) {
  for (const auto& t : kRawTables) {
    if (t.kind == k) return t;
  }
  throw Error(ErrorCode::UnknownKind, "no raw table for record kind");
}

std::string placeholders(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += i ? ", ?" : "?";
  return s;
}

int bind_vut(Statement& st, int i, const VutSensorExtract& s) {
  detail::Binder b(st, i);
  b << static_cast<int>(s.groups) << s.brake_actuated << s.abs_active << s.panic_braking << s.clutch_pressed
    << static_cast<int>(s.gear);
  for (auto d : s.doors) b << static_cast<int>(d);
  b << static_cast<int>(s.exterior_lights) << s.gnss_heading.value() << s.speed << s.accel_longitudinal
    << s.accel_lateral << static_cast<int>(s.rain_intensity) << s.wiper_active << s.yaw_rate << s.steering_wheel_angle
    << s.steering_wheel_velocity;
  return b.next();
}

VutSensorExtract read_vut(const Statement& st, int c) {
  VutSensorExtract s;
  s.groups = static_cast<std::uint8_t>(st.int64(c++));
  s.brake_actuated = st.int64(c++) != 0;
  s.abs_active = st.int64(c++) != 0;
  s.panic_braking = st.int64(c++) != 0;
  s.clutch_pressed = st.int64(c++) != 0;
  s.gear = static_cast<std::int8_t>(st.int64(c++));
  for (auto& d : s.doors) d = static_cast<DoorState>(st.int64(c++));
  s.exterior_lights = static_cast<std::uint8_t>(st.int64(c++));
  s.gnss_heading = CourseDeg(st.real(c++));
  s.speed = st.real(c++);
  s.accel_longitudinal = st.real(c++);
  s.accel_lateral = st.real(c++);
  s.rain_intensity = static_cast<std::uint8_t>(st.int64(c++));
  s.wiper_active = st.int64(c++) != 0;
  s.yaw_rate = st.real(c++);
  s.steering_wheel_angle = st.real(c++);
  s.steering_wheel_velocity = st.real(c++);
  return s;
}

int bind_env(Statement& st, int i, const EnvironmentSample& e) {
  detail::Binder b(st, i);
  b << static_cast<std::int64_t>(e.validity_duration_s) << e.area_radius_m << e.temperature_c << e.precipitation_mm_h
    << e.wind_speed_ms << e.wind_direction.value() << e.illuminance_lux << e.visibility_m << e.pressure_hpa
    << e.humidity_pct << e.cloudiness_pct;
  return b.next();
}

EnvironmentSample read_env(const Statement& st, int c) {
  EnvironmentSample e;
  e.validity_duration_s = static_cast<std::uint32_t>(st.int64(c++));
  e.area_radius_m = st.real(c++);
  e.temperature_c = st.real(c++);
  e.precipitation_mm_h = st.real(c++);
  e.wind_speed_ms = st.real(c++);
  e.wind_direction = CourseDeg(st.real(c++));
  e.illuminance_lux = st.real(c++);
  e.visibility_m = st.real(c++);
  e.pressure_hpa = st.real(c++);
  e.humidity_pct = st.real(c++);
  e.cloudiness_pct = st.real(c++);
  return e;
}

int bind_driver(Statement& st, int i, const DriverStateSample& d) {
  detail::Binder b(st, i);
  b << static_cast<int>(d.valence) << static_cast<int>(d.arousal) << d.heart_rate_bpm << d.self_reported;
  return b.next();
}

DriverStateSample read_driver(const Statement& st, int c) {
  DriverStateSample d;
  d.valence = static_cast<std::uint8_t>(st.int64(c++));
  d.arousal = static_cast<std::uint8_t>(st.int64(c++));
  if (!st.is_null(c)) d.heart_rate_bpm = st.real(c);
  ++c;
  d.self_reported = st.int64(c) != 0;
  return d;
}

std::vector<std::uint8_t> encode_polyline(const std::vector<GeoPosition>& pts) {
  std::vector<std::uint8_t> out;
  detail::ByteWriter w(out);
  for (const auto& p : pts) {
    w.put(std::bit_cast<std::uint64_t>(p.lat));
    w.put(std::bit_cast<std::uint64_t>(p.lon));
  }
  return out;
}

std::vector<GeoPosition> decode_polyline(std::span<const std::uint8_t> blob) {
  std::vector<GeoPosition> pts;
  detail::ByteReader r(blob);
  while (r.remaining() > 0) {
    GeoPosition p;
    p.lat = std::bit_cast<double>(r.get<std::uint64_t>());
    p.lon = std::bit_cast<double>(r.get<std::uint64_t>());
    pts.push_back(p);
  }
  return pts;
}

void require_consistent(const RawRecord& r) {
  struct Visitor {
    const RawRecord& r;
    std::pair<TimeMs, std::optional<GeoPosition>> operator()(const CamExtract& c) const {
      return {c.generation_time, c.position};
    }
    std::pair<TimeMs, std::optional<GeoPosition>> operator()(const CpmDetectionRecord& c) const {
      return {c.generation_time, c.detection.position};
    }
    std::pair<TimeMs, std::optional<GeoPosition>> operator()(const SpatExtract& s) const {
      return {s.change_time, std::nullopt};
    }
    std::pair<TimeMs, std::optional<GeoPosition>> operator()(const VutSensorExtract& s) const {
      return {s.timestamp, s.gnss};
    }
    std::pair<TimeMs, std::optional<GeoPosition>> operator()(const DriverStateSample& d) const {
      return {d.timestamp, std::nullopt};
    }
    std::pair<TimeMs, std::optional<GeoPosition>> operator()(const EnvironmentSample& e) const {
      return {e.timestamp, e.area_center};
    }
    std::pair<TimeMs, std::optional<GeoPosition>> operator()(const HazardEvent& h) const {
      return {h.timestamp, h.position};
    }
  };
  const auto [t, pos] = std::visit(Visitor{r}, r.body);
  if (t != r.time || (pos && *pos != r.position)) {
    throw Error(ErrorCode::InvalidArgument, "record time/position differ from its body");
  }
}

}  // namespace

KindSet KindSet::all() {
  KindSet s;
  for (auto k : wire::kAllRecordKinds) s.add(k);
  return s;
}

struct Store::Impl {
  sqlite3* db = nullptr;
  mutable std::recursive_mutex mu;
  mutable int snapshot_depth = 0;
  int fault_after = -1;
  bool in_write = false;

  ~Impl() {
    if (db) sqlite3_close_v2(db);
  }

  // Every statement inside a write scope goes through here so the fault hook
  // can fail any of them.
  bool step(Statement& st) {
    if (in_write && fault_after >= 0) {
      if (fault_after == 0) {
        fault_after = -1;
        throw Error(ErrorCode::StorageFailure, "injected fault");
      }
      --fault_after;
    }
    return st.step();
  }

  template <typename Fn>
  auto write(Fn&& fn) {
    std::lock_guard lock(mu);
    exec(db, "SAVEPOINT ksf_write");
    in_write = true;
    try {
      auto result = fn();
      in_write = false;
      exec(db, "RELEASE ksf_write");
      return result;
    } catch (...) {
      in_write = false;
      try {
        exec(db, "ROLLBACK TO ksf_write");
        exec(db, "RELEASE ksf_write");
      } catch (...) {
      }
      throw;
    }
  }
};

Store::Store(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  const std::string p = path.string();
  const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX;
  if (sqlite3_open_v2(p.c_str(), &impl_->db, flags, nullptr) != SQLITE_OK) {
    detail::throw_sqlite(impl_->db, "cannot open " + p);
  }
  sqlite3_busy_timeout(impl_->db, 5000);
  exec(impl_->db, "PRAGMA foreign_keys = ON");
  if (p != ":memory:" && !p.empty()) exec(impl_->db, "PRAGMA journal_mode = WAL");
  exec(impl_->db, std::string(schema_ddl()));
}

Store::~Store() = default;

std::size_t Store::insert_raw(std::span<const RawRecord> records, TimeMs received_at) {
  for (const auto& r : records) require_consistent(r);
  return impl_->write([&] {
    std::size_t inserted = 0;
    std::map<wire::RecordKind, std::unique_ptr<Statement>> stmts;
    for (const auto& r : records) {
      const auto kind = kind_of(r.body);
      auto& st = stmts[kind];
      if (!st) {
        const auto& t = table_for(kind);
        st = std::make_unique<Statement>(
            impl_->db, std::string("INSERT OR IGNORE INTO ") + t.name + " (reporter, receive_time, time_ms, lat, lon, " +
                           t.body_columns + ") VALUES (" + placeholders(5 + t.body_count) + ")");
      }
      st->reset();
      detail::Binder(*st, 1) << r.reporter.value << received_at << r.time << r.position.lat << r.position.lon;
      detail::Binder bind(*st, 6);
      std::visit(
          [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, CamExtract>) {
              bind << b.originator.value << b.speed << b.course.value() << to_code(b.classification);
            } else if constexpr (std::is_same_v<T, CpmDetectionRecord>) {
              bind << b.originator.value << b.detection.object_id << to_code(b.detection.classification)
                   << b.detection.speed << b.detection.course.value();
            } else if constexpr (std::is_same_v<T, SpatExtract>) {
              bind << b.intersection_id << static_cast<unsigned>(b.signal_group) << static_cast<unsigned>(b.phase);
            } else if constexpr (std::is_same_v<T, VutSensorExtract>) {
              bind_vut(*st, 6, b);
            } else if constexpr (std::is_same_v<T, DriverStateSample>) {
              bind_driver(*st, 6, b);
            } else if constexpr (std::is_same_v<T, EnvironmentSample>) {
              bind_env(*st, 6, b);
            } else {
              bind << static_cast<unsigned>(b.kind) << b.source.value;
            }
          },
          r.body);
      impl_->step(*st);
      inserted += static_cast<std::size_t>(sqlite3_changes(impl_->db));
    }
    return inserted;
  });
}

IngestReport Store::ingest_frame(std::span<const std::uint8_t> frame, TimeMs received_at) {
  const auto envelope = wire::decode_batch(frame);
  const auto records = decode_records(envelope);
  IngestReport report;
  report.batches = 1;
  report.records = records.size();
  report.inserted = insert_raw(records, received_at);
  return report;
}

std::vector<RawRecord> Store::query_raw(const RawQuery& q) const {
  std::lock_guard lock(impl_->mu);
  struct Row {
    RawRecord rec;
    wire::RecordKind kind;
    std::int64_t rowid;
  };
  std::vector<Row> rows;
  if (q.t_min > q.t_max) return {};

  double lat_lo = -90.0, lat_hi = 90.0, lon_lo = -180.0, lon_hi = 180.0;
  if (q.center) {
    const double dlat = q.radius_m / kEarthRadiusM * 180.0 / std::numbers::pi * 1.01 + 1e-9;
    lat_lo = q.center->lat - dlat;
    lat_hi = q.center->lat + dlat;
    const double coslat = std::cos(std::min(89.0, std::max(std::fabs(lat_lo), std::fabs(lat_hi))) * std::numbers::pi / 180.0);
    const double dlon = dlat / coslat;
    if (lat_hi < 89.0 && lat_lo > -89.0 && dlon < 180.0 &&
        q.center->lon - dlon > -180.0 && q.center->lon + dlon < 180.0) {
      lon_lo = q.center->lon - dlon;
      lon_hi = q.center->lon + dlon;
    }
  }

  for (const auto& t : kRawTables) {
    if (!q.kinds.contains(t.kind)) continue;
    std::string sql = std::string("SELECT rowid, reporter, time_ms, lat, lon, ") + t.body_columns + " FROM " + t.name +
                      " WHERE time_ms BETWEEN ? AND ? AND lat BETWEEN ? AND ? AND lon BETWEEN ? AND ?";
    if (q.reporter) sql += " AND reporter = ?";
    Statement st(impl_->db, sql);
    detail::Binder(st, 1) << q.t_min << q.t_max << lat_lo << lat_hi << lon_lo << lon_hi;
    if (q.reporter) st.bind(7, q.reporter->value);
    while (st.step()) {
      RawRecord r;
      r.reporter = StationId{static_cast<std::uint32_t>(st.int64(1))};
      r.time = st.int64(2);
      r.position = {st.real(3), st.real(4)};
      if (q.center && haversine_distance(*q.center, r.position) > q.radius_m) continue;
      constexpr int c = 5;
      switch (t.kind) {
        case wire::RecordKind::Cam: {
          CamExtract b;
          b.originator = StationId{static_cast<std::uint32_t>(st.int64(c))};
          b.generation_time = r.time;
          b.position = r.position;
          b.speed = st.real(c + 1);
          b.course = CourseDeg(st.real(c + 2));
          b.classification = classification_from_code(static_cast<unsigned>(st.int64(c + 3)));
          r.body = b;
          break;
        }
        case wire::RecordKind::CpmDetection: {
          CpmDetectionRecord b;
          b.originator = StationId{static_cast<std::uint32_t>(st.int64(c))};
          b.generation_time = r.time;
          b.detection.object_id = static_cast<std::uint32_t>(st.int64(c + 1));
          b.detection.classification = classification_from_code(static_cast<unsigned>(st.int64(c + 2)));
          b.detection.position = r.position;
          b.detection.speed = st.real(c + 3);
          b.detection.course = CourseDeg(st.real(c + 4));
          r.body = b;
          break;
        }
        case wire::RecordKind::Spat: {
          SpatExtract b;
          b.intersection_id = static_cast<std::uint32_t>(st.int64(c));
          b.signal_group = static_cast<std::uint16_t>(st.int64(c + 1));
          b.phase = static_cast<SignalPhase>(st.int64(c + 2));
          b.change_time = r.time;
          r.body = b;
          break;
        }
        case wire::RecordKind::VutSensor: {
          auto b = read_vut(st, c);
          b.timestamp = r.time;
          b.gnss = r.position;
          r.body = b;
          break;
        }
        case wire::RecordKind::DriverState: {
          auto b = read_driver(st, c);
          b.timestamp = r.time;
          r.body = b;
          break;
        }
        case wire::RecordKind::Environment: {
          auto b = read_env(st, c);
          b.timestamp = r.time;
          b.area_center = r.position;
          r.body = b;
          break;
        }
        case wire::RecordKind::Hazard: {
          HazardEvent b;
          b.kind = static_cast<HazardKind>(st.int64(c));
          b.source = StationId{static_cast<std::uint32_t>(st.int64(c + 1))};
          b.timestamp = r.time;
          b.position = r.position;
          r.body = b;
          break;
        }
      }
      rows.push_back({std::move(r), t.kind, st.int64(0)});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.rec.time, a.kind, a.rowid) < std::tie(b.rec.time, b.kind, b.rowid);
  });
  std::vector<RawRecord> out;
  out.reserve(rows.size());
  for (auto& r : rows) out.push_back(std::move(r.rec));
  return out;
}

void Store::put_topology(const MapTopology& map) {
  validate(map);
  impl_->write([&] {
    Statement del(impl_->db, "DELETE FROM map_lane WHERE intersection_id = ?");
    del.bind(1, map.intersection_id);
    impl_->step(del);
    Statement ins(impl_->db,
                  "INSERT INTO map_lane (intersection_id, ordinal, lane_id, signal_group, ingress, polyline) "
                  "VALUES (?, ?, ?, ?, ?, ?)");
    for (std::size_t i = 0; i < map.lanes.size(); ++i) {
      const auto& l = map.lanes[i];
      ins.reset();
      detail::Binder(ins, 1) << map.intersection_id << static_cast<std::int64_t>(i) << l.lane_id
                             << static_cast<unsigned>(l.signal_group) << l.ingress << encode_polyline(l.polyline);
      impl_->step(ins);
    }
    return 0;
  });
}

std::vector<MapTopology> Store::topologies() const {
  std::lock_guard lock(impl_->mu);
  std::vector<MapTopology> out;
  Statement st(impl_->db,
               "SELECT intersection_id, lane_id, signal_group, ingress, polyline FROM map_lane "
               "ORDER BY intersection_id, ordinal");
  while (st.step()) {
    const auto id = static_cast<std::uint32_t>(st.int64(0));
    if (out.empty() || out.back().intersection_id != id) out.push_back({id, {}});
    MapLane l;
    l.lane_id = static_cast<std::uint32_t>(st.int64(1));
    l.signal_group = static_cast<std::uint16_t>(st.int64(2));
    l.ingress = st.int64(3) != 0;
    l.polyline = decode_polyline(st.blob(4));
    out.back().lanes.push_back(std::move(l));
  }
  return out;
}

std::uint64_t Store::persist_situation(SituationRecord& s) {
  const auto id = impl_->write([&] {
    sqlite3* db = impl_->db;
    Statement sit(db,
                  "INSERT INTO situation (vut_station, timestamp_ms, center_lat, center_lon, radius_m, intersection_id) "
                  "VALUES (?, ?, ?, ?, ?, ?)");
    detail::Binder(sit, 1) << s.vut.value << s.timestamp << s.center.lat << s.center.lon << s.radius_m;
    if (s.topology) {
      sit.bind(6, s.topology->intersection_id);
    } else {
      sit.bind_null(6);
    }
    impl_->step(sit);
    const auto sid = static_cast<std::int64_t>(sqlite3_last_insert_rowid(db));

    Statement obj(db,
                  "INSERT INTO fused_object (situation_id, fused_id, classification, lat, lon, speed, course, lane_id) "
                  "VALUES (?, ?, ?, ?, ?, ?, ?, ?)");
    Statement prov(db,
                   "INSERT INTO provenance (situation_id, fused_id, ordinal, source, reporter, source_object_id) "
                   "VALUES (?, ?, ?, ?, ?, ?)");
    for (const auto& o : s.objects) {
      obj.reset();
      detail::Binder(obj, 1) << sid << o.fused_id << to_code(o.classification) << o.position.lat << o.position.lon
                             << o.speed << o.course.value() << o.lane_id;
      impl_->step(obj);
      for (std::size_t i = 0; i < o.provenance.size(); ++i) {
        const auto& p = o.provenance[i];
        prov.reset();
        detail::Binder(prov, 1) << sid << o.fused_id << static_cast<std::int64_t>(i) << static_cast<unsigned>(p.source)
                                << p.reporter.value << p.object_id;
        impl_->step(prov);
      }
    }

    if (s.topology) {
      Statement lane(db,
                     "INSERT INTO topology_lane (situation_id, ordinal, lane_id, signal_group, ingress, phase, polyline) "
                     "VALUES (?, ?, ?, ?, ?, ?, ?)");
      for (std::size_t i = 0; i < s.topology->lanes.size(); ++i) {
        const auto& ls = s.topology->lanes[i];
        lane.reset();
        detail::Binder(lane, 1) << sid << static_cast<std::int64_t>(i) << ls.lane.lane_id
                                << static_cast<unsigned>(ls.lane.signal_group) << ls.lane.ingress
                                << static_cast<unsigned>(ls.phase) << encode_polyline(ls.lane.polyline);
        impl_->step(lane);
      }
    }

    if (s.vut_sensor) {
      Statement st(db, std::string("INSERT INTO vut_sensor (situation_id, timestamp_ms, lat, lon, ") + kVutColumns +
                           ") VALUES (" + placeholders(4 + kVutColumnCount) + ")");
      detail::Binder(st, 1) << sid << s.vut_sensor->timestamp << s.vut_sensor->gnss.lat << s.vut_sensor->gnss.lon;
      bind_vut(st, 5, *s.vut_sensor);
      impl_->step(st);
    }
    if (s.driver) {
      Statement st(db, std::string("INSERT INTO driver_state (situation_id, timestamp_ms, ") + kDriverColumns +
                           ") VALUES (" + placeholders(2 + kDriverColumnCount) + ")");
      detail::Binder(st, 1) << sid << s.driver->timestamp;
      bind_driver(st, 3, *s.driver);
      impl_->step(st);
    }
    Statement hz(db,
                 "INSERT INTO hazard (situation_id, ordinal, kind, timestamp_ms, lat, lon, source) "
                 "VALUES (?, ?, ?, ?, ?, ?, ?)");
    for (std::size_t i = 0; i < s.hazards.size(); ++i) {
      const auto& h = s.hazards[i];
      hz.reset();
      detail::Binder(hz, 1) << sid << static_cast<std::int64_t>(i) << static_cast<unsigned>(h.kind) << h.timestamp
                            << h.position.lat << h.position.lon << h.source.value;
      impl_->step(hz);
    }
    if (s.environment) {
      Statement st(db, std::string("INSERT INTO environment (situation_id, timestamp_ms, lat, lon, ") + kEnvColumns +
                           ") VALUES (" + placeholders(4 + kEnvColumnCount) + ")");
      detail::Binder(st, 1) << sid << s.environment->timestamp << s.environment->area_center.lat
                            << s.environment->area_center.lon;
      bind_env(st, 5, *s.environment);
      impl_->step(st);
    }
    return static_cast<std::uint64_t>(sid);
  });
  s.situation_id = id;
  return id;
}

SituationRecord Store::load_situation(std::uint64_t id) const {
  std::lock_guard lock(impl_->mu);
  Snapshot snap(*this);
  sqlite3* db = impl_->db;
  const auto sid = static_cast<std::int64_t>(id);
  SituationRecord s;

  Statement sit(db,
                "SELECT vut_station, timestamp_ms, center_lat, center_lon, radius_m, intersection_id "
                "FROM situation WHERE situation_id = ?");
  sit.bind(1, sid);
  if (!sit.step()) throw Error(ErrorCode::NotFound, "no situation with id " + std::to_string(id));
  s.situation_id = id;
  s.vut = StationId{static_cast<std::uint32_t>(sit.int64(0))};
  s.timestamp = sit.int64(1);
  s.center = {sit.real(2), sit.real(3)};
  s.radius_m = sit.real(4);
  if (!sit.is_null(5)) s.topology = TopologyWithPhases{static_cast<std::uint32_t>(sit.int64(5)), {}};

  Statement obj(db,
                "SELECT fused_id, classification, lat, lon, speed, course, lane_id FROM fused_object "
                "WHERE situation_id = ? ORDER BY rowid");
  obj.bind(1, sid);
  while (obj.step()) {
    FusedObject o;
    o.fused_id = static_cast<std::uint32_t>(obj.int64(0));
    o.classification = classification_from_code(static_cast<unsigned>(obj.int64(1)));
    o.position = {obj.real(2), obj.real(3)};
    o.speed = obj.real(4);
    o.course = CourseDeg(obj.real(5));
    if (!obj.is_null(6)) o.lane_id = static_cast<std::uint32_t>(obj.int64(6));
    s.objects.push_back(std::move(o));
  }
  Statement prov(db,
                 "SELECT fused_id, source, reporter, source_object_id FROM provenance WHERE situation_id = ? "
                 "ORDER BY fused_id, ordinal");
  prov.bind(1, sid);
  while (prov.step()) {
    const auto fid = static_cast<std::uint32_t>(prov.int64(0));
    auto it = std::find_if(s.objects.begin(), s.objects.end(), [&](const FusedObject& o) { return o.fused_id == fid; });
    if (it == s.objects.end()) continue;
    it->provenance.push_back({static_cast<ObservationSource>(prov.int64(1)),
                              StationId{static_cast<std::uint32_t>(prov.int64(2))},
                              static_cast<std::uint32_t>(prov.int64(3))});
  }

  if (s.topology) {
    Statement lane(db,
                   "SELECT lane_id, signal_group, ingress, phase, polyline FROM topology_lane WHERE situation_id = ? "
                   "ORDER BY ordinal");
    lane.bind(1, sid);
    while (lane.step()) {
      LaneState ls;
      ls.lane.lane_id = static_cast<std::uint32_t>(lane.int64(0));
      ls.lane.signal_group = static_cast<std::uint16_t>(lane.int64(1));
      ls.lane.ingress = lane.int64(2) != 0;
      ls.phase = static_cast<SignalPhase>(lane.int64(3));
      ls.lane.polyline = decode_polyline(lane.blob(4));
      s.topology->lanes.push_back(std::move(ls));
    }
  }

  {
    Statement st(db, std::string("SELECT timestamp_ms, lat, lon, ") + kVutColumns +
                         " FROM vut_sensor WHERE situation_id = ?");
    st.bind(1, sid);
    if (st.step()) {
      auto v = read_vut(st, 3);
      v.timestamp = st.int64(0);
      v.gnss = {st.real(1), st.real(2)};
      s.vut_sensor = v;
    }
  }
  {
    Statement st(db, std::string("SELECT timestamp_ms, ") + kDriverColumns + " FROM driver_state WHERE situation_id = ?");
    st.bind(1, sid);
    if (st.step()) {
      auto d = read_driver(st, 1);
      d.timestamp = st.int64(0);
      s.driver = d;
    }
  }
  {
    Statement st(db,
                 "SELECT kind, timestamp_ms, lat, lon, source FROM hazard WHERE situation_id = ? ORDER BY ordinal");
    st.bind(1, sid);
    while (st.step()) {
      HazardEvent h;
      h.kind = static_cast<HazardKind>(st.int64(0));
      h.timestamp = st.int64(1);
      h.position = {st.real(2), st.real(3)};
      h.source = StationId{static_cast<std::uint32_t>(st.int64(4))};
      s.hazards.push_back(h);
    }
  }
  {
    Statement st(db, std::string("SELECT timestamp_ms, lat, lon, ") + kEnvColumns +
                         " FROM environment WHERE situation_id = ?");
    st.bind(1, sid);
    if (st.step()) {
      auto e = read_env(st, 3);
      e.timestamp = st.int64(0);
      e.area_center = {st.real(1), st.real(2)};
      s.environment = e;
    }
  }
  return s;
}

std::vector<SituationSummary> Store::list_situations(const SituationFilter& f) const {
  std::lock_guard lock(impl_->mu);
  std::string sql =
      "SELECT s.situation_id, s.vut_station, s.timestamp_ms, s.center_lat, s.center_lon, s.radius_m, "
      "(SELECT COUNT(*) FROM fused_object o WHERE o.situation_id = s.situation_id) "
      "FROM situation s WHERE 1";
  if (f.vut) sql += " AND s.vut_station = ?1";
  if (f.t_min) sql += " AND s.timestamp_ms >= ?2";
  if (f.t_max) sql += " AND s.timestamp_ms <= ?3";
  sql += " ORDER BY s.timestamp_ms, s.situation_id";
  Statement st(impl_->db, sql);
  if (f.vut) st.bind(1, f.vut->value);
  if (f.t_min) st.bind(2, *f.t_min);
  if (f.t_max) st.bind(3, *f.t_max);
  std::vector<SituationSummary> out;
  while (st.step()) {
    SituationSummary s;
    s.situation_id = static_cast<std::uint64_t>(st.int64(0));
    s.vut = StationId{static_cast<std::uint32_t>(st.int64(1))};
    s.timestamp = st.int64(2);
    s.center = {st.real(3), st.real(4)};
    s.radius_m = st.real(5);
    s.object_count = static_cast<std::size_t>(st.int64(6));
    out.push_back(s);
  }
  return out;
}

StoreStats Store::stats() const {
  std::lock_guard lock(impl_->mu);
  StoreStats s;
  auto count = [&](const std::string& sql) {
    Statement st(impl_->db, sql);
    st.step();
    return static_cast<std::uint64_t>(st.int64(0));
  };
  for (const auto& t : kRawTables) {
    const auto n = count(std::string("SELECT COUNT(*) FROM ") + t.name);
    s.raw_rows[t.name] = n;
    s.raw_total += n;
  }
  s.situations = count("SELECT COUNT(*) FROM situation");
  s.topologies = count("SELECT COUNT(DISTINCT intersection_id) FROM map_lane");
  return s;
}

Store::Snapshot::Snapshot(const Store& s) : store_(s) {
  store_.impl_->mu.lock();
  if (store_.impl_->snapshot_depth++ == 0) {
    try {
      exec(store_.impl_->db, "SAVEPOINT ksf_snapshot");
    } catch (...) {
      --store_.impl_->snapshot_depth;
      store_.impl_->mu.unlock();
      throw;
    }
  }
}

Store::Snapshot::~Snapshot() {
  if (--store_.impl_->snapshot_depth == 0) {
    try {
      exec(store_.impl_->db, "RELEASE ksf_snapshot");
    } catch (...) {
    }
  }
  store_.impl_->mu.unlock();
}

void Store::inject_fault_after(int statements) {
  std::lock_guard lock(impl_->mu);
  impl_->fault_after = statements;
}

std::uint64_t Store::orphan_rows() const {
  std::lock_guard lock(impl_->mu);
  std::uint64_t total = 0;
  for (const char* table : {"fused_object", "provenance", "topology_lane", "vut_sensor", "driver_state", "hazard",
                            "environment"}) {
    Statement st(impl_->db, std::string("SELECT COUNT(*) FROM ") + table +
                                " WHERE situation_id NOT IN (SELECT situation_id FROM situation)");
    st.step();
    total += static_cast<std::uint64_t>(st.int64(0));
  }
  Statement st(impl_->db,
               "SELECT COUNT(*) FROM provenance p WHERE NOT EXISTS (SELECT 1 FROM fused_object o "
               "WHERE o.situation_id = p.situation_id AND o.fused_id = p.fused_id)");
  st.step();
  return total + static_cast<std::uint64_t>(st.int64(0));
}

bool StoreTransport::send(std::span<const std::uint8_t> frame) {
  report_ += store_.ingest_frame(frame, receive_time_);
  return true;
}

}  // namespace ksf
