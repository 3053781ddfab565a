// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>
#include <tuple>

#include "ksfusion/aggregators.hpp"
#include "ksfusion/error.hpp"
#include "ini.hpp"
#include "json_io.hpp"

namespace ksf {
namespace {

using Rng = std::mt19937_64;
using detail::Json;

constexpr double kLaneOffsetM = 1.75;
constexpr TimeMs kSpatCycleMs = 30'000;

LocalPoint add(LocalPoint p, double east, double north) { return {p.east + east, p.north + north}; }

LocalPoint along(CourseDeg c, double dist) {
  const auto [e, n] = course_to_unit_vector(c);
  return {e * dist, n * dist};
}

double normal(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

TimeMs grid10(TimeMs t) { return t - ((t % 10) + 10) % 10; }

/// Two segments meeting at `switch_at`, passing through `mid_point` at `mid`.
std::vector<TruthSegment> two_segments(TimeMs start, TimeMs mid, TimeMs switch_at, LocalPoint mid_point,
                                       double v1, CourseDeg c1, double v2, CourseDeg c2) {
  LocalPoint at_switch;
  if (switch_at <= mid) {
    const auto back = along(c2, -v2 * static_cast<double>(mid - switch_at) / 1000.0);
    at_switch = add(mid_point, back.east, back.north);
  } else {
    const auto fwd = along(c1, v1 * static_cast<double>(switch_at - mid) / 1000.0);
    at_switch = add(mid_point, fwd.east, fwd.north);
  }
  const auto back = along(c1, -v1 * static_cast<double>(switch_at - start) / 1000.0);
  return {TruthSegment{start, add(at_switch, back.east, back.north), v1, c1},
          TruthSegment{switch_at, at_switch, v2, c2}};
}

bool conflicts(const TruthObject& a, const TruthObject& b, TimeMs start, TimeMs end) {
  const bool a_vehicle = a.classification == ObjectClassification::PassengerCar;
  const bool b_vehicle = b.classification == ObjectClassification::PassengerCar;
  if (a_vehicle != b_vehicle) return false;
  for (TimeMs t = start; t <= end; t += 200) {
    const auto pa = a.local_at(t), pb = b.local_at(t);
    const auto& sa = a.segment_at(t);
    const auto& sb = b.segment_at(t);
    if (std::hypot(pa.east - pb.east, pa.north - pb.north) < 6.0 && angular_difference(sa.course, sb.course) < 30.0 &&
        std::fabs(sa.speed - sb.speed) < 3.0) {
      return true;
    }
  }
  return false;
}

SignalPhase phase_at(TimeMs t, std::uint16_t group) {
  TimeMs in_cycle = ((t + (group == 2 ? kSpatCycleMs / 2 : 0)) % kSpatCycleMs + kSpatCycleMs) % kSpatCycleMs;
  if (in_cycle < 13'000) return SignalPhase::Green;
  if (in_cycle < 15'000) return SignalPhase::Amber;
  if (in_cycle < 28'000) return SignalPhase::Red;
  return SignalPhase::RedAmber;
}

MapTopology intersection_map(const ScenarioConfig& cfg) {
  MapTopology map;
  map.intersection_id = cfg.intersection_id;
  const double courses[] = {0.0, 90.0, 180.0, 270.0};
  for (int i = 0; i < 4; ++i) {
    const CourseDeg c(courses[i]);
    const auto right = along(CourseDeg(courses[i] + 90.0), kLaneOffsetM);
    auto point = [&](double s) {
      const auto p = along(c, s);
      return from_local_enu(cfg.center, {p.east + right.east, p.north + right.north});
    };
    const auto group = static_cast<std::uint16_t>(i % 2 == 0 ? 1 : 2);
    map.lanes.push_back({static_cast<std::uint32_t>(1 + i), group, {point(-80.0), point(-8.0)}, true});
    map.lanes.push_back({static_cast<std::uint32_t>(5 + i), 0, {point(8.0), point(80.0)}, false});
  }
  return map;
}

using detail::ini_get;

void read_noise(const boost::property_tree::ptree& tree, const std::string& section, SourceNoise& n) {
  n.position_m = ini_get(tree, section + ".position_m", n.position_m);
  n.course_deg = ini_get(tree, section + ".course_deg", n.course_deg);
  n.speed_ms = ini_get(tree, section + ".speed_ms", n.speed_ms);
}

Json segments_json(const std::vector<TruthSegment>& segs) {
  Json out = Json::array();
  for (const auto& s : segs) {
    out.push_back({{"start_ms", s.start},
                   {"east_m", s.origin.east},
                   {"north_m", s.origin.north},
                   {"speed", s.speed},
                   {"course", s.course.value()}});
  }
  return out;
}

}  // namespace

TimeMs period_for(double hz) {
  if (!(hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "rates must be positive");
  const double period = 1000.0 / hz;
  const auto rounded = std::llround(period);
  if (std::fabs(period - static_cast<double>(rounded)) > 1e-6 || rounded % 10 != 0 || rounded == 0) {
    throw Error(ErrorCode::InvalidArgument, "rate " + std::to_string(hz) + " Hz is not on the 10 ms grid");
  }
  return rounded;
}

void ScenarioConfig::validate() const {
  if (!(duration_s > 0.0) || std::llround(duration_s * 1000.0) % 10 != 0) {
    throw Error(ErrorCode::InvalidArgument, "duration must be positive and a multiple of 10 ms");
  }
  if (start_ms % 10 != 0) throw Error(ErrorCode::InvalidArgument, "start time must be a multiple of 10 ms");
  if (!is_valid(center)) throw Error(ErrorCode::InvalidArgument, "bad scenario center");
  if (vehicles < 0 || pedestrians < 0) throw Error(ErrorCode::InvalidArgument, "object counts must not be negative");
  if (!(cooperative_fraction >= 0.0 && cooperative_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "cooperative fraction must be in [0, 1]");
  }
  if (!(camera_radius_m > 0.0) || !(v2x_range_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "ranges must be positive");
  for (const auto* n : {&cam_noise, &cpm_noise, &vut_noise}) {
    if (!(n->position_m >= 0.0 && n->course_deg >= 0.0 && n->speed_ms >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "noise must not be negative");
    }
  }
  for (double hz : {cam_hz, cpm_hz, vut_hz, driver_hz, spat_hz}) period_for(hz);
  if (vda_schedule) {
    vda_schedule->validate();
    for (auto p : vda_schedule->period_ms) {
      if (p % 10 != 0) throw Error(ErrorCode::InvalidArgument, "vehicle periods must be multiples of 10 ms");
    }
  }
  if (flush_interval_ms <= 0) throw Error(ErrorCode::InvalidArgument, "flush interval must be positive");
  if (vut == rsu) throw Error(ErrorCode::InvalidArgument, "vehicle and roadside unit need distinct station ids");
}

TimeMs ScenarioConfig::end_ms() const { return start_ms + std::llround(duration_s * 1000.0); }

TimeMs ScenarioConfig::mid_ms() const {
  const TimeMs mid = start_ms + std::llround(duration_s * 500.0);
  return mid - ((mid - start_ms) % 100);
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  const auto tree = detail::read_ini(path);
  ScenarioConfig c;
  c.seed = ini_get(tree, "scenario.seed", c.seed);
  c.duration_s = ini_get(tree, "scenario.duration_s", c.duration_s);
  c.start_ms = ini_get(tree, "scenario.start_ms", c.start_ms);
  c.center.lat = ini_get(tree, "scenario.center_lat", c.center.lat);
  c.center.lon = ini_get(tree, "scenario.center_lon", c.center.lon);
  c.vehicles = ini_get(tree, "scenario.vehicles", c.vehicles);
  c.pedestrians = ini_get(tree, "scenario.pedestrians", c.pedestrians);
  c.cooperative_fraction = ini_get(tree, "scenario.cooperative_fraction", c.cooperative_fraction);
  c.camera_radius_m = ini_get(tree, "scenario.camera_radius_m", c.camera_radius_m);
  c.v2x_range_m = ini_get(tree, "scenario.v2x_range_m", c.v2x_range_m);
  c.intersection_id = ini_get(tree, "scenario.intersection_id", c.intersection_id);
  c.vut = StationId{ini_get(tree, "stations.vut", c.vut.value)};
  c.rsu = StationId{ini_get(tree, "stations.rsu", c.rsu.value)};
  read_noise(tree, "noise_cam", c.cam_noise);
  read_noise(tree, "noise_cpm", c.cpm_noise);
  read_noise(tree, "noise_vut", c.vut_noise);
  c.cam_hz = ini_get(tree, "rates.cam_hz", c.cam_hz);
  c.cpm_hz = ini_get(tree, "rates.cpm_hz", c.cpm_hz);
  c.vut_hz = ini_get(tree, "rates.vut_hz", c.vut_hz);
  c.driver_hz = ini_get(tree, "rates.driver_hz", c.driver_hz);
  c.spat_hz = ini_get(tree, "rates.spat_hz", c.spat_hz);
  c.flush_interval_ms = ini_get(tree, "rates.flush_interval_ms", c.flush_interval_ms);
  c.validate();
  return c;
}

std::size_t emissions(const ScenarioConfig& cfg, double hz) {
  const TimeMs period = period_for(hz);
  const TimeMs span = cfg.end_ms() - cfg.start_ms;
  return static_cast<std::size_t>((span + period - 1) / period);
}

const TruthSegment& TruthObject::segment_at(TimeMs t) const {
  const TruthSegment* s = &segments.front();
  for (const auto& seg : segments) {
    if (seg.start <= t) s = &seg;
  }
  return *s;
}

LocalPoint TruthObject::local_at(TimeMs t) const {
  const auto& s = segment_at(t);
  const auto d = along(s.course, s.speed * static_cast<double>(t - s.start) / 1000.0);
  return add(s.origin, d.east, d.north);
}

GeoPosition GroundTruth::position_at(const TruthObject& o, TimeMs t) const {
  return from_local_enu(center, o.local_at(t));
}

const TruthObject* GroundTruth::by_track(std::uint32_t track_id) const {
  for (const auto& o : objects) {
    if (o.track_id == track_id) return &o;
  }
  return nullptr;
}

const TruthObject* GroundTruth::by_station(StationId station) const {
  for (const auto& o : objects) {
    if ((o.cooperative || o.is_vut) && o.station == station) return &o;
  }
  return nullptr;
}

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const TimeMs start = cfg.start_ms, end = cfg.end_ms(), mid = cfg.mid_ms();
  const TimeMs span = end - start;

  Scenario out;
  GroundTruth& gt = out.truth;
  gt.center = cfg.center;
  gt.start_ms = start;
  gt.end_ms = end;
  gt.topology = intersection_map(cfg);

  auto switch_time = [&] { return grid10(start + span / 4 + static_cast<TimeMs>(uniform(rng, 0.0, span / 2.0))); };

  {
    TruthObject vut;
    vut.truth_id = 1;
    vut.is_vut = true;
    vut.station = cfg.vut;
    vut.track_id = 101;
    const LocalPoint p{kLaneOffsetM, -uniform(rng, 10.0, 30.0)};
    vut.segments = two_segments(start, mid, switch_time(), p, uniform(rng, 8.0, 10.0), CourseDeg(0.0),
                                uniform(rng, 6.0, 8.0), CourseDeg(0.0));
    gt.objects.push_back(vut);
  }

  const int total = cfg.vehicles + cfg.pedestrians;
  const auto cooperative = static_cast<int>(std::llround(cfg.cooperative_fraction * total));
  for (int i = 0; i < total; ++i) {
    const bool vehicle = i < cfg.vehicles;
    TruthObject o;
    o.truth_id = static_cast<std::uint32_t>(gt.objects.size() + 1);
    o.classification = vehicle ? ObjectClassification::PassengerCar : ObjectClassification::Pedestrian;
    o.cooperative = i < cooperative;
    o.station = StationId{1000 + o.truth_id};
    o.track_id = 100 + o.truth_id;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      if (vehicle) {
        const CourseDeg c(90.0 * (i % 4));
        const auto right = along(CourseDeg(c.value() + 90.0), kLaneOffsetM);
        const auto s = along(c, uniform(rng, -100.0, 100.0));
        o.segments = two_segments(start, mid, switch_time(), add(s, right.east, right.north), uniform(rng, 6.0, 14.0), c,
                                  uniform(rng, 6.0, 14.0), c);
      } else {
        const double r = uniform(rng, 6.0, 40.0), bearing = uniform(rng, 0.0, 360.0);
        const CourseDeg c1(90.0 * std::floor(uniform(rng, 0.0, 4.0)) + uniform(rng, -10.0, 10.0));
        const CourseDeg c2(c1.value() + (uniform(rng, 0.0, 1.0) < 0.5 ? 90.0 : -90.0));
        o.segments = two_segments(start, mid, switch_time(), along(CourseDeg(bearing), r), uniform(rng, 0.6, 1.8), c1,
                                  uniform(rng, 0.6, 1.8), c2);
      }
      placed = std::none_of(gt.objects.begin(), gt.objects.end(),
                            [&](const TruthObject& other) { return conflicts(o, other, start, end); });
    }
    if (!placed) throw Error(ErrorCode::InvalidArgument, "scenario too dense to lay out");
    gt.objects.push_back(o);
  }

  const GeoPosition rsu_position = cfg.center;
  LocalStore rsu_local, vut_local;
  const TruthObject& vut = gt.objects.front();
  auto noisy = [&](const TruthObject& o, TimeMs t, const SourceNoise& n) {
    const auto p = o.local_at(t);
    const auto& seg = o.segment_at(t);
    const GeoPosition pos = from_local_enu(cfg.center, {p.east + normal(rng, n.position_m), p.north + normal(rng, n.position_m)});
    const double speed = std::max(0.0, seg.speed + normal(rng, n.speed_ms));
    return std::tuple{pos, speed, CourseDeg(seg.course.value() + normal(rng, n.course_deg))};
  };

  // roadside: camera, received CAMs, signal state, one weather sample
  environment_ingest(EnvironmentSample{start, 3600, cfg.center, 5000.0, 14.0, 0.0, 3.5, CourseDeg(250.0), 20000.0,
                                       10000.0, 1013.0, 65.0, 40.0},
                     cfg.rsu, rsu_local);
  const TimeMs spat_period = period_for(cfg.spat_hz);
  for (TimeMs t = start; t < end; t += spat_period) {
    for (std::uint16_t group : {std::uint16_t{1}, std::uint16_t{2}}) {
      tdac_ingest(SpatExtract{cfg.intersection_id, group, phase_at(t - start, group), t}, cfg.rsu, rsu_position, rsu_local);
    }
  }
  const TimeMs cpm_period = period_for(cfg.cpm_hz);
  for (TimeMs t = start; t < end; t += cpm_period) {
    CpmExtract cpm{cfg.rsu, t, {}};
    for (const auto& o : gt.objects) {
      const auto p = o.local_at(t);
      if (std::hypot(p.east, p.north) > cfg.camera_radius_m) continue;
      const auto [pos, speed, course] = noisy(o, t, cfg.cpm_noise);
      cpm.detections.push_back({o.track_id, o.classification, pos, speed, course});
    }
    if (!cpm.detections.empty()) tdac_ingest(cpm, cfg.rsu, rsu_position, rsu_local);
  }
  const TimeMs cam_period = period_for(cfg.cam_hz);
  for (TimeMs t = start; t < end; t += cam_period) {
    const auto vut_at = vut.local_at(t);
    for (const auto& o : gt.objects) {
      if (!o.cooperative) continue;
      const auto [pos, speed, course] = noisy(o, t, cfg.cam_noise);
      const CamExtract cam{o.station, t, pos, speed, course, o.classification};
      const auto p = o.local_at(t);
      if (std::hypot(p.east, p.north) <= cfg.v2x_range_m) tdac_ingest(cam, cfg.rsu, rsu_position, rsu_local);
      if (std::hypot(p.east - vut_at.east, p.north - vut_at.north) <= cfg.v2x_range_m) {
        tdac_ingest(cam, cfg.vut, gt.position_at(vut, t), vut_local);
      }
    }
  }

  // vehicle: sensor extracts and driver state
  const TimeMs vut_period = cfg.vda_schedule ? 10 : period_for(cfg.vut_hz);
  TransmitSchedule schedule;
  schedule.period_ms.fill(vut_period);
  VehicleDataAggregator vda(cfg.vut, cfg.vda_schedule.value_or(schedule));
  for (TimeMs t = start; t < end; t += vut_period) {
    const auto [pos, speed, course] = noisy(vut, t, cfg.vut_noise);
    VutSensorExtract s;
    s.timestamp = t;
    s.gnss = pos;
    s.gnss_heading = course;
    s.speed = speed;
    s.gear = 3;
    s.exterior_lights = lights::kLowBeam;
    s.accel_longitudinal = std::round(normal(rng, 0.3) * 100.0) / 100.0;
    s.yaw_rate = std::round(normal(rng, 0.5) * 100.0) / 100.0;
    vda.tick(t, s, vut_local);
  }
  const TimeMs driver_period = period_for(cfg.driver_hz);
  for (TimeMs t = start; t < end; t += driver_period) {
    const auto p = vut.local_at(t);
    const double near = std::hypot(p.east, p.north) < 25.0 ? 1.0 : 0.0;
    DriverStateSample d;
    d.timestamp = t;
    d.valence = static_cast<std::uint8_t>(std::clamp<long>(std::lround(2.0 + normal(rng, 0.6)), 1, 5));
    d.arousal = static_cast<std::uint8_t>(std::clamp<long>(std::lround(3.0 - near + normal(rng, 0.6)), 1, 5));
    d.heart_rate_bpm = std::round((72.0 + 12.0 * (3 - d.arousal) + normal(rng, 3.0)) * 10.0) / 10.0;
    dda_ingest(d, cfg.vut, gt.position_at(vut, t), vut_local);
  }

  auto pack = [&](const LocalStore& local, StationId station) {
    const auto& pending = local.pending();
    for (std::size_t i = 0; i < pending.size();) {
      const TimeMs slot = (pending[i].time - start) / cfg.flush_interval_ms;
      std::size_t j = i;
      while (j < pending.size() && (pending[j].time - start) / cfg.flush_interval_ms == slot) ++j;
      auto batches = pack_records({pending.begin() + static_cast<std::ptrdiff_t>(i), pending.begin() + static_cast<std::ptrdiff_t>(j)}, station);
      out.batches.insert(out.batches.end(), batches.begin(), batches.end());
      i = j;
    }
  };
  pack(rsu_local, cfg.rsu);
  pack(vut_local, cfg.vut);
  return out;
}

std::string ground_truth_json(const GroundTruth& gt) {
  Json doc;
  doc["center"] = {{"lat", gt.center.lat}, {"lon", gt.center.lon}};
  doc["start_ms"] = gt.start_ms;
  doc["end_ms"] = gt.end_ms;
  Json objs = Json::array();
  for (const auto& o : gt.objects) {
    objs.push_back({{"truth_id", o.truth_id},
                    {"classification", to_code(o.classification)},
                    {"cooperative", o.cooperative},
                    {"is_vut", o.is_vut},
                    {"station", o.station.value},
                    {"track_id", o.track_id},
                    {"segments", segments_json(o.segments)}});
  }
  doc["objects"] = std::move(objs);
  doc["topology"] = detail::map_to_json(gt.topology);
  return doc.dump(2) + "\n";
}

GroundTruth ground_truth_from_json(const std::string& text) {
  try {
    const auto doc = Json::parse(text);
    GroundTruth gt;
    gt.center = {doc.at("center").at("lat").get<double>(), doc.at("center").at("lon").get<double>()};
    gt.start_ms = doc.at("start_ms").get<TimeMs>();
    gt.end_ms = doc.at("end_ms").get<TimeMs>();
    for (const auto& j : doc.at("objects")) {
      TruthObject o;
      o.truth_id = j.at("truth_id").get<std::uint32_t>();
      o.classification = classification_from_code(j.at("classification").get<unsigned>());
      o.cooperative = j.at("cooperative").get<bool>();
      o.is_vut = j.at("is_vut").get<bool>();
      o.station = StationId{j.at("station").get<std::uint32_t>()};
      o.track_id = j.at("track_id").get<std::uint32_t>();
      for (const auto& s : j.at("segments")) {
        o.segments.push_back({s.at("start_ms").get<TimeMs>(),
                              {s.at("east_m").get<double>(), s.at("north_m").get<double>()},
                              s.at("speed").get<double>(),
                              CourseDeg(s.at("course").get<double>())});
      }
      if (o.segments.empty()) throw Error(ErrorCode::InvalidArgument, "object without segments");
      gt.objects.push_back(std::move(o));
    }
    gt.topology = detail::map_from_json(doc.at("topology"));
    validate(gt.topology);
    return gt;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("ground truth: ") + e.what());
  }
}

Score score(const GroundTruth& gt, const SituationRecord& s, double match_radius_m) {
  Score sc;
  sc.fused = s.objects.size();
  std::vector<GeoPosition> truths;
  for (const auto& o : gt.objects) {
    const auto p = gt.position_at(o, s.timestamp);
    if (haversine_distance(p, s.center) <= s.radius_m) truths.push_back(p);
  }
  sc.truths = truths.size();

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    for (std::size_t j = 0; j < truths.size(); ++j) {
      const double d = haversine_distance(s.objects[i].position, truths[j]);
      if (d <= match_radius_m) pairs.emplace_back(d, i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> fused_used(s.objects.size()), truth_used(truths.size());
  for (const auto& [d, i, j] : pairs) {
    if (fused_used[i] || truth_used[j]) continue;
    fused_used[i] = truth_used[j] = true;
    ++sc.matched;
  }
  const auto m = static_cast<double>(sc.matched);
  sc.precision = sc.fused ? m / static_cast<double>(sc.fused) : 1.0;
  sc.recall = sc.truths ? m / static_cast<double>(sc.truths) : 1.0;
  sc.duplicate_rate = sc.truths ? static_cast<double>(sc.fused - sc.matched) / static_cast<double>(sc.truths) : 0.0;
  return sc;
}

}  // namespace ksf
