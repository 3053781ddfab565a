// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <tuple>

#include "ksfusion/aggregators.hpp"
#include "ksfusion/error.hpp"

namespace ksf {

namespace {

constexpr double kCourseEpsilon = 1e-6;

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

auto member_order_key(const TrafficObjectObservation& o) {
  return std::make_tuple(o.source, o.reporter, o.object_id, o.timestamp, o.position.lat, o.position.lon,
                         o.course.value(), o.speed);
}

Provenance provenance_of(const TrafficObjectObservation& o) { return {o.source, o.reporter, o.object_id}; }

ObjectClassification vote_classification(std::span<const TrafficObjectObservation> group) {
  std::map<unsigned, std::size_t> votes;
  for (const auto& o : group) {
    if (o.classification != ObjectClassification::Unknown) ++votes[to_code(o.classification)];
  }
  unsigned best = to_code(ObjectClassification::Unknown);
  std::size_t best_votes = 0;
  for (const auto& [code, n] : votes) {  // ascending code, so ties keep the lowest
    if (n > best_votes) {
      best = code;
      best_votes = n;
    }
  }
  return classification_from_code(best);
}

double point_segment_distance(const LocalPoint& p, const LocalPoint& a, const LocalPoint& b) {
  const double dx = b.east - a.east;
  const double dy = b.north - a.north;
  const double len2 = dx * dx + dy * dy;
  double s = 0.0;
  if (len2 > 0.0) s = std::clamp(((p.east - a.east) * dx + (p.north - a.north) * dy) / len2, 0.0, 1.0);
  const double ex = a.east + s * dx - p.east;
  const double ey = a.north + s * dy - p.north;
  return std::hypot(ex, ey);
}

double lane_distance(const GeoPosition& p, const MapLane& lane) {
  double best = std::numeric_limits<double>::infinity();
  try {
    for (std::size_t i = 0; i + 1 < lane.polyline.size(); ++i) {
      const auto a = to_local_enu(p, lane.polyline[i]);
      const auto b = to_local_enu(p, lane.polyline[i + 1]);
      best = std::min(best, point_segment_distance({0.0, 0.0}, a, b));
    }
  } catch (const Error&) {
    // a lane more than 10 km away cannot be linked
  }
  return best;
}

template <typename T>
const RawRecord* nearest_in_time(std::span<const RawRecord> records, StationId reporter, TimeMs t,
                                 bool (*accept)(const T&) = nullptr) {
  const RawRecord* best = nullptr;
  for (const auto& r : records) {
    const auto* body = std::get_if<T>(&r.body);
    if (!body || r.reporter != reporter) continue;
    if (accept && !accept(*body)) continue;
    if (!best || std::llabs(r.time - t) < std::llabs(best->time - t) ||
        (std::llabs(r.time - t) == std::llabs(best->time - t) && r.time < best->time)) {
      best = &r;
    }
  }
  return best;
}

bool has_gnss(const VutSensorExtract& s) { return s.has(VutSignalGroup::Gnss); }

}  // namespace

void SimilarityThresholds::validate() const {
  if (!(max_position_m > 0.0) || !(max_course_deg > 0.0) || !(max_speed_ms > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "similarity thresholds must be positive");
  }
}

void CourseClusterConfig::validate() const {
  if (!(speed_floor_ms > 0.0) || !(width_numerator > 0.0) || min_width_deg < 1 || max_width_deg > 360 ||
      min_width_deg > max_width_deg) {
    throw Error(ErrorCode::InvalidArgument, "invalid course cluster configuration");
  }
}

RawSlice query_window(StationId vut, TimeMs t, const Store& store, const FusionConfig& cfg) {
  Store::Snapshot snapshot(store);
  RawQuery fixes;
  fixes.t_min = t - cfg.vut_fix_tolerance_ms;
  fixes.t_max = t + cfg.vut_fix_tolerance_ms;
  fixes.kinds = {wire::RecordKind::VutSensor};
  fixes.reporter = vut;
  const auto candidates = store.query_raw(fixes);
  const RawRecord* fix = nearest_in_time<VutSensorExtract>(candidates, vut, t, &has_gnss);
  if (!fix) {
    throw Error(ErrorCode::NoVutFix, "no GNSS fix of station " + std::to_string(vut.value) + " within " +
                                         std::to_string(cfg.vut_fix_tolerance_ms) + " ms of " + std::to_string(t));
  }

  RawSlice slice;
  slice.vut_fix = fix->position;
  slice.vut_fix_time = fix->time;
  RawQuery q;
  q.t_min = t - cfg.window_ms;
  q.t_max = t + cfg.window_ms;
  q.center = fix->position;
  q.radius_m = cfg.radius_m;
  q.kinds = KindSet::all();
  slice.records = store.query_raw(q);
  return slice;
}

int course_bin_width(double speed, const CourseClusterConfig& cfg) {
  if (speed < cfg.speed_floor_ms) return 0;
  const double w = std::round(cfg.width_numerator / speed);
  return static_cast<int>(std::clamp(w, static_cast<double>(cfg.min_width_deg), static_cast<double>(cfg.max_width_deg)));
}

double CourseCluster::upper_deg() const {
  if (slow) return 360.0;
  return std::min(360.0, static_cast<double>((bin + 1) * width_deg));
}

std::vector<CourseCluster> cluster_by_course(std::span<const TrafficObjectObservation> obs,
                                             const CourseClusterConfig& cfg) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> bins;  // (width, bin); width 0 = slow
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const int w = course_bin_width(obs[i].speed, cfg);
    const int bin = w == 0 ? 0 : static_cast<int>(std::floor(obs[i].course.value() / w));
    bins[{w, bin}].push_back(i);
  }
  std::vector<CourseCluster> out;
  out.reserve(bins.size());
  for (auto& [key, members] : bins) {
    CourseCluster c;
    c.slow = key.first == 0;
    c.width_deg = c.slow ? 360 : key.first;
    c.bin = key.second;
    c.members = std::move(members);
    out.push_back(std::move(c));
  }
  return out;
}

bool clusters_may_match(const CourseCluster& a, const CourseCluster& b, const SimilarityThresholds& th) {
  if (a.slow || b.slow) return true;
  const double a0 = a.lower_deg(), a1 = a.upper_deg();
  const double b0 = b.lower_deg(), b1 = b.upper_deg();
  if (a0 < b1 && b0 < a1) return true;
  auto forward = [](double from, double to) {
    double d = std::fmod(to - from, 360.0);
    return d < 0.0 ? d + 360.0 : d;
  };
  const double gap = std::min(forward(a1, b0), forward(b1, a0));
  return gap <= th.max_course_deg + kCourseEpsilon;
}

bool is_similar(const TrafficObjectObservation& a, const TrafficObjectObservation& b, const SimilarityThresholds& th) {
  const bool class_ok = a.classification == b.classification || a.classification == ObjectClassification::Unknown ||
                        b.classification == ObjectClassification::Unknown;
  if (!class_ok) return false;
  if (std::fabs(a.speed - b.speed) > th.max_speed_ms) return false;
  if (angular_difference(a.course, b.course) > th.max_course_deg) return false;
  return haversine_distance(a.position, b.position) <= th.max_position_m;
}

std::vector<std::vector<std::size_t>> similarity_groups(std::span<const TrafficObjectObservation> obs,
                                                        const SimilarityThresholds& th,
                                                        const CourseClusterConfig& cfg, DedupStats* stats) {
  const auto clusters = cluster_by_course(obs, cfg);
  DisjointSets sets(obs.size());
  std::size_t comparisons = 0;
  auto compare = [&](std::size_t i, std::size_t j) {
    ++comparisons;
    if (is_similar(obs[i], obs[j], th)) sets.unite(i, j);
  };

  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const auto& a = clusters[ci].members;
    for (std::size_t x = 0; x < a.size(); ++x) {
      for (std::size_t y = x + 1; y < a.size(); ++y) compare(a[x], a[y]);
    }
    for (std::size_t cj = ci + 1; cj < clusters.size(); ++cj) {
      if (!clusters_may_match(clusters[ci], clusters[cj], th)) continue;
      for (auto i : a) {
        for (auto j : clusters[cj].members) compare(i, j);
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < obs.size(); ++i) by_root[sets.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(by_root.size());
  for (auto& [root, members] : by_root) groups.push_back(std::move(members));
  std::sort(groups.begin(), groups.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });

  if (stats) {
    stats->comparisons = comparisons;
    stats->clusters = clusters.size();
  }
  return groups;
}

FusedObject merge_group(std::span<const TrafficObjectObservation> group) {
  if (group.empty()) throw Error(ErrorCode::EmptyGroup, "cannot merge an empty group");

  std::vector<TrafficObjectObservation> members(group.begin(), group.end());
  std::sort(members.begin(), members.end(),
            [](const auto& a, const auto& b) { return member_order_key(a) < member_order_key(b); });

  FusedObject f;
  f.classification = vote_classification(members);

  auto leader = std::find_if(members.begin(), members.end(),
                             [](const auto& o) { return o.source == ObservationSource::CamSelfReport; });
  if (leader == members.end()) {
    leader = std::find_if(members.begin(), members.end(),
                          [](const auto& o) { return o.source == ObservationSource::VutLocalSensor; });
  }

  if (leader != members.end()) {
    f.position = leader->position;
    f.speed = leader->speed;
    f.course = leader->course;
    std::rotate(members.begin(), leader, leader + 1);
  } else if (members.size() == 1) {
    f.position = members.front().position;
    f.speed = members.front().speed;
    f.course = members.front().course;
  } else {
    const GeoPosition origin = members.front().position;
    double east = 0.0, north = 0.0, speed = 0.0, s = 0.0, c = 0.0;
    for (const auto& m : members) {
      const auto lp = to_local_enu(origin, m.position);
      east += lp.east;
      north += lp.north;
      speed += m.speed;
      const auto [ue, un] = course_to_unit_vector(m.course);
      s += ue;
      c += un;
    }
    const double n = static_cast<double>(members.size());
    f.position = from_local_enu(origin, {east / n, north / n});
    f.speed = speed / n;
    f.course = (std::hypot(s, c) > 1e-12) ? CourseDeg(std::atan2(s, c) * 180.0 / std::numbers::pi) : members.front().course;
  }

  f.provenance.reserve(members.size());
  for (const auto& m : members) f.provenance.push_back(provenance_of(m));
  return f;
}

std::vector<FusedObject> dedup(std::span<const TrafficObjectObservation> obs, const SimilarityThresholds& th,
                               const CourseClusterConfig& cfg, DedupStats* stats) {
  std::vector<FusedObject> out;
  std::vector<TrafficObjectObservation> members;
  for (const auto& group : similarity_groups(obs, th, cfg, stats)) {
    members.clear();
    for (auto i : group) members.push_back(obs[i]);
    out.push_back(merge_group(members));
  }
  std::sort(out.begin(), out.end(), [](const FusedObject& a, const FusedObject& b) {
    return std::forward_as_tuple(a.position.lat, a.position.lon, a.course.value(), a.provenance) <
           std::forward_as_tuple(b.position.lat, b.position.lon, b.course.value(), b.provenance);
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].fused_id = static_cast<std::uint32_t>(i + 1);
  return out;
}

TopologyWithPhases join_topology(const MapTopology& map, std::span<const SpatExtract> spats, TimeMs t) {
  TopologyWithPhases out;
  out.intersection_id = map.intersection_id;
  for (const auto& lane : map.lanes) {
    const SpatExtract* best = nullptr;
    for (const auto& s : spats) {
      if (s.intersection_id != map.intersection_id || s.signal_group != lane.signal_group) continue;
      const auto d = std::llabs(s.change_time - t);
      if (!best || d < std::llabs(best->change_time - t) ||
          (d == std::llabs(best->change_time - t) && s.change_time < best->change_time)) {
        best = &s;
      }
    }
    out.lanes.push_back({lane, best ? best->phase : SignalPhase::Unknown});
  }
  return out;
}

void link_lanes(std::vector<FusedObject>& objects, const MapTopology& map, double max_lateral_m) {
  constexpr double kTie = 1e-9;
  for (auto& obj : objects) {
    obj.lane_id.reset();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& lane : map.lanes) {
      const double d = lane_distance(obj.position, lane);
      if (d > max_lateral_m) continue;
      if (!obj.lane_id || d < best - kTie || (std::fabs(d - best) <= kTie && lane.lane_id < *obj.lane_id)) {
        best = std::min(best, d);
        obj.lane_id = lane.lane_id;
      }
    }
  }
}

std::vector<TrafficObjectObservation> normalize(std::span<const RawRecord> records, StationId vut, TimeMs t) {
  using Identity = std::tuple<ObservationSource, StationId, std::uint32_t>;
  std::map<Identity, TrafficObjectObservation> nearest;
  auto offer = [&](const TrafficObjectObservation& o) {
    const Identity id{o.source, o.reporter, o.object_id};
    auto it = nearest.find(id);
    if (it == nearest.end()) {
      nearest.emplace(id, o);
      return;
    }
    const auto d_new = std::llabs(o.timestamp - t);
    const auto d_old = std::llabs(it->second.timestamp - t);
    if (d_new < d_old || (d_new == d_old && o.timestamp < it->second.timestamp)) it->second = o;
  };

  for (const auto& r : records) {
    if (const auto* cam = std::get_if<CamExtract>(&r.body)) {
      offer(observation_from_cam(*cam));
    } else if (const auto* det = std::get_if<CpmDetectionRecord>(&r.body)) {
      CpmExtract single{det->originator, det->generation_time, {det->detection}};
      offer(observations_from_cpm(single).front());
    } else if (const auto* s = std::get_if<VutSensorExtract>(&r.body)) {
      if (r.reporter == vut && s->has(VutSignalGroup::Gnss)) offer(observation_from_vut(*s, vut));
    }
  }

  std::vector<TrafficObjectObservation> out;
  out.reserve(nearest.size());
  for (auto& [id, o] : nearest) {
    const TimeMs dt = t - o.timestamp;
    if (dt != 0 && o.speed > 0.0) {
      const auto [ue, un] = course_to_unit_vector(o.course);
      const double dist = o.speed * static_cast<double>(dt) / 1000.0;
      o.position = from_local_enu(o.position, {ue * dist, un * dist});
    }
    o.timestamp = t;
    out.push_back(o);
  }
  return out;
}

SituationRecord build_situation(StationId vut, TimeMs t, const Store& store, const FusionConfig& cfg) {
  cfg.thresholds.validate();
  cfg.clusters.validate();

  Store::Snapshot snapshot(store);
  const RawSlice slice = query_window(vut, t, store, cfg);
  const auto records = backend_dedup(slice.records);

  SituationRecord s;
  s.center = slice.vut_fix;
  s.radius_m = cfg.radius_m;
  s.timestamp = t;
  s.vut = vut;

  const auto observations = normalize(records, vut, t);
  s.objects = dedup(observations, cfg.thresholds, cfg.clusters);

  // nearest stored intersection with a lane point inside the situation area
  const MapTopology* map = nullptr;
  double map_distance = std::numeric_limits<double>::infinity();
  const auto maps = store.topologies();
  for (const auto& m : maps) {
    for (const auto& lane : m.lanes) {
      for (const auto& p : lane.polyline) {
        const double d = haversine_distance(s.center, p);
        if (d <= cfg.radius_m && d < map_distance) {
          map_distance = d;
          map = &m;
        }
      }
    }
  }
  if (map) {
    std::vector<SpatExtract> spats;
    for (const auto& r : records) {
      if (const auto* sp = std::get_if<SpatExtract>(&r.body)) spats.push_back(*sp);
    }
    s.topology = join_topology(*map, spats, t);
    link_lanes(s.objects, *map, cfg.max_lateral_m);
  }

  if (const auto* r = nearest_in_time<VutSensorExtract>(records, vut, t)) {
    s.vut_sensor = std::get<VutSensorExtract>(r->body);
  }
  if (const auto* r = nearest_in_time<DriverStateSample>(records, vut, t)) {
    s.driver = std::get<DriverStateSample>(r->body);
  }
  for (const auto& r : records) {
    if (const auto* h = std::get_if<HazardEvent>(&r.body)) s.hazards.push_back(*h);
  }
  std::sort(s.hazards.begin(), s.hazards.end(), [](const HazardEvent& a, const HazardEvent& b) {
    return std::tie(a.timestamp, a.source, a.kind) < std::tie(b.timestamp, b.source, b.kind);
  });

  RawQuery env;
  env.t_min = 0;
  env.t_max = t;
  env.kinds = {wire::RecordKind::Environment};
  std::vector<EnvironmentSample> samples;
  for (const auto& r : store.query_raw(env)) samples.push_back(std::get<EnvironmentSample>(r.body));
  s.environment = environment_for(t, s.center, samples);
  return s;
}

SituationRecord fuse_situation(StationId vut, TimeMs t, Store& store, const FusionConfig& cfg) {
  SituationRecord s = build_situation(vut, t, store, cfg);
  store.persist_situation(s);
  return s;
}

}  // namespace ksf
