// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ksfusion/error.hpp"

namespace ksf {
namespace {

struct Vec {
  double e, n;
};

double cross(Vec a, Vec b) { return a.e * b.n - a.n * b.e; }

Vec unit(CourseDeg c) {
  const auto [e, n] = course_to_unit_vector(c);
  return {e, n};
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

constexpr double kParallelEpsilon = 1e-9;

}  // namespace

void MetricFloors::validate() const {
  if (!(tti_min_speed_ms >= 0.0) || !(ru_min_closing_ms >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "metric floors must not be negative");
  }
}

TtiPair compute_tti(const KinematicState& vut, const KinematicState& obj, const MetricFloors& floors) {
  if (vut.speed < floors.tti_min_speed_ms || obj.speed < floors.tti_min_speed_ms) return {};
  const auto lp = to_local_enu(vut.position, obj.position);
  const Vec p{lp.east, lp.north};
  const Vec uv = unit(vut.course);
  const Vec uo = unit(obj.course);
  const double denom = cross(uv, uo);
  if (std::fabs(denom) < kParallelEpsilon) return {};
  // vut + s*uv == obj + r*uo
  const double s = cross(p, uo) / denom;
  const double r = cross(p, uv) / denom;
  if (s < 0.0 || r < 0.0) return {};
  return {std::llround(1000.0 * r / obj.speed), std::llround(1000.0 * s / vut.speed)};
}

RelativeUrgency compute_ru(const KinematicState& vut, const KinematicState& obj, const MetricFloors& floors) {
  const auto lp = to_local_enu(vut.position, obj.position);
  const Vec uv = unit(vut.course);
  const Vec uo = unit(obj.course);
  const Vec w{uo.e * obj.speed - uv.e * vut.speed, uo.n * obj.speed - uv.n * vut.speed};
  const double d = std::hypot(lp.east, lp.north);
  if (d < 1e-9) {
    if (std::hypot(w.e, w.n) <= floors.ru_min_closing_ms) return std::nullopt;
    return 1;
  }
  const double closing = -(lp.east * w.e + lp.north * w.n) / d;
  if (closing <= floors.ru_min_closing_ms) return std::nullopt;
  return std::max<std::int64_t>(1, std::llround(1000.0 * d / closing));
}

KinematicState vut_state(const SituationRecord& s) {
  if (const auto* o = find_vut_object(s)) return {o->position, o->speed, o->course};
  if (s.vut_sensor && s.vut_sensor->has(VutSignalGroup::Gnss)) {
    return {s.vut_sensor->gnss, s.vut_sensor->speed, s.vut_sensor->gnss_heading};
  }
  throw Error(ErrorCode::MissingVutState, "situation " + std::to_string(s.situation_id) + " has no vehicle state");
}

std::vector<EvaluationRow> evaluate_situation(const SituationRecord& s, const MetricFloors& floors) {
  floors.validate();
  const KinematicState vut = vut_state(s);
  const FusedObject* self = find_vut_object(s);
  std::vector<EvaluationRow> rows;
  rows.reserve(s.objects.size());
  for (const auto& o : s.objects) {
    if (&o == self) continue;
    const KinematicState obj{o.position, o.speed, o.course};
    EvaluationRow row;
    row.object_id = o.display_id();
    row.classification = o.classification;
    row.position = o.position;
    row.speed = o.speed;
    row.course = o.course;
    row.distance_m = haversine_distance(vut.position, o.position);
    row.tti = compute_tti(vut, obj, floors);
    row.ru = compute_ru(vut, obj, floors);
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const EvaluationRow& a, const EvaluationRow& b) { return a.object_id < b.object_id; });
  return rows;
}

std::string format_degrees(double deg) {
  std::string s = fixed(deg, 7);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

std::string format_csv_row(const EvaluationRow& row) {
  std::string course = fixed(row.course.value(), 1);
  if (course == "360.0") course = "0.0";
  std::string out;
  out += std::to_string(row.object_id);
  out += ',';
  out += display_name(row.classification);
  out += ',' + format_degrees(row.position.lat);
  out += ',' + format_degrees(row.position.lon);
  out += ',' + fixed(row.speed, 2);
  out += ',' + course;
  out += ',' + fixed(row.distance_m, 2);
  out += ',' + std::to_string(row.tti.obj_ms);
  out += ',' + std::to_string(row.tti.vut_ms);
  out += ',' + (row.ru ? std::to_string(*row.ru) : std::string("MAX"));
  return out;
}

std::string evaluation_csv(std::span<const EvaluationRow> rows) {
  std::string out = kEvaluationCsvHeader;
  out += '\n';
  for (const auto& r : rows) out += format_csv_row(r) + '\n';
  return out;
}

HandoverSummary handover_summary(std::span<const EvaluationRow> rows, const std::optional<DriverStateSample>& driver,
                                 std::span<const HazardEvent> hazards, const HandoverConfig& cfg,
                                 const ColorMatrix& matrix) {
  HandoverSummary h;
  for (const auto& r : rows) {
    for (const auto t : {r.tti.obj_ms, r.tti.vut_ms}) {
      if (t >= 0 && (!h.min_tti_ms || t < *h.min_tti_ms)) h.min_tti_ms = t;
    }
    if (r.distance_m < cfg.near_distance_m) ++h.near_objects;
  }
  h.hazard_count = hazards.size();
  if (driver) h.driver_cell = color_for(driver->valence, driver->arousal, matrix);
  const bool panic = std::any_of(hazards.begin(), hazards.end(),
                                 [](const HazardEvent& e) { return e.kind == HazardKind::PanicBraking; });
  h.suitable = !panic && !(h.min_tti_ms && *h.min_tti_ms < cfg.min_tti_ms);
  return h;
}

Trilateration trilaterate(std::span<const RangeAnchor> anchors) {
  if (anchors.size() < 3) throw Error(ErrorCode::InvalidArgument, "trilateration needs at least three anchors");
  double lat = 0.0, lon = 0.0;
  for (const auto& a : anchors) {
    lat += a.position.lat;
    lon += a.position.lon;
  }
  const GeoPosition origin{lat / static_cast<double>(anchors.size()), lon / static_cast<double>(anchors.size())};
  std::vector<Vec> pts;
  pts.reserve(anchors.size());
  for (const auto& a : anchors) {
    const auto lp = to_local_enu(origin, a.position);
    pts.push_back({lp.east, lp.north});
  }

  Vec x{0.0, 0.0};
  Trilateration out;
  for (out.iterations = 0; out.iterations < 100; ++out.iterations) {
    // normal equations J^T J dx = -J^T r
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double de = x.e - pts[i].e, dn = x.n - pts[i].n;
      const double d = std::max(std::hypot(de, dn), 1e-9);
      const double r = d - anchors[i].distance_m;
      const double je = de / d, jn = dn / d;
      a11 += je * je;
      a12 += je * jn;
      a22 += jn * jn;
      b1 -= je * r;
      b2 -= jn * r;
    }
    const double det = a11 * a22 - a12 * a12;
    if (std::fabs(det) < 1e-12) break;
    const Vec dx{(b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det};
    x.e += dx.e;
    x.n += dx.n;
    if (std::hypot(dx.e, dx.n) < 1e-9) break;
  }
  out.position = from_local_enu(origin, {x.e, x.n});
  double sq = 0.0;
  for (const auto& a : anchors) {
    const double r = haversine_distance(out.position, a.position) - a.distance_m;
    out.residuals_m.push_back(r);
    sq += r * r;
  }
  out.rms_m = std::sqrt(sq / static_cast<double>(anchors.size()));
  return out;
}

}  // namespace ksf
