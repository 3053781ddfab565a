// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/config.hpp"

#include "ini.hpp"
#include "ksfusion/error.hpp"

namespace ksf {

void Config::validate() const {
  if (store_path.empty()) throw Error(ErrorCode::InvalidArgument, "store path must not be empty");
  if (listen_host.empty()) throw Error(ErrorCode::InvalidArgument, "listener host must not be empty");
  if (fusion.window_ms < 0 || fusion.vut_fix_tolerance_ms < 0) {
    throw Error(ErrorCode::InvalidArgument, "fusion window and fix tolerance must not be negative");
  }
  if (!(fusion.radius_m > 0.0) || !(fusion.max_lateral_m >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "fusion radius must be positive");
  }
  fusion.thresholds.validate();
  fusion.clusters.validate();
  vda_schedule.validate();
  if (stressmap.capacity == 0 || stressmap.max_depth < 0) {
    throw Error(ErrorCode::InvalidArgument, "stress map capacity must be positive and depth not negative");
  }
  floors.validate();
  if (handover.min_tti_ms < 0 || !(handover.near_distance_m >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "handover thresholds must not be negative");
  }
}

Config Config::load(const std::filesystem::path& path) {
  using detail::ini_get;
  const auto tree = detail::read_ini(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() || p.empty() ? p : base / p; };

  Config c;
  c.store_path = resolve(ini_get(tree, "store.path", c.store_path.string()));
  c.listen_host = ini_get(tree, "listener.host", c.listen_host);
  c.listen_port = ini_get(tree, "listener.port", c.listen_port);

  auto& f = c.fusion;
  f.window_ms = ini_get(tree, "fusion.window_ms", f.window_ms);
  f.radius_m = ini_get(tree, "fusion.radius_m", f.radius_m);
  f.vut_fix_tolerance_ms = ini_get(tree, "fusion.vut_fix_tolerance_ms", f.vut_fix_tolerance_ms);
  f.max_lateral_m = ini_get(tree, "fusion.max_lateral_m", f.max_lateral_m);
  f.thresholds.max_position_m = ini_get(tree, "fusion.max_position_m", f.thresholds.max_position_m);
  f.thresholds.max_course_deg = ini_get(tree, "fusion.max_course_deg", f.thresholds.max_course_deg);
  f.thresholds.max_speed_ms = ini_get(tree, "fusion.max_speed_ms", f.thresholds.max_speed_ms);
  f.clusters.speed_floor_ms = ini_get(tree, "fusion.speed_floor_ms", f.clusters.speed_floor_ms);
  f.clusters.width_numerator = ini_get(tree, "fusion.width_numerator", f.clusters.width_numerator);
  f.clusters.min_width_deg = ini_get(tree, "fusion.min_width_deg", f.clusters.min_width_deg);
  f.clusters.max_width_deg = ini_get(tree, "fusion.max_width_deg", f.clusters.max_width_deg);

  static constexpr const char* kGroupKeys[kVutSignalGroupCount] = {"vda.dynamics_ms", "vda.brake_ms", "vda.gnss_ms",
                                                                   "vda.body_ms", "vda.rain_ms"};
  for (std::size_t g = 0; g < kVutSignalGroupCount; ++g) {
    c.vda_schedule.period_ms[g] = ini_get(tree, kGroupKeys[g], c.vda_schedule.period_ms[g]);
  }

  if (const auto matrix = ini_get(tree, "stressmap.matrix", std::string()); !matrix.empty()) {
    c.stressmap.matrix = resolve(matrix);
  }
  c.stressmap.capacity = ini_get(tree, "stressmap.capacity", c.stressmap.capacity);
  c.stressmap.max_depth = ini_get(tree, "stressmap.max_depth", c.stressmap.max_depth);
  c.stressmap.min_count = ini_get(tree, "stressmap.min_count", c.stressmap.min_count);

  c.floors.tti_min_speed_ms = ini_get(tree, "metrics.tti_min_speed_ms", c.floors.tti_min_speed_ms);
  c.floors.ru_min_closing_ms = ini_get(tree, "metrics.ru_min_closing_ms", c.floors.ru_min_closing_ms);
  c.handover.min_tti_ms = ini_get(tree, "metrics.handover_min_tti_ms", c.handover.min_tti_ms);
  c.handover.near_distance_m = ini_get(tree, "metrics.near_distance_m", c.handover.near_distance_m);

  c.validate();
  return c;
}

}  // namespace ksf
