// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/export.hpp"

#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "ksfusion/error.hpp"

namespace ksf {
namespace {

using detail::Json;

Json point(const GeoPosition& p) { return {{"type", "Point"}, {"coordinates", {p.lon, p.lat}}}; }

Json feature(Json geometry, Json properties) {
  return {{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(properties)}};
}

}  // namespace

std::string situation_geojson(const SituationRecord& s) {
  Json features = Json::array();
  features.push_back(feature(point(s.center), {{"feature", "situation"},
                                               {"situation_id", s.situation_id},
                                               {"vut", s.vut.value},
                                               {"timestamp_ms", s.timestamp},
                                               {"radius_m", s.radius_m}}));
  const FusedObject* self = find_vut_object(s);
  for (const auto& o : s.objects) {
    Json prov = Json::array();
    for (const auto& p : o.provenance) {
      prov.push_back({{"source", std::string(to_string(p.source))}, {"reporter", p.reporter.value}, {"object_id", p.object_id}});
    }
    Json props = {{"feature", "object"},
                  {"fused_id", o.fused_id},
                  {"id", o.display_id()},
                  {"classification", std::string(display_name(o.classification))},
                  {"speed", o.speed},
                  {"course", o.course.value()},
                  {"is_vut", &o == self},
                  {"provenance", prov}};
    props["lane_id"] = o.lane_id ? Json(*o.lane_id) : Json(nullptr);
    features.push_back(feature(point(o.position), std::move(props)));
  }
  if (s.topology) {
    for (const auto& l : s.topology->lanes) {
      Json coords = Json::array();
      for (const auto& p : l.lane.polyline) coords.push_back({p.lon, p.lat});
      features.push_back(feature({{"type", "LineString"}, {"coordinates", coords}},
                                 {{"feature", "lane"},
                                  {"intersection_id", s.topology->intersection_id},
                                  {"lane_id", l.lane.lane_id},
                                  {"signal_group", l.lane.signal_group},
                                  {"ingress", l.lane.ingress},
                                  {"phase", std::string(to_string(l.phase))}}));
    }
  }
  for (const auto& h : s.hazards) {
    features.push_back(feature(point(h.position), {{"feature", "hazard"},
                                                   {"kind", std::string(to_string(h.kind))},
                                                   {"timestamp_ms", h.timestamp},
                                                   {"source", h.source.value}}));
  }
  Json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(2) + "\n";
}

std::string map_json(const MapTopology& map) { return detail::map_to_json(map).dump(2) + "\n"; }

MapTopology map_from_json(const std::string& text) {
  try {
    auto map = detail::map_from_json(Json::parse(text));
    validate(map);
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("map: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    f << text;
    if (!f.flush()) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot replace " + path.string() + ": " + ec.message());
}

}  // namespace ksf
