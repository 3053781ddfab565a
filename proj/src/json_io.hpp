// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "ksfusion/messages.hpp"

namespace ksf::detail {

using Json = nlohmann::ordered_json;

inline Json map_to_json(const MapTopology& map) {
  Json lanes = Json::array();
  for (const auto& l : map.lanes) {
    Json pts = Json::array();
    for (const auto& p : l.polyline) pts.push_back({p.lat, p.lon});
    lanes.push_back({{"lane_id", l.lane_id}, {"signal_group", l.signal_group}, {"ingress", l.ingress}, {"polyline", pts}});
  }
  return {{"intersection_id", map.intersection_id}, {"lanes", lanes}};
}

/// Throws nlohmann::json::exception on missing or mistyped fields.
inline MapTopology map_from_json(const Json& j) {
  MapTopology map;
  map.intersection_id = j.at("intersection_id").get<std::uint32_t>();
  for (const auto& l : j.at("lanes")) {
    MapLane lane;
    lane.lane_id = l.at("lane_id").get<std::uint32_t>();
    lane.signal_group = l.at("signal_group").get<std::uint16_t>();
    lane.ingress = l.at("ingress").get<bool>();
    for (const auto& p : l.at("polyline")) lane.polyline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    map.lanes.push_back(std::move(lane));
  }
  return map;
}

}  // namespace ksf::detail
