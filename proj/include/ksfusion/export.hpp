// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "ksfusion/situation.hpp"

namespace ksf {

/// FeatureCollection of the situation: one Point per fused object, one
/// LineString per lane with its signal phase, one Point per hazard, and the
/// situation area as a Point with a radius property. Features carry a
/// "feature" property naming their role ("object", "lane", "hazard",
/// "situation").
std::string situation_geojson(const SituationRecord& s);

std::string map_json(const MapTopology& map);

/// Throws Error(InvalidArgument).
MapTopology map_from_json(const std::string& text);

/// Reads a whole text file. Throws Error(Io).
std::string read_text_file(const std::filesystem::path& path);

/// Writes atomically via a temporary file in the same directory. Throws Error(Io).
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ksf
