// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/stressmap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "ksfusion/error.hpp"
#include "ini.hpp"

namespace ksf {
namespace {

struct Rgb {
  int r, g, b;
};

constexpr Rgb kGreen{0x00, 0xa0, 0x00};
constexpr Rgb kNeutral{0x80, 0x80, 0x80};
constexpr Rgb kRed{0xe0, 0x00, 0x00};

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

Rgb blend(const Rgb& a, const Rgb& b, double f) {
  auto mix = [f](int x, int y) { return static_cast<int>(std::lround(x + (y - x) * f)); };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

bool is_color(const std::string& s) {
  return s.size() == 7 && s[0] == '#' &&
         std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

void check_scale(int v, const char* what) {
  if (v < 1 || v > 5) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be in 1..5");
}

}  // namespace

GeoBounds bounds_of(const std::vector<StressSample>& samples, double margin_deg) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "no samples");
  GeoBounds b{samples[0].position.lat, samples[0].position.lon, samples[0].position.lat, samples[0].position.lon};
  for (const auto& s : samples) {
    b.min_lat = std::min(b.min_lat, s.position.lat);
    b.max_lat = std::max(b.max_lat, s.position.lat);
    b.min_lon = std::min(b.min_lon, s.position.lon);
    b.max_lon = std::max(b.max_lon, s.position.lon);
  }
  b.min_lat -= margin_deg;
  b.min_lon -= margin_deg;
  b.max_lat += margin_deg;
  b.max_lon += margin_deg;
  return b;
}

ColorMatrix ColorMatrix::default_matrix() {
  ColorMatrix m;
  for (int v = 1; v <= 5; ++v) {
    for (int a = 1; a <= 5; ++a) {
      const double stress = ((v - 1) + (5 - a)) / 8.0;
      const Rgb c = stress <= 0.5 ? blend(kGreen, kNeutral, stress * 2.0) : blend(kNeutral, kRed, stress * 2.0 - 1.0);
      m.colors_[v - 1][a - 1] = hex(c);
    }
  }
  return m;
}

ColorMatrix ColorMatrix::load(const std::filesystem::path& path) {
  const auto tree = detail::read_ini(path);
  ColorMatrix m = default_matrix();
  const auto section = tree.get_child_optional("colors");
  if (!section) return m;
  for (const auto& [key, value] : *section) {
    if (key.size() != 4 || key[0] != 'v' || key[2] != 'a') {
      throw Error(ErrorCode::InvalidArgument, "bad color matrix key '" + key + "'");
    }
    m.set(key[1] - '0', key[3] - '0', value.data());
  }
  return m;
}

const std::string& ColorMatrix::at(int valence, int arousal) const {
  check_scale(valence, "valence");
  check_scale(arousal, "arousal");
  return colors_[valence - 1][arousal - 1];
}

void ColorMatrix::set(int valence, int arousal, std::string color) {
  check_scale(valence, "valence");
  check_scale(arousal, "arousal");
  if (!is_color(color)) throw Error(ErrorCode::InvalidArgument, "bad color '" + color + "'");
  colors_[valence - 1][arousal - 1] = std::move(color);
}

int round_away_from_neutral(double mean) {
  if (!(mean >= 1.0 && mean <= 5.0)) throw Error(ErrorCode::InvalidArgument, "scale mean outside [1, 5]");
  const double d = mean - 3.0;
  const double r = std::floor(std::fabs(d) + 0.5);
  return 3 + static_cast<int>(d < 0 ? -r : r);
}

StressColor color_for(double mean_valence, double mean_arousal, const ColorMatrix& matrix) {
  StressColor c;
  c.valence = round_away_from_neutral(mean_valence);
  c.arousal = round_away_from_neutral(mean_arousal);
  c.color = matrix.at(c.valence, c.arousal);
  return c;
}

StressQuadTree::StressQuadTree(const GeoBounds& bounds, std::size_t capacity, int max_depth)
    : capacity_(capacity), max_depth_(max_depth) {
  if (!(bounds.min_lat < bounds.max_lat && bounds.min_lon < bounds.max_lon) || !is_valid({bounds.min_lat, bounds.min_lon}) ||
      !is_valid({bounds.max_lat, bounds.max_lon})) {
    throw Error(ErrorCode::InvalidArgument, "bad quad tree bounds");
  }
  if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "capacity must be positive");
  if (max_depth < 0) throw Error(ErrorCode::InvalidArgument, "max depth must not be negative");
  NodeView root;
  root.bounds = bounds;
  nodes_.push_back(root);
  samples_.emplace_back();
}

int StressQuadTree::quadrant(const GeoBounds& b, const GeoPosition& p) {
  const auto c = b.center();
  return (p.lat >= c.lat ? 2 : 0) + (p.lon >= c.lon ? 1 : 0);
}

void StressQuadTree::insert(const StressSample& s) {
  check_scale(s.valence, "valence");
  check_scale(s.arousal, "arousal");
  if (!bounds().contains(s.position)) throw Error(ErrorCode::OutOfBounds, "sample outside the tree bounds");
  std::size_t n = 0;
  for (;;) {
    auto& node = nodes_[n];
    node.count += 1;
    node.valence_sum += s.valence;
    node.arousal_sum += s.arousal;
    if (node.children[0] < 0) break;
    n = static_cast<std::size_t>(node.children[quadrant(node.bounds, s.position)]);
  }
  samples_[n].push_back(s);
  nodes_[n].stored_samples = samples_[n].size();
  if (nodes_[n].count > capacity_ && nodes_[n].depth < max_depth_) split(n);
}

void StressQuadTree::split(std::size_t node) {
  const GeoBounds b = nodes_[node].bounds;
  const auto c = b.center();
  const std::array<GeoBounds, 4> quads = {
      GeoBounds{b.min_lat, b.min_lon, c.lat, c.lon},
      GeoBounds{b.min_lat, c.lon, c.lat, b.max_lon},
      GeoBounds{c.lat, b.min_lon, b.max_lat, c.lon},
      GeoBounds{c.lat, c.lon, b.max_lat, b.max_lon},
  };
  const int depth = nodes_[node].depth + 1;
  for (int q = 0; q < 4; ++q) {
    NodeView child;
    child.bounds = quads[q];
    child.depth = depth;
    nodes_[node].children[q] = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(child);
    samples_.emplace_back();
  }
  auto moved = std::move(samples_[node]);
  samples_[node].clear();
  nodes_[node].stored_samples = 0;
  for (const auto& s : moved) {
    const auto ci = static_cast<std::size_t>(nodes_[node].children[quadrant(b, s.position)]);
    auto& child = nodes_[ci];
    child.count += 1;
    child.valence_sum += s.valence;
    child.arousal_sum += s.arousal;
    samples_[ci].push_back(s);
    child.stored_samples = samples_[ci].size();
  }
  for (int q = 0; q < 4; ++q) {
    const auto ci = static_cast<std::size_t>(nodes_[node].children[q]);
    if (nodes_[ci].count > capacity_ && nodes_[ci].depth < max_depth_) split(ci);
  }
}

std::vector<StressCell> StressQuadTree::cells(std::uint64_t min_count, const ColorMatrix& matrix) const {
  std::vector<StressCell> out;
  std::vector<std::size_t> stack = {0};
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    const auto& node = nodes_[n];
    if (node.children[0] >= 0) {
      for (int q = 3; q >= 0; --q) stack.push_back(static_cast<std::size_t>(node.children[q]));
      continue;
    }
    if (node.count == 0 || node.count < min_count) continue;
    StressCell cell;
    cell.bounds = node.bounds;
    cell.count = node.count;
    cell.mean_valence = static_cast<double>(node.valence_sum) / static_cast<double>(node.count);
    cell.mean_arousal = static_cast<double>(node.arousal_sum) / static_cast<double>(node.count);
    cell.color = color_for(cell.mean_valence, cell.mean_arousal, matrix);
    out.push_back(std::move(cell));
  }
  return out;
}

std::string stress_cells_geojson(const std::vector<StressCell>& cells) {
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    const auto& b = c.bounds;
    nlohmann::ordered_json ring = nlohmann::ordered_json::array({
        {b.min_lon, b.min_lat},
        {b.max_lon, b.min_lat},
        {b.max_lon, b.max_lat},
        {b.min_lon, b.max_lat},
        {b.min_lon, b.min_lat},
    });
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "Polygon"}, {"coordinates", nlohmann::ordered_json::array({ring})}};
    f["properties"] = {{"count", c.count},
                       {"mean_valence", c.mean_valence},
                       {"mean_arousal", c.mean_arousal},
                       {"valence_cell", c.color.valence},
                       {"arousal_cell", c.color.arousal},
                       {"color", c.color.color}};
    features.push_back(std::move(f));
  }
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  return doc.dump(2) + "\n";
}

}  // namespace ksf
