// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ksfusion/geo.hpp"
#include "ksfusion/messages.hpp"

namespace ksf {

struct StressSample {
  GeoPosition position;
  TimeMs timestamp = 0;
  std::uint8_t valence = 3;  // 1 pleasant .. 5 unpleasant
  std::uint8_t arousal = 3;  // 1 excited .. 5 calm
};

struct GeoBounds {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;

  bool contains(const GeoPosition& p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
  GeoPosition center() const { return {(min_lat + max_lat) / 2.0, (min_lon + max_lon) / 2.0}; }

  friend bool operator==(const GeoBounds&, const GeoBounds&) = default;
};

/// Smallest bounds holding every sample, grown by `margin_deg` on each side.
GeoBounds bounds_of(const std::vector<StressSample>& samples, double margin_deg = 1e-6);

/// 5x5 matrix of "#rrggbb" colors indexed [valence - 1][arousal - 1].
class ColorMatrix {
 public:
  /// Green for the pleasant/calm corner (1, 5), gray #808080 for the neutral
  /// cell (3, 3), red for the unpleasant/excited corner (5, 1), blended
  /// linearly along (valence - 1 + 5 - arousal) / 8.
  static ColorMatrix default_matrix();

  /// INI file with a [colors] section and keys v<valence>a<arousal>; cells
  /// not listed keep their default color. Throws Error(InvalidArgument, Io).
  static ColorMatrix load(const std::filesystem::path& path);

  const std::string& at(int valence, int arousal) const;
  void set(int valence, int arousal, std::string color);

  friend bool operator==(const ColorMatrix&, const ColorMatrix&) = default;

 private:
  std::array<std::array<std::string, 5>, 5> colors_;
};

struct StressColor {
  int valence = 3;  // matrix cell, 1..5
  int arousal = 3;
  std::string color;

  friend bool operator==(const StressColor&, const StressColor&) = default;
};

/// Rounds each mean half away from the neutral value 3, e.g. 2.5 -> 2 and
/// 3.5 -> 4. Throws Error(InvalidArgument) outside [1, 5].
int round_away_from_neutral(double mean);

StressColor color_for(double mean_valence, double mean_arousal,
                      const ColorMatrix& matrix = ColorMatrix::default_matrix());

struct StressCell {
  GeoBounds bounds;
  std::uint64_t count = 0;
  double mean_valence = 0.0;
  double mean_arousal = 0.0;
  StressColor color;

  friend bool operator==(const StressCell&, const StressCell&) = default;
};

/// Point quad tree over a lat/lon rectangle. A node holds the sample count
/// and integer valence/arousal sums; leaves also keep their samples until
/// they split into four equal quadrants. A sample on a split line belongs to
/// the northern/eastern quadrant.
class StressQuadTree {
 public:
  explicit StressQuadTree(const GeoBounds& bounds, std::size_t capacity = 16, int max_depth = 12);

  /// Throws Error(OutOfBounds) or Error(InvalidArgument) for scale values
  /// outside 1..5.
  void insert(const StressSample& s);

  /// One cell per leaf with at least `min_count` samples, in Z-order.
  std::vector<StressCell> cells(std::uint64_t min_count = 1,
                                const ColorMatrix& matrix = ColorMatrix::default_matrix()) const;

  struct NodeView {
    GeoBounds bounds;
    int depth = 0;
    std::uint64_t count = 0;
    std::uint64_t valence_sum = 0;
    std::uint64_t arousal_sum = 0;
    std::array<std::int32_t, 4> children{-1, -1, -1, -1};  // SW, SE, NW, NE
    std::size_t stored_samples = 0;
  };

  const std::vector<NodeView>& nodes() const { return nodes_; }
  const GeoBounds& bounds() const { return nodes_.front().bounds; }
  std::size_t capacity() const { return capacity_; }
  int max_depth() const { return max_depth_; }
  std::uint64_t size() const { return nodes_.front().count; }

 private:
  static int quadrant(const GeoBounds& b, const GeoPosition& p);
  void split(std::size_t node);

  std::size_t capacity_;
  int max_depth_;
  std::vector<NodeView> nodes_;
  std::vector<std::vector<StressSample>> samples_;  // per node, leaves only
};

/// FeatureCollection with one closed rectangle Polygon per cell and the
/// properties count, mean_valence, mean_arousal, valence_cell, arousal_cell
/// and color.
std::string stress_cells_geojson(const std::vector<StressCell>& cells);

}  // namespace ksf
