// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ksfusion/situation.hpp"
#include "ksfusion/store.hpp"

namespace ksf {

struct SimilarityThresholds {
  double max_position_m = 2.5;
  double max_course_deg = 15.0;
  double max_speed_ms = 1.5;

  void validate() const;
};

/// Course bins are `clamp(width_numerator / speed, min, max)` degrees wide,
/// rounded to whole degrees; objects slower than speed_floor_ms share one
/// cluster that is compared against everything.
struct CourseClusterConfig {
  double speed_floor_ms = 1.5;
  double width_numerator = 450.0;  // degrees * m/s
  int min_width_deg = 10;
  int max_width_deg = 45;

  void validate() const;
};

struct FusionConfig {
  TimeMs window_ms = 500;
  double radius_m = 300.0;
  TimeMs vut_fix_tolerance_ms = 2000;
  double max_lateral_m = 2.0;
  SimilarityThresholds thresholds;
  CourseClusterConfig clusters;
};

struct RawSlice {
  GeoPosition vut_fix;
  TimeMs vut_fix_time = 0;
  std::vector<RawRecord> records;
};

/// Raw records within the time window and radius around the vehicle's GNSS
/// fix nearest to `t`. Throws Error(NoVutFix) if there is no fix within
/// vut_fix_tolerance_ms.
RawSlice query_window(StationId vut, TimeMs t, const Store& store, const FusionConfig& cfg = {});

/// Bin width for a speed, or 0 for the slow cluster.
int course_bin_width(double speed, const CourseClusterConfig& cfg);

struct CourseCluster {
  bool slow = false;
  int width_deg = 360;
  int bin = 0;
  std::vector<std::size_t> members;  // indexes into the input

  double lower_deg() const { return slow ? 0.0 : static_cast<double>(bin * width_deg); }
  double upper_deg() const;
};

std::vector<CourseCluster> cluster_by_course(std::span<const TrafficObjectObservation> obs,
                                             const CourseClusterConfig& cfg = {});

/// Whether two clusters can hold a similar pair, i.e. either is the slow
/// cluster or their course ranges are within max_course_deg of each other.
bool clusters_may_match(const CourseCluster& a, const CourseCluster& b, const SimilarityThresholds& th);

bool is_similar(const TrafficObjectObservation& a, const TrafficObjectObservation& b,
                const SimilarityThresholds& th = {});

struct DedupStats {
  std::size_t comparisons = 0;
  std::size_t clusters = 0;
};

/// Connected components of the similarity relation, found by comparing pairs
/// only within the same or neighbouring course clusters. Each group is sorted
/// and the groups are ordered by their first index.
std::vector<std::vector<std::size_t>> similarity_groups(std::span<const TrafficObjectObservation> obs,
                                                        const SimilarityThresholds& th,
                                                        const CourseClusterConfig& cfg, DedupStats* stats = nullptr);

/// Throws Error(EmptyGroup).
FusedObject merge_group(std::span<const TrafficObjectObservation> group);

/// Merged groups sorted by (lat, lon, course) with fused ids 1..n.
std::vector<FusedObject> dedup(std::span<const TrafficObjectObservation> obs, const SimilarityThresholds& th = {},
                               const CourseClusterConfig& cfg = {}, DedupStats* stats = nullptr);

/// Phase of each lane from the SPAT extract of its signal group nearest to
/// `t` (the earlier one on a tie); Unknown without one.
TopologyWithPhases join_topology(const MapTopology& map, std::span<const SpatExtract> spats, TimeMs t);

/// Assigns each object the lane with the smallest distance to its polyline,
/// if that distance is at most max_lateral_m; ties go to the lower lane id.
void link_lanes(std::vector<FusedObject>& objects, const MapTopology& map, double max_lateral_m = 2.0);

/// Traffic-object observations from CAM, CPM and the vehicle's own sensor
/// records. For each (source, reporter, object) the observation closest to
/// `t` is kept and dead-reckoned to `t` along its course.
std::vector<TrafficObjectObservation> normalize(std::span<const RawRecord> records, StationId vut, TimeMs t);

/// Builds the situation without persisting it (situation_id stays 0).
SituationRecord build_situation(StationId vut, TimeMs t, const Store& store, const FusionConfig& cfg = {});

/// Builds and persists the situation; the returned record carries its id.
SituationRecord fuse_situation(StationId vut, TimeMs t, Store& store, const FusionConfig& cfg = {});

}  // namespace ksf
