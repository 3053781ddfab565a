// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ksfusion/aggregators.hpp"
#include "ksfusion/records.hpp"
#include "ksfusion/situation.hpp"

namespace ksf {

struct SourceNoise {
  double position_m = 0.5;  // per axis
  double course_deg = 2.0;
  double speed_ms = 0.2;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  double duration_s = 20.0;
  TimeMs start_ms = 1'600'000'000'000;
  GeoPosition center{49.2339667, 6.9822499};
  int vehicles = 20;
  int pedestrians = 10;
  double cooperative_fraction = 2.0 / 3.0;  // of vehicles + pedestrians, vehicles first
  double camera_radius_m = 150.0;
  double v2x_range_m = 500.0;
  SourceNoise cam_noise{0.5, 2.0, 0.2};
  SourceNoise cpm_noise{0.5, 3.0, 0.3};
  SourceNoise vut_noise{0.3, 1.0, 0.1};
  double cam_hz = 10.0;
  double cpm_hz = 10.0;
  double vut_hz = 10.0;
  double driver_hz = 1.0;
  double spat_hz = 1.0;
  TimeMs flush_interval_ms = 1000;  // records of one interval share batches
  /// Per-group vehicle periods; when unset every group is sent at vut_hz.
  std::optional<TransmitSchedule> vda_schedule;
  StationId vut{9001};
  StationId rsu{900};
  std::uint32_t intersection_id = 1;

  /// Throws Error(InvalidArgument). Every rate must give a period that is a
  /// whole multiple of 10 ms.
  void validate() const;

  TimeMs end_ms() const;
  /// Middle of the run on the 100 ms grid; the default situation time.
  TimeMs mid_ms() const;

  /// INI file; see data/demo_scenario.ini for the keys. Missing keys keep
  /// their defaults. Throws Error(Io, InvalidArgument).
  static ScenarioConfig load(const std::filesystem::path& path);
};

/// Emission period in ms for a rate in Hz.
TimeMs period_for(double hz);

/// Number of emissions of a stream with the given rate over the run.
std::size_t emissions(const ScenarioConfig& cfg, double hz);

struct TruthSegment {
  TimeMs start = 0;
  LocalPoint origin;  // relative to the scenario center
  double speed = 0.0;
  CourseDeg course;

  friend bool operator==(const TruthSegment&, const TruthSegment&) = default;
};

struct TruthObject {
  std::uint32_t truth_id = 0;
  ObjectClassification classification = ObjectClassification::PassengerCar;
  bool cooperative = false;
  bool is_vut = false;
  StationId station;           // CAM originator or the vehicle under test
  std::uint32_t track_id = 0;  // camera object id
  std::vector<TruthSegment> segments;

  /// Active segment at t (the first one before the run starts).
  const TruthSegment& segment_at(TimeMs t) const;
  LocalPoint local_at(TimeMs t) const;

  friend bool operator==(const TruthObject&, const TruthObject&) = default;
};

struct GroundTruth {
  GeoPosition center;
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;
  std::vector<TruthObject> objects;
  MapTopology topology;

  GeoPosition position_at(const TruthObject& o, TimeMs t) const;
  const TruthObject* by_track(std::uint32_t track_id) const;
  const TruthObject* by_station(StationId station) const;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct Scenario {
  GroundTruth truth;
  std::vector<wire::BatchEnvelope> batches;  // roadside unit first, then the vehicle
};

/// Deterministic for a fixed config. Throws Error(InvalidArgument) when the
/// scene cannot be laid out without near-identical neighbours.
Scenario generate(const ScenarioConfig& cfg);

std::string ground_truth_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const std::string& text);

struct Score {
  std::size_t fused = 0;
  std::size_t truths = 0;   // ground truth objects inside the situation area
  std::size_t matched = 0;  // one-to-one matches within the radius
  double precision = 0.0;
  double recall = 0.0;
  double duplicate_rate = 0.0;
};

/// Greedy one-to-one matching by ascending distance at the situation time.
/// precision = matched / fused, recall = matched / truths,
/// duplicate_rate = (fused - matched) / truths. Empty denominators give 1, 1, 0.
Score score(const GroundTruth& gt, const SituationRecord& s, double match_radius_m = 3.0);

}  // namespace ksf
