// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "ksfusion/messages.hpp"

namespace ksf {

struct Provenance {
  ObservationSource source = ObservationSource::CpmDetection;
  StationId reporter;
  std::uint32_t object_id = 0;

  friend auto operator<=>(const Provenance&, const Provenance&) = default;
};

/// A deduplicated road user. The first provenance entry is the member whose
/// kinematics were used (or the lowest member when positions were averaged).
struct FusedObject {
  std::uint32_t fused_id = 0;
  ObjectClassification classification = ObjectClassification::Unknown;
  GeoPosition position;
  double speed = 0.0;
  CourseDeg course;
  std::vector<Provenance> provenance;
  std::optional<std::uint32_t> lane_id;

  /// Identifier shown in reports: the object id of the leading member.
  std::uint32_t display_id() const { return provenance.empty() ? fused_id : provenance.front().object_id; }

  friend bool operator==(const FusedObject&, const FusedObject&) = default;
};

struct LaneState {
  MapLane lane;
  SignalPhase phase = SignalPhase::Unknown;

  friend bool operator==(const LaneState&, const LaneState&) = default;
};

struct TopologyWithPhases {
  std::uint32_t intersection_id = 0;
  std::vector<LaneState> lanes;

  friend bool operator==(const TopologyWithPhases&, const TopologyWithPhases&) = default;
};

struct SituationRecord {
  std::uint64_t situation_id = 0;
  GeoPosition center;
  double radius_m = 0.0;
  TimeMs timestamp = 0;
  StationId vut;
  std::vector<FusedObject> objects;
  std::optional<TopologyWithPhases> topology;
  std::optional<VutSensorExtract> vut_sensor;
  std::optional<DriverStateSample> driver;
  std::vector<HazardEvent> hazards;
  std::optional<EnvironmentSample> environment;

  friend bool operator==(const SituationRecord&, const SituationRecord&) = default;
};

/// The fused object carrying the vehicle's own sensor observation, if any.
const FusedObject* find_vut_object(const SituationRecord& s);

}  // namespace ksf
