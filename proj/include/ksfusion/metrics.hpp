// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksfusion/situation.hpp"
#include "ksfusion/stressmap.hpp"

namespace ksf {

struct KinematicState {
  GeoPosition position;
  double speed = 0.0;  // m/s
  CourseDeg course;
};

struct MetricFloors {
  double tti_min_speed_ms = 0.1;
  double ru_min_closing_ms = 0.05;

  void validate() const;
};

/// Milliseconds until each party reaches the crossing point of the two
/// forward rays; both -1 when there is no such point ahead of both.
struct TtiPair {
  std::int64_t obj_ms = -1;
  std::int64_t vut_ms = -1;

  bool intersects() const { return obj_ms >= 0; }
  friend bool operator==(const TtiPair&, const TtiPair&) = default;
};

TtiPair compute_tti(const KinematicState& vut, const KinematicState& obj, const MetricFloors& floors = {});

/// Relative urgency in milliseconds to contact at the current closing rate;
/// nullopt is the MAX sentinel (not closing).
using RelativeUrgency = std::optional<std::int64_t>;

RelativeUrgency compute_ru(const KinematicState& vut, const KinematicState& obj, const MetricFloors& floors = {});

struct EvaluationRow {
  std::uint32_t object_id = 0;
  ObjectClassification classification = ObjectClassification::Unknown;
  GeoPosition position;
  double speed = 0.0;
  CourseDeg course;
  double distance_m = 0.0;
  TtiPair tti;
  RelativeUrgency ru;

  friend bool operator==(const EvaluationRow&, const EvaluationRow&) = default;
};

/// The vehicle's fused object, or its sensor extract when no object carries
/// it. Throws Error(MissingVutState).
KinematicState vut_state(const SituationRecord& s);

/// One row per fused object other than the vehicle, ordered by object id.
/// Throws Error(MissingVutState).
std::vector<EvaluationRow> evaluate_situation(const SituationRecord& s, const MetricFloors& floors = {});

inline constexpr const char* kEvaluationCsvHeader = "ID,Classification,Lat,Lon,Speed,Course,Distance,TTI_OBJ,TTI_VUT,RU";

/// Degrees with seven decimals and trailing zeros removed, e.g. "6.983114".
std::string format_degrees(double deg);

std::string format_csv_row(const EvaluationRow& row);

/// Header line plus one line per row, each terminated by '\n'.
std::string evaluation_csv(std::span<const EvaluationRow> rows);

struct HandoverConfig {
  std::int64_t min_tti_ms = 3000;
  double near_distance_m = 25.0;
};

struct HandoverSummary {
  std::optional<std::int64_t> min_tti_ms;  // over both TTI columns
  std::size_t near_objects = 0;
  std::size_t hazard_count = 0;
  std::optional<StressColor> driver_cell;
  bool suitable = true;
};

/// Unsuitable when a finite TTI lies below min_tti_ms or a panic braking
/// event is linked.
HandoverSummary handover_summary(std::span<const EvaluationRow> rows, const std::optional<DriverStateSample>& driver,
                                 std::span<const HazardEvent> hazards, const HandoverConfig& cfg = {},
                                 const ColorMatrix& matrix = ColorMatrix::default_matrix());

/// Least-squares position whose distances best match the given ranges,
/// solved by Gauss-Newton on the local plane around the anchors' centroid.
struct Trilateration {
  GeoPosition position;
  std::vector<double> residuals_m;  // computed - given, per anchor
  double rms_m = 0.0;
  int iterations = 0;
};

struct RangeAnchor {
  GeoPosition position;
  double distance_m = 0.0;
};

/// Throws Error(InvalidArgument) with fewer than three anchors.
Trilateration trilaterate(std::span<const RangeAnchor> anchors);

}  // namespace ksf
