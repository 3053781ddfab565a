// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ksfusion/geo.hpp"

namespace ksf {

/// Milliseconds since the Unix epoch.
using TimeMs = std::int64_t;

/// Temporary ITS station identifier. Zero means "no station".
struct StationId {
  std::uint32_t value = 0;

  friend auto operator<=>(const StationId&, const StationId&) = default;
};

enum class ObjectClassification : std::uint8_t {
  Unknown = 0,
  Pedestrian = 1,
  Cyclist = 2,
  Moped = 3,
  Motorcycle = 4,
  PassengerCar = 5,
  Bus = 6,
  LightTruck = 7,
  HeavyTruck = 8,
  Tram = 11,
};

/// Unknown codes decode to ObjectClassification::Unknown.
ObjectClassification classification_from_code(unsigned code);
constexpr unsigned to_code(ObjectClassification c) { return static_cast<unsigned>(c); }
/// Report label, e.g. "PASSENGER CAR".
std::string_view display_name(ObjectClassification c);
std::optional<ObjectClassification> classification_from_name(std::string_view name);

enum class ObservationSource : std::uint8_t {
  CamSelfReport = 1,
  CpmDetection = 2,
  VutLocalSensor = 3,
};

std::string_view to_string(ObservationSource s);

struct TrafficObjectObservation {
  std::uint32_t object_id = 0;
  ObjectClassification classification = ObjectClassification::Unknown;
  GeoPosition position;
  double speed = 0.0;  // m/s
  CourseDeg course;
  TimeMs timestamp = 0;
  ObservationSource source = ObservationSource::CpmDetection;
  StationId reporter;

  friend bool operator==(const TrafficObjectObservation&, const TrafficObjectObservation&) = default;
};

struct CamExtract {
  StationId originator;
  TimeMs generation_time = 0;
  GeoPosition position;
  double speed = 0.0;
  CourseDeg course;
  ObjectClassification classification = ObjectClassification::PassengerCar;

  friend bool operator==(const CamExtract&, const CamExtract&) = default;
};

struct CpmDetection {
  std::uint32_t object_id = 0;
  ObjectClassification classification = ObjectClassification::Unknown;
  GeoPosition position;
  double speed = 0.0;
  CourseDeg course;

  friend bool operator==(const CpmDetection&, const CpmDetection&) = default;
};

struct CpmExtract {
  StationId originator;  // the sensing station
  TimeMs generation_time = 0;
  std::vector<CpmDetection> detections;

  friend bool operator==(const CpmExtract&, const CpmExtract&) = default;
};

enum class SignalPhase : std::uint8_t { Red = 0, RedAmber = 1, Green = 2, Amber = 3, Unknown = 4 };

std::string_view to_string(SignalPhase p);

struct SpatExtract {
  std::uint32_t intersection_id = 0;
  std::uint16_t signal_group = 0;
  SignalPhase phase = SignalPhase::Unknown;
  TimeMs change_time = 0;

  friend bool operator==(const SpatExtract&, const SpatExtract&) = default;
};

struct MapLane {
  std::uint32_t lane_id = 0;
  std::uint16_t signal_group = 0;
  std::vector<GeoPosition> polyline;  // at least two points
  bool ingress = true;

  friend bool operator==(const MapLane&, const MapLane&) = default;
};

struct MapTopology {
  std::uint32_t intersection_id = 0;
  std::vector<MapLane> lanes;

  friend bool operator==(const MapTopology&, const MapTopology&) = default;
};

/// Throws Error(InvalidArgument) when a lane polyline has fewer than two points.
void validate(const MapTopology& map);

enum class HazardKind : std::uint8_t { PanicBraking = 1, EmergencyVehicleWarning = 2, Other = 3 };

std::string_view to_string(HazardKind k);

struct HazardEvent {
  HazardKind kind = HazardKind::Other;
  TimeMs timestamp = 0;
  GeoPosition position;
  StationId source;

  friend bool operator==(const HazardEvent&, const HazardEvent&) = default;
};

enum class DoorState : std::uint8_t { Closed = 0, Ajar = 1, Open = 2 };

namespace lights {
inline constexpr std::uint8_t kLowBeam = 1u << 0;
inline constexpr std::uint8_t kHighBeam = 1u << 1;
inline constexpr std::uint8_t kFog = 1u << 2;
inline constexpr std::uint8_t kHazard = 1u << 3;
inline constexpr std::uint8_t kTurnLeft = 1u << 4;
inline constexpr std::uint8_t kTurnRight = 1u << 5;
inline constexpr std::uint8_t kAll = 0x3f;
}  // namespace lights

/// Field groups of the vehicle sensor extract; each group has its own
/// transmit period in the vehicle data aggregator.
enum class VutSignalGroup : std::uint8_t {
  Dynamics = 0,  // speed, accelerations, yaw rate, steering
  Brake = 1,
  Gnss = 2,
  Body = 3,  // lights, doors, gear, clutch
  Rain = 4,  // rain sensor, wiper
};

inline constexpr std::size_t kVutSignalGroupCount = 5;
inline constexpr std::uint8_t kAllVutGroups = 0x1f;

constexpr std::uint8_t group_bit(VutSignalGroup g) {
  return static_cast<std::uint8_t>(1u << static_cast<unsigned>(g));
}

struct VutSensorExtract {
  TimeMs timestamp = 0;
  std::uint8_t groups = kAllVutGroups;  // which groups were due when sampled
  bool brake_actuated = false;
  bool abs_active = false;
  bool panic_braking = false;
  bool clutch_pressed = false;
  std::int8_t gear = 0;  // -1 reverse, 0 neutral
  std::array<DoorState, 4> doors{};
  std::uint8_t exterior_lights = 0;  // lights::k* bits
  GeoPosition gnss;
  CourseDeg gnss_heading;
  double speed = 0.0;               // m/s
  double accel_longitudinal = 0.0;  // m/s^2
  double accel_lateral = 0.0;
  std::uint8_t rain_intensity = 0;  // 0..7
  bool wiper_active = false;
  double yaw_rate = 0.0;                // deg/s
  double steering_wheel_angle = 0.0;    // deg
  double steering_wheel_velocity = 0.0; // deg/s

  bool has(VutSignalGroup g) const { return (groups & group_bit(g)) != 0; }

  friend bool operator==(const VutSensorExtract&, const VutSensorExtract&) = default;
};

struct DriverStateSample {
  TimeMs timestamp = 0;
  std::uint8_t valence = 3;  // SAM scale 1..5, 1 = pleased
  std::uint8_t arousal = 3;  // SAM scale 1..5, 1 = excited
  std::optional<double> heart_rate_bpm;
  bool self_reported = false;

  friend bool operator==(const DriverStateSample&, const DriverStateSample&) = default;
};

struct EnvironmentSample {
  TimeMs timestamp = 0;
  std::uint32_t validity_duration_s = 0;
  GeoPosition area_center;
  double area_radius_m = 0.0;
  double temperature_c = 0.0;
  double precipitation_mm_h = 0.0;
  double wind_speed_ms = 0.0;
  CourseDeg wind_direction;
  double illuminance_lux = 0.0;
  double visibility_m = 0.0;
  double pressure_hpa = 0.0;
  double humidity_pct = 0.0;
  double cloudiness_pct = 0.0;

  friend bool operator==(const EnvironmentSample&, const EnvironmentSample&) = default;
};

void validate(const VutSensorExtract& s);
void validate(const DriverStateSample& s);
void validate(const EnvironmentSample& s);

TrafficObjectObservation observation_from_cam(const CamExtract& cam);

/// One observation per detection, reported by the sensing station.
/// Throws Error(EmptyDetectionList) for a CPM without detections.
std::vector<TrafficObjectObservation> observations_from_cpm(const CpmExtract& cpm);

/// The vehicle's own GNSS state as a traffic object observation.
TrafficObjectObservation observation_from_vut(const VutSensorExtract& s, StationId vut);

}  // namespace ksf
