// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/messages.hpp"

#include <string>

#include "ksfusion/error.hpp"

namespace ksf {

namespace {

constexpr std::array kClassifications = {
    ObjectClassification::Unknown,     ObjectClassification::Pedestrian,
    ObjectClassification::Cyclist,     ObjectClassification::Moped,
    ObjectClassification::Motorcycle,  ObjectClassification::PassengerCar,
    ObjectClassification::Bus,         ObjectClassification::LightTruck,
    ObjectClassification::HeavyTruck,  ObjectClassification::Tram,
};

}  // namespace

ObjectClassification classification_from_code(unsigned code) {
  for (auto c : kClassifications) {
    if (to_code(c) == code) return c;
  }
  return ObjectClassification::Unknown;
}

std::string_view display_name(ObjectClassification c) {
  switch (c) {
    case ObjectClassification::Unknown: return "UNKNOWN";
    case ObjectClassification::Pedestrian: return "PEDESTRIAN";
    case ObjectClassification::Cyclist: return "CYCLIST";
    case ObjectClassification::Moped: return "MOPED";
    case ObjectClassification::Motorcycle: return "MOTORCYCLE";
    case ObjectClassification::PassengerCar: return "PASSENGER CAR";
    case ObjectClassification::Bus: return "BUS";
    case ObjectClassification::LightTruck: return "LIGHT TRUCK";
    case ObjectClassification::HeavyTruck: return "HEAVY TRUCK";
    case ObjectClassification::Tram: return "TRAM";
  }
  return "UNKNOWN";
}

std::optional<ObjectClassification> classification_from_name(std::string_view name) {
  for (auto c : kClassifications) {
    if (display_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(ObservationSource s) {
  switch (s) {
    case ObservationSource::CamSelfReport: return "CAM_SELF_REPORT";
    case ObservationSource::CpmDetection: return "CPM_DETECTION";
    case ObservationSource::VutLocalSensor: return "VUT_LOCAL_SENSOR";
  }
  return "?";
}

std::string_view to_string(SignalPhase p) {
  switch (p) {
    case SignalPhase::Red: return "RED";
    case SignalPhase::RedAmber: return "RED_AMBER";
    case SignalPhase::Green: return "GREEN";
    case SignalPhase::Amber: return "AMBER";
    case SignalPhase::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::string_view to_string(HazardKind k) {
  switch (k) {
    case HazardKind::PanicBraking: return "PANIC_BRAKING";
    case HazardKind::EmergencyVehicleWarning: return "EMERGENCY_VEHICLE_WARNING";
    case HazardKind::Other: return "OTHER";
  }
  return "OTHER";
}

void validate(const MapTopology& map) {
  for (const auto& lane : map.lanes) {
    if (lane.polyline.size() < 2) {
      throw Error(ErrorCode::InvalidArgument,
                  "lane " + std::to_string(lane.lane_id) + " has fewer than two points");
    }
  }
}

void validate(const VutSensorExtract& s) {
  if (s.rain_intensity > 7) throw Error(ErrorCode::InvalidArgument, "rain intensity above 7");
  if (s.gear < -1) throw Error(ErrorCode::InvalidArgument, "gear below -1");
  if (s.speed < 0.0) throw Error(ErrorCode::InvalidArgument, "negative speed");
}

void validate(const DriverStateSample& s) {
  if (s.valence < 1 || s.valence > 5 || s.arousal < 1 || s.arousal > 5) {
    throw Error(ErrorCode::InvalidArgument, "valence and arousal must be in 1..5");
  }
  if (s.heart_rate_bpm && !(*s.heart_rate_bpm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "heart rate must be positive");
  }
}

void validate(const EnvironmentSample& s) {
  if (s.humidity_pct < 0.0 || s.humidity_pct > 100.0 || s.cloudiness_pct < 0.0 ||
      s.cloudiness_pct > 100.0) {
    throw Error(ErrorCode::InvalidArgument, "humidity and cloudiness must be in [0, 100]");
  }
}

TrafficObjectObservation observation_from_cam(const CamExtract& cam) {
  TrafficObjectObservation o;
  o.object_id = cam.originator.value;
  o.classification = cam.classification;
  o.position = cam.position;
  o.speed = cam.speed;
  o.course = cam.course;
  o.timestamp = cam.generation_time;
  o.source = ObservationSource::CamSelfReport;
  o.reporter = cam.originator;
  return o;
}

std::vector<TrafficObjectObservation> observations_from_cpm(const CpmExtract& cpm) {
  if (cpm.detections.empty()) {
    throw Error(ErrorCode::EmptyDetectionList, "CPM without detections");
  }
  std::vector<TrafficObjectObservation> out;
  out.reserve(cpm.detections.size());
  for (const auto& d : cpm.detections) {
    TrafficObjectObservation o;
    o.object_id = d.object_id;
    o.classification = d.classification;
    o.position = d.position;
    o.speed = d.speed;
    o.course = d.course;
    o.timestamp = cpm.generation_time;
    o.source = ObservationSource::CpmDetection;
    o.reporter = cpm.originator;
    out.push_back(o);
  }
  return out;
}

TrafficObjectObservation observation_from_vut(const VutSensorExtract& s, StationId vut) {
  TrafficObjectObservation o;
  o.object_id = vut.value;
  o.classification = ObjectClassification::PassengerCar;
  o.position = s.gnss;
  o.speed = s.speed;
  o.course = s.gnss_heading;
  o.timestamp = s.timestamp;
  o.source = ObservationSource::VutLocalSensor;
  o.reporter = vut;
  return o;
}

}  // namespace ksf
