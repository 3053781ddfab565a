// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <variant>
#include <vector>

#include "ksfusion/messages.hpp"
#include "ksfusion/wire.hpp"

namespace ksf {

/// One detection of a CPM, carried as its own wire record.
struct CpmDetectionRecord {
  StationId originator;
  TimeMs generation_time = 0;
  CpmDetection detection;

  friend bool operator==(const CpmDetectionRecord&, const CpmDetectionRecord&) = default;
};

using RecordBody = std::variant<CamExtract, CpmDetectionRecord, SpatExtract, VutSensorExtract,
                                DriverStateSample, EnvironmentSample, HazardEvent>;

/// A typed record as queued by an aggregator and stored by the backend.
///
/// `time` and `position` mirror the body's own timestamp and position where
/// the body has one. SPAT and driver samples have no position of their own;
/// theirs is the reporting station's (roadside unit or vehicle) at that time.
struct RawRecord {
  StationId reporter;  // station that forwarded the record
  TimeMs time = 0;
  GeoPosition position;
  RecordBody body;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

wire::RecordKind kind_of(const RecordBody& body);

RawRecord make_record(StationId reporter, const CamExtract& cam);
RawRecord make_record(StationId reporter, const CpmDetectionRecord& det);
RawRecord make_record(StationId reporter, const SpatExtract& spat, const GeoPosition& where);
RawRecord make_record(StationId reporter, const VutSensorExtract& s);
RawRecord make_record(StationId reporter, const DriverStateSample& d, const GeoPosition& where);
RawRecord make_record(StationId reporter, const EnvironmentSample& e);
RawRecord make_record(StationId reporter, const HazardEvent& h);

/// Payload layouts (little-endian), every payload starts with one byte
/// holding the sub-grid position remainder (lat_rem * 10 + lon_rem, in 1e-7
/// degree). Time is carried at 10 ms resolution.
///   CAM      originator u32 | class u8 | speed u16 cm/s | course u16 0.01 deg
///   CPM det  originator u32 | object_id u32 | class u8 | speed u16 | course u16
///   SPAT     intersection u32 | signal_group u16 | phase u8
///   VUT      groups u8 | flags u8 | gear i8 | doors u8 | lights u8 |
///            heading u16 | speed u16 | acc_lon i16 cm/s2 | acc_lat i16 |
///            rain u8 | yaw_rate i16 0.01 deg/s | steering i16 0.1 deg |
///            steering_rate i16 0.1 deg/s
///   DRIVER   valence u8 | arousal u8 | heart_rate u16 0.1 bpm (0 = none) |
///            self_reported u8
///   ENV      validity u32 s | radius u32 dm | temperature i16 0.1 C |
///            precipitation u16 0.1 mm/h | wind u16 0.1 m/s | wind_dir u16 |
///            illuminance u32 lux | visibility u32 m | pressure u16 0.1 hPa |
///            humidity u16 0.01 % | cloudiness u16 0.01 %
///   HAZARD   kind u8 | source u32
/// Throws Error(InvalidArgument) when a field does not fit its encoding.
wire::AbsoluteRecord encode_record(const RawRecord& r);

/// Throws Error(BadPayload) for malformed payloads.
RawRecord decode_record(const wire::AbsoluteRecord& a, StationId reporter);

/// The record as it will look after a trip over the wire.
RawRecord quantize(const RawRecord& r);

std::vector<RawRecord> decode_records(const wire::BatchEnvelope& e);

/// Sorts by time and packs into envelopes for `station`.
std::vector<wire::BatchEnvelope> pack_records(std::vector<RawRecord> records, StationId station);

}  // namespace ksf
