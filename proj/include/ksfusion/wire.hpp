// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ksfusion/messages.hpp"

namespace ksf::wire {

/// Batch layout, all little-endian:
///   "KSB1" | station u32 | ref_time u64 | ref_lat i32 | ref_lon i32 | count u16
///   then per record: kind u8 | rel_time u16 | rel_lat i16 | rel_lon i16 |
///   payload_len u16 | payload
/// Reference coordinates are 1e-7 degree, relative ones 1e-6 degree, and
/// relative time counts 10 ms steps after ref_time.
inline constexpr std::array<std::uint8_t, 4> kMagic = {'K', 'S', 'B', '1'};
inline constexpr std::size_t kHeaderSize = 26;
inline constexpr std::size_t kRecordHeadSize = 9;
inline constexpr std::int64_t kTimeStepMs = 10;
inline constexpr std::int32_t kPositionStepE7 = 10;
inline constexpr std::int32_t kMaxRelOffset = 32767;
inline constexpr std::uint32_t kMaxRelTime = 65535;
inline constexpr std::size_t kMaxRecords = 65535;
inline constexpr std::uint32_t kMaxFrameSize = 64u << 20;

enum class RecordKind : std::uint8_t {
  Cam = 1,
  CpmDetection = 2,
  Spat = 3,
  VutSensor = 4,
  DriverState = 5,
  Environment = 6,
  Hazard = 7,
};

inline constexpr std::array kAllRecordKinds = {
    RecordKind::Cam,         RecordKind::CpmDetection, RecordKind::Spat,  RecordKind::VutSensor,
    RecordKind::DriverState, RecordKind::Environment,  RecordKind::Hazard,
};

bool is_known_kind(std::uint8_t kind);

/// Fixed payload length of each record kind.
std::size_t payload_size(RecordKind kind);

struct MetaBlock {
  StationId station;
  std::uint64_t ref_time = 0;
  std::int32_t ref_lat_e7 = 0;
  std::int32_t ref_lon_e7 = 0;
  std::uint16_t record_count = 0;

  friend bool operator==(const MetaBlock&, const MetaBlock&) = default;
};

struct DeltaRecord {
  RecordKind kind = RecordKind::Cam;
  std::uint16_t rel_time = 0;
  std::int16_t rel_lat = 0;
  std::int16_t rel_lon = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const DeltaRecord&, const DeltaRecord&) = default;
};

struct BatchEnvelope {
  MetaBlock meta;
  std::vector<DeltaRecord> records;

  friend bool operator==(const BatchEnvelope&, const BatchEnvelope&) = default;
};

std::vector<std::uint8_t> encode_batch(const BatchEnvelope& e);

/// Throws Error with BadMagic, Truncated, UnknownKind, BadPayload,
/// DeltaOverflow or TrailingBytes. Never reads past the input.
BatchEnvelope decode_batch(std::span<const std::uint8_t> bytes);

/// A record with absolute time (ms) and position (1e-7 degree).
struct AbsoluteRecord {
  RecordKind kind = RecordKind::Cam;
  TimeMs time_ms = 0;
  std::int32_t lat_e7 = 0;
  std::int32_t lon_e7 = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const AbsoluteRecord&, const AbsoluteRecord&) = default;
};

/// Rounds time and position down onto the relative-offset grid.
AbsoluteRecord quantize(AbsoluteRecord r);

std::vector<AbsoluteRecord> reconstruct(const BatchEnvelope& e);

/// Greedy packing of time-sorted records into envelopes. A new envelope is
/// opened whenever a record would overflow the relative ranges or the record
/// count. Reference time and position are the first record's, rounded down
/// onto the relative grid.
std::vector<BatchEnvelope> plan_batches(std::span<const AbsoluteRecord> records, StationId station);

/// Size the same records would take with absolute u64 time and two i32
/// coordinates per record (magic, station and count as header).
std::size_t naive_encoded_size(const BatchEnvelope& e);

// .ksb framing: each frame is a u32 little-endian length followed by an
// encoded batch.

void append_frame(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> frame);

/// Incremental frame splitter for byte streams.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete frame, if any. Throws Error(FrameTooLarge).
  std::optional<std::vector<std::uint8_t>> next();
  std::size_t buffered() const { return buffer_.size() - offset_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t offset_ = 0;
};

void write_ksb_file(const std::filesystem::path& path, std::span<const BatchEnvelope> batches);
/// Throws Error(Io) or Error(Truncated) for a partial trailing frame.
std::vector<std::vector<std::uint8_t>> read_ksb_frames(const std::filesystem::path& path);

}  // namespace ksf::wire
