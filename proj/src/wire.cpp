// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/wire.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

#include "byte_io.hpp"
#include "ksfusion/error.hpp"

namespace ksf::wire {

namespace {

using detail::ByteReader;
using detail::ByteWriter;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool offset_in_range(std::int64_t v) { return v >= -kMaxRelOffset && v <= kMaxRelOffset; }

struct Reference {
  TimeMs time;
  std::int32_t lat_e7;
  std::int32_t lon_e7;
};

Reference reference_for(const AbsoluteRecord& first) {
  return {floor_div(first.time_ms, kTimeStepMs) * kTimeStepMs,
          static_cast<std::int32_t>(floor_div(first.lat_e7, kPositionStepE7) * kPositionStepE7),
          static_cast<std::int32_t>(floor_div(first.lon_e7, kPositionStepE7) * kPositionStepE7)};
}

std::optional<DeltaRecord> to_delta(const Reference& ref, const AbsoluteRecord& r) {
  if (r.time_ms < ref.time) return std::nullopt;
  const std::int64_t rel_time = (r.time_ms - ref.time) / kTimeStepMs;
  const std::int64_t rel_lat = floor_div(std::int64_t{r.lat_e7} - ref.lat_e7, kPositionStepE7);
  const std::int64_t rel_lon = floor_div(std::int64_t{r.lon_e7} - ref.lon_e7, kPositionStepE7);
  if (rel_time > kMaxRelTime || !offset_in_range(rel_lat) || !offset_in_range(rel_lon)) {
    return std::nullopt;
  }
  DeltaRecord d;
  d.kind = r.kind;
  d.rel_time = static_cast<std::uint16_t>(rel_time);
  d.rel_lat = static_cast<std::int16_t>(rel_lat);
  d.rel_lon = static_cast<std::int16_t>(rel_lon);
  d.payload = r.payload;
  return d;
}

}  // namespace

bool is_known_kind(std::uint8_t kind) { return kind >= 1 && kind <= 7; }

std::size_t payload_size(RecordKind kind) {
  switch (kind) {
    case RecordKind::Cam: return 10;
    case RecordKind::CpmDetection: return 14;
    case RecordKind::Spat: return 8;
    case RecordKind::VutSensor: return 21;
    case RecordKind::DriverState: return 6;
    case RecordKind::Environment: return 31;
    case RecordKind::Hazard: return 6;
  }
  throw Error(ErrorCode::UnknownKind, "record kind " + std::to_string(static_cast<int>(kind)));
}

std::vector<std::uint8_t> encode_batch(const BatchEnvelope& e) {
  if (e.records.size() > kMaxRecords) {
    throw Error(ErrorCode::DeltaOverflow, "more than 65535 records in one envelope");
  }
  if (e.meta.record_count != e.records.size()) {
    throw Error(ErrorCode::InvalidArgument, "record_count does not match the number of records");
  }
  std::vector<std::uint8_t> out;
  std::size_t size = kHeaderSize;
  for (const auto& r : e.records) size += kRecordHeadSize + r.payload.size();
  out.reserve(size);

  ByteWriter w(out);
  w.put_bytes(kMagic);
  w.put(e.meta.station.value);
  w.put(e.meta.ref_time);
  w.put(e.meta.ref_lat_e7);
  w.put(e.meta.ref_lon_e7);
  w.put(e.meta.record_count);
  for (const auto& r : e.records) {
    if (!offset_in_range(r.rel_lat) || !offset_in_range(r.rel_lon)) {
      throw Error(ErrorCode::DeltaOverflow, "relative position offset outside +/-32767");
    }
    if (!is_known_kind(static_cast<std::uint8_t>(r.kind))) {
      throw Error(ErrorCode::UnknownKind, "record kind " + std::to_string(static_cast<int>(r.kind)));
    }
    if (r.payload.size() != payload_size(r.kind)) {
      throw Error(ErrorCode::BadPayload, "payload length does not match the record kind");
    }
    w.put(static_cast<std::uint8_t>(r.kind));
    w.put(r.rel_time);
    w.put(r.rel_lat);
    w.put(r.rel_lon);
    w.put(static_cast<std::uint16_t>(r.payload.size()));
    w.put_bytes(r.payload);
  }
  return out;
}

BatchEnvelope decode_batch(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() >= kMagic.size() && !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::BadMagic, "batch does not start with KSB1");
  }
  r.get_bytes(kMagic.size());

  BatchEnvelope e;
  e.meta.station.value = r.get<std::uint32_t>();
  e.meta.ref_time = r.get<std::uint64_t>();
  e.meta.ref_lat_e7 = r.get<std::int32_t>();
  e.meta.ref_lon_e7 = r.get<std::int32_t>();
  e.meta.record_count = r.get<std::uint16_t>();

  // Each record needs at least its head, so a count that cannot fit is
  // rejected before reserving memory for it.
  if (r.remaining() / kRecordHeadSize < e.meta.record_count) {
    throw Error(ErrorCode::Truncated, "declared record count exceeds the input");
  }
  e.records.reserve(e.meta.record_count);
  for (std::size_t i = 0; i < e.meta.record_count; ++i) {
    DeltaRecord d;
    const auto kind = r.get<std::uint8_t>();
    if (!is_known_kind(kind)) {
      throw Error(ErrorCode::UnknownKind, "record kind " + std::to_string(kind));
    }
    d.kind = static_cast<RecordKind>(kind);
    d.rel_time = r.get<std::uint16_t>();
    d.rel_lat = r.get<std::int16_t>();
    d.rel_lon = r.get<std::int16_t>();
    if (!offset_in_range(d.rel_lat) || !offset_in_range(d.rel_lon)) {
      throw Error(ErrorCode::DeltaOverflow, "relative position offset outside +/-32767");
    }
    const auto len = r.get<std::uint16_t>();
    auto payload = r.get_bytes(len);
    if (len != payload_size(d.kind)) {
      throw Error(ErrorCode::BadPayload, "payload length does not match the record kind");
    }
    d.payload.assign(payload.begin(), payload.end());
    e.records.push_back(std::move(d));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::TrailingBytes, std::to_string(r.remaining()) + " bytes after the last record");
  }
  return e;
}

AbsoluteRecord quantize(AbsoluteRecord r) {
  r.time_ms = floor_div(r.time_ms, kTimeStepMs) * kTimeStepMs;
  r.lat_e7 = static_cast<std::int32_t>(floor_div(r.lat_e7, kPositionStepE7) * kPositionStepE7);
  r.lon_e7 = static_cast<std::int32_t>(floor_div(r.lon_e7, kPositionStepE7) * kPositionStepE7);
  return r;
}

std::vector<AbsoluteRecord> reconstruct(const BatchEnvelope& e) {
  std::vector<AbsoluteRecord> out;
  out.reserve(e.records.size());
  for (const auto& d : e.records) {
    AbsoluteRecord a;
    a.kind = d.kind;
    a.time_ms = static_cast<TimeMs>(e.meta.ref_time) + kTimeStepMs * d.rel_time;
    a.lat_e7 = static_cast<std::int32_t>(std::int64_t{e.meta.ref_lat_e7} + std::int64_t{kPositionStepE7} * d.rel_lat);
    a.lon_e7 = static_cast<std::int32_t>(std::int64_t{e.meta.ref_lon_e7} + std::int64_t{kPositionStepE7} * d.rel_lon);
    a.payload = d.payload;
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<BatchEnvelope> plan_batches(std::span<const AbsoluteRecord> records, StationId station) {
  std::vector<BatchEnvelope> out;
  std::optional<Reference> ref;
  for (const auto& rec : records) {
    std::optional<DeltaRecord> delta;
    if (ref && out.back().records.size() < kMaxRecords) delta = to_delta(*ref, rec);
    if (!delta) {
      ref = reference_for(rec);
      BatchEnvelope e;
      e.meta.station = station;
      e.meta.ref_time = static_cast<std::uint64_t>(ref->time);
      e.meta.ref_lat_e7 = ref->lat_e7;
      e.meta.ref_lon_e7 = ref->lon_e7;
      out.push_back(std::move(e));
      delta = to_delta(*ref, rec);
    }
    out.back().records.push_back(std::move(*delta));
    out.back().meta.record_count = static_cast<std::uint16_t>(out.back().records.size());
  }
  return out;
}

std::size_t naive_encoded_size(const BatchEnvelope& e) {
  std::size_t size = kMagic.size() + sizeof(std::uint32_t) + sizeof(std::uint16_t);
  for (const auto& r : e.records) {
    size += 1 + sizeof(std::uint64_t) + 2 * sizeof(std::int32_t) + sizeof(std::uint16_t) + r.payload.size();
  }
  return size;
}

void append_frame(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> frame) {
  if (frame.size() > kMaxFrameSize) throw Error(ErrorCode::FrameTooLarge, "frame exceeds 64 MiB");
  ByteWriter w(out);
  w.put(static_cast<std::uint32_t>(frame.size()));
  w.put_bytes(frame);
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<std::vector<std::uint8_t>> FrameReader::next() {
  if (buffered() < sizeof(std::uint32_t)) return std::nullopt;
  const std::span<const std::uint8_t> view(buffer_);
  ByteReader r(view.subspan(offset_));
  const auto len = r.get<std::uint32_t>();
  if (len > kMaxFrameSize) throw Error(ErrorCode::FrameTooLarge, "frame length " + std::to_string(len));
  if (r.remaining() < len) return std::nullopt;
  auto body = r.get_bytes(len);
  std::vector<std::uint8_t> frame(body.begin(), body.end());
  offset_ += sizeof(std::uint32_t) + len;
  if (offset_ > 4096 && offset_ * 2 > buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
    offset_ = 0;
  }
  return frame;
}

void write_ksb_file(const std::filesystem::path& path, std::span<const BatchEnvelope> batches) {
  std::vector<std::uint8_t> bytes;
  for (const auto& b : batches) append_frame(bytes, encode_batch(b));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<std::vector<std::uint8_t>> read_ksb_frames(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  FrameReader reader;
  reader.feed(bytes);
  std::vector<std::vector<std::uint8_t>> frames;
  while (auto frame = reader.next()) frames.push_back(std::move(*frame));
  if (reader.buffered() != 0) {
    throw Error(ErrorCode::Truncated, path.string() + " ends inside a frame");
  }
  return frames;
}

}  // namespace ksf::wire
