// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/aggregators.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "ksfusion/error.hpp"

namespace ksf {

void TransmitSchedule::validate() const {
  for (auto p : period_ms) {
    if (p <= 0) throw Error(ErrorCode::InvalidArgument, "transmit periods must be positive");
  }
}

void LocalStore::append(RawRecord r) {
  high_water_ = high_water_ ? std::max(*high_water_, r.time) : r.time;
  auto pos = std::upper_bound(pending_.begin(), pending_.end(), r.time,
                              [](TimeMs t, const RawRecord& x) { return t < x.time; });
  pending_.insert(pos, std::move(r));
}

void LocalStore::acknowledge(std::size_t n) {
  n = std::min(n, pending_.size());
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(n));
}

FlushOutcome flush(LocalStore& local, StationId station, Transport& transport) {
  FlushOutcome outcome;
  if (local.empty()) return outcome;

  std::vector<wire::BatchEnvelope> batches;
  try {
    batches = pack_records(local.pending(), station);
  } catch (const Error& e) {
    outcome.status = FlushOutcome::Status::Failed;
    outcome.error = e.what();
    return outcome;
  }

  for (const auto& batch : batches) {
    bool acked = false;
    try {
      acked = transport.send(wire::encode_batch(batch));
    } catch (const Error& e) {
      outcome.error = e.what();
    }
    if (!acked) {
      outcome.status = FlushOutcome::Status::Failed;
      if (outcome.error.empty()) outcome.error = "transmission not acknowledged";
      return outcome;
    }
    local.acknowledge(batch.records.size());
    ++outcome.batches_sent;
    outcome.records_sent += batch.records.size();
  }
  return outcome;
}

std::size_t tdac_ingest(const V2xExtract& extract, StationId received_by, const GeoPosition& receiver_position,
                        LocalStore& local) {
  struct Visitor {
    StationId rx;
    const GeoPosition& rx_pos;
    LocalStore& local;

    std::size_t operator()(const CamExtract& c) const {
      local.append(make_record(rx, c));
      return 1;
    }
    std::size_t operator()(const CpmExtract& c) const {
      if (c.detections.empty()) throw Error(ErrorCode::EmptyDetectionList, "CPM without detections");
      for (const auto& d : c.detections) local.append(make_record(rx, CpmDetectionRecord{c.originator, c.generation_time, d}));
      return c.detections.size();
    }
    std::size_t operator()(const SpatExtract& s) const {
      local.append(make_record(rx, s, rx_pos));
      return 1;
    }
    std::size_t operator()(const HazardEvent& h) const {
      local.append(make_record(rx, h));
      return 1;
    }
    std::size_t operator()(const MapTopology&) const { return 0; }
  };
  return std::visit(Visitor{received_by, receiver_position, local}, extract);
}

VehicleDataAggregator::VehicleDataAggregator(StationId vut, TransmitSchedule schedule)
    : vut_(vut), schedule_(schedule) {
  schedule_.validate();
}

std::uint8_t VehicleDataAggregator::tick(TimeMs now, const VutSensorExtract& sensors, LocalStore& local) {
  std::uint8_t due = 0;
  for (std::size_t i = 0; i < kVutSignalGroupCount; ++i) {
    auto& next = next_due_[i];
    const TimeMs period = schedule_.period_ms[i];
    if (!next || now >= *next) {
      due = static_cast<std::uint8_t>(due | (1u << i));
      const TimeMs base = next ? *next : now;
      next = base + period * ((now - base) / period + 1);
    }
  }
  if (due != 0) {
    VutSensorExtract snapshot = sensors;
    snapshot.timestamp = now;
    snapshot.groups = due;
    local.append(make_record(vut_, snapshot));
  }
  return due;
}

std::uint8_t vda_tick(TimeMs now, const VutSensorExtract& sensors, VehicleDataAggregator& vda, LocalStore& local) {
  return vda.tick(now, sensors, local);
}

void dda_ingest(const DriverStateSample& sample, StationId vut, const GeoPosition& vehicle_position,
                LocalStore& local) {
  validate(sample);
  local.append(make_record(vut, sample, vehicle_position));
}

void environment_ingest(const EnvironmentSample& sample, StationId supplier, LocalStore& local) {
  validate(sample);
  local.append(make_record(supplier, sample));
}

AggregatorClient::AggregatorClient(StationId station, TimeMs flush_interval_ms) : station_(station) {
  set_flush_interval(flush_interval_ms);
}

void AggregatorClient::set_flush_interval(TimeMs ms) {
  if (ms <= 0) throw Error(ErrorCode::InvalidArgument, "flush interval must be positive");
  flush_interval_ms_ = ms;
}

std::optional<FlushOutcome> AggregatorClient::poll(TimeMs now, Transport& transport) {
  if (last_attempt_ && now < *last_attempt_ + flush_interval_ms_) return std::nullopt;
  last_attempt_ = now;
  return flush(store_, station_, transport);
}

MessageKey message_key(const RawRecord& r) {
  struct Visitor {
    const RawRecord& r;
    MessageKey operator()(const CamExtract& c) const {
      return {c.originator.value, c.generation_time, wire::RecordKind::Cam, 0};
    }
    MessageKey operator()(const CpmDetectionRecord& c) const {
      return {c.originator.value, c.generation_time, wire::RecordKind::CpmDetection, c.detection.object_id};
    }
    MessageKey operator()(const SpatExtract& s) const {
      return {s.intersection_id, s.change_time, wire::RecordKind::Spat, s.signal_group};
    }
    MessageKey operator()(const VutSensorExtract& s) const {
      return {r.reporter.value, s.timestamp, wire::RecordKind::VutSensor, 0};
    }
    MessageKey operator()(const DriverStateSample& d) const {
      return {r.reporter.value, d.timestamp, wire::RecordKind::DriverState, 0};
    }
    MessageKey operator()(const EnvironmentSample& e) const {
      return {r.reporter.value, e.timestamp, wire::RecordKind::Environment, 0};
    }
    MessageKey operator()(const HazardEvent& h) const {
      return {h.source.value, h.timestamp, wire::RecordKind::Hazard, static_cast<std::uint32_t>(h.kind)};
    }
  };
  return std::visit(Visitor{r}, r.body);
}

std::vector<RawRecord> backend_dedup(std::span<const RawRecord> messages) {
  std::map<MessageKey, const RawRecord*> first;
  for (const auto& m : messages) first.try_emplace(message_key(m), &m);
  std::vector<RawRecord> out;
  out.reserve(first.size());
  for (const auto& [key, rec] : first) out.push_back(*rec);
  std::stable_sort(out.begin(), out.end(), [](const RawRecord& a, const RawRecord& b) {
    const auto ka = message_key(a);
    const auto kb = message_key(b);
    return std::tie(ka.generation_time, ka.originator, ka.kind, ka.object_id) <
           std::tie(kb.generation_time, kb.originator, kb.kind, kb.object_id);
  });
  return out;
}

std::optional<EnvironmentSample> environment_for(TimeMs time, const GeoPosition& position,
                                                 std::span<const EnvironmentSample> samples) {
  const EnvironmentSample* best = nullptr;
  for (const auto& s : samples) {
    const TimeMs end = s.timestamp + static_cast<TimeMs>(s.validity_duration_s) * 1000;
    if (time < s.timestamp || time > end) continue;
    if (haversine_distance(s.area_center, position) > s.area_radius_m) continue;
    if (!best || s.timestamp > best->timestamp) best = &s;
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace ksf
