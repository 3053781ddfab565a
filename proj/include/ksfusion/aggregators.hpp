// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ksfusion/records.hpp"

namespace ksf {

/// Transmit period per vehicle signal group, in milliseconds.
struct TransmitSchedule {
  std::array<TimeMs, kVutSignalGroupCount> period_ms{100, 100, 200, 1000, 5000};

  TimeMs period(VutSignalGroup g) const { return period_ms[static_cast<std::size_t>(g)]; }
  /// Throws Error(InvalidArgument) unless all periods are positive.
  void validate() const;
};

/// Records waiting for an acknowledged transmission, kept in time order.
class LocalStore {
 public:
  void append(RawRecord r);
  const std::vector<RawRecord>& pending() const { return pending_; }
  std::size_t size() const { return pending_.size(); }
  bool empty() const { return pending_.empty(); }
  /// Latest record time ever queued.
  std::optional<TimeMs> high_water_mark() const { return high_water_; }
  /// Drops the `n` oldest records once their transmission was acknowledged.
  void acknowledge(std::size_t n);

 private:
  std::vector<RawRecord> pending_;
  std::optional<TimeMs> high_water_;
};

/// Send-with-acknowledgment link to the backend. send() returns true when the
/// frame was acknowledged; it may also throw Error(TransportError).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual bool send(std::span<const std::uint8_t> frame) = 0;
};

struct FlushOutcome {
  enum class Status { Success, Failed };
  Status status = Status::Success;
  std::size_t batches_sent = 0;
  std::size_t records_sent = 0;
  std::string error;

  bool ok() const { return status == Status::Success; }
};

/// Packs the pending records into batches and sends them in time order.
/// Records of acknowledged batches leave the store; the first failure stops
/// the flush and leaves every unacknowledged record in place.
FlushOutcome flush(LocalStore& local, StationId station, Transport& transport);

using V2xExtract = std::variant<CamExtract, CpmExtract, SpatExtract, HazardEvent, MapTopology>;

/// Queues a V2X extract received (or sent) by the station `received_by`.
/// SPAT records are located at the receiving station. MAP topologies are not
/// queued; they live in the backend's static topology store. Returns the
/// number of records queued.
std::size_t tdac_ingest(const V2xExtract& extract, StationId received_by, const GeoPosition& receiver_position,
                        LocalStore& local);

/// Vehicle data aggregator: samples the sensor abstraction layer on every
/// tick and queues a snapshot whenever at least one signal group is due.
class VehicleDataAggregator {
 public:
  VehicleDataAggregator(StationId vut, TransmitSchedule schedule);

  /// Returns the group bits emitted by this tick (0 if nothing was due).
  /// Due times advance on a fixed grid of the group period, so late ticks
  /// do not accumulate drift.
  std::uint8_t tick(TimeMs now, const VutSensorExtract& sensors, LocalStore& local);

  const TransmitSchedule& schedule() const { return schedule_; }
  StationId station() const { return vut_; }

 private:
  StationId vut_;
  TransmitSchedule schedule_;
  std::array<std::optional<TimeMs>, kVutSignalGroupCount> next_due_{};
};

/// Free-function form of VehicleDataAggregator::tick.
std::uint8_t vda_tick(TimeMs now, const VutSensorExtract& sensors, VehicleDataAggregator& vda, LocalStore& local);

/// Driver-related data aggregator; samples are located at the vehicle position.
void dda_ingest(const DriverStateSample& sample, StationId vut, const GeoPosition& vehicle_position,
                LocalStore& local);

void environment_ingest(const EnvironmentSample& sample, StationId supplier, LocalStore& local);

/// One aggregator client with its local store and an adaptable flush period.
class AggregatorClient {
 public:
  AggregatorClient(StationId station, TimeMs flush_interval_ms);

  LocalStore& store() { return store_; }
  const LocalStore& store() const { return store_; }
  StationId station() const { return station_; }

  TimeMs flush_interval() const { return flush_interval_ms_; }
  void set_flush_interval(TimeMs ms);

  /// Flushes when the interval has elapsed since the last attempt.
  std::optional<FlushOutcome> poll(TimeMs now, Transport& transport);

 private:
  StationId station_;
  TimeMs flush_interval_ms_;
  std::optional<TimeMs> last_attempt_;
  LocalStore store_;
};

/// Identity of one logical message regardless of which station forwarded it.
struct MessageKey {
  std::uint32_t originator = 0;
  TimeMs generation_time = 0;
  wire::RecordKind kind = wire::RecordKind::Cam;
  std::uint32_t object_id = 0;

  friend auto operator<=>(const MessageKey&, const MessageKey&) = default;
};

MessageKey message_key(const RawRecord& r);

/// Traffic Data Aggregator duplicate elimination. Input order is arrival
/// order; the first copy of each key is kept. Output is sorted by
/// (generation_time, originator, kind, object_id).
std::vector<RawRecord> backend_dedup(std::span<const RawRecord> messages);

/// The environment sample valid at `time` whose area contains `position`;
/// the most recent one when several match.
std::optional<EnvironmentSample> environment_for(TimeMs time, const GeoPosition& position,
                                                 std::span<const EnvironmentSample> samples);

}  // namespace ksf
