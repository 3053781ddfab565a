// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bitset>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksfusion/aggregators.hpp"
#include "ksfusion/records.hpp"
#include "ksfusion/situation.hpp"

namespace ksf {

class KindSet {
 public:
  KindSet() = default;
  KindSet(std::initializer_list<wire::RecordKind> kinds) {
    for (auto k : kinds) add(k);
  }
  static KindSet all();

  KindSet& add(wire::RecordKind k) {
    bits_.set(static_cast<std::size_t>(k));
    return *this;
  }
  bool contains(wire::RecordKind k) const { return bits_.test(static_cast<std::size_t>(k)); }
  bool empty() const { return bits_.none(); }

 private:
  std::bitset<8> bits_;
};

/// Time bounds are inclusive. Without a center the query is not spatially
/// restricted; with one, rows farther than radius_m (haversine) are dropped.
struct RawQuery {
  TimeMs t_min = 0;
  TimeMs t_max = 0;
  std::optional<GeoPosition> center;
  double radius_m = 0.0;
  KindSet kinds;
  std::optional<StationId> reporter;
};

struct SituationSummary {
  std::uint64_t situation_id = 0;
  StationId vut;
  TimeMs timestamp = 0;
  GeoPosition center;
  double radius_m = 0.0;
  std::size_t object_count = 0;
};

struct SituationFilter {
  std::optional<StationId> vut;
  std::optional<TimeMs> t_min;  // inclusive
  std::optional<TimeMs> t_max;  // inclusive
};

struct StoreStats {
  std::map<std::string, std::uint64_t> raw_rows;  // table name -> rows
  std::uint64_t raw_total = 0;
  std::uint64_t situations = 0;
  std::uint64_t topologies = 0;
};

struct IngestReport {
  std::size_t batches = 0;
  std::size_t records = 0;
  std::size_t inserted = 0;

  std::size_t duplicates() const { return records - inserted; }
  IngestReport& operator+=(const IngestReport& o) {
    batches += o.batches;
    records += o.records;
    inserted += o.inserted;
    return *this;
  }
};

/// Situation storage on an embedded SQLite database. Raw tables are
/// append-only and keyed by MessageKey; situations are written in a single
/// transaction. All methods are thread-safe; writes are serialized.
class Store {
 public:
  /// ":memory:" opens a private in-memory database.
  explicit Store(const std::filesystem::path& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Appends records to their kind's raw table, skipping rows whose
  /// MessageKey is already present. Returns the number of new rows.
  std::size_t insert_raw(std::span<const RawRecord> records, TimeMs received_at);

  /// Decodes one encoded batch and inserts its records.
  IngestReport ingest_frame(std::span<const std::uint8_t> frame, TimeMs received_at);

  std::vector<RawRecord> query_raw(const RawQuery& q) const;

  void put_topology(const MapTopology& map);
  std::vector<MapTopology> topologies() const;

  /// Writes the situation atomically and assigns its id.
  std::uint64_t persist_situation(SituationRecord& s);
  /// Throws Error(NotFound).
  SituationRecord load_situation(std::uint64_t id) const;
  std::vector<SituationSummary> list_situations(const SituationFilter& f = {}) const;

  StoreStats stats() const;

  /// Holds the store lock and an open read transaction so that several
  /// queries see one consistent state.
  class Snapshot {
   public:
    explicit Snapshot(const Store& s);
    ~Snapshot();
    Snapshot(const Snapshot&) = delete;
    Snapshot& operator=(const Snapshot&) = delete;

   private:
    const Store& store_;
  };

  /// Test hook: after `statements` more successful statements inside write
  /// transactions, the next one fails with StorageFailure and the transaction
  /// rolls back. A negative value disables it.
  void inject_fault_after(int statements);

  /// Child rows whose situation row does not exist; always 0 unless the
  /// database was modified externally.
  std::uint64_t orphan_rows() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// In-process link from an aggregator to the backend: every frame is
/// ingested into the store and acknowledged once it is committed.
class StoreTransport : public Transport {
 public:
  explicit StoreTransport(Store& store) : store_(store) {}

  void set_receive_time(TimeMs t) { receive_time_ = t; }
  const IngestReport& report() const { return report_; }

  bool send(std::span<const std::uint8_t> frame) override;

 private:
  Store& store_;
  TimeMs receive_time_ = 0;
  IngestReport report_;
};

}  // namespace ksf
