// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <set>

#include "ksfusion/aggregators.hpp"
#include "ksfusion/error.hpp"
#include "support.hpp"

using namespace ksf;
using test::Rng;

namespace {

/// Decodes and keeps every acknowledged frame; fails according to a script.
class RecordingTransport : public Transport {
 public:
  std::vector<bool> script;  // per send: true = ack; empty = always ack
  bool throw_on_failure = false;
  std::vector<RawRecord> delivered;
  std::size_t calls = 0;

  bool send(std::span<const std::uint8_t> frame) override {
    const bool ok = calls < script.size() ? script[calls] : true;
    ++calls;
    if (!ok) {
      if (throw_on_failure) throw Error(ErrorCode::TransportError, "link down");
      return false;
    }
    for (auto& r : decode_records(wire::decode_batch(frame))) delivered.push_back(std::move(r));
    return true;
  }
};

const GeoPosition kRsu{49.2340000, 6.9825000};

CamExtract cam_at(std::uint32_t id, TimeMs t) {
  return {StationId{id}, t, {49.2339473, 6.9828387}, 10.33, CourseDeg(90.0), ObjectClassification::PassengerCar};
}

}  // namespace

TEST_CASE("TDAC queues V2X extracts with the receiver as reporter") {
  LocalStore local;
  CHECK(tdac_ingest(cam_at(201, 1000), StationId{900}, kRsu, local) == 1);
  CpmExtract cpm{StationId{900}, 1000,
                 {{47, ObjectClassification::Pedestrian, {49.2339251, 6.9826933}, 1.48, CourseDeg(270.8)},
                  {3, ObjectClassification::PassengerCar, {49.2340183, 6.9823835}, 3.46, CourseDeg(267.2)}}};
  CHECK(tdac_ingest(cpm, StationId{900}, kRsu, local) == 2);
  CHECK(tdac_ingest(SpatExtract{1, 2, SignalPhase::Green, 1000}, StationId{900}, kRsu, local) == 1);
  CHECK(tdac_ingest(MapTopology{1, {}}, StationId{900}, kRsu, local) == 0);
  REQUIRE(local.size() == 4);
  for (const auto& r : local.pending()) CHECK(r.reporter == StationId{900});
  CHECK(local.pending()[3].position == kRsu);  // SPAT sits at the receiving unit

  CHECK_THROWS_AS(tdac_ingest(CpmExtract{StationId{900}, 1000, {}}, StationId{900}, kRsu, local), Error);
  CHECK(local.size() == 4);
}

TEST_CASE("local store keeps time order and a high-water mark") {
  LocalStore s;
  CHECK_FALSE(s.high_water_mark().has_value());
  for (TimeMs t : {300, 100, 200, 100}) s.append(make_record(StationId{1}, cam_at(1, t)));
  std::vector<TimeMs> times;
  for (const auto& r : s.pending()) times.push_back(r.time);
  CHECK(times == std::vector<TimeMs>{100, 100, 200, 300});
  CHECK(*s.high_water_mark() == 300);
  s.acknowledge(3);
  CHECK(s.size() == 1);
  s.acknowledge(10);
  CHECK(s.empty());
  CHECK(*s.high_water_mark() == 300);
}

TEST_CASE("VDA emits each group on its own period") {
  VehicleDataAggregator vda(StationId{77}, TransmitSchedule{});
  LocalStore local;
  VutSensorExtract sensors;
  sensors.gnss = {49.2339667, 6.9822499};
  sensors.speed = 9.0;

  const TimeMs start = 1'700'000'000'000;
  const TimeMs duration = 60'000;
  std::array<int, kVutSignalGroupCount> counts{};
  for (TimeMs t = start; t <= start + duration; t += 10) {
    sensors.gnss.lat += 1e-7;
    const auto due = vda.tick(t, sensors, local);
    for (std::size_t g = 0; g < kVutSignalGroupCount; ++g) counts[g] += (due >> g) & 1;
  }
  // floor(duration / period) + 1 emissions per group
  CHECK(counts[0] == 601);
  CHECK(counts[1] == 601);
  CHECK(counts[2] == 301);
  CHECK(counts[3] == 61);
  CHECK(counts[4] == 13);
  CHECK(local.size() == 601);
  for (const auto& r : local.pending()) {
    const auto& s = std::get<VutSensorExtract>(r.body);
    CHECK(s.timestamp == r.time);
    CHECK(r.reporter == StationId{77});
  }
}

TEST_CASE("VDA due times do not drift with jittered ticks") {
  TransmitSchedule sched;
  sched.period_ms = {100, 100, 200, 1000, 5000};
  VehicleDataAggregator vda(StationId{1}, sched);
  LocalStore local;
  Rng rng(3);
  int gnss = 0;
  TimeMs t = 0;
  while (t < 100'000) {
    t += test::uniform_int(rng, 1, 30);
    if (vda.tick(t, VutSensorExtract{}, local) & group_bit(VutSignalGroup::Gnss)) ++gnss;
  }
  // first tick at t0 <= 30, then one per 200 ms grid slot after it
  CHECK(gnss >= 499);
  CHECK(gnss <= 501);

  sched.period_ms[2] = 0;
  CHECK_THROWS_AS(VehicleDataAggregator(StationId{1}, sched), Error);
}

TEST_CASE("flush sends batches and removes only acknowledged records") {
  Rng rng(11);
  auto fill = [&](LocalStore& s, int n) {
    for (int i = 0; i < n; ++i) {
      // spread far apart in time so several batches are needed
      s.append(test::grid_record(rng, test::any_kind(rng), 1'700'000'000'000 + 400'000 * i, {49.23, 6.98}));
    }
  };

  SUBCASE("empty store") {
    LocalStore s;
    RecordingTransport tx;
    const auto out = flush(s, StationId{1}, tx);
    CHECK(out.ok());
    CHECK(out.batches_sent == 0);
    CHECK(tx.calls == 0);
  }

  SUBCASE("failing transport leaves the store unchanged") {
    LocalStore s;
    fill(s, 10);
    const auto before = s.pending();
    RecordingTransport tx;
    tx.script = {false};
    const auto out = flush(s, StationId{1}, tx);
    CHECK_FALSE(out.ok());
    CHECK(s.pending() == before);

    tx.script = {false};
    tx.calls = 0;
    tx.throw_on_failure = true;
    CHECK_FALSE(flush(s, StationId{1}, tx).ok());
    CHECK(s.pending() == before);
  }

  SUBCASE("partial failure keeps the unsent tail; retry delivers exactly once") {
    LocalStore s;
    fill(s, 10);
    const auto all = s.pending();
    RecordingTransport tx;
    tx.script = {true, true, false};
    const auto first = flush(s, StationId{1}, tx);
    CHECK_FALSE(first.ok());
    CHECK(first.batches_sent == 2);
    CHECK(s.size() == all.size() - first.records_sent);
    const auto second = flush(s, StationId{1}, tx);
    CHECK(second.ok());
    CHECK(s.empty());
    std::vector<RawRecord> expected = all;
    for (auto& r : expected) r.reporter = StationId{1};
    CHECK(tx.delivered == expected);
  }
}

TEST_CASE("flaky link: every record arrives exactly once") {
  Rng rng(21);
  AggregatorClient client(StationId{5}, 1000);
  RecordingTransport tx;
  for (int i = 0; i < 400; ++i) tx.script.push_back(test::uniform_int(rng, 0, 2) != 0);

  std::vector<RawRecord> produced;
  TimeMs now = 1'700'000'000'000;
  for (int step = 0; step < 300; ++step) {
    now += 250;
    auto r = test::grid_record(rng, wire::RecordKind::Cam, now, {49.23, 6.98});
    r.reporter = StationId{5};
    client.store().append(r);
    produced.push_back(r);
    client.poll(now, tx);
  }
  tx.script.clear();  // link recovers
  now += 1000;
  REQUIRE(client.poll(now, tx).has_value());
  CHECK(client.store().empty());
  CHECK(tx.delivered == produced);
}

TEST_CASE("client flush interval") {
  AggregatorClient c(StationId{1}, 500);
  RecordingTransport tx;
  CHECK(c.poll(1000, tx).has_value());
  CHECK_FALSE(c.poll(1499, tx).has_value());
  CHECK(c.poll(1500, tx).has_value());
  c.set_flush_interval(2000);
  CHECK_FALSE(c.poll(3000, tx).has_value());
  CHECK_THROWS_AS(c.set_flush_interval(0), Error);
}

TEST_CASE("backend dedup keeps the first copy of each message") {
  const auto a = make_record(StationId{900}, cam_at(201, 1000));
  const auto b = make_record(StationId{77}, cam_at(201, 1000));  // same CAM forwarded by the vehicle
  const auto c = make_record(StationId{900}, cam_at(202, 900));
  const std::vector<RawRecord> in = {a, b, c, a};
  const auto out = backend_dedup(in);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == c);
  CHECK(out[1] == a);

  SUBCASE("matches a set oracle on random input") {
    Rng rng(31);
    std::vector<RawRecord> msgs;
    for (int i = 0; i < 3000; ++i) {
      auto r = test::grid_record(rng, test::any_kind(rng), 1000 + 10 * test::uniform_int(rng, 0, 20), {49.0, 7.0});
      if (!msgs.empty() && test::uniform_int(rng, 0, 2) == 0) {
        r = msgs[static_cast<std::size_t>(test::uniform_int(rng, 0, static_cast<int>(msgs.size()) - 1))];
        r.reporter = StationId{r.reporter.value + 1};
      }
      msgs.push_back(r);
    }
    std::set<MessageKey> keys;
    for (const auto& m : msgs) keys.insert(message_key(m));
    const auto unique = backend_dedup(msgs);
    CHECK(unique.size() == keys.size());
    for (std::size_t i = 1; i < unique.size(); ++i) {
      CHECK(message_key(unique[i - 1]).generation_time <= message_key(unique[i]).generation_time);
    }
    for (const auto& u : unique) {
      const auto first = std::find_if(msgs.begin(), msgs.end(),
                                      [&](const RawRecord& m) { return message_key(m) == message_key(u); });
      CHECK(*first == u);
    }
  }
}

TEST_CASE("environment lookup") {
  EnvironmentSample e1;
  e1.timestamp = 1000;
  e1.validity_duration_s = 60;
  e1.area_center = {49.0, 7.0};
  e1.area_radius_m = 500;
  EnvironmentSample e2 = e1;
  e2.timestamp = 2000;
  e2.temperature_c = 12.5;
  const std::vector<EnvironmentSample> samples = {e1, e2};
  CHECK(environment_for(1500, {49.0, 7.0}, samples) == e1);
  CHECK(environment_for(2000, {49.0, 7.0}, samples) == e2);
  CHECK(environment_for(61'000, {49.0, 7.0}, samples) == e2);
  CHECK(environment_for(62'000, {49.0, 7.0}, samples) == e2);
  CHECK_FALSE(environment_for(62'001, {49.0, 7.0}, samples).has_value());
  CHECK_FALSE(environment_for(1500, {49.1, 7.0}, samples).has_value());
  CHECK_FALSE(environment_for(999, {49.0, 7.0}, samples).has_value());
}
