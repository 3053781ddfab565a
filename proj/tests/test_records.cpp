// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "ksfusion/error.hpp"
#include "ksfusion/records.hpp"
#include "support.hpp"

using namespace ksf;
using test::Rng;

TEST_CASE("payload sizes match the documented layouts") {
  Rng rng(1);
  for (auto kind : wire::kAllRecordKinds) {
    const auto r = test::grid_record(rng, kind, 1'700'000'000'000, {49.0, 7.0});
    CHECK(kind_of(r.body) == kind);
    CHECK(encode_record(r).payload.size() == wire::payload_size(kind));
  }
}

TEST_CASE("grid records survive the wire unchanged") {
  Rng rng(2);
  for (int i = 0; i < 5000; ++i) {
    const auto kind = test::any_kind(rng);
    const auto r = test::grid_record(rng, kind, test::grid_time(rng, 1'600'000'000'000, 10'000'000), {49.23, 6.98});
    CHECK(decode_record(encode_record(r), r.reporter) == r);
  }
}

TEST_CASE("batches of typed records round trip through pack and decode") {
  Rng rng(3);
  for (int round = 0; round < 50; ++round) {
    std::vector<RawRecord> recs;
    const StationId station{static_cast<std::uint32_t>(round + 1)};
    for (int i = 0; i < 200; ++i) {
      auto r = test::grid_record(rng, test::any_kind(rng), test::grid_time(rng, 1'700'000'000'000, 60'000),
                                 {49.23, 6.98}, round % 4 == 0 ? 3'000'000 : 20'000);
      r.reporter = station;
      recs.push_back(r);
    }
    std::vector<RawRecord> back;
    for (const auto& b : pack_records(recs, station)) {
      for (auto& r : decode_records(wire::decode_batch(wire::encode_batch(b)))) back.push_back(std::move(r));
    }
    std::stable_sort(recs.begin(), recs.end(), [](const RawRecord& a, const RawRecord& b) { return a.time < b.time; });
    CHECK(back == recs);
  }
}

TEST_CASE("off-grid values are quantized") {
  CamExtract cam{StationId{5}, 1'700'000'000'004, {49.23401834, 6.98238351}, 3.456, CourseDeg(267.234),
                 ObjectClassification::PassengerCar};
  const auto q = quantize(make_record(StationId{9}, cam));
  const auto& c = std::get<CamExtract>(q.body);
  CHECK(q.time == 1'700'000'000'000);
  CHECK(c.generation_time == q.time);
  CHECK(c.position == GeoPosition{49.2340183, 6.9823835});
  CHECK(c.speed == 3.46);
  CHECK(c.course.value() == doctest::Approx(267.23));
  CHECK(q.reporter == StationId{9});
}

TEST_CASE("course 359.996 wraps to zero") {
  CamExtract cam{StationId{5}, 1000, {49.0, 7.0}, 1.0, CourseDeg(359.996), ObjectClassification::PassengerCar};
  const auto q = quantize(make_record(StationId{9}, cam));
  CHECK(std::get<CamExtract>(q.body).course.value() == 0.0);
}

TEST_CASE("values outside their encoding are rejected") {
  CamExtract cam{StationId{5}, 1000, {49.0, 7.0}, 700.0, CourseDeg(0.0), ObjectClassification::PassengerCar};
  CHECK_THROWS_AS(encode_record(make_record(StationId{1}, cam)), Error);
  cam.speed = 1.0;
  cam.generation_time = 0;
  CHECK_THROWS_AS(encode_record(make_record(StationId{1}, cam)), Error);
  cam.generation_time = 1000;
  cam.position = {91.0, 0.0};
  CHECK_THROWS_AS(encode_record(make_record(StationId{1}, cam)), Error);

  DriverStateSample d;
  d.timestamp = 1000;
  d.valence = 6;
  CHECK_THROWS_AS(encode_record(make_record(StationId{1}, d, {49.0, 7.0})), Error);
}

TEST_CASE("malformed payloads are rejected") {
  Rng rng(4);
  auto a = encode_record(test::grid_record(rng, wire::RecordKind::Hazard, 1000, {49.0, 7.0}));
  a.payload[1] = 0;  // hazard kind
  CHECK_THROWS_AS(decode_record(a, StationId{1}), Error);

  auto b = encode_record(test::grid_record(rng, wire::RecordKind::Spat, 1000, {49.0, 7.0}));
  b.payload[0] = 100;  // refine byte
  CHECK_THROWS_AS(decode_record(b, StationId{1}), Error);

  auto c = encode_record(test::grid_record(rng, wire::RecordKind::DriverState, 1000, {49.0, 7.0}));
  c.payload.pop_back();
  CHECK_THROWS_AS(decode_record(c, StationId{1}), Error);

  // decoding arbitrary payloads either succeeds or reports BadPayload
  for (int i = 0; i < 20000; ++i) {
    wire::AbsoluteRecord x;
    x.kind = test::any_kind(rng);
    x.time_ms = 1000;
    x.lat_e7 = 490000000;
    x.lon_e7 = 70000000;
    x.payload.resize(wire::payload_size(x.kind));
    for (auto& byte : x.payload) byte = static_cast<std::uint8_t>(rng());
    try {
      const auto r = decode_record(x, StationId{1});
      CHECK(decode_record(encode_record(r), StationId{1}) == r);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadPayload);
    }
  }
}
