// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "ksfusion/error.hpp"
#include "ksfusion/records.hpp"
#include "ksfusion/wire.hpp"
#include "support.hpp"
#include "wire_fuzz.hpp"

using namespace ksf;
using namespace ksf::wire;
using test::Rng;
using test::uniform_int;

namespace {

ErrorCode decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode_batch(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode unexpectedly succeeded");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("header layout") {
  BatchEnvelope e;
  e.meta.station = StationId{0x01020304};
  e.meta.ref_time = 0x1122334455667788ull;
  e.meta.ref_lat_e7 = -2;
  e.meta.ref_lon_e7 = 3;
  const auto bytes = encode_batch(e);
  REQUIRE(bytes.size() == kHeaderSize);
  const std::vector<std::uint8_t> expected = {'K',  'S',  'B',  '1',  0x04, 0x03, 0x02, 0x01, 0x88,
                                              0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11, 0xfe, 0xff,
                                              0xff, 0xff, 0x03, 0x00, 0x00, 0x00, 0x00, 0x00};
  CHECK(bytes == expected);
  CHECK(decode_batch(bytes) == e);
}

TEST_CASE("randomized envelopes round trip") {
  Rng rng(1234);
  for (int i = 0; i < 2000; ++i) {
    const auto e = test::random_envelope(rng);
    const auto bytes = encode_batch(e);
    std::size_t expected = kHeaderSize;
    for (const auto& r : e.records) expected += kRecordHeadSize + r.payload.size();
    CHECK(bytes.size() == expected);
    CHECK(decode_batch(bytes) == e);
  }
}

TEST_CASE("malformed input yields defined errors") {
  Rng rng(99);
  const auto valid = encode_batch(test::random_envelope(rng));

  CHECK(decode_error(std::vector<std::uint8_t>{}) == ErrorCode::Truncated);
  CHECK(decode_error(std::vector<std::uint8_t>{'K', 'S', 'B', '2', 0, 0}) == ErrorCode::BadMagic);

  SUBCASE("every strict prefix is truncated") {
    auto e = test::random_envelope(rng);
    while (e.records.empty()) e = test::random_envelope(rng);
    const auto bytes = encode_batch(e);
    for (std::size_t n = 4; n < bytes.size(); ++n) {
      CHECK(decode_error(std::span(bytes).first(n)) == ErrorCode::Truncated);
    }
  }

  SUBCASE("trailing bytes") {
    auto bytes = valid;
    bytes.push_back(0);
    CHECK(decode_error(bytes) == ErrorCode::TrailingBytes);
  }

  SUBCASE("unknown kind, bad length, overflow") {
    BatchEnvelope e;
    e.records.push_back({RecordKind::Cam, 0, 0, 0, std::vector<std::uint8_t>(payload_size(RecordKind::Cam))});
    e.meta.record_count = 1;
    const auto good = encode_batch(e);

    auto bad_kind = good;
    bad_kind[kHeaderSize] = 9;
    CHECK(decode_error(bad_kind) == ErrorCode::UnknownKind);

    auto bad_len = good;
    bad_len[kHeaderSize + 7] = 11;
    bad_len.push_back(0);
    CHECK(decode_error(bad_len) == ErrorCode::BadPayload);

    auto overflow = good;
    overflow[kHeaderSize + 3] = 0x00;
    overflow[kHeaderSize + 4] = 0x80;  // rel_lat = -32768
    CHECK(decode_error(overflow) == ErrorCode::DeltaOverflow);
  }

  SUBCASE("fuzzed input never escapes the error contract") {
    for (int i = 0; i < 20000; ++i) {
      const auto bytes = test::fuzz_input(rng, i);
      try {
        const auto e = decode_batch(bytes);
        CHECK(encode_batch(e) == bytes);
      } catch (const Error& err) {
        CHECK(test::is_wire_error(err.code()));
      }
    }
  }
}

TEST_CASE("encode rejects inconsistent envelopes") {
  BatchEnvelope e;
  e.records.push_back({RecordKind::Hazard, 0, 0, 0, std::vector<std::uint8_t>(payload_size(RecordKind::Hazard))});
  CHECK_THROWS_AS(encode_batch(e), Error);  // record_count still 0
  e.meta.record_count = 1;
  e.records[0].payload.pop_back();
  CHECK_THROWS_AS(encode_batch(e), Error);
  e.records[0].payload.push_back(0);
  e.records[0].rel_lon = -32768;
  CHECK_THROWS_AS(encode_batch(e), Error);
}

TEST_CASE("plan_batches reconstructs every record on the grid") {
  Rng rng(42);
  for (int round = 0; round < 200; ++round) {
    std::vector<AbsoluteRecord> recs;
    TimeMs t = 1'700'000'000'000 + uniform_int(rng, 0, 100000);
    const int n = uniform_int(rng, 1, 300);
    const std::int32_t lat0 = uniform_int(rng, -800000000, 800000000);
    const std::int32_t lon0 = uniform_int(rng, -1700000000, 1700000000);
    for (int i = 0; i < n; ++i) {
      AbsoluteRecord a;
      a.kind = test::any_kind(rng);
      t += uniform_int(rng, 0, round % 3 == 0 ? 900000 : 300);  // occasionally exceeds the relative time range
      a.time_ms = t;
      const int spread = round % 5 == 0 ? 2000000 : 50000;  // occasionally exceeds the offset range
      a.lat_e7 = lat0 + uniform_int(rng, -spread, spread);
      a.lon_e7 = lon0 + uniform_int(rng, -spread, spread);
      a.payload.assign(payload_size(a.kind), static_cast<std::uint8_t>(i));
      recs.push_back(std::move(a));
    }
    const auto batches = plan_batches(recs, StationId{7});
    std::vector<AbsoluteRecord> back;
    for (const auto& b : batches) {
      CHECK(b.meta.station == StationId{7});
      CHECK(b.meta.record_count == b.records.size());
      CHECK(decode_batch(encode_batch(b)) == b);
      for (auto& r : reconstruct(b)) back.push_back(std::move(r));
    }
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(back[i] == quantize(recs[i]));
  }
}

TEST_CASE("reference point is snapped down onto the grid") {
  AbsoluteRecord a{RecordKind::Cam, 1005, -15, 27, std::vector<std::uint8_t>(payload_size(RecordKind::Cam))};
  const auto batches = plan_batches(std::span(&a, 1), StationId{1});
  REQUIRE(batches.size() == 1);
  CHECK(batches[0].meta.ref_time == 1000);
  CHECK(batches[0].meta.ref_lat_e7 == -20);
  CHECK(batches[0].meta.ref_lon_e7 == 20);
  CHECK(quantize(a).time_ms == 1000);
  CHECK(quantize(a).lat_e7 == -20);
}

TEST_CASE("delta encoding is smaller than absolute encoding") {
  Rng rng(5);
  const GeoPosition center{49.2339667, 6.9822499};
  std::vector<RawRecord> cams, mixed;
  for (int i = 0; i < 50; ++i) {
    const TimeMs t = 1'700'000'000'000 + 100 * i;
    cams.push_back(test::grid_record(rng, RecordKind::Cam, t, center, 3000));
    mixed.push_back(test::grid_record(rng, i % 3 == 2 ? RecordKind::CpmDetection : RecordKind::Cam, t, center, 3000));
  }
  for (const auto* set : {&cams, &mixed}) {
    const auto batches = pack_records(*set, StationId{3});
    REQUIRE(batches.size() == 1);
    const double ratio = static_cast<double>(encode_batch(batches[0]).size()) / naive_encoded_size(batches[0]);
    CHECK(ratio < 0.7);
  }
  // 26 + 50 * (9 + 10) bytes against 10 + 50 * (1 + 8 + 8 + 2 + 10)
  const auto cam_batch = pack_records(cams, StationId{3}).front();
  CHECK(encode_batch(cam_batch).size() == 976);
  CHECK(naive_encoded_size(cam_batch) == 1460);
}

TEST_CASE("ksb framing") {
  Rng rng(8);
  std::vector<BatchEnvelope> batches;
  for (int i = 0; i < 5; ++i) batches.push_back(test::random_envelope(rng));

  std::vector<std::uint8_t> stream;
  for (const auto& b : batches) append_frame(stream, encode_batch(b));

  SUBCASE("byte-at-a-time feeding") {
    FrameReader reader;
    std::vector<BatchEnvelope> got;
    for (auto byte : stream) {
      reader.feed(std::span(&byte, 1));
      while (auto f = reader.next()) got.push_back(decode_batch(*f));
    }
    CHECK(got == batches);
    CHECK(reader.buffered() == 0);
  }

  SUBCASE("oversized length prefix") {
    FrameReader reader;
    const std::vector<std::uint8_t> huge = {0xff, 0xff, 0xff, 0xff};
    reader.feed(huge);
    CHECK_THROWS_AS(reader.next(), Error);
  }

  SUBCASE("files") {
    const auto dir = test::scratch_dir("ksb");
    write_ksb_file(dir / "a.ksb", batches);
    const auto frames = read_ksb_frames(dir / "a.ksb");
    REQUIRE(frames.size() == batches.size());
    for (std::size_t i = 0; i < frames.size(); ++i) CHECK(decode_batch(frames[i]) == batches[i]);

    std::ofstream(dir / "cut.ksb", std::ios::binary)
        .write(reinterpret_cast<const char*>(stream.data()), static_cast<std::streamsize>(stream.size() - 3));
    CHECK_THROWS_AS(read_ksb_frames(dir / "cut.ksb"), Error);
    CHECK_THROWS_AS(read_ksb_frames(dir / "missing.ksb"), Error);
    std::filesystem::remove_all(dir);
  }
}
