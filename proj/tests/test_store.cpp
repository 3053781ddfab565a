// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <atomic>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "ksfusion/aggregators.hpp"
#include "ksfusion/error.hpp"
#include "ksfusion/schema.hpp"
#include "ksfusion/store.hpp"
#include "situations.hpp"
#include "support.hpp"

using namespace ksf;
using test::Rng;

namespace {

const GeoPosition kCenter{49.2339667, 6.9822499};

std::vector<RawRecord> random_records(Rng& rng, int n, TimeMs base = 1'700'000'000'000) {
  std::vector<RawRecord> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(test::grid_record(rng, test::any_kind(rng), test::grid_time(rng, base, 60'000), kCenter, 50'000));
  }
  return out;
}

}  // namespace

TEST_CASE("schema file matches the built-in DDL") {
  std::ifstream in(test::data_dir().parent_path() / "docs" / "schema.sql");
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == schema_ddl());
}

TEST_CASE("raw ingestion is idempotent") {
  Store store(":memory:");
  Rng rng(1);
  const auto recs = random_records(rng, 500);
  const auto batches = pack_records(recs, StationId{4});
  std::size_t first = 0;
  for (const auto& b : batches) first += store.ingest_frame(wire::encode_batch(b), 1).inserted;
  std::set<MessageKey> keys;
  for (const auto& r : recs) keys.insert(message_key(r));
  CHECK(first == keys.size());
  CHECK(store.stats().raw_total == keys.size());
  for (const auto& b : batches) CHECK(store.ingest_frame(wire::encode_batch(b), 2).inserted == 0);
  CHECK(store.stats().raw_total == keys.size());
}

TEST_CASE("three CAMs and two SPATs land in two tables") {
  Store store(":memory:");
  Rng rng(2);
  std::vector<RawRecord> recs;
  for (int i = 0; i < 3; ++i) recs.push_back(test::grid_record(rng, wire::RecordKind::Cam, 1000 + 10 * i, kCenter));
  for (int i = 0; i < 2; ++i) recs.push_back(test::grid_record(rng, wire::RecordKind::Spat, 1000 + 10 * i, kCenter));
  CHECK(store.insert_raw(recs, 5) == 5);
  const auto st = store.stats();
  CHECK(st.raw_rows.at("raw_cam") == 3);
  CHECK(st.raw_rows.at("raw_spat") == 2);
  CHECK(st.raw_total == 5);
}

TEST_CASE("interleaved duplicates across envelopes keep one row per key") {
  Store store(":memory:");
  Rng rng(3);
  const auto recs = random_records(rng, 300);
  std::vector<RawRecord> stream;
  for (int i = 0; i < 900; ++i) {
    auto r = recs[static_cast<std::size_t>(test::uniform_int(rng, 0, 299))];
    r.reporter = StationId{static_cast<std::uint32_t>(test::uniform_int(rng, 1, 3))};
    stream.push_back(r);
  }
  for (std::size_t i = 0; i < stream.size(); i += 37) {
    const auto end = std::min(stream.size(), i + 37);
    store.insert_raw(std::span(stream).subspan(i, end - i), static_cast<TimeMs>(i));
  }
  std::set<MessageKey> keys;
  for (const auto& r : stream) keys.insert(message_key(r));
  RawQuery all;
  all.t_min = 0;
  all.t_max = std::numeric_limits<TimeMs>::max();
  all.kinds = KindSet::all();
  std::set<MessageKey> stored;
  for (const auto& r : store.query_raw(all)) CHECK(stored.insert(message_key(r)).second);
  CHECK(stored == keys);
}

TEST_CASE("query matches a full-scan oracle") {
  Store store(":memory:");
  Rng rng(4);
  const auto recs = random_records(rng, 2000);
  store.insert_raw(recs, 0);
  // one row per key; the first copy wins
  std::vector<RawRecord> unique;
  std::set<MessageKey> seen;
  for (const auto& r : recs) {
    if (seen.insert(message_key(r)).second) unique.push_back(r);
  }

  for (int i = 0; i < 60; ++i) {
    RawQuery q;
    q.t_min = test::grid_time(rng, 1'700'000'000'000, 60'000);
    q.t_max = q.t_min + 10 * test::uniform_int(rng, 0, 3000);
    if (i % 4 != 0) {
      q.center = test::grid_position(rng, kCenter, 30'000);
      q.radius_m = test::uniform(rng, 10.0, 600.0);
    }
    for (auto k : wire::kAllRecordKinds) {
      if (test::uniform_int(rng, 0, 3) != 0) q.kinds.add(k);
    }
    if (i % 7 == 0) q.reporter = unique[static_cast<std::size_t>(i)].reporter;

    std::multiset<std::pair<MessageKey, std::uint32_t>> expected, got;
    for (const auto& r : unique) {
      if (r.time < q.t_min || r.time > q.t_max || !q.kinds.contains(kind_of(r.body))) continue;
      if (q.center && haversine_distance(*q.center, r.position) > q.radius_m) continue;
      if (q.reporter && r.reporter != *q.reporter) continue;
      expected.insert({message_key(r), r.reporter.value});
    }
    const auto result = store.query_raw(q);
    for (const auto& r : result) {
      got.insert({message_key(r), r.reporter.value});
      const auto it = std::find_if(unique.begin(), unique.end(),
                                   [&](const RawRecord& u) { return message_key(u) == message_key(r); });
      CHECK(*it == r);
    }
    CHECK(got == expected);
    CHECK(std::is_sorted(result.begin(), result.end(),
                         [](const RawRecord& a, const RawRecord& b) { return a.time < b.time; }));
  }

  SUBCASE("empty kind set and inclusive bounds") {
    RawQuery q;
    q.t_min = 0;
    q.t_max = std::numeric_limits<TimeMs>::max();
    CHECK(store.query_raw(q).empty());
    const auto& r = unique.front();
    q.kinds.add(kind_of(r.body));
    q.t_min = q.t_max = r.time;
    const auto hit = store.query_raw(q);
    CHECK(std::find(hit.begin(), hit.end(), r) != hit.end());
  }
}

TEST_CASE("rejects records whose header disagrees with the body") {
  Store store(":memory:");
  Rng rng(5);
  auto r = test::grid_record(rng, wire::RecordKind::Cam, 1000, kCenter);
  r.time = 2000;
  CHECK_THROWS_AS(store.insert_raw(std::span(&r, 1), 0), Error);
}

TEST_CASE("situations round trip") {
  Store store(":memory:");
  Rng rng(6);
  std::uint64_t last = 0;
  for (int i = 0; i < 300; ++i) {
    auto s = test::random_situation(rng);
    const auto id = store.persist_situation(s);
    CHECK(id > last);
    last = id;
    CHECK(s.situation_id == id);
    CHECK(store.load_situation(id) == s);
  }
  CHECK_THROWS_AS(store.load_situation(last + 1), Error);
  CHECK(store.orphan_rows() == 0);
}

TEST_CASE("a failed persist leaves nothing behind") {
  Store store(":memory:");
  Rng rng(7);
  SituationRecord big;
  do {
    big = test::random_situation(rng);
  } while (big.objects.size() < 5 || !big.topology || big.hazards.empty());
  for (int after = 0; after < 20; ++after) {
    store.inject_fault_after(after);
    auto s = big;
    CHECK_THROWS_AS(store.persist_situation(s), Error);
    CHECK(store.stats().situations == 0);
    CHECK(store.orphan_rows() == 0);
  }
  store.inject_fault_after(-1);
  auto s = big;
  store.persist_situation(s);
  CHECK(store.load_situation(s.situation_id) == s);

  SUBCASE("raw inserts roll back as a unit") {
    const auto recs = random_records(rng, 50);
    store.inject_fault_after(10);
    CHECK_THROWS_AS(store.insert_raw(recs, 0), Error);
    CHECK(store.stats().raw_total == 0);
    CHECK(store.insert_raw(recs, 0) > 0);
  }
}

TEST_CASE("situation listing") {
  Store store(":memory:");
  CHECK(store.list_situations().empty());
  Rng rng(8);
  for (int i = 0; i < 6; ++i) {
    auto s = test::random_situation(rng);
    s.vut = StationId{static_cast<std::uint32_t>(i % 2 + 1)};
    s.timestamp = 1000 * (6 - i);
    store.persist_situation(s);
  }
  const auto all = store.list_situations();
  REQUIRE(all.size() == 6);
  CHECK(std::is_sorted(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
  SituationFilter f;
  f.vut = StationId{2};
  for (const auto& s : store.list_situations(f)) CHECK(s.vut == StationId{2});
  CHECK(store.list_situations(f).size() == 3);
  f = {};
  f.t_min = 2000;
  f.t_max = 4000;
  CHECK(store.list_situations(f).size() == 3);
}

TEST_CASE("topologies and file-backed stores") {
  const auto dir = test::scratch_dir("store");
  MapTopology m{12, {{1, 1, {{49.0, 7.0}, {49.001, 7.0}}, true}, {2, 2, {{49.0, 7.0}, {49.0, 7.001}}, false}}};
  {
    Store store(dir / "k.db");
    store.put_topology(m);
    store.put_topology(m);  // replaces
    Rng rng(9);
    store.insert_raw(random_records(rng, 20), 0);
  }
  Store reopened(dir / "k.db");
  REQUIRE(reopened.topologies().size() == 1);
  CHECK(reopened.topologies()[0] == m);
  CHECK(reopened.stats().topologies == 1);
  CHECK(reopened.stats().raw_total > 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent writers and readers") {
  Store store(":memory:");
  std::vector<std::thread> threads;
  std::atomic<std::size_t> inserted{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      Rng rng(100 + t);
      for (int i = 0; i < 20; ++i) inserted += store.insert_raw(random_records(rng, 20), i);
      RawQuery q;
      q.t_max = std::numeric_limits<TimeMs>::max();
      q.kinds = KindSet::all();
      Store::Snapshot snap(store);
      const auto a = store.query_raw(q).size();
      const auto b = store.query_raw(q).size();
      CHECK(a == b);
    });
  }
  for (auto& th : threads) th.join();
  CHECK(store.stats().raw_total == inserted.load());
}
