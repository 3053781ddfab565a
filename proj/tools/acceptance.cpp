// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dedup_oracle.hpp"
#include "geometry.hpp"
#include "ksfusion/error.hpp"
#include "ksfusion/fusion.hpp"
#include "ksfusion/metrics.hpp"
#include "ksfusion/simgen.hpp"
#include "ksfusion/store.hpp"
#include "ksfusion/stressmap.hpp"
#include "ksfusion/wire.hpp"
#include "reference_situation.hpp"
#include "situations.hpp"
#include "stress_oracle.hpp"
#include "support.hpp"
#include "wire_fuzz.hpp"

using namespace ksf;
using test::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome wire_round_trip() {
  Rng rng(101);
  std::size_t exact = 0;
  constexpr int kEnvelopes = 10'000;
  for (int i = 0; i < kEnvelopes; ++i) {
    const auto e = test::random_envelope(rng);
    if (wire::decode_batch(wire::encode_batch(e)) == e) ++exact;
  }
  std::size_t defined = 0, decoded = 0, other = 0;
  constexpr int kFuzz = 100'000;
  for (int i = 0; i < kFuzz; ++i) {
    const auto bytes = test::fuzz_input(rng, i);
    try {
      const auto e = wire::decode_batch(bytes);
      if (wire::encode_batch(e) == bytes) {
        ++decoded;
      } else {
        ++other;
      }
    } catch (const Error& err) {
      if (test::is_wire_error(err.code())) {
        ++defined;
      } else {
        ++other;
      }
    } catch (...) {
      ++other;
    }
  }
  return {exact == kEnvelopes && other == 0,
          fmt("%zu/%d envelopes exact; fuzz %d inputs: %zu defined errors, %zu valid re-encodes, %zu other", exact,
              kEnvelopes, kFuzz, defined, decoded, other)};
}

double compression_ratio(const wire::BatchEnvelope& e) {
  return static_cast<double>(wire::encode_batch(e).size()) / static_cast<double>(wire::naive_encoded_size(e));
}

Outcome delta_compression() {
  ScenarioConfig cfg;
  cfg.seed = 42;
  const auto scene = generate(cfg);

  // flushed envelopes as the aggregators send them
  double flushed_max = 0.0;
  int flushed = 0;
  std::map<std::uint32_t, std::vector<RawRecord>> streams;
  for (const auto& b : scene.batches) {
    auto recs = decode_records(b);
    auto& stream = streams[b.meta.station.value];
    stream.insert(stream.end(), recs.begin(), recs.end());
    if (b.records.size() < 50) continue;
    ++flushed;
    flushed_max = std::max(flushed_max, compression_ratio(b));
  }

  // random 50-record windows of each station's record stream
  Rng rng(102);
  double window_max = 0.0, window_sum = 0.0;
  int windows = 0, single = 0;
  for (const auto& [station, recs] : streams) {
    for (int i = 0; i < 100; ++i, ++windows) {
      const auto start = static_cast<std::size_t>(test::uniform_int(rng, 0, static_cast<int>(recs.size()) - 50));
      const auto batches = pack_records({recs.begin() + start, recs.begin() + start + 50}, StationId{station});
      if (batches.size() != 1) continue;
      ++single;
      const double r = compression_ratio(batches[0]);
      window_max = std::max(window_max, r);
      window_sum += r;
    }
  }

  // single-kind envelopes, informational
  const GeoPosition center{49.2339667, 6.9822499};
  std::string per_kind;
  for (auto kind : wire::kAllRecordKinds) {
    std::vector<RawRecord> recs;
    for (int i = 0; i < 50; ++i) recs.push_back(test::grid_record(rng, kind, 1'700'000'000'000 + 100 * i, center, 3000));
    per_kind += fmt(" %d:%.3f", static_cast<int>(kind), compression_ratio(pack_records(recs, StationId{3}).front()));
  }

  return {flushed > 0 && single == windows && flushed_max < 0.7 && window_max < 0.7,
          fmt("%d flushed envelopes max %.3f; %d/%d stream windows of 50 records in one envelope, max %.3f mean %.3f "
              "(< 0.7); single-kind envelopes (informational) kind:ratio%s",
              flushed, flushed_max, single, windows, window_max, window_sum / std::max(single, 1), per_kind.c_str())};
}

Outcome dedup_oracle() {
  Rng rng(103);
  const SimilarityThresholds th;
  const CourseClusterConfig cfg;
  int equal = 0;
  std::size_t largest = 0, pairs = 0;
  constexpr int kInstances = 200;
  for (int i = 0; i < kInstances; ++i) {
    const auto n = static_cast<std::size_t>(test::uniform_int(rng, 1, 1000));
    const auto scene = test::random_scene(rng, n, i % 2 ? 15.0 : 60.0);
    const auto groups = similarity_groups(scene, th, cfg);
    const auto oracle = test::brute_force_groups(scene, th);
    if (groups == oracle) ++equal;
    largest = std::max(largest, n);
    for (const auto& g : oracle) pairs += g.size() > 1;
  }
  return {equal == kInstances,
          fmt("%d/%d instances equal all-pairs components (n up to %zu, %zu multi-member groups)", equal, kInstances,
              largest, pairs)};
}

Outcome clustering_advantage() {
  Rng rng(104);
  constexpr std::size_t n = 5000;
  const auto scene = test::intersection_scene(rng, n);
  DedupStats stats;
  const auto groups = similarity_groups(scene, {}, {}, &stats);
  const double brute = static_cast<double>(n) * (n - 1) / 2.0;
  const double ratio = static_cast<double>(stats.comparisons) / brute;
  const bool same = groups == test::brute_force_groups(scene, {});
  return {ratio < 0.5 && same, fmt("%zu comparisons vs %.0f all-pairs = %.3f (< 0.5); %zu clusters; grouping %s",
                                   stats.comparisons, brute, ratio, stats.clusters, same ? "equal" : "DIFFERENT")};
}

struct SimRun {
  Scenario scene;
  SituationRecord situation;
};

SimRun simulate_and_fuse(const ScenarioConfig& cfg) {
  SimRun r{generate(cfg), {}};
  Store store(":memory:");
  store.put_topology(r.scene.truth.topology);
  for (const auto& b : r.scene.batches) store.ingest_frame(wire::encode_batch(b), cfg.end_ms());
  r.situation = fuse_situation(cfg.vut, cfg.mid_ms(), store);
  return r;
}

Outcome end_to_end() {
  ScenarioConfig cfg;
  cfg.seed = 42;
  const auto run = simulate_and_fuse(cfg);
  int coop = 0, noncoop = 0;
  for (const auto& o : run.scene.truth.objects) {
    if (o.is_vut) continue;
    (o.cooperative ? coop : noncoop) += 1;
  }
  const auto sc = score(run.scene.truth, run.situation);
  const bool shape = coop == 20 && noncoop == 10 && cfg.cam_noise.position_m == 0.5 && cfg.cpm_noise.position_m == 0.5;
  return {shape && sc.precision >= 0.95 && sc.recall >= 0.95 && sc.duplicate_rate <= 0.05,
          fmt("seed 42, %d cooperative + %d non-cooperative + vehicle, sigma 0.5 m: %zu fused, %zu truths, "
              "precision %.3f recall %.3f duplicate rate %.3f",
              coop, noncoop, sc.fused, sc.truths, sc.precision, sc.recall, sc.duplicate_rate)};
}

Outcome tti_closed_form() {
  Rng rng(106);
  int crossings = 0, within = 0;
  for (int i = 0; i < 50; ++i, ++crossings) {
    const auto g = test::random_crossing(rng);
    const auto t = compute_tti(g.vut, g.obj);
    if (std::llabs(t.obj_ms - g.obj_ms) <= 1 && std::llabs(t.vut_ms - g.vut_ms) <= 1) ++within;
  }

  int negatives = 0, none = 0;
  auto expect_none = [&](const KinematicState& vut, const KinematicState& obj) {
    ++negatives;
    if (compute_tti(vut, obj) == TtiPair{}) ++none;
  };
  for (int i = 0; i < 50; ++i) {
    auto g = test::random_crossing(rng);
    if (g.obj_ms < 100 || g.vut_ms < 100) {
      --i;
      continue;
    }
    const LocalPoint off{test::uniform(rng, -50, 50), test::uniform(rng, -50, 50)};
    const auto elsewhere = from_local_enu(test::kGeometryOrigin, off);
    // parallel, same and opposite direction
    expect_none(g.vut, {elsewhere, g.obj.speed, g.vut.course});
    expect_none(g.vut, {elsewhere, g.obj.speed, CourseDeg(g.vut.course.value() + 180.0)});
    // receding: the crossing lies behind the object, or behind the vehicle
    expect_none(g.vut, {g.obj.position, g.obj.speed, CourseDeg(g.obj.course.value() + 180.0)});
    expect_none({g.vut.position, g.vut.speed, CourseDeg(g.vut.course.value() + 180.0)}, g.obj);
    // stationary object or vehicle
    expect_none(g.vut, {g.obj.position, 0.0, g.obj.course});
    expect_none({g.vut.position, 0.0, g.vut.course}, g.obj);
  }

  std::size_t rows = 0, paired = 0, situations = 0;
  auto audit = [&](const SituationRecord& s) {
    ++situations;
    for (const auto& r : evaluate_situation(s)) {
      ++rows;
      if ((r.tti.obj_ms == -1) == (r.tti.vut_ms == -1) && r.tti.obj_ms >= -1 && r.tti.vut_ms >= -1) ++paired;
    }
  };
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    audit(simulate_and_fuse(cfg).situation);
  }
  Store store(":memory:");
  test::ingest_reference(store);
  audit(fuse_situation(test::kReferenceVut, test::kReferenceTime, store));

  return {within == crossings && none == negatives && paired == rows,
          fmt("%d/%d crossings within 1 ms; %d/%d parallel/receding/stationary give (-1, -1); paired -1 on %zu/%zu "
              "rows of %zu situations",
              within, crossings, none, negatives, paired, rows, situations)};
}

Outcome ru_contract() {
  Rng rng(107);
  int receding = 0, max = 0;
  for (int i = 0; i < 5000; ++i) {
    const double ve = test::uniform(rng, -15, 15), vn = test::uniform(rng, -15, 15);
    const double d = test::uniform(rng, 2.0, 300.0), bearing = test::uniform(rng, 0.0, 360.0);
    const auto [ue, un] = course_to_unit_vector(CourseDeg(bearing));
    const double away = i % 10 == 0 ? 0.0 : test::uniform(rng, 0.1, 20.0);
    const double side = test::uniform(rng, -20.0, 20.0);
    const auto vut = test::with_velocity(test::kGeometryOrigin, ve, vn);
    const auto obj = test::with_velocity(from_local_enu(test::kGeometryOrigin, {ue * d, un * d}),
                                         ve + away * ue + side * un, vn + away * un - side * ue);
    ++receding;
    if (!compute_ru(vut, obj)) ++max;
  }

  int series = 0, decreasing = 0;
  for (int i = 0; i < 200; ++i) {
    const double ve = test::uniform(rng, -15, 15), vn = test::uniform(rng, -15, 15);
    const double d = test::uniform(rng, 5.0, 300.0), bearing = test::uniform(rng, 0.0, 360.0);
    const auto [ue, un] = course_to_unit_vector(CourseDeg(bearing));
    const auto vut = test::with_velocity(test::kGeometryOrigin, ve, vn);
    const auto where = from_local_enu(test::kGeometryOrigin, {ue * d, un * d});
    std::int64_t prev = std::numeric_limits<std::int64_t>::max();
    bool ok = true;
    for (double c = 0.1; c < 40.0; c *= 1.25) {
      const auto ru = compute_ru(vut, test::with_velocity(where, ve - c * ue, vn - c * un));
      if (!ru || *ru >= prev) ok = false;
      if (ru) prev = *ru;
    }
    ++series;
    decreasing += ok;
  }

  Store store(":memory:");
  test::ingest_reference(store);
  const auto rows = evaluate_situation(fuse_situation(test::kReferenceVut, test::kReferenceTime, store));
  const auto row10 = std::find_if(rows.begin(), rows.end(), [](const EvaluationRow& r) { return r.object_id == 10; });
  const bool row10_max = row10 != rows.end() && !row10->ru;

  return {max == receding && decreasing == series && row10_max,
          fmt("%d/%d receding or non-closing geometries give MAX; %d/%d closing-rate series strictly decreasing; "
              "reference object 10 RU %s",
              max, receding, decreasing, series, row10_max ? "MAX" : "finite")};
}

std::string first_columns(const std::string& line, int n) {
  std::size_t pos = 0;
  for (int i = 0; i < n; ++i) pos = line.find(',', pos) + 1;
  return line.substr(0, pos - 1);
}

Outcome reference_fixture() {
  Store store(":memory:");
  test::ingest_reference(store);
  const auto s = fuse_situation(test::kReferenceVut, test::kReferenceTime, store);
  const auto csv = evaluation_csv(evaluate_situation(s));

  std::ifstream in(test::data_dir() / "reference_situation.csv");
  std::vector<std::string> want, got;
  for (std::string line; std::getline(in, line);) want.push_back(line);
  std::istringstream gs(csv);
  for (std::string line; std::getline(gs, line);) got.push_back(line);

  int equal = 0;
  const int rows = static_cast<int>(want.size()) - 1;
  for (int i = 1; i <= rows && i < static_cast<int>(got.size()); ++i) {
    if (first_columns(got[i], 6) == first_columns(want[i], 6)) ++equal;
  }
  const bool header = !got.empty() && got[0] == want.at(0);

  std::vector<RangeAnchor> anchors;
  for (const auto& r : test::load_reference()) anchors.push_back({r.position, r.distance});
  const auto tri = trilaterate(anchors);
  double worst = 0.0;
  for (double r : tri.residuals_m) worst = std::max(worst, std::abs(r));

  return {header && rows == 14 && static_cast<int>(got.size()) - 1 == rows && equal == rows,
          fmt("%zu CSV rows, %d/%d match ID..Course byte for byte; vehicle position by trilateration %.7f,%.7f "
              "(residual rms %.2f m, max %.2f m, informational)",
              got.size() - 1, equal, rows, tri.position.lat, tri.position.lon, tri.rms_m, worst)};
}

Outcome quad_tree_oracle() {
  Rng rng(109);
  const GeoBounds bounds{49.22, 6.97, 49.25, 7.01};
  std::vector<StressSample> samples;
  for (int i = 0; i < 10'000; ++i) {
    StressSample s;
    s.position = {test::uniform(rng, bounds.min_lat, bounds.max_lat), test::uniform(rng, bounds.min_lon, bounds.max_lon)};
    if (i % 10 == 0) s.position = {bounds.center().lat, s.position.lon};  // on a split line
    s.valence = static_cast<std::uint8_t>(test::uniform_int(rng, 1, 5));
    s.arousal = static_cast<std::uint8_t>(test::uniform_int(rng, 1, 5));
    samples.push_back(s);
  }
  StressQuadTree tree(bounds);
  for (const auto& s : samples) tree.insert(s);
  const auto cells = tree.cells();

  std::size_t exact = 0;
  std::uint64_t total = 0;
  for (const auto& c : cells) {
    std::uint64_t n = 0, v = 0, a = 0;
    for (const auto& s : samples) {
      if (test::in_cell(c.bounds, bounds, s.position)) {
        ++n;
        v += s.valence;
        a += s.arousal;
      }
    }
    if (n == c.count && c.mean_valence == static_cast<double>(v) / n && c.mean_arousal == static_cast<double>(a) / n) {
      ++exact;
    }
    total += c.count;
  }

  int invariant = 0;
  for (int round = 0; round < 50; ++round) {
    std::shuffle(samples.begin(), samples.end(), rng);
    StressQuadTree t(bounds);
    for (const auto& s : samples) t.insert(s);
    invariant += t.cells() == cells;
  }

  const auto neutral = color_for(3.0, 3.0);
  StressQuadTree calm(bounds);
  for (int i = 0; i < 100; ++i) calm.insert({{test::uniform(rng, 49.23, 49.24), 6.99}, 0, 3, 3});
  bool calm_neutral = true;
  for (const auto& c : calm.cells()) calm_neutral = calm_neutral && c.color == neutral;
  const bool neutral_ok = neutral.valence == 3 && neutral.arousal == 3 && neutral.color == "#808080" && calm_neutral;

  return {exact == cells.size() && total == samples.size() && invariant == 50 && neutral_ok,
          fmt("%zu/%zu cells equal flat recomputation over %zu samples; %d/50 shuffles identical; (3.0, 3.0) -> "
              "cell (%d, %d) %s",
              exact, cells.size(), samples.size(), invariant, neutral.valence, neutral.arousal, neutral.color.c_str())};
}

Outcome store_contract() {
  ScenarioConfig cfg;
  cfg.seed = 7;
  const auto scene = generate(cfg);
  Store store(":memory:");
  std::size_t first = 0, again = 0;
  for (const auto& b : scene.batches) first += store.ingest_frame(wire::encode_batch(b), 1).inserted;
  const auto rows = store.stats().raw_total;
  for (const auto& b : scene.batches) again += store.ingest_frame(wire::encode_batch(b), 2).inserted;
  const bool idempotent = again == 0 && store.stats().raw_total == rows && rows == first;

  Rng rng(110);
  int round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    auto s = test::random_situation(rng);
    store.persist_situation(s);
    round_trips += store.load_situation(s.situation_id) == s;
  }

  SituationRecord big;
  do {
    big = test::random_situation(rng);
  } while (big.objects.size() < 5 || !big.topology || big.hazards.empty() || !big.environment);
  const auto before = store.stats();
  int faults = 0, clean = 0;
  for (int after = 0;; ++after) {
    store.inject_fault_after(after);
    auto s = big;
    try {
      store.persist_situation(s);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StorageFailure) throw;
    }
    ++faults;
    const auto st = store.stats();
    clean += st.situations == before.situations && st.raw_total == before.raw_total && store.orphan_rows() == 0;
  }
  store.inject_fault_after(-1);

  return {idempotent && round_trips == 1000 && faults > 0 && clean == faults,
          fmt("re-ingest of %zu records added %zu rows; %d/1000 situations round trip; %d/%d fault points leave no "
              "partial rows",
              rows, again, round_trips, clean, faults)};
}

struct Criterion {
  int number;
  const char* name;
  std::optional<double> limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "wire round trip and fuzzing", 30.0, wire_round_trip},
      {2, "delta compression", std::nullopt, delta_compression},
      {3, "dedup oracle equivalence", 60.0, dedup_oracle},
      {4, "clustering advantage", std::nullopt, clustering_advantage},
      {5, "end-to-end simulator run", 60.0, end_to_end},
      {6, "TTI closed form", std::nullopt, tti_closed_form},
      {7, "RU contract", std::nullopt, ru_contract},
      {8, "reference situation fixture", std::nullopt, reference_fixture},
      {9, "quad-tree oracle", std::nullopt, quad_tree_oracle},
      {10, "store contract", std::nullopt, store_contract},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.2f s", secs);
    if (c.limit_s) {
      timing += fmt(", limit %.0f s", *c.limit_s);
      if (secs >= *c.limit_s) out.pass = false;
    }
    if (!out.pass) ++failed;
    std::printf("%-4s %2d %s: %s [%s]\n", out.pass ? "PASS" : "FAIL", c.number, c.name, out.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
