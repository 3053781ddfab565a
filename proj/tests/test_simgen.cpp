// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>

#include "ksfusion/error.hpp"
#include "ksfusion/fusion.hpp"
#include "ksfusion/simgen.hpp"
#include "support.hpp"

using namespace ksf;

namespace {

std::vector<RawRecord> all_records(const Scenario& sc) {
  std::vector<RawRecord> out;
  for (const auto& b : sc.batches) {
    const auto recs = decode_records(wire::decode_batch(wire::encode_batch(b)));
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

SituationRecord run(const ScenarioConfig& cfg, Scenario* keep = nullptr) {
  auto sc = generate(cfg);
  Store store(":memory:");
  store.put_topology(sc.truth.topology);
  for (const auto& b : sc.batches) store.ingest_frame(wire::encode_batch(b), cfg.end_ms());
  auto s = build_situation(cfg.vut, cfg.mid_ms(), store);
  if (keep) *keep = std::move(sc);
  return s;
}

}  // namespace

TEST_CASE("scenario validation") {
  ScenarioConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.cam_hz = 3.0;  // 333.3 ms period
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.cpm_hz = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.cooperative_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.duration_s = 0.005;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.cpm_noise.position_m = -1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.rsu = bad.vut;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(period_for(10.0) == 100);
  CHECK(period_for(0.2) == 5000);
  CHECK(cfg.mid_ms() == cfg.start_ms + 10'000);
}

TEST_CASE("scenario file") {
  const auto cfg = ScenarioConfig::load(test::data_dir() / "demo_scenario.ini");
  CHECK(cfg.seed == 42);
  CHECK(cfg.vehicles == 20);
  CHECK(cfg.pedestrians == 10);
  CHECK(cfg.cpm_noise.course_deg == 3.0);
  CHECK(cfg.rsu == StationId{900});
  const auto dir = test::scratch_dir("scenario");
  {
    std::ofstream f(dir / "bad.ini");
    f << "[scenario]\nvehicles = many\n";
  }
  CHECK_THROWS_AS(ScenarioConfig::load(dir / "bad.ini"), Error);
  CHECK_THROWS_AS(ScenarioConfig::load(dir / "none.ini"), Error);
}

TEST_CASE("generation is deterministic") {
  ScenarioConfig cfg;
  cfg.seed = 7;
  const auto a = generate(cfg), b = generate(cfg);
  CHECK(a.truth == b.truth);
  REQUIRE(a.batches.size() == b.batches.size());
  for (std::size_t i = 0; i < a.batches.size(); ++i) CHECK(wire::encode_batch(a.batches[i]) == wire::encode_batch(b.batches[i]));
  cfg.seed = 8;
  CHECK_FALSE(generate(cfg).truth == a.truth);
}

TEST_CASE("record counts follow the emission clocks") {
  ScenarioConfig cfg;
  cfg.seed = 3;
  cfg.duration_s = 12.34;
  cfg.driver_hz = 0.2;
  const auto sc = generate(cfg);
  const auto recs = all_records(sc);

  std::map<wire::RecordKind, std::size_t> by_kind;
  std::size_t cam_rsu = 0, cam_vut = 0;
  for (const auto& r : recs) {
    ++by_kind[kind_of(r.body)];
    if (kind_of(r.body) == wire::RecordKind::Cam) ++(r.reporter == cfg.rsu ? cam_rsu : cam_vut);
  }
  const std::size_t cooperative = 20;
  CHECK(emissions(cfg, 10.0) == 124);
  CHECK(cam_rsu == cooperative * 124);
  CHECK(cam_vut == cooperative * 124);  // everyone is within radio range of the vehicle
  CHECK(by_kind[wire::RecordKind::VutSensor] == 124);
  CHECK(by_kind[wire::RecordKind::DriverState] == 3);  // 0, 5 and 10 s
  CHECK(by_kind[wire::RecordKind::Spat] == 2 * 13);
  CHECK(by_kind[wire::RecordKind::Environment] == 1);
  CHECK(by_kind[wire::RecordKind::Hazard] == 0);

  std::size_t in_view = 0;
  for (TimeMs t = cfg.start_ms; t < cfg.end_ms(); t += 100) {
    for (const auto& o : sc.truth.objects) {
      const auto p = o.local_at(t);
      if (std::hypot(p.east, p.north) <= cfg.camera_radius_m) ++in_view;
    }
  }
  CHECK(by_kind[wire::RecordKind::CpmDetection] == in_view);

  for (const auto& b : sc.batches) {
    CHECK(b.records.size() > 0);
    const auto abs = wire::reconstruct(b);
    CHECK((abs.back().time_ms - cfg.start_ms) / 1000 == (abs.front().time_ms - cfg.start_ms) / 1000);
  }
}

TEST_CASE("scenario without other road users") {
  ScenarioConfig cfg;
  cfg.vehicles = 0;
  cfg.pedestrians = 0;
  const auto sc = generate(cfg);
  REQUIRE(sc.truth.objects.size() == 1);
  for (const auto& r : all_records(sc)) {
    CHECK(kind_of(r.body) != wire::RecordKind::Cam);
    if (const auto* d = std::get_if<CpmDetectionRecord>(&r.body)) CHECK(d->detection.object_id == sc.truth.objects[0].track_id);
  }
  const auto s = run(cfg);
  CHECK(s.objects.size() == 1);
}

TEST_CASE("noise matches the configured sigma") {
  ScenarioConfig cfg;
  cfg.seed = 5;
  cfg.duration_s = 60.0;
  cfg.cpm_noise = {0.8, 4.0, 0.5};
  const auto sc = generate(cfg);
  double se = 0, sn = 0, sc2 = 0, ss = 0;
  std::size_t n = 0;
  for (const auto& r : all_records(sc)) {
    const auto* d = std::get_if<CpmDetectionRecord>(&r.body);
    if (!d) continue;
    const auto* o = sc.truth.by_track(d->detection.object_id);
    REQUIRE(o != nullptr);
    const auto lp = to_local_enu(sc.truth.center, d->detection.position);
    const auto tp = o->local_at(d->generation_time);
    const auto& seg = o->segment_at(d->generation_time);
    const double dc = angular_difference(d->detection.course, seg.course);
    se += (lp.east - tp.east) * (lp.east - tp.east);
    sn += (lp.north - tp.north) * (lp.north - tp.north);
    sc2 += dc * dc;
    if (seg.speed > 3.0) ss += (d->detection.speed - seg.speed) * (d->detection.speed - seg.speed);
    ++n;
  }
  REQUIRE(n >= 10000);
  CHECK(std::sqrt(se / n) == doctest::Approx(0.8).epsilon(0.15));
  CHECK(std::sqrt(sn / n) == doctest::Approx(0.8).epsilon(0.15));
  CHECK(std::sqrt(sc2 / n) == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("ground truth JSON round trip") {
  ScenarioConfig cfg;
  cfg.seed = 9;
  const auto sc = generate(cfg);
  const auto back = ground_truth_from_json(ground_truth_json(sc.truth));
  CHECK(back == sc.truth);
  CHECK_THROWS_AS(ground_truth_from_json("{"), Error);
  CHECK_THROWS_AS(ground_truth_from_json("{}"), Error);
}

TEST_CASE("truth trajectories are continuous") {
  ScenarioConfig cfg;
  const auto sc = generate(cfg);
  for (const auto& o : sc.truth.objects) {
    for (std::size_t i = 1; i < o.segments.size(); ++i) {
      const auto& prev = o.segments[i - 1];
      const auto& cur = o.segments[i];
      const double dt = static_cast<double>(cur.start - prev.start) / 1000.0;
      const auto [ue, un] = course_to_unit_vector(prev.course);
      CHECK(prev.origin.east + ue * prev.speed * dt == doctest::Approx(cur.origin.east).epsilon(1e-9).scale(1.0));
      CHECK(prev.origin.north + un * prev.speed * dt == doctest::Approx(cur.origin.north).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("scoring") {
  GroundTruth gt;
  gt.center = {49.2339667, 6.9822499};
  TruthObject a;
  a.segments = {{0, {0, 0}, 0.0, CourseDeg(0.0)}};
  TruthObject b = a;
  b.segments[0].origin = {20, 0};
  gt.objects = {a, b};
  SituationRecord s;
  s.center = gt.center;
  s.radius_m = 300.0;
  FusedObject f;
  f.position = gt.center;
  s.objects = {f};
  auto sc = score(gt, s);
  CHECK(sc.precision == 1.0);
  CHECK(sc.recall == 0.5);
  CHECK(sc.duplicate_rate == 0.0);

  f.position = from_local_enu(gt.center, {1.0, 0.0});
  s.objects.push_back(f);  // a second object for the same truth
  f.position = from_local_enu(gt.center, {20.5, 0.0});
  s.objects.push_back(f);
  sc = score(gt, s);
  CHECK(sc.matched == 2);
  CHECK(sc.precision == doctest::Approx(2.0 / 3.0));
  CHECK(sc.recall == 1.0);
  CHECK(sc.duplicate_rate == 0.5);

  s.radius_m = 10.0;  // b outside the area
  sc = score(gt, s);
  CHECK(sc.truths == 1);

  const SituationRecord empty;
  const GroundTruth none;
  sc = score(none, empty);
  CHECK(sc.precision == 1.0);
  CHECK(sc.recall == 1.0);
}

TEST_CASE("fused scenes match the truth") {
  SUBCASE("noiseless") {
    ScenarioConfig cfg;
    cfg.cam_noise = cfg.cpm_noise = cfg.vut_noise = {0.0, 0.0, 0.0};
    const auto sc = score(generate(cfg).truth, run(cfg));
    CHECK(sc.precision == 1.0);
    CHECK(sc.recall == 1.0);
    CHECK(sc.duplicate_rate == 0.0);
  }
  SUBCASE("half a metre of position noise over 20 seeds") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      ScenarioConfig cfg;
      cfg.seed = seed;
      Scenario scene;
      const auto s = run(cfg, &scene);
      const auto sc = score(scene.truth, s);
      CHECK(sc.truths == 31);
      CHECK(sc.recall >= 0.95);
      CHECK(sc.precision >= 0.95);
      CHECK(sc.duplicate_rate <= 0.05);
    }
  }
}
