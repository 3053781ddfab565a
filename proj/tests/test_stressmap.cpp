// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "ksfusion/error.hpp"
#include "ksfusion/stressmap.hpp"
#include "stress_oracle.hpp"
#include "support.hpp"

using namespace ksf;
using test::Rng;

namespace {

const GeoBounds kTrack{49.22, 6.97, 49.25, 7.01};

StressSample sample(Rng& rng, const GeoBounds& b = kTrack) {
  StressSample s;
  s.position = {test::uniform(rng, b.min_lat, b.max_lat), test::uniform(rng, b.min_lon, b.max_lon)};
  s.valence = static_cast<std::uint8_t>(test::uniform_int(rng, 1, 5));
  s.arousal = static_cast<std::uint8_t>(test::uniform_int(rng, 1, 5));
  return s;
}

void audit(const StressQuadTree& tree) {
  const auto& nodes = tree.nodes();
  for (const auto& n : nodes) {
    const bool leaf = n.children[0] < 0;
    CHECK(std::count(n.children.begin(), n.children.end(), -1) == (leaf ? 4 : 0));
    if (leaf) {
      CHECK(n.stored_samples == n.count);
      CHECK((n.count <= tree.capacity() || n.depth == tree.max_depth()));
    } else {
      std::uint64_t c = 0, v = 0, a = 0;
      for (auto ci : n.children) {
        const auto& ch = nodes[static_cast<std::size_t>(ci)];
        CHECK(ch.depth == n.depth + 1);
        c += ch.count;
        v += ch.valence_sum;
        a += ch.arousal_sum;
      }
      CHECK(c == n.count);
      CHECK(v == n.valence_sum);
      CHECK(a == n.arousal_sum);
      CHECK(n.stored_samples == 0);
    }
  }
}

}  // namespace

TEST_CASE("rounding away from neutral") {
  CHECK(round_away_from_neutral(3.0) == 3);
  CHECK(round_away_from_neutral(2.5) == 2);
  CHECK(round_away_from_neutral(3.5) == 4);
  CHECK(round_away_from_neutral(2.51) == 3);
  CHECK(round_away_from_neutral(3.49) == 3);
  CHECK(round_away_from_neutral(1.5) == 1);
  CHECK(round_away_from_neutral(4.5) == 5);
  CHECK(round_away_from_neutral(1.0) == 1);
  CHECK(round_away_from_neutral(5.0) == 5);
  CHECK_THROWS_AS(round_away_from_neutral(0.99), Error);
  CHECK_THROWS_AS(round_away_from_neutral(5.01), Error);
  CHECK_THROWS_AS(round_away_from_neutral(std::nan("")), Error);
}

TEST_CASE("color matrix") {
  const auto m = ColorMatrix::default_matrix();
  CHECK(m.at(3, 3) == "#808080");
  CHECK(m.at(1, 5) == "#00a000");
  CHECK(m.at(5, 1) == "#e00000");
  CHECK(color_for(3.0, 3.0) == StressColor{3, 3, "#808080"});
  CHECK(color_for(2.0, 3.0) == StressColor{2, 3, m.at(2, 3)});
  CHECK(color_for(1.0, 1.0) == StressColor{1, 1, m.at(1, 1)});
  CHECK(m.at(2, 3) != m.at(3, 3));
  CHECK_THROWS_AS(m.at(0, 3), Error);

  // total on the closed domain
  for (double v = 1.0; v <= 5.0; v += 0.125) {
    for (double a = 1.0; a <= 5.0; a += 0.125) {
      const auto c = color_for(v, a);
      CHECK(c.color.size() == 7);
    }
  }

  const auto dir = test::scratch_dir("matrix");
  {
    std::ofstream f(dir / "m.ini");
    f << "[colors]\nv2a3 = #123456\nv5a5 = #abcdef\n";
  }
  const auto loaded = ColorMatrix::load(dir / "m.ini");
  CHECK(loaded.at(2, 3) == "#123456");
  CHECK(loaded.at(5, 5) == "#abcdef");
  CHECK(loaded.at(3, 3) == "#808080");
  {
    std::ofstream f(dir / "bad.ini");
    f << "[colors]\nv6a3 = #123456\n";
  }
  CHECK_THROWS_AS(ColorMatrix::load(dir / "bad.ini"), Error);
  {
    std::ofstream f(dir / "bad2.ini");
    f << "[colors]\nv1a3 = green\n";
  }
  CHECK_THROWS_AS(ColorMatrix::load(dir / "bad2.ini"), Error);
  CHECK_THROWS_AS(ColorMatrix::load(dir / "missing.ini"), Error);
}

TEST_CASE("quad tree basics") {
  StressQuadTree tree(kTrack);
  CHECK(tree.cells().empty());
  StressSample s;
  s.position = kTrack.center();
  s.valence = 2;
  s.arousal = 3;
  tree.insert(s);
  REQUIRE(tree.nodes().size() == 1);
  CHECK(tree.nodes()[0].count == 1);
  const auto cells = tree.cells();
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].mean_valence == 2.0);
  CHECK(cells[0].color.valence == 2);

  StressSample out = s;
  out.position.lat = kTrack.max_lat + 1e-9;
  CHECK_THROWS_AS(tree.insert(out), Error);
  StressSample bad = s;
  bad.valence = 6;
  CHECK_THROWS_AS(tree.insert(bad), Error);
  CHECK(tree.size() == 1);

  CHECK_THROWS_AS(StressQuadTree(GeoBounds{1, 1, 1, 2}), Error);
  CHECK_THROWS_AS(StressQuadTree(kTrack, 0), Error);
}

TEST_CASE("depth cap stops splitting") {
  StressQuadTree tree(kTrack, 16, 3);
  StressSample s;
  s.position = {49.2301, 6.9801};
  for (int i = 0; i < 17 + 40; ++i) tree.insert(s);
  audit(tree);
  int deepest = 0;
  for (const auto& n : tree.nodes()) deepest = std::max(deepest, n.depth);
  CHECK(deepest == 3);
  const auto cells = tree.cells();
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].count == 57);
}

TEST_CASE("cells equal a flat recomputation") {
  Rng rng(99);
  std::vector<StressSample> samples;
  for (int i = 0; i < 10000; ++i) samples.push_back(sample(rng));
  // clusters along a track plus samples on the edges and split lines
  for (int i = 0; i < 2000; ++i) {
    auto s = sample(rng, GeoBounds{49.2340, 6.9822, 49.2341, 6.9823});
    samples.push_back(s);
  }
  for (double lat : {kTrack.min_lat, kTrack.center().lat, kTrack.max_lat}) {
    for (double lon : {kTrack.min_lon, kTrack.center().lon, kTrack.max_lon}) {
      StressSample s;
      s.position = {lat, lon};
      s.valence = 1;
      s.arousal = 5;
      samples.push_back(s);
    }
  }

  StressQuadTree tree(kTrack);
  for (const auto& s : samples) tree.insert(s);
  audit(tree);
  CHECK(tree.size() == samples.size());

  const auto cells = tree.cells();
  std::uint64_t total = 0;
  for (const auto& c : cells) {
    std::uint64_t n = 0, v = 0, a = 0;
    for (const auto& s : samples) {
      if (test::in_cell(c.bounds, kTrack, s.position)) {
        ++n;
        v += s.valence;
        a += s.arousal;
      }
    }
    CHECK(n == c.count);
    CHECK(c.mean_valence == static_cast<double>(v) / static_cast<double>(n));
    CHECK(c.mean_arousal == static_cast<double>(a) / static_cast<double>(n));
    CHECK(c.color == color_for(c.mean_valence, c.mean_arousal));
    total += c.count;
  }
  CHECK(total == samples.size());

  const auto filtered = tree.cells(20);
  CHECK(std::all_of(filtered.begin(), filtered.end(), [](const StressCell& c) { return c.count >= 20; }));
  CHECK(filtered.size() < cells.size());

  SUBCASE("insertion order does not matter") {
    for (int round = 0; round < 20; ++round) {
      std::shuffle(samples.begin(), samples.end(), rng);
      StressQuadTree t(kTrack);
      for (const auto& s : samples) t.insert(s);
      CHECK(t.cells() == cells);
    }
  }
}

TEST_CASE("uniform samples give uniform means") {
  Rng rng(1);
  StressQuadTree tree(kTrack);
  for (int i = 0; i < 3000; ++i) {
    auto s = sample(rng);
    s.valence = 2;
    s.arousal = 3;
    tree.insert(s);
  }
  for (const auto& c : tree.cells()) {
    CHECK(c.mean_valence == 2.0);
    CHECK(c.mean_arousal == 3.0);
  }
}

TEST_CASE("GeoJSON export") {
  const auto empty = nlohmann::json::parse(stress_cells_geojson({}));
  CHECK(empty["type"] == "FeatureCollection");
  CHECK(empty["features"].empty());

  Rng rng(4);
  StressQuadTree tree(kTrack);
  for (int i = 0; i < 500; ++i) tree.insert(sample(rng));
  const auto cells = tree.cells();
  const auto doc = nlohmann::json::parse(stress_cells_geojson(cells));
  REQUIRE(doc["features"].size() == cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& f = doc["features"][i];
    CHECK(f["type"] == "Feature");
    CHECK(f["geometry"]["type"] == "Polygon");
    const auto& rings = f["geometry"]["coordinates"];
    REQUIRE(rings.size() == 1);
    const auto& ring = rings[0];
    REQUIRE(ring.size() == 5);
    CHECK(ring[0] == ring[4]);
    for (const auto& pt : ring) {
      REQUIRE(pt.size() == 2);
      CHECK(pt[0].get<double>() >= -180.0);
      CHECK(pt[0].get<double>() <= 180.0);
      CHECK(pt[1].get<double>() >= -90.0);
      CHECK(pt[1].get<double>() <= 90.0);
    }
    // exterior ring counter-clockwise (positive signed area in lon/lat)
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
      area += ring[k][0].get<double>() * ring[k + 1][1].get<double>() - ring[k + 1][0].get<double>() * ring[k][1].get<double>();
    }
    CHECK(area > 0.0);
    CHECK(f["properties"]["count"] == cells[i].count);
    CHECK(f["properties"]["color"] == cells[i].color.color);
    CHECK(f["properties"]["mean_valence"].get<double>() == cells[i].mean_valence);
  }
}
