// SPDX-License-Identifier: Apache-2.0
#include <ksfusion/ksfusion.h>

#include <CLI11.hpp>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure {
  ksf_status status;
};

void check(ksf_status s) {
  if (s != KSF_OK) throw Failure{s};
}

struct ConfigDeleter {
  void operator()(ksf_config* c) const { ksf_config_free(c); }
};
struct StoreDeleter {
  void operator()(ksf_store* s) const { ksf_store_close(s); }
};
struct ListenerDeleter {
  void operator()(ksf_listener* l) const { ksf_listener_close(l); }
};
using ConfigPtr = std::unique_ptr<ksf_config, ConfigDeleter>;
using StorePtr = std::unique_ptr<ksf_store, StoreDeleter>;
using ListenerPtr = std::unique_ptr<ksf_listener, ListenerDeleter>;

struct Globals {
  std::string config_path;
  std::string store_path;
};

ConfigPtr load_config(const Globals& g) {
  ksf_config* c = nullptr;
  check(g.config_path.empty() ? ksf_config_default(&c) : ksf_config_load(g.config_path.c_str(), &c));
  ConfigPtr cfg(c);
  if (!g.store_path.empty()) check(ksf_config_set_store_path(cfg.get(), g.store_path.c_str()));
  return cfg;
}

StorePtr open_store(const ksf_config* cfg) {
  ksf_store* s = nullptr;
  check(ksf_store_open(ksf_config_store_path(cfg), &s));
  return StorePtr(s);
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void print_report(const char* what, const ksf_ingest_report& r) {
  std::printf("%s batches=%" PRIu64 " records=%" PRIu64 " inserted=%" PRIu64 " duplicates=%" PRIu64
              " rejected_frames=%" PRIu64 "\n",
              what, r.batches, r.records, r.inserted, r.records - r.inserted, r.rejected_frames);
}

void print_situation(const ksf_situation_summary& s) {
  std::printf("situation=%" PRIu64 " vut=%u time=%" PRId64 " center=%.7f,%.7f radius=%.1f objects=%" PRIu64
              " lanes=%" PRIu64 " hazards=%" PRIu64 " driver=%s environment=%s\n",
              s.situation_id, s.vut, s.timestamp_ms, s.center_lat, s.center_lon, s.radius_m, s.objects, s.lanes,
              s.hazards, s.has_driver ? "yes" : "no", s.has_environment ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative traffic situation fusion backend"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", ksf_version());
  Globals g;
  app.add_option("--config", g.config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--store", g.store_path, "SQLite store path (overrides the configuration)");

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic intersection scenario");
  std::string scenario_path, out_dir;
  simulate->add_option("--scenario", scenario_path, "Scenario INI file")->check(CLI::ExistingFile);
  simulate->add_option("--out", out_dir, "Output directory")->required();

  auto* ingest = app.add_subcommand("ingest", "Store .ksb batch files or listen for batches");
  std::vector<std::string> ingest_files;
  std::string map_path;
  bool listen = false;
  std::optional<std::uint16_t> listen_port;
  std::int64_t max_connections = 0, idle_ms = 0;
  ingest->add_option("files", ingest_files, ".ksb files")->check(CLI::ExistingFile);
  ingest->add_option("--map", map_path, "Intersection map JSON")->check(CLI::ExistingFile);
  ingest->add_flag("--listen", listen, "Accept batches over TCP");
  ingest->add_option("--port", listen_port, "Listening port (overrides the configuration)");
  ingest->add_option("--max-connections", max_connections, "Stop after this many connections")
      ->check(CLI::NonNegativeNumber);
  ingest->add_option("--idle-ms", idle_ms, "Stop after this long without connections")
      ->check(CLI::NonNegativeNumber);

  auto* send = app.add_subcommand("send", "Send a .ksb file to a listening backend");
  std::string send_file, send_host;
  std::optional<std::uint16_t> send_port;
  send->add_option("file", send_file, ".ksb file")->required()->check(CLI::ExistingFile);
  send->add_option("--host", send_host, "Backend host (default from the configuration)");
  send->add_option("--port", send_port, "Backend port (default from the configuration)");

  auto* fuse = app.add_subcommand("fuse", "Build and store the traffic situation of a vehicle");
  std::uint32_t fuse_vut = 0;
  std::int64_t fuse_at = 0;
  fuse->add_option("--vut", fuse_vut, "Vehicle station id")->required();
  fuse->add_option("--at", fuse_at, "Situation time in ms since the epoch")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a stored situation");
  std::uint64_t eval_id = 0;
  std::string csv_path, truth_path;
  double match_radius = 3.0;
  eval->add_option("--situation", eval_id, "Situation id")->required();
  eval->add_option("--csv", csv_path, "Evaluation CSV output");
  eval->add_option("--truth", truth_path, "Ground truth JSON to score against")->check(CLI::ExistingFile);
  eval->add_option("--match-radius", match_radius, "Truth matching radius in meters")->check(CLI::PositiveNumber);

  auto* exporter = app.add_subcommand("export", "Export a stored situation as GeoJSON");
  std::uint64_t export_id = 0;
  std::string export_path;
  exporter->add_option("--situation", export_id, "Situation id")->required();
  exporter->add_option("--geojson", export_path, "GeoJSON output")->required();

  auto* stress = app.add_subcommand("stressmap", "Driver stress map of a vehicle as GeoJSON");
  std::uint32_t stress_vut = 0;
  std::int64_t stress_from = 0, stress_to = INT64_MAX;
  std::string stress_path;
  stress->add_option("--vut", stress_vut, "Vehicle station id")->required();
  stress->add_option("--from", stress_from, "Earliest sample time in ms");
  stress->add_option("--to", stress_to, "Latest sample time in ms");
  stress->add_option("--geojson", stress_path, "GeoJSON output")->required();

  auto* stats = app.add_subcommand("stats", "Row counts of the store");

  auto* list = app.add_subcommand("situations", "List stored situations");
  std::uint32_t list_vut = 0;
  list->add_option("--vut", list_vut, "Only this vehicle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const auto cfg = load_config(g);

    if (*simulate) {
      ksf_simulation_summary s{};
      const char* scenario = scenario_path.empty() ? nullptr : scenario_path.c_str();
      check(ksf_simulate(scenario, g.config_path.empty() ? nullptr : cfg.get(), out_dir.c_str(), &s));
      std::printf("batches=%" PRIu64 " records=%" PRIu64 " truth_objects=%" PRIu64 " vut=%u start=%" PRId64
                  " end=%" PRId64 " mid=%" PRId64 "\n",
                  s.batches, s.records, s.truth_objects, s.vut, s.start_ms, s.end_ms, s.mid_ms);
    } else if (*ingest) {
      if (ingest_files.empty() && map_path.empty() && !listen) {
        std::fprintf(stderr, "ingest: nothing to do; give files, --map or --listen\n");
        return kExitUsage;
      }
      auto store = open_store(cfg.get());
      if (!map_path.empty()) {
        check(ksf_put_map_file(store.get(), map_path.c_str()));
        std::printf("map stored\n");
      }
      for (const auto& f : ingest_files) {
        ksf_ingest_report r{};
        check(ksf_ingest_file(store.get(), f.c_str(), now_ms(), &r));
        print_report(f.c_str(), r);
      }
      if (listen) {
        ksf_listener* l = nullptr;
        const std::uint16_t port = listen_port.value_or(ksf_config_listen_port(cfg.get()));
        check(ksf_listener_open(store.get(), ksf_config_listen_host(cfg.get()), port, &l));
        ListenerPtr listener(l);
        std::printf("listening on %s:%u\n", ksf_config_listen_host(cfg.get()), ksf_listener_port(l));
        std::fflush(stdout);
        check(ksf_listener_serve(l, max_connections, idle_ms));
        ksf_ingest_report r{};
        check(ksf_listener_report(l, &r));
        print_report("listener", r);
      }
    } else if (*send) {
      ksf_ingest_report r{};
      const std::string host = send_host.empty() ? ksf_config_listen_host(cfg.get()) : send_host;
      check(ksf_send_file(host.c_str(), send_port.value_or(ksf_config_listen_port(cfg.get())), send_file.c_str(), &r));
      std::printf("sent batches=%" PRIu64 " records=%" PRIu64 "\n", r.batches, r.records);
    } else if (*fuse) {
      auto store = open_store(cfg.get());
      ksf_situation_summary s{};
      check(ksf_fuse(store.get(), cfg.get(), fuse_vut, fuse_at, &s));
      print_situation(s);
    } else if (*eval) {
      auto store = open_store(cfg.get());
      ksf_handover h{};
      check(ksf_evaluate(store.get(), cfg.get(), eval_id, csv_path.empty() ? nullptr : csv_path.c_str(), &h));
      std::printf("rows=%" PRIu64 " min_tti=", h.rows);
      if (h.has_min_tti) {
        std::printf("%" PRId64, h.min_tti_ms);
      } else {
        std::printf("none");
      }
      std::printf(" near_objects=%" PRIu64 " hazards=%" PRIu64, h.near_objects, h.hazards);
      if (h.has_driver_cell) {
        std::printf(" driver_cell=v%da%d color=%s", h.driver_valence, h.driver_arousal, h.driver_color);
      }
      std::printf(" handover=%s\n", h.suitable ? "suitable" : "unsuitable");
      if (!truth_path.empty()) {
        ksf_score sc{};
        check(ksf_score_situation(store.get(), eval_id, truth_path.c_str(), match_radius, &sc));
        std::printf("fused=%" PRIu64 " truths=%" PRIu64 " matched=%" PRIu64
                    " precision=%.4f recall=%.4f duplicate_rate=%.4f\n",
                    sc.fused, sc.truths, sc.matched, sc.precision, sc.recall, sc.duplicate_rate);
      }
    } else if (*exporter) {
      auto store = open_store(cfg.get());
      check(ksf_export_geojson(store.get(), export_id, export_path.c_str()));
      std::printf("wrote %s\n", export_path.c_str());
    } else if (*stress) {
      auto store = open_store(cfg.get());
      ksf_stressmap_summary s{};
      check(ksf_stressmap(store.get(), cfg.get(), stress_vut, stress_from, stress_to, stress_path.c_str(), &s));
      std::printf("samples=%" PRIu64 " cells=%" PRIu64 "\n", s.samples, s.cells);
    } else if (*stats) {
      auto store = open_store(cfg.get());
      ksf_stats s{};
      check(ksf_store_stats(store.get(), &s));
      std::printf("raw_cam %" PRIu64 "\nraw_cpm_detection %" PRIu64 "\nraw_spat %" PRIu64 "\nraw_vut_sensor %" PRIu64
                  "\nraw_driver %" PRIu64 "\nraw_environment %" PRIu64 "\nraw_hazard %" PRIu64 "\nraw_total %" PRIu64
                  "\nsituations %" PRIu64 "\ntopologies %" PRIu64 "\n",
                  s.raw_cam, s.raw_cpm_detection, s.raw_spat, s.raw_vut_sensor, s.raw_driver, s.raw_environment,
                  s.raw_hazard, s.raw_total, s.situations, s.topologies);
    } else if (*list) {
      auto store = open_store(cfg.get());
      std::size_t count = 0;
      check(ksf_list_situations(store.get(), list_vut, nullptr, 0, &count));
      std::vector<ksf_situation_summary> all(count);
      check(ksf_list_situations(store.get(), list_vut, all.data(), all.size(), &count));
      for (const auto& s : all) print_situation(s);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s (%s)\n", ksf_last_error(), ksf_status_name(f.status));
    return kExitFailure;
  }
  return 0;
}
