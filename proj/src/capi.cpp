// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/ksfusion.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "ksfusion/config.hpp"
#include "ksfusion/error.hpp"
#include "ksfusion/export.hpp"
#include "ksfusion/fusion.hpp"
#include "ksfusion/metrics.hpp"
#include "ksfusion/net.hpp"
#include "ksfusion/simgen.hpp"
#include "ksfusion/store.hpp"
#include "ksfusion/stressmap.hpp"
#include "ksfusion/wire.hpp"

struct ksf_config {
  ksf::Config cfg;
  std::string store_path;
};

struct ksf_store {
  std::unique_ptr<ksf::Store> store;
};

struct ksf_listener {
  std::unique_ptr<ksf::Listener> listener;
};

namespace {

thread_local std::string g_last_error;

ksf_status status_of(ksf::ErrorCode code) {
  return static_cast<ksf_status>(static_cast<int>(code) + 1);
}

template <class F>
ksf_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return KSF_OK;
  } catch (const ksf::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "Internal: out of memory";
  } catch (const std::exception& e) {
    g_last_error = std::string("Internal: ") + e.what();
  } catch (...) {
    g_last_error = "Internal: unknown exception";
  }
  return KSF_E_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) throw ksf::Error(ksf::ErrorCode::InvalidArgument, what);
}

const ksf::Config& config_or_default(const ksf_config* cfg) {
  static const ksf::Config defaults;
  return cfg ? cfg->cfg : defaults;
}

void add_report(ksf_ingest_report* out, const ksf::IngestReport& r, std::size_t rejected = 0) {
  if (!out) return;
  out->batches += r.batches;
  out->records += r.records;
  out->inserted += r.inserted;
  out->rejected_frames += rejected;
}

void fill_summary(const ksf::SituationRecord& s, ksf_situation_summary* out) {
  *out = {};
  out->situation_id = s.situation_id;
  out->vut = s.vut.value;
  out->timestamp_ms = s.timestamp;
  out->center_lat = s.center.lat;
  out->center_lon = s.center.lon;
  out->radius_m = s.radius_m;
  out->objects = s.objects.size();
  out->lanes = s.topology ? s.topology->lanes.size() : 0;
  out->hazards = s.hazards.size();
  out->has_topology = s.topology.has_value();
  out->has_driver = s.driver.has_value();
  out->has_environment = s.environment.has_value();
}

ksf::ColorMatrix matrix_for(const ksf::Config& cfg) {
  return cfg.stressmap.matrix ? ksf::ColorMatrix::load(*cfg.stressmap.matrix) : ksf::ColorMatrix::default_matrix();
}

}  // namespace

extern "C" {

const char* ksf_version(void) { return "1.0.0"; }

const char* ksf_last_error(void) { return g_last_error.c_str(); }

const char* ksf_status_name(ksf_status status) {
  if (status == KSF_OK) return "Ok";
  if (status == KSF_E_INTERNAL) return "Internal";
  const int code = static_cast<int>(status) - 1;
  if (code < 0 || code > static_cast<int>(ksf::ErrorCode::Io)) return "Unknown";
  return ksf::to_string(static_cast<ksf::ErrorCode>(code)).data();
}

ksf_status ksf_config_default(ksf_config** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    auto c = std::make_unique<ksf_config>();
    c->store_path = c->cfg.store_path.string();
    *out = c.release();
  });
}

ksf_status ksf_config_load(const char* path, ksf_config** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out are required");
    auto c = std::make_unique<ksf_config>();
    c->cfg = ksf::Config::load(path);
    c->store_path = c->cfg.store_path.string();
    *out = c.release();
  });
}

void ksf_config_free(ksf_config* cfg) { delete cfg; }

const char* ksf_config_store_path(const ksf_config* cfg) { return cfg ? cfg->store_path.c_str() : ""; }

ksf_status ksf_config_set_store_path(ksf_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg != nullptr && path != nullptr && *path != '\0', "config and a non-empty path are required");
    cfg->cfg.store_path = path;
    cfg->store_path = path;
  });
}

const char* ksf_config_listen_host(const ksf_config* cfg) { return config_or_default(cfg).listen_host.c_str(); }

uint16_t ksf_config_listen_port(const ksf_config* cfg) { return config_or_default(cfg).listen_port; }

ksf_status ksf_store_open(const char* path, ksf_store** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out are required");
    auto s = std::make_unique<ksf_store>();
    s->store = std::make_unique<ksf::Store>(path);
    *out = s.release();
  });
}

void ksf_store_close(ksf_store* store) { delete store; }

ksf_status ksf_store_stats(ksf_store* store, ksf_stats* out) {
  return guarded([&] {
    require(store != nullptr && out != nullptr, "store and out are required");
    const auto st = store->store->stats();
    auto rows = [&](const char* table) {
      auto it = st.raw_rows.find(table);
      return it == st.raw_rows.end() ? std::uint64_t{0} : it->second;
    };
    *out = {};
    out->raw_cam = rows("raw_cam");
    out->raw_cpm_detection = rows("raw_cpm_detection");
    out->raw_spat = rows("raw_spat");
    out->raw_vut_sensor = rows("raw_vut_sensor");
    out->raw_driver = rows("raw_driver");
    out->raw_environment = rows("raw_environment");
    out->raw_hazard = rows("raw_hazard");
    out->raw_total = st.raw_total;
    out->situations = st.situations;
    out->topologies = st.topologies;
  });
}

ksf_status ksf_ingest_file(ksf_store* store, const char* path, int64_t received_at_ms, ksf_ingest_report* report) {
  return guarded([&] {
    require(store != nullptr && path != nullptr, "store and path are required");
    for (const auto& frame : ksf::wire::read_ksb_frames(path)) {
      add_report(report, store->store->ingest_frame(frame, received_at_ms));
    }
  });
}

ksf_status ksf_ingest_frame(ksf_store* store, const uint8_t* frame, size_t len, int64_t received_at_ms,
                            ksf_ingest_report* report) {
  return guarded([&] {
    require(store != nullptr && (frame != nullptr || len == 0), "store and frame are required");
    add_report(report, store->store->ingest_frame({frame, len}, received_at_ms));
  });
}

ksf_status ksf_put_map_file(ksf_store* store, const char* path) {
  return guarded([&] {
    require(store != nullptr && path != nullptr, "store and path are required");
    store->store->put_topology(ksf::map_from_json(ksf::read_text_file(path)));
  });
}

ksf_status ksf_listener_open(ksf_store* store, const char* host, uint16_t port, ksf_listener** out) {
  return guarded([&] {
    require(store != nullptr && host != nullptr && out != nullptr, "store, host and out are required");
    auto l = std::make_unique<ksf_listener>();
    l->listener = std::make_unique<ksf::Listener>(host, port, *store->store);
    *out = l.release();
  });
}

uint16_t ksf_listener_port(const ksf_listener* listener) { return listener ? listener->listener->port() : 0; }

ksf_status ksf_listener_serve(ksf_listener* listener, int64_t max_connections, int64_t idle_ms) {
  return guarded([&] {
    require(listener != nullptr, "listener is null");
    std::optional<std::size_t> max;
    std::optional<std::int64_t> idle;
    if (max_connections > 0) max = static_cast<std::size_t>(max_connections);
    if (idle_ms > 0) idle = idle_ms;
    listener->listener->serve(max, idle);
  });
}

void ksf_listener_stop(ksf_listener* listener) {
  if (listener) listener->listener->stop();
}

ksf_status ksf_listener_report(const ksf_listener* listener, ksf_ingest_report* out) {
  return guarded([&] {
    require(listener != nullptr && out != nullptr, "listener and out are required");
    *out = {};
    add_report(out, listener->listener->report(), listener->listener->rejected_frames());
  });
}

void ksf_listener_close(ksf_listener* listener) { delete listener; }

ksf_status ksf_send_file(const char* host, uint16_t port, const char* path, ksf_ingest_report* report) {
  return guarded([&] {
    require(host != nullptr && path != nullptr, "host and path are required");
    const auto frames = ksf::wire::read_ksb_frames(path);
    ksf::SocketTransport transport(host, port);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (!transport.send(frames[i])) {
        throw ksf::Error(ksf::ErrorCode::TransportError,
                         "frame " + std::to_string(i) + " of " + std::to_string(frames.size()) + " not acknowledged");
      }
      if (report) {
        const auto env = ksf::wire::decode_batch(frames[i]);
        report->batches += 1;
        report->records += env.records.size();
      }
    }
  });
}

ksf_status ksf_fuse(ksf_store* store, const ksf_config* cfg, uint32_t vut, int64_t at_ms,
                    ksf_situation_summary* out) {
  return guarded([&] {
    require(store != nullptr && out != nullptr, "store and out are required");
    const auto s = ksf::fuse_situation(ksf::StationId{vut}, at_ms, *store->store, config_or_default(cfg).fusion);
    fill_summary(s, out);
  });
}

ksf_status ksf_situation_summary_get(ksf_store* store, uint64_t situation_id, ksf_situation_summary* out) {
  return guarded([&] {
    require(store != nullptr && out != nullptr, "store and out are required");
    fill_summary(store->store->load_situation(situation_id), out);
  });
}

ksf_status ksf_list_situations(ksf_store* store, uint32_t vut, ksf_situation_summary* out, size_t capacity,
                               size_t* count) {
  return guarded([&] {
    require(store != nullptr && count != nullptr, "store and count are required");
    require(out != nullptr || capacity == 0, "out is null");
    ksf::SituationFilter filter;
    if (vut != 0) filter.vut = ksf::StationId{vut};
    const auto list = store->store->list_situations(filter);
    *count = list.size();
    for (std::size_t i = 0; i < list.size() && i < capacity; ++i) {
      fill_summary(store->store->load_situation(list[i].situation_id), &out[i]);
    }
  });
}

ksf_status ksf_evaluate(ksf_store* store, const ksf_config* cfg, uint64_t situation_id, const char* csv_path,
                        ksf_handover* out) {
  return guarded([&] {
    require(store != nullptr, "store is null");
    const auto& c = config_or_default(cfg);
    const auto s = store->store->load_situation(situation_id);
    const auto rows = ksf::evaluate_situation(s, c.floors);
    if (csv_path) ksf::write_text_file(csv_path, ksf::evaluation_csv(rows));
    if (!out) return;
    const auto h = ksf::handover_summary(rows, s.driver, s.hazards, c.handover, matrix_for(c));
    *out = {};
    out->rows = rows.size();
    out->has_min_tti = h.min_tti_ms.has_value();
    out->min_tti_ms = h.min_tti_ms.value_or(-1);
    out->near_objects = h.near_objects;
    out->hazards = h.hazard_count;
    out->has_driver_cell = h.driver_cell.has_value();
    if (h.driver_cell) {
      out->driver_valence = h.driver_cell->valence;
      out->driver_arousal = h.driver_cell->arousal;
      std::strncpy(out->driver_color, h.driver_cell->color.c_str(), sizeof(out->driver_color) - 1);
    }
    out->suitable = h.suitable;
  });
}

ksf_status ksf_export_geojson(ksf_store* store, uint64_t situation_id, const char* path) {
  return guarded([&] {
    require(store != nullptr && path != nullptr, "store and path are required");
    ksf::write_text_file(path, ksf::situation_geojson(store->store->load_situation(situation_id)));
  });
}

ksf_status ksf_stressmap(ksf_store* store, const ksf_config* cfg, uint32_t vut, int64_t t_min_ms, int64_t t_max_ms,
                         const char* geojson_path, ksf_stressmap_summary* out) {
  return guarded([&] {
    require(store != nullptr, "store is null");
    require(t_min_ms <= t_max_ms, "empty time range");
    const auto& c = config_or_default(cfg);
    ksf::RawQuery q;
    q.t_min = t_min_ms;
    q.t_max = t_max_ms;
    q.kinds.add(ksf::wire::RecordKind::DriverState);
    q.reporter = ksf::StationId{vut};
    std::vector<ksf::StressSample> samples;
    for (const auto& r : store->store->query_raw(q)) {
      const auto& d = std::get<ksf::DriverStateSample>(r.body);
      samples.push_back({r.position, d.timestamp, d.valence, d.arousal});
    }
    if (samples.empty()) {
      throw ksf::Error(ksf::ErrorCode::NotFound, "no driver samples for vehicle " + std::to_string(vut));
    }
    ksf::StressQuadTree tree(ksf::bounds_of(samples), c.stressmap.capacity, c.stressmap.max_depth);
    for (const auto& s : samples) tree.insert(s);
    const auto cells = tree.cells(c.stressmap.min_count, matrix_for(c));
    if (geojson_path) ksf::write_text_file(geojson_path, ksf::stress_cells_geojson(cells));
    if (out) *out = {samples.size(), cells.size()};
  });
}

ksf_status ksf_simulate(const char* scenario_path, const ksf_config* cfg, const char* out_dir,
                        ksf_simulation_summary* out) {
  return guarded([&] {
    require(out_dir != nullptr, "out_dir is null");
    auto sc = scenario_path ? ksf::ScenarioConfig::load(scenario_path) : ksf::ScenarioConfig{};
    if (cfg && !sc.vda_schedule) sc.vda_schedule = cfg->cfg.vda_schedule;
    sc.validate();
    const auto scenario = ksf::generate(sc);
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ksf::Error(ksf::ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    ksf::wire::write_ksb_file(dir / "batches.ksb", scenario.batches);
    ksf::write_text_file(dir / "ground_truth.json", ksf::ground_truth_json(scenario.truth));
    ksf::write_text_file(dir / "map.json", ksf::map_json(scenario.truth.topology));
    if (!out) return;
    *out = {};
    out->batches = scenario.batches.size();
    for (const auto& b : scenario.batches) out->records += b.records.size();
    out->truth_objects = scenario.truth.objects.size();
    out->vut = sc.vut.value;
    out->start_ms = sc.start_ms;
    out->end_ms = sc.end_ms();
    out->mid_ms = sc.mid_ms();
  });
}

ksf_status ksf_score_situation(ksf_store* store, uint64_t situation_id, const char* ground_truth_path,
                               double match_radius_m, ksf_score* out) {
  return guarded([&] {
    require(store != nullptr && ground_truth_path != nullptr && out != nullptr, "store, path and out are required");
    require(match_radius_m > 0.0, "match radius must be positive");
    const auto gt = ksf::ground_truth_from_json(ksf::read_text_file(ground_truth_path));
    const auto sc = ksf::score(gt, store->store->load_situation(situation_id), match_radius_m);
    *out = {sc.fused, sc.truths, sc.matched, sc.precision, sc.recall, sc.duplicate_rate};
  });
}

}  // extern "C"
