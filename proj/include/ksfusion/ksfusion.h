/* SPDX-License-Identifier: Apache-2.0 */
#ifndef KSFUSION_H
#define KSFUSION_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define KSF_API __attribute__((visibility("default")))
#else
#define KSF_API
#endif

/* Every function returns a status; on failure ksf_last_error() describes it
 * for the calling thread until its next ksf_* call. */
typedef enum ksf_status {
  KSF_OK = 0,
  KSF_E_INVALID_ARGUMENT = 1,
  KSF_E_RANGE_EXCEEDED = 2,
  KSF_E_EMPTY_DETECTION_LIST = 3,
  KSF_E_DELTA_OVERFLOW = 4,
  KSF_E_BAD_MAGIC = 5,
  KSF_E_TRUNCATED = 6,
  KSF_E_UNKNOWN_KIND = 7,
  KSF_E_BAD_PAYLOAD = 8,
  KSF_E_TRAILING_BYTES = 9,
  KSF_E_FRAME_TOO_LARGE = 10,
  KSF_E_EMPTY_GROUP = 11,
  KSF_E_NO_VUT_FIX = 12,
  KSF_E_MISSING_VUT_STATE = 13,
  KSF_E_OUT_OF_BOUNDS = 14,
  KSF_E_NOT_FOUND = 15,
  KSF_E_STORAGE_FAILURE = 16,
  KSF_E_TRANSPORT = 17,
  KSF_E_IO = 18,
  KSF_E_INTERNAL = 99
} ksf_status;

typedef struct ksf_config ksf_config;
typedef struct ksf_store ksf_store;
typedef struct ksf_listener ksf_listener;

KSF_API const char* ksf_version(void);
KSF_API const char* ksf_last_error(void);
KSF_API const char* ksf_status_name(ksf_status status);

/* ---- configuration ---- */

KSF_API ksf_status ksf_config_default(ksf_config** out);
KSF_API ksf_status ksf_config_load(const char* path, ksf_config** out);
KSF_API void ksf_config_free(ksf_config* cfg);
KSF_API const char* ksf_config_store_path(const ksf_config* cfg);
KSF_API ksf_status ksf_config_set_store_path(ksf_config* cfg, const char* path);
KSF_API const char* ksf_config_listen_host(const ksf_config* cfg);
KSF_API uint16_t ksf_config_listen_port(const ksf_config* cfg);

/* ---- store ---- */

typedef struct ksf_ingest_report {
  uint64_t batches;
  uint64_t records;
  uint64_t inserted;
  uint64_t rejected_frames;
} ksf_ingest_report;

typedef struct ksf_stats {
  uint64_t raw_cam;
  uint64_t raw_cpm_detection;
  uint64_t raw_spat;
  uint64_t raw_vut_sensor;
  uint64_t raw_driver;
  uint64_t raw_environment;
  uint64_t raw_hazard;
  uint64_t raw_total;
  uint64_t situations;
  uint64_t topologies;
} ksf_stats;

/* ":memory:" opens a private in-memory store. */
KSF_API ksf_status ksf_store_open(const char* path, ksf_store** out);
KSF_API void ksf_store_close(ksf_store* store);
KSF_API ksf_status ksf_store_stats(ksf_store* store, ksf_stats* out);

/* Ingests every frame of a .ksb file; received_at_ms stamps the rows. The
 * report is accumulated into *report. */
KSF_API ksf_status ksf_ingest_file(ksf_store* store, const char* path, int64_t received_at_ms,
                                   ksf_ingest_report* report);
KSF_API ksf_status ksf_ingest_frame(ksf_store* store, const uint8_t* frame, size_t len, int64_t received_at_ms,
                                    ksf_ingest_report* report);
/* Stores the intersection topology of a map JSON file. */
KSF_API ksf_status ksf_put_map_file(ksf_store* store, const char* path);

/* ---- network ingestion ---- */

KSF_API ksf_status ksf_listener_open(ksf_store* store, const char* host, uint16_t port, ksf_listener** out);
KSF_API uint16_t ksf_listener_port(const ksf_listener* listener);
/* Blocks; max_connections <= 0 and idle_ms <= 0 mean unlimited. */
KSF_API ksf_status ksf_listener_serve(ksf_listener* listener, int64_t max_connections, int64_t idle_ms);
/* Callable from any thread. */
KSF_API void ksf_listener_stop(ksf_listener* listener);
KSF_API ksf_status ksf_listener_report(const ksf_listener* listener, ksf_ingest_report* out);
KSF_API void ksf_listener_close(ksf_listener* listener);

/* Sends every frame of a .ksb file to a listener, stopping at the first
 * frame that is not acknowledged (KSF_E_TRANSPORT). */
KSF_API ksf_status ksf_send_file(const char* host, uint16_t port, const char* path, ksf_ingest_report* report);

/* ---- fusion and evaluation ---- */

typedef struct ksf_situation_summary {
  uint64_t situation_id;
  uint32_t vut;
  int64_t timestamp_ms;
  double center_lat;
  double center_lon;
  double radius_m;
  uint64_t objects;
  uint64_t lanes;
  uint64_t hazards;
  int has_topology;
  int has_driver;
  int has_environment;
} ksf_situation_summary;

KSF_API ksf_status ksf_fuse(ksf_store* store, const ksf_config* cfg, uint32_t vut, int64_t at_ms,
                            ksf_situation_summary* out);
KSF_API ksf_status ksf_situation_summary_get(ksf_store* store, uint64_t situation_id, ksf_situation_summary* out);

/* Lists situations ordered by time; vut 0 means any vehicle. Writes at most
 * capacity entries and sets *count to the total number found. */
KSF_API ksf_status ksf_list_situations(ksf_store* store, uint32_t vut, ksf_situation_summary* out, size_t capacity,
                                       size_t* count);

typedef struct ksf_handover {
  uint64_t rows;
  int has_min_tti;
  int64_t min_tti_ms;
  uint64_t near_objects;
  uint64_t hazards;
  int has_driver_cell;
  int driver_valence;
  int driver_arousal;
  char driver_color[8];
  int suitable;
} ksf_handover;

/* Writes the evaluation CSV (when csv_path is not NULL) and fills the
 * handover summary (when out is not NULL). */
KSF_API ksf_status ksf_evaluate(ksf_store* store, const ksf_config* cfg, uint64_t situation_id, const char* csv_path,
                                ksf_handover* out);
KSF_API ksf_status ksf_export_geojson(ksf_store* store, uint64_t situation_id, const char* path);

typedef struct ksf_stressmap_summary {
  uint64_t samples;
  uint64_t cells;
} ksf_stressmap_summary;

/* Stress cells of the driver samples of one vehicle in [t_min, t_max]. */
KSF_API ksf_status ksf_stressmap(ksf_store* store, const ksf_config* cfg, uint32_t vut, int64_t t_min_ms,
                                 int64_t t_max_ms, const char* geojson_path, ksf_stressmap_summary* out);

/* ---- simulation ---- */

typedef struct ksf_simulation_summary {
  uint64_t batches;
  uint64_t records;
  uint64_t truth_objects;
  uint32_t vut;
  int64_t start_ms;
  int64_t end_ms;
  int64_t mid_ms;
} ksf_simulation_summary;

/* Writes batches.ksb, ground_truth.json and map.json into out_dir. cfg may
 * be NULL; when given, its vehicle transmit schedule applies unless the
 * scenario sets its own. */
KSF_API ksf_status ksf_simulate(const char* scenario_path, const ksf_config* cfg, const char* out_dir,
                                ksf_simulation_summary* out);

typedef struct ksf_score {
  uint64_t fused;
  uint64_t truths;
  uint64_t matched;
  double precision;
  double recall;
  double duplicate_rate;
} ksf_score;

KSF_API ksf_status ksf_score_situation(ksf_store* store, uint64_t situation_id, const char* ground_truth_path,
                                       double match_radius_m, ksf_score* out);

#ifdef __cplusplus
}
#endif

#endif
