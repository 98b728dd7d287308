/* SPDX-License-Identifier: Apache-2.0
 *
 * kexprint C API. All objects are opaque handles owned by the caller and
 * released with their *_free function. Every call that can fail returns a
 * kp_status; kp_last_error() then describes the failure for the calling
 * thread. Strings returned through char** are malloc'd and released with
 * kp_string_free().
 */
#ifndef KEXPRINT_H
#define KEXPRINT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(KEXPRINT_BUILDING_LIBRARY)
#define KP_API __attribute__((visibility("default")))
#else
#define KP_API
#endif

typedef enum kp_status {
  KP_OK = 0,
  KP_ERR_INVALID_ARGUMENT = 1,
  KP_ERR_IO = 2,
  KP_ERR_PARSE = 3,
  KP_ERR_BIND = 4,
  KP_ERR_BACKEND_UNAVAILABLE = 5,
  KP_ERR_NO_SHARED_PROBES = 6,
  KP_ERR_EMPTY_INPUT = 7,
  KP_ERR_PROBE_SET_MISMATCH = 8,
  KP_ERR_PROTOCOL = 9, /* malformed wire data */
  KP_ERR_INTERNAL = 10
} kp_status;

typedef enum kp_format { KP_FORMAT_TEXT = 0, KP_FORMAT_CSV = 1, KP_FORMAT_JSON = 2 } kp_format;

KP_API const char* kp_version(void);
KP_API const char* kp_status_name(kp_status status);
/* Message for the last failed call on this thread; "" if none. */
KP_API const char* kp_last_error(void);
KP_API void kp_string_free(char* s);

/* 1 when every address the host of "host", "host:port" or "[v6]:port"
 * resolves to is loopback or private, 0 otherwise, -1 when malformed. */
KP_API int kp_endpoint_is_private(const char* endpoint);

/* ---- probe sets ---- */

typedef struct kp_probe_set kp_probe_set;

/* config_path may be NULL for the default corpus; seed overrides the
 * config's seed when non-NULL. */
KP_API kp_status kp_probe_set_generate(const char* config_path, const uint64_t* seed, kp_probe_set** out);
KP_API kp_status kp_probe_set_load(const char* path, kp_probe_set** out);
KP_API kp_status kp_probe_set_save(const kp_probe_set* set, const char* path);
KP_API size_t kp_probe_set_size(const kp_probe_set* set);
/* Number of distinct identification lines in the set. */
KP_API size_t kp_probe_set_version_count(const kp_probe_set* set);
/* Probe id at index, or NULL when out of range. Valid while the set lives. */
KP_API const char* kp_probe_set_id(const kp_probe_set* set, size_t index);
KP_API void kp_probe_set_free(kp_probe_set* set);

/* ---- personas ---- */

typedef struct kp_persona kp_persona;

/* Fields left NULL / zero keep the config file's value, or the kind's
 * default when there is no file. */
typedef struct kp_persona_options {
  const char* config_path;
  const char* kind;       /* "reference" or "honeypot" */
  const char* listen;     /* "host:port"; port 0 picks one */
  const char* banner;     /* identification line without CRLF */
  const char* access_log; /* JSONL path */
  const uint64_t* seed;
} kp_persona_options;

KP_API kp_status kp_persona_start(const kp_persona_options* options, kp_persona** out);
KP_API uint16_t kp_persona_port(const kp_persona* persona);
/* JSON array of access-log entries so far. */
KP_API kp_status kp_persona_access_log(const kp_persona* persona, char** json_out);
KP_API void kp_persona_stop(kp_persona* persona);
KP_API void kp_persona_free(kp_persona* persona);

/* ---- disguise proxy ---- */

typedef struct kp_proxy kp_proxy;

typedef struct kp_proxy_options {
  const char* config_path;
  const char* listen;
  const char* backend;
  const char* session_log;
  size_t max_packet;        /* 0: keep */
  uint32_t idle_timeout_ms; /* 0: keep */
} kp_proxy_options;

/* Fails with KP_ERR_BACKEND_UNAVAILABLE when the backend is not reachable. */
KP_API kp_status kp_proxy_start(const kp_proxy_options* options, kp_proxy** out);
KP_API uint16_t kp_proxy_port(const kp_proxy* proxy);
KP_API kp_status kp_proxy_sessions(const kp_proxy* proxy, char** json_out);
KP_API void kp_proxy_stop(kp_proxy* proxy);
KP_API void kp_proxy_free(kp_proxy* proxy);

/* ---- response records ---- */

typedef struct kp_records kp_records;

KP_API kp_status kp_records_new(kp_records** out);
KP_API kp_status kp_records_load(const char* path, kp_records** out);
/* Appends every record to path as JSONL. */
KP_API kp_status kp_records_append_to(const kp_records* records, const char* path);
KP_API kp_status kp_records_merge(kp_records* into, const kp_records* from);
KP_API size_t kp_records_size(const kp_records* records);
KP_API size_t kp_records_target_count(const kp_records* records);
/* Records whose transcript contains the given byte string. */
KP_API size_t kp_records_count_containing(const kp_records* records, const char* needle);
KP_API kp_status kp_records_to_json(const kp_records* records, char** json_out);
KP_API void kp_records_free(kp_records* records);

/* ---- scanning ---- */

typedef struct kp_scan_options {
  const char* config_path;
  const char* const* targets; /* appended to the config's targets */
  size_t target_count;
  uint32_t connect_timeout_ms; /* 0: keep */
  uint32_t read_timeout_ms;    /* 0: keep */
  size_t parallelism;          /* 0: keep */
  const uint64_t* seed;
  int send_banner_first; /* nonzero forces banner-send-first */
  const char* stream_path; /* when set, each record is appended as it completes */
} kp_scan_options;

KP_API kp_status kp_scan(const kp_probe_set* probes, const kp_scan_options* options, kp_records** out);

/* ---- scoring ---- */

/* KP_FORMAT_CSV or KP_FORMAT_JSON. */
KP_API kp_status kp_similarity_matrix(const kp_records* records, kp_format format, char** out);

typedef struct kp_db kp_db;

/* probes may be NULL, in which case any probe id is accepted on import. */
KP_API kp_status kp_db_create(const kp_probe_set* probes, kp_db** out);
KP_API kp_status kp_db_load(const char* path, kp_db** out);
KP_API kp_status kp_db_save(const kp_db* db, const char* path);
KP_API kp_status kp_db_import(kp_db* db, const char* class_name, const kp_records* records, int reference);
KP_API size_t kp_db_class_count(const kp_db* db);
KP_API void kp_db_free(kp_db* db);

typedef struct kp_verdict {
  char class_name[128];
  double score;
  int honeypot_flag;
} kp_verdict;

/* Classifies all records as one target. */
KP_API kp_status kp_classify(const kp_records* target, const kp_db* db, double threshold, kp_verdict* out);
/* One verdict per target as a JSON array. */
KP_API kp_status kp_classify_targets(const kp_records* records, const kp_db* db, double threshold, char** json_out);

/* Similarity matrix, error-class counts and (with db) verdicts.
 * format is KP_FORMAT_TEXT or KP_FORMAT_JSON; db may be NULL. */
KP_API kp_status kp_report(const kp_records* records, const kp_db* db, double threshold, kp_format format,
                           char** out);

#ifdef __cplusplus
}
#endif

#endif /* KEXPRINT_H */
