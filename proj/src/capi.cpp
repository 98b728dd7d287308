// SPDX-License-Identifier: Apache-2.0
#include "kexprint/kexprint.h"

#include "kexprint/errors.hpp"
#include "kexprint/jsonl.hpp"
#include "kexprint/personas.hpp"
#include "kexprint/probes.hpp"
#include "kexprint/proxy.hpp"
#include "kexprint/report.hpp"
#include "kexprint/scanner.hpp"
#include "kexprint/store.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>

using namespace kexprint;
using nlohmann::json;

struct kp_probe_set {
  std::vector<probes::Probe> probes;
};
struct kp_persona {
  std::unique_ptr<personas::Persona> impl;
};
struct kp_proxy {
  std::unique_ptr<proxy::ProxyServer> impl;
};
struct kp_records {
  std::vector<ResponseRecord> records;
};
struct kp_db {
  store::FingerprintDb db;
};

namespace {

thread_local std::string g_last_error;

kp_status status_for(Errc c)
{
  switch (c) {
  case Errc::InvalidArgument:
  case Errc::InvalidField:
  case Errc::InvalidName: return KP_ERR_INVALID_ARGUMENT;
  case Errc::NoSharedProbes: return KP_ERR_NO_SHARED_PROBES;
  case Errc::EmptyInput: return KP_ERR_EMPTY_INPUT;
  case Errc::BindFailure: return KP_ERR_BIND;
  case Errc::BackendUnavailable: return KP_ERR_BACKEND_UNAVAILABLE;
  case Errc::IoFailure: return KP_ERR_IO;
  case Errc::ParseError: return KP_ERR_PARSE;
  case Errc::ProbeSetMismatch: return KP_ERR_PROBE_SET_MISMATCH;
  default: return KP_ERR_PROTOCOL;
  }
}

kp_status fail(kp_status s, std::string message)
{
  g_last_error = std::move(message);
  return s;
}

template <class F>
kp_status guard(F&& body)
{
  try {
    body();
    g_last_error.clear();
    return KP_OK;
  } catch (const Error& e) {
    return fail(status_for(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(KP_ERR_PARSE, e.what());
  } catch (const std::exception& e) {
    return fail(KP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(KP_ERR_INTERNAL, "unknown failure");
  }
}

char* dup_string(const std::string& s)
{
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

json read_json_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

#define KP_REQUIRE(cond)                                                                                           \
  do {                                                                                                             \
    if (!(cond)) return fail(KP_ERR_INVALID_ARGUMENT, "invalid argument: " #cond);                                 \
  } while (0)

} // namespace

extern "C" {

const char* kp_version(void) { return KEXPRINT_VERSION_STRING; }

const char* kp_status_name(kp_status s)
{
  switch (s) {
  case KP_OK: return "OK";
  case KP_ERR_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
  case KP_ERR_IO: return "IO";
  case KP_ERR_PARSE: return "PARSE";
  case KP_ERR_BIND: return "BIND";
  case KP_ERR_BACKEND_UNAVAILABLE: return "BACKEND_UNAVAILABLE";
  case KP_ERR_NO_SHARED_PROBES: return "NO_SHARED_PROBES";
  case KP_ERR_EMPTY_INPUT: return "EMPTY_INPUT";
  case KP_ERR_PROBE_SET_MISMATCH: return "PROBE_SET_MISMATCH";
  case KP_ERR_PROTOCOL: return "PROTOCOL";
  case KP_ERR_INTERNAL: return "INTERNAL";
  }
  return "UNKNOWN";
}

const char* kp_last_error(void) { return g_last_error.c_str(); }

void kp_string_free(char* s) { std::free(s); }

int kp_endpoint_is_private(const char* endpoint)
{
  if (!endpoint || !*endpoint) return -1;
  std::string text(endpoint);
  std::string host = text;
  if (text.find(':') != std::string::npos && (text.front() == '[' || text.find(':') == text.rfind(':'))) {
    try {
      host = net::parse_endpoint(text).host;
    } catch (const Error&) {
      return -1;
    }
  }
  return net::is_private_host(host) ? 1 : 0;
}

// ---- probe sets

kp_status kp_probe_set_generate(const char* config_path, const uint64_t* seed, kp_probe_set** out)
{
  KP_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    auto cfg = config_path ? probes::load_probe_config(config_path) : probes::ProbeConfig{};
    if (seed) cfg.seed = *seed;
    auto set = std::make_unique<kp_probe_set>();
    set->probes = probes::build_corpus(cfg);
    *out = set.release();
  });
}

kp_status kp_probe_set_load(const char* path, kp_probe_set** out)
{
  KP_REQUIRE(path && out);
  *out = nullptr;
  return guard([&] {
    auto set = std::make_unique<kp_probe_set>();
    set->probes = probes::load_probes(path);
    *out = set.release();
  });
}

kp_status kp_probe_set_save(const kp_probe_set* set, const char* path)
{
  KP_REQUIRE(set && path);
  return guard([&] { probes::save_probes(path, set->probes); });
}

size_t kp_probe_set_size(const kp_probe_set* set) { return set ? set->probes.size() : 0; }

size_t kp_probe_set_version_count(const kp_probe_set* set)
{
  if (!set) return 0;
  std::set<Bytes> lines;
  for (const auto& p : set->probes) lines.insert(wire::encode_version_line(p.version));
  return lines.size();
}

const char* kp_probe_set_id(const kp_probe_set* set, size_t index)
{
  if (!set || index >= set->probes.size()) return nullptr;
  return set->probes[index].id.c_str();
}

void kp_probe_set_free(kp_probe_set* set) { delete set; }

// ---- personas

kp_status kp_persona_start(const kp_persona_options* o, kp_persona** out)
{
  KP_REQUIRE(o && out);
  *out = nullptr;
  return guard([&] {
    json j = o->config_path ? read_json_file(o->config_path) : json::object();
    if (o->kind) j["kind"] = o->kind;
    if (o->listen) j["listen"] = o->listen;
    if (o->banner) j["banner"] = o->banner;
    if (o->access_log) j["access_log"] = o->access_log;
    if (o->seed) j["seed"] = *o->seed;
    auto p = std::make_unique<kp_persona>();
    p->impl = personas::Persona::start(personas::persona_config_from_json(j));
    *out = p.release();
  });
}

uint16_t kp_persona_port(const kp_persona* p) { return p && p->impl ? p->impl->port() : 0; }

kp_status kp_persona_access_log(const kp_persona* p, char** json_out)
{
  KP_REQUIRE(p && p->impl && json_out);
  return guard([&] {
    json arr = json::array();
    for (const auto& e : p->impl->access_log()) arr.push_back(personas::access_entry_to_json(e));
    *json_out = dup_string(arr.dump());
  });
}

void kp_persona_stop(kp_persona* p)
{
  if (p && p->impl) p->impl->stop();
}

void kp_persona_free(kp_persona* p) { delete p; }

// ---- proxy

kp_status kp_proxy_start(const kp_proxy_options* o, kp_proxy** out)
{
  KP_REQUIRE(o && out);
  *out = nullptr;
  return guard([&] {
    json j = o->config_path ? read_json_file(o->config_path) : json::object();
    if (o->listen) j["listen"] = o->listen;
    if (o->backend) j["backend"] = o->backend;
    if (o->session_log) j["session_log"] = o->session_log;
    if (o->max_packet) j["max_packet"] = o->max_packet;
    if (o->idle_timeout_ms) j["idle_timeout_ms"] = o->idle_timeout_ms;
    auto p = std::make_unique<kp_proxy>();
    p->impl = proxy::ProxyServer::start(proxy::proxy_config_from_json(j));
    *out = p.release();
  });
}

uint16_t kp_proxy_port(const kp_proxy* p) { return p && p->impl ? p->impl->port() : 0; }

kp_status kp_proxy_sessions(const kp_proxy* p, char** json_out)
{
  KP_REQUIRE(p && p->impl && json_out);
  return guard([&] {
    json arr = json::array();
    for (const auto& s : p->impl->sessions()) arr.push_back(proxy::session_record_to_json(s));
    *json_out = dup_string(arr.dump());
  });
}

void kp_proxy_stop(kp_proxy* p)
{
  if (p && p->impl) p->impl->stop();
}

void kp_proxy_free(kp_proxy* p) { delete p; }

// ---- records

kp_status kp_records_new(kp_records** out)
{
  KP_REQUIRE(out);
  return guard([&] { *out = new kp_records(); });
}

kp_status kp_records_load(const char* path, kp_records** out)
{
  KP_REQUIRE(path && out);
  *out = nullptr;
  return guard([&] {
    auto r = std::make_unique<kp_records>();
    r->records = store::load_records(path);
    *out = r.release();
  });
}

kp_status kp_records_append_to(const kp_records* r, const char* path)
{
  KP_REQUIRE(r && path);
  return guard([&] { store::append_records(path, r->records); });
}

kp_status kp_records_merge(kp_records* into, const kp_records* from)
{
  KP_REQUIRE(into && from);
  return guard([&] { into->records.insert(into->records.end(), from->records.begin(), from->records.end()); });
}

size_t kp_records_size(const kp_records* r) { return r ? r->records.size() : 0; }

size_t kp_records_target_count(const kp_records* r)
{
  if (!r) return 0;
  std::set<std::string> targets;
  for (const auto& rec : r->records) targets.insert(rec.target);
  return targets.size();
}

size_t kp_records_count_containing(const kp_records* r, const char* needle)
{
  if (!r || !needle) return 0;
  size_t n = 0;
  for (const auto& rec : r->records)
    if (contains(transcript_bytes(rec), needle)) ++n;
  return n;
}

kp_status kp_records_to_json(const kp_records* r, char** json_out)
{
  KP_REQUIRE(r && json_out);
  return guard([&] {
    json arr = json::array();
    for (const auto& rec : r->records) arr.push_back(store::record_to_json(rec));
    *json_out = dup_string(arr.dump());
  });
}

void kp_records_free(kp_records* r) { delete r; }

// ---- scanning

kp_status kp_scan(const kp_probe_set* set, const kp_scan_options* o, kp_records** out)
{
  KP_REQUIRE(set && o && out);
  KP_REQUIRE(o->target_count == 0 || o->targets);
  *out = nullptr;
  return guard([&] {
    auto cfg = o->config_path ? scanner::load_campaign_config(o->config_path) : scanner::CampaignConfig{};
    for (size_t i = 0; i < o->target_count; ++i) cfg.endpoints.push_back(net::parse_endpoint(o->targets[i]));
    if (cfg.endpoints.empty()) throw Error(Errc::InvalidArgument, "no scan targets");
    if (o->connect_timeout_ms) cfg.connect_timeout = std::chrono::milliseconds(o->connect_timeout_ms);
    if (o->read_timeout_ms) cfg.read_timeout = std::chrono::milliseconds(o->read_timeout_ms);
    if (o->parallelism) cfg.parallelism = o->parallelism;
    if (o->seed) cfg.seed = *o->seed;
    if (o->send_banner_first) cfg.send_banner_first = true;
    cfg.probes = set->probes;

    std::unique_ptr<JsonlWriter> stream;
    scanner::RecordSink sink;
    if (o->stream_path) {
      stream = std::make_unique<JsonlWriter>(o->stream_path);
      sink = [&stream](const ResponseRecord& r) { stream->write(store::record_to_json(r)); };
    }
    auto r = std::make_unique<kp_records>();
    r->records = scanner::run_campaign(cfg, sink);
    *out = r.release();
  });
}

// ---- scoring

kp_status kp_similarity_matrix(const kp_records* r, kp_format format, char** out)
{
  KP_REQUIRE(r && out);
  KP_REQUIRE(format == KP_FORMAT_CSV || format == KP_FORMAT_JSON);
  return guard([&] {
    if (r->records.empty()) throw Error(Errc::EmptyInput, "no records");
    auto m = similarity::similarity_matrix(similarity::group_by_target(r->records));
    *out = dup_string(format == KP_FORMAT_CSV ? m.to_csv() : m.to_json().dump(2) + "\n");
  });
}

kp_status kp_db_create(const kp_probe_set* set, kp_db** out)
{
  KP_REQUIRE(out);
  return guard([&] {
    std::vector<std::string> ids;
    if (set)
      for (const auto& p : set->probes) ids.push_back(p.id);
    *out = new kp_db{store::FingerprintDb::create(std::move(ids))};
  });
}

kp_status kp_db_load(const char* path, kp_db** out)
{
  KP_REQUIRE(path && out);
  *out = nullptr;
  return guard([&] { *out = new kp_db{store::load_db(path)}; });
}

kp_status kp_db_save(const kp_db* db, const char* path)
{
  KP_REQUIRE(db && path);
  return guard([&] { store::save_db(path, db->db); });
}

kp_status kp_db_import(kp_db* db, const char* class_name, const kp_records* r, int reference)
{
  KP_REQUIRE(db && class_name && r);
  return guard([&] { store::import_reference(db->db, class_name, r->records, reference != 0); });
}

size_t kp_db_class_count(const kp_db* db) { return db ? db->db.classes.size() : 0; }

void kp_db_free(kp_db* db) { delete db; }

kp_status kp_classify(const kp_records* target, const kp_db* db, double threshold, kp_verdict* out)
{
  KP_REQUIRE(target && db && out);
  KP_REQUIRE(threshold >= 0.0 && threshold <= 1.0);
  return guard([&] {
    auto classes = db->db.class_list();
    auto v = similarity::classify(target->records, classes, threshold);
    std::memset(out, 0, sizeof *out);
    std::strncpy(out->class_name, v.class_name.c_str(), sizeof out->class_name - 1);
    out->score = v.score;
    out->honeypot_flag = v.honeypot_flag ? 1 : 0;
  });
}

kp_status kp_classify_targets(const kp_records* r, const kp_db* db, double threshold, char** json_out)
{
  KP_REQUIRE(r && db && json_out);
  KP_REQUIRE(threshold >= 0.0 && threshold <= 1.0);
  return guard([&] {
    auto classes = db->db.class_list();
    json arr = json::array();
    for (const auto& [target, records] : similarity::group_by_target(r->records)) {
      auto v = similarity::classify(records, classes, threshold);
      arr.push_back({{"target", target}, {"class", v.class_name}, {"score", v.score}, {"honeypot", v.honeypot_flag}});
    }
    if (arr.empty()) throw Error(Errc::EmptyInput, "no records");
    *json_out = dup_string(arr.dump(2) + "\n");
  });
}

kp_status kp_report(const kp_records* r, const kp_db* db, double threshold, kp_format format, char** out)
{
  KP_REQUIRE(r && out);
  KP_REQUIRE(format == KP_FORMAT_TEXT || format == KP_FORMAT_JSON);
  KP_REQUIRE(threshold >= 0.0 && threshold <= 1.0);
  return guard([&] {
    if (r->records.empty()) throw Error(Errc::EmptyInput, "no records");
    auto targets = similarity::group_by_target(r->records);
    std::vector<similarity::FingerprintClass> classes;
    if (db) classes = db->db.class_list();
    *out = dup_string(format == KP_FORMAT_TEXT ? report::render_text(targets, classes, threshold)
                                               : report::render_json(targets, classes, threshold).dump(2) + "\n");
  });
}

} // extern "C"
