// SPDX-License-Identifier: Apache-2.0
//
// kexprint command-line front end. Talks to the library through the C API only.

#include "kexprint/kexprint.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  bool json = false;
};

// Operational failure carrying the library's message.
struct Failure {
  std::string message;
};

void check(kp_status s, const char* what)
{
  if (s != KP_OK) throw Failure{std::string(what) + ": " + kp_status_name(s) + ": " + kp_last_error()};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using ProbeSet = Handle<kp_probe_set, kp_probe_set_free>;
using Records = Handle<kp_records, kp_records_free>;
using Db = Handle<kp_db, kp_db_free>;
using PersonaH = Handle<kp_persona, kp_persona_free>;
using ProxyH = Handle<kp_proxy, kp_proxy_free>;

// Owns a string returned by the library.
struct LibString {
  char* s = nullptr;
  ~LibString() { kp_string_free(s); }
  char** out() { return &s; }
  std::string str() const { return s ? s : ""; }
};

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

void emit(const Globals& g, const std::string& text)
{
  if (g.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  FILE* f = std::fopen(g.out.c_str(), "w");
  if (!f) throw Failure{"cannot write " + g.out};
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

void load_records(const std::vector<std::string>& paths, Records& into)
{
  check(kp_records_new(into.out()), "records");
  for (const auto& path : paths) {
    Records part;
    check(kp_records_load(path.c_str(), part.out()), path.c_str());
    check(kp_records_merge(into.get(), part.get()), "merge");
  }
}

// Blocks until SIGINT or SIGTERM. The signals are masked in every thread
// (set up in main before any library thread starts).
int wait_for_signal()
{
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

int run_gen_probes(const Globals& g)
{
  ProbeSet set;
  check(kp_probe_set_generate(opt(g.config), g.seed ? &*g.seed : nullptr, set.out()), "gen-probes");
  std::string path = g.out.empty() ? "probes.jsonl" : g.out;
  std::remove(path.c_str());
  check(kp_probe_set_save(set.get(), path.c_str()), "save probes");
  size_t n = kp_probe_set_size(set.get());
  size_t versions = kp_probe_set_version_count(set.get());
  if (g.json)
    std::cout << "{\"probes\":" << n << ",\"version_strings\":" << versions << ",\"out\":\"" << path << "\"}\n";
  else
    std::cout << "wrote " << n << " probes (" << versions << " distinct version strings) to " << path << "\n";
  return kExitOk;
}

struct PersonaArgs {
  std::string kind;
  std::string listen = "127.0.0.1:2222";
  std::string banner;
  std::string access_log;
};

int run_persona(const Globals& g, const PersonaArgs& a)
{
  kp_persona_options o{};
  o.config_path = opt(g.config);
  o.kind = opt(a.kind);
  o.listen = opt(a.listen);
  o.banner = opt(a.banner);
  o.access_log = opt(a.access_log);
  o.seed = g.seed ? &*g.seed : nullptr;
  PersonaH p;
  check(kp_persona_start(&o, p.out()), "persona");
  if (g.json)
    std::cout << "{\"kind\":\"" << (a.kind.empty() ? "config" : a.kind) << "\",\"port\":" << kp_persona_port(p.get())
              << "}\n";
  else
    std::cout << "persona listening on port " << kp_persona_port(p.get()) << " (Ctrl-C to stop)\n";
  std::cout.flush();
  wait_for_signal();
  kp_persona_stop(p.get());
  return kExitOk;
}

struct ScanArgs {
  std::string probes;
  std::vector<std::string> targets;
  uint32_t connect_timeout_ms = 0;
  uint32_t read_timeout_ms = 0;
  size_t parallelism = 0;
  bool banner_first = false;
  bool authorized = false;
};

// Targets named in a scan config file, so the authorization gate sees them too.
std::vector<std::string> config_targets(const std::string& path)
{
  std::vector<std::string> out;
  if (path.empty()) return out;
  std::ifstream in(path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_object() && j.contains("targets") && j["targets"].is_array())
    for (const auto& t : j["targets"])
      if (t.is_string()) out.push_back(t.get<std::string>());
  return out;
}

int run_scan(const Globals& g, const ScanArgs& a)
{
  auto gated = a.targets;
  for (auto& t : config_targets(g.config)) gated.push_back(std::move(t));
  for (const auto& t : gated) {
    int priv = kp_endpoint_is_private(t.c_str());
    if (priv < 0) {
      std::cerr << "kexprint: malformed target " << t << "\n";
      return kExitUsage;
    }
    if (priv == 0 && !a.authorized) {
      std::cerr << "kexprint: " << t
                << " is not a loopback or private address; pass --i-have-authorization to scan it\n";
      return kExitUsage;
    }
  }
  ProbeSet set;
  if (a.probes.empty())
    check(kp_probe_set_generate(nullptr, g.seed ? &*g.seed : nullptr, set.out()), "probes");
  else
    check(kp_probe_set_load(a.probes.c_str(), set.out()), a.probes.c_str());

  std::vector<const char*> targets;
  for (const auto& t : a.targets) targets.push_back(t.c_str());
  kp_scan_options o{};
  o.config_path = opt(g.config);
  o.targets = targets.data();
  o.target_count = targets.size();
  o.connect_timeout_ms = a.connect_timeout_ms;
  o.read_timeout_ms = a.read_timeout_ms;
  o.parallelism = a.parallelism;
  o.seed = g.seed ? &*g.seed : nullptr;
  o.send_banner_first = a.banner_first ? 1 : 0;
  o.stream_path = opt(g.out);
  Records recs;
  check(kp_scan(set.get(), &o, recs.out()), "scan");

  if (g.out.empty()) {
    LibString js;
    check(kp_records_to_json(recs.get(), js.out()), "records");
    std::cout << js.str() << "\n";
    return kExitOk;
  }
  size_t n = kp_records_size(recs.get());
  size_t bpl = kp_records_count_containing(recs.get(), "bad packet length");
  if (g.json)
    std::cout << "{\"records\":" << n << ",\"targets\":" << kp_records_target_count(recs.get())
              << ",\"bad_packet_length\":" << bpl << ",\"out\":\"" << g.out << "\"}\n";
  else
    std::cout << "captured " << n << " records from " << kp_records_target_count(recs.get()) << " targets into "
              << g.out << "\n";
  return kExitOk;
}

int run_score(const Globals& g, const std::vector<std::string>& record_files)
{
  Records recs;
  load_records(record_files, recs);
  LibString s;
  check(kp_similarity_matrix(recs.get(), g.json ? KP_FORMAT_JSON : KP_FORMAT_CSV, s.out()), "score");
  emit(g, s.str());
  return kExitOk;
}

struct ClassifyArgs {
  std::vector<std::string> records;
  std::string db;
  std::string probes;
  std::string import_as;
  bool import_honeypot = false;
  double threshold = 0.90;
};

int run_classify(const Globals& g, const ClassifyArgs& a)
{
  Records recs;
  load_records(a.records, recs);
  Db db;
  if (!a.import_as.empty()) {
    if (kp_db_load(a.db.c_str(), db.out()) != KP_OK) {
      ProbeSet set;
      if (!a.probes.empty()) check(kp_probe_set_load(a.probes.c_str(), set.out()), a.probes.c_str());
      check(kp_db_create(set.get(), db.out()), "create db");
    }
    check(kp_db_import(db.get(), a.import_as.c_str(), recs.get(), a.import_honeypot ? 0 : 1), "import");
    check(kp_db_save(db.get(), a.db.c_str()), "save db");
    std::cout << "imported " << kp_records_size(recs.get()) << " records as class " << a.import_as << " into "
              << a.db << "\n";
    return kExitOk;
  }
  check(kp_db_load(a.db.c_str(), db.out()), a.db.c_str());
  LibString s;
  check(kp_classify_targets(recs.get(), db.get(), a.threshold, s.out()), "classify");
  if (g.json) {
    emit(g, s.str());
    return kExitOk;
  }
  // Plain text: one line per target.
  auto arr = nlohmann::json::parse(s.str());
  std::string text;
  for (const auto& v : arr) {
    char line[512];
    std::snprintf(line, sizeof line, "%s  class=%s  score=%.4f  %s\n", v["target"].get<std::string>().c_str(),
                  v["class"].get<std::string>().c_str(), v["score"].get<double>(),
                  v["honeypot"].get<bool>() ? "HONEYPOT" : "genuine");
    text += line;
  }
  emit(g, text);
  return kExitOk;
}

struct ProxyArgs {
  std::string listen;
  std::string backend;
  std::string session_log;
  size_t max_packet = 0;
  uint32_t idle_timeout_ms = 0;
};

int run_proxy(const Globals& g, const ProxyArgs& a)
{
  kp_proxy_options o{};
  o.config_path = opt(g.config);
  o.listen = opt(a.listen);
  o.backend = opt(a.backend);
  o.session_log = opt(a.session_log);
  o.max_packet = a.max_packet;
  o.idle_timeout_ms = a.idle_timeout_ms;
  ProxyH p;
  check(kp_proxy_start(&o, p.out()), "proxy");
  if (g.json)
    std::cout << "{\"port\":" << kp_proxy_port(p.get()) << "}\n";
  else
    std::cout << "proxy listening on port " << kp_proxy_port(p.get()) << " (Ctrl-C to stop)\n";
  std::cout.flush();
  wait_for_signal();
  kp_proxy_stop(p.get());
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> records;
  std::string db;
  double threshold = 0.90;
};

int run_report(const Globals& g, const ReportArgs& a)
{
  Records recs;
  load_records(a.records, recs);
  Db db;
  if (!a.db.empty()) check(kp_db_load(a.db.c_str(), db.out()), a.db.c_str());
  LibString s;
  check(kp_report(recs.get(), db.get(), a.threshold, g.json ? KP_FORMAT_JSON : KP_FORMAT_TEXT, s.out()), "report");
  emit(g, s.str());
  return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
  // Library threads inherit this mask, so SIGINT/SIGTERM reach sigwait only.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  CLI::App app{"kexprint: SSH transport fingerprinting and honeypot disguise toolkit", "kexprint"};
  app.set_version_flag("--version", std::string("kexprint ") + kp_version());
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "RNG seed (u64)");
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output path");
  app.add_flag("--json", g.json, "Machine-readable output");

  auto* gen = app.add_subcommand("gen-probes", "Generate the probe corpus (JSONL)");
  bool gen_default = false;
  gen->add_flag("--default", gen_default, "Use the built-in corpus configuration (no --config)");

  PersonaArgs pa;
  auto* persona = app.add_subcommand("persona", "Run a mock SSH persona until interrupted");
  persona->add_option("--kind", pa.kind, "reference or honeypot")->check(CLI::IsMember({"reference", "honeypot"}));
  persona->add_option("--listen", pa.listen, "host:port")->capture_default_str();
  persona->add_option("--banner", pa.banner, "Identification line without CRLF");
  persona->add_option("--access-log", pa.access_log, "JSONL access log path");

  ScanArgs sa;
  auto* scan = app.add_subcommand("scan", "Probe targets and capture response records");
  scan->add_option("--probes", sa.probes, "Probe corpus (default: built-in corpus)")->check(CLI::ExistingFile);
  scan->add_option("--target,--targets", sa.targets, "host:port (repeatable)");
  scan->add_option("--connect-timeout-ms", sa.connect_timeout_ms);
  scan->add_option("--read-timeout-ms", sa.read_timeout_ms);
  scan->add_option("--parallelism", sa.parallelism);
  scan->add_flag("--send-banner-first", sa.banner_first, "Send the client banner before reading the server's");
  scan->add_flag("--i-have-authorization", sa.authorized, "Required for targets outside loopback/private ranges");

  std::vector<std::string> score_records;
  auto* score = app.add_subcommand("score", "Pairwise similarity matrix between targets (CSV, or JSON with --json)");
  score->add_option("records", score_records, "Record files")->required()->check(CLI::ExistingFile);

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "Classify targets against a fingerprint db, or build the db");
  classify->add_option("records", ca.records, "Record files")->required()->check(CLI::ExistingFile);
  classify->add_option("--db", ca.db, "Fingerprint db (JSON)")->required();
  classify->add_option("--threshold", ca.threshold, "Honeypot threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  classify->add_option("--import-as", ca.import_as, "Import the records into the db as this class instead");
  classify->add_flag("--honeypot-class", ca.import_honeypot, "Imported class is a known honeypot, not a reference");
  classify->add_option("--probes", ca.probes, "Probe corpus the new db is bound to")->check(CLI::ExistingFile);

  ProxyArgs xa;
  auto* proxy = app.add_subcommand("proxy", "Run the disguise proxy in front of a honeypot until interrupted");
  proxy->add_option("--listen", xa.listen, "host:port");
  proxy->add_option("--backend", xa.backend, "Honeypot host:port");
  proxy->add_option("--session-log", xa.session_log, "JSONL session log path");
  proxy->add_option("--max-packet", xa.max_packet, "Cleartext packet limit");
  proxy->add_option("--idle-timeout-ms", xa.idle_timeout_ms);

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Similarity matrix, error classes and verdicts");
  report->add_option("records", ra.records, "Record files")->required()->check(CLI::ExistingFile);
  report->add_option("--db", ra.db, "Fingerprint db for verdicts")->check(CLI::ExistingFile);
  report->add_option("--threshold", ra.threshold, "Honeypot threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (*seed_opt) g.seed = seed_value;

  try {
    if (*gen) {
      if (gen_default && !g.config.empty()) {
        std::cerr << "kexprint gen-probes: --default and --config are mutually exclusive\n";
        return kExitUsage;
      }
      return run_gen_probes(g);
    }
    if (*persona) return run_persona(g, pa);
    if (*scan) {
      if (sa.targets.empty() && g.config.empty()) {
        std::cerr << "kexprint scan: at least one --target (or a --config with targets) is required\n";
        return kExitUsage;
      }
      return run_scan(g, sa);
    }
    if (*score) return run_score(g, score_records);
    if (*classify) return run_classify(g, ca);
    if (*proxy) return run_proxy(g, xa);
    if (*report) return run_report(g, ra);
  } catch (const Failure& f) {
    std::cerr << "kexprint: " << f.message << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "kexprint: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
