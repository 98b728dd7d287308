// SPDX-License-Identifier: Apache-2.0
#include "kexprint/store.hpp"
#include "kexprint/errors.hpp"
#include "kexprint/jsonl.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <cstdio>

namespace kexprint {

JsonlWriter::JsonlWriter(const std::string& path) : path_(path)
{
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(Errc::IoFailure, "cannot open " + path + ": " + std::strerror(errno));
}

JsonlWriter::~JsonlWriter()
{
  if (fd_ >= 0) ::close(fd_);
}

void JsonlWriter::write(const nlohmann::json& record)
{
  std::string line = record.dump() + '\n';
  std::lock_guard lock(mu_);
  if (fd_ < 0) throw Error(Errc::IoFailure, "writer is not open");
  std::size_t done = 0;
  while (done < line.size()) {
    ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::IoFailure, "write failed: " + path_ + ": " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

} // namespace kexprint

namespace kexprint::store {

using nlohmann::json;

json record_to_json(const ResponseRecord& r)
{
  json payloads = json::array();
  for (const auto& p : r.reply_payloads) payloads.push_back(hex_encode(p));
  return {{"target", r.target},
          {"probe_id", r.probe_id},
          {"server_banner", hex_encode(r.server_banner)},
          {"reply_payloads", std::move(payloads)},
          {"error_text", hex_encode(r.error_text)},
          {"disconnect_reason", r.disconnect_reason},
          {"error_class", error_class_name(r.error_class)},
          {"rtt_ms", r.rtt_ms},
          {"captured_at", r.captured_at}};
}

ResponseRecord record_from_json(const json& j)
{
  try {
    ResponseRecord r;
    r.target = j.at("target").get<std::string>();
    r.probe_id = j.at("probe_id").get<std::string>();
    r.server_banner = hex_decode(j.at("server_banner").get<std::string>());
    for (const auto& p : j.at("reply_payloads")) r.reply_payloads.push_back(hex_decode(p.get<std::string>()));
    r.error_text = hex_decode(j.at("error_text").get<std::string>());
    r.disconnect_reason = j.at("disconnect_reason").get<std::string>();
    r.error_class = error_class_from_name(j.at("error_class").get<std::string>());
    r.rtt_ms = j.at("rtt_ms").get<double>();
    if (r.rtt_ms < 0) throw Error(Errc::ParseError, "rtt_ms is negative");
    r.captured_at = j.at("captured_at").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("response record: ") + e.what());
  }
}

std::size_t append_records(const std::string& path, std::span<const ResponseRecord> records)
{
  JsonlWriter out(path);
  for (const auto& r : records) out.write(record_to_json(r));
  return records.size();
}

std::vector<ResponseRecord> load_records(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  std::vector<ResponseRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(n, e.what());
    } catch (const Error& e) {
      throw ParseError(n, e.what());
    }
  }
  return out;
}

std::string probe_set_id(std::vector<std::string> probe_ids)
{
  std::sort(probe_ids.begin(), probe_ids.end());
  Bytes joined;
  for (const auto& id : probe_ids) {
    append(joined, as_bytes(id));
    joined.push_back('\n');
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(joined)));
  return buf;
}

FingerprintDb FingerprintDb::create(std::vector<std::string> probe_ids)
{
  FingerprintDb db;
  std::sort(probe_ids.begin(), probe_ids.end());
  probe_ids.erase(std::unique(probe_ids.begin(), probe_ids.end()), probe_ids.end());
  db.probe_set_id = store::probe_set_id(probe_ids);
  db.probe_ids = std::move(probe_ids);
  db.created_at = utc_now_iso8601();
  db.tool_version = KEXPRINT_VERSION_STRING;
  return db;
}

std::vector<FingerprintClass> FingerprintDb::class_list() const
{
  std::vector<FingerprintClass> out;
  out.reserve(classes.size());
  for (const auto& [name, c] : classes) out.push_back(c);
  return out;
}

void import_reference(FingerprintDb& db, const std::string& name, std::span<const ResponseRecord> records,
                      bool reference)
{
  if (name.empty()) throw Error(Errc::InvalidArgument, "class name must not be empty");
  if (records.empty()) throw Error(Errc::InvalidArgument, "no records to import");
  if (!db.probe_ids.empty()) {
    for (const auto& r : records)
      if (!std::binary_search(db.probe_ids.begin(), db.probe_ids.end(), r.probe_id))
        throw Error(Errc::ProbeSetMismatch, "probe id " + r.probe_id + " is not in probe set " + db.probe_set_id);
  }
  auto it = db.classes.find(name);
  if (it == db.classes.end()) {
    db.classes.emplace(name, similarity::make_class(name, {records.begin(), records.end()}, reference));
  } else {
    it->second.reference = reference;
    it->second.add(records);
  }
}

json db_to_json(const FingerprintDb& db)
{
  json classes = json::array();
  for (const auto& [name, c] : db.classes) {
    json records = json::array();
    for (const auto& r : c.records) records.push_back(record_to_json(r));
    classes.push_back({{"name", name},
                       {"reference", c.reference},
                       {"centroid", c.centroid.counts},
                       {"records", std::move(records)}});
  }
  return {{"created_at", db.created_at},
          {"probe_set_id", db.probe_set_id},
          {"probe_ids", db.probe_ids},
          {"tool_version", db.tool_version},
          {"classes", std::move(classes)}};
}

FingerprintDb db_from_json(const json& j)
{
  try {
    FingerprintDb db;
    db.created_at = j.at("created_at").get<std::string>();
    db.probe_set_id = j.at("probe_set_id").get<std::string>();
    db.probe_ids = j.at("probe_ids").get<std::vector<std::string>>();
    std::sort(db.probe_ids.begin(), db.probe_ids.end());
    db.tool_version = j.at("tool_version").get<std::string>();
    for (const auto& jc : j.at("classes")) {
      FingerprintClass c;
      c.name = jc.at("name").get<std::string>();
      c.reference = jc.at("reference").get<bool>();
      for (const auto& jr : jc.at("records")) c.records.push_back(record_from_json(jr));
      c.recompute_centroid();
      auto stored = jc.at("centroid").get<std::vector<double>>();
      if (stored.size() != c.centroid.counts.size())
        throw Error(Errc::ParseError, "class " + c.name + ": centroid has the wrong dimension");
      for (std::size_t i = 0; i < stored.size(); ++i)
        if (std::abs(stored[i] - c.centroid.counts[i]) > 1e-9 * std::max(1.0, std::abs(stored[i])))
          throw Error(Errc::ParseError, "class " + c.name + ": stored centroid does not match its records");
      if (!db.classes.emplace(c.name, std::move(c)).second)
        throw Error(Errc::ParseError, "duplicate class name");
    }
    return db;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("fingerprint db: ") + e.what());
  }
}

void save_db(const std::string& path, const FingerprintDb& db)
{
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + tmp);
    out << db_to_json(db).dump(1) << '\n';
    if (!out) throw Error(Errc::IoFailure, "write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error(Errc::IoFailure, "cannot replace " + path + ": " + std::strerror(errno));
}

FingerprintDb load_db(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  try {
    return db_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

} // namespace kexprint::store
