// SPDX-License-Identifier: Apache-2.0
#include "kexprint/similarity.hpp"
#include "kexprint/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace kexprint {

const char* error_class_name(ErrorClass c) noexcept
{
  switch (c) {
    case ErrorClass::None: return "NONE";
    case ErrorClass::ConnectRefused: return "CONNECT_REFUSED";
    case ErrorClass::Timeout: return "TIMEOUT";
    case ErrorClass::Reset: return "RESET";
    case ErrorClass::NotSsh: return "NOT_SSH";
    case ErrorClass::VersionRejected: return "VERSION_REJECTED";
    case ErrorClass::BadPacketLength: return "BAD_PACKET_LENGTH";
  }
  return "NONE";
}

ErrorClass error_class_from_name(std::string_view name)
{
  for (auto c : {ErrorClass::None, ErrorClass::ConnectRefused, ErrorClass::Timeout, ErrorClass::Reset,
                 ErrorClass::NotSsh, ErrorClass::VersionRejected, ErrorClass::BadPacketLength})
    if (name == error_class_name(c)) return c;
  throw Error(Errc::ParseError, "unknown error class: " + std::string(name));
}

Bytes transcript_bytes(const ResponseRecord& r)
{
  Bytes out = r.server_banner;
  for (const auto& p : r.reply_payloads) append(out, p);
  append(out, r.error_text);
  append(out, as_bytes(r.disconnect_reason));
  return out;
}

} // namespace kexprint

namespace kexprint::similarity {

double ResponseVector::total() const noexcept
{
  double t = 0;
  for (double c : counts) t += c;
  return t;
}

ResponseVector vectorize_bytes(ByteView transcript)
{
  ResponseVector v;
  for (auto b : transcript) v.counts[b] += 1.0;
  return v;
}

ResponseVector vectorize(const ResponseRecord& r)
{
  ResponseVector v;
  auto add = [&v](ByteView b) {
    for (auto x : b) v.counts[x] += 1.0;
  };
  add(r.server_banner);
  for (const auto& p : r.reply_payloads) add(p);
  add(r.error_text);
  add(as_bytes(r.disconnect_reason));
  return v;
}

double cosine(const ResponseVector& a, const ResponseVector& b) noexcept
{
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.counts.size(); ++i) {
    dot += a.counts[i] * b.counts[i];
    na += a.counts[i] * a.counts[i];
    nb += b.counts[i] * b.counts[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double group_similarity(std::span<const ResponseRecord* const> a, std::span<const ResponseRecord* const> b)
{
  if (a.empty() || b.empty()) return 0.0;
  std::vector<ResponseVector> vb;
  vb.reserve(b.size());
  for (const auto* r : b) vb.push_back(vectorize(*r));
  double sum = 0;
  for (const auto* r : a) {
    auto va = vectorize(*r);
    for (const auto& v : vb) sum += cosine(va, v);
  }
  return sum / static_cast<double>(a.size() * b.size());
}

namespace {

using ProbeIndex = std::map<std::string, std::vector<const ResponseRecord*>>;

ProbeIndex index_by_probe(std::span<const ResponseRecord> records)
{
  ProbeIndex idx;
  for (const auto& r : records) idx[r.probe_id].push_back(&r);
  return idx;
}

std::string fixed6(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

} // namespace

std::string SimilarityMatrix::to_csv() const
{
  std::ostringstream os;
  os << "target";
  for (const auto& l : labels) os << ',' << csv_field(l);
  os << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    os << csv_field(labels[i]);
    for (double v : values[i]) os << ',' << fixed6(v);
    os << '\n';
  }
  return os.str();
}

nlohmann::json SimilarityMatrix::to_json() const
{
  return {{"labels", labels}, {"values", values}};
}

SimilarityMatrix similarity_matrix(const TargetRecords& targets)
{
  std::vector<ProbeIndex> indices;
  std::set<std::string> shared;
  bool first = true;
  for (const auto& [name, records] : targets) {
    indices.push_back(index_by_probe(records));
    std::set<std::string> ids;
    for (const auto& [id, _] : indices.back()) ids.insert(id);
    if (first) {
      shared = std::move(ids);
      first = false;
    } else {
      std::set<std::string> both;
      std::set_intersection(shared.begin(), shared.end(), ids.begin(), ids.end(),
                            std::inserter(both, both.end()));
      shared = std::move(both);
    }
  }
  if (shared.empty()) throw Error(Errc::NoSharedProbes, "targets share no probe ids");

  SimilarityMatrix m;
  for (const auto& [name, _] : targets) m.labels.push_back(name);
  std::size_t n = m.labels.size();
  m.values.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double sum = 0;
      for (const auto& id : shared) sum += group_similarity(indices[i].at(id), indices[j].at(id));
      double mean = sum / static_cast<double>(shared.size());
      m.values[i][j] = m.values[j][i] = mean;
    }
  }
  return m;
}

TargetRecords group_by_target(std::span<const ResponseRecord> records)
{
  TargetRecords out;
  for (const auto& r : records) out[r.target].push_back(r);
  return out;
}

void FingerprintClass::add(std::span<const ResponseRecord> more)
{
  records.insert(records.end(), more.begin(), more.end());
  recompute_centroid();
}

void FingerprintClass::recompute_centroid()
{
  centroid = ResponseVector{};
  if (records.empty()) return;
  for (const auto& r : records) {
    auto v = vectorize(r);
    for (std::size_t i = 0; i < v.counts.size(); ++i) centroid.counts[i] += v.counts[i];
  }
  for (auto& c : centroid.counts) c /= static_cast<double>(records.size());
}

FingerprintClass make_class(std::string name, std::vector<ResponseRecord> records, bool reference)
{
  if (records.empty()) throw Error(Errc::EmptyInput, "fingerprint class needs at least one record");
  FingerprintClass c{std::move(name), reference, std::move(records), {}};
  c.recompute_centroid();
  return c;
}

double class_score(std::span<const ResponseRecord> target, const FingerprintClass& cls)
{
  auto members = index_by_probe(cls.records);
  auto own = index_by_probe(target);
  double sum = 0;
  std::size_t aligned = 0;
  for (const auto& [id, recs] : own) {
    auto it = members.find(id);
    if (it == members.end()) continue;
    sum += group_similarity(recs, it->second);
    ++aligned;
  }
  return aligned == 0 ? 0.0 : sum / static_cast<double>(aligned);
}

Verdict classify(std::span<const ResponseRecord> target, std::span<const FingerprintClass> db, double threshold)
{
  if (target.empty()) throw Error(Errc::EmptyInput, "no target records to classify");
  if (db.empty()) throw Error(Errc::EmptyInput, "fingerprint database is empty");
  Verdict v;
  v.score = -1.0;
  double best_reference = 0.0;
  for (const auto& cls : db) {
    double s = class_score(target, cls);
    if (s > v.score) {
      v.score = s;
      v.class_name = cls.name;
    }
    if (cls.reference) best_reference = std::max(best_reference, s);
  }
  v.honeypot_flag = best_reference < threshold;
  return v;
}

} // namespace kexprint::similarity
