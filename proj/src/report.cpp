// SPDX-License-Identifier: Apache-2.0
#include "kexprint/report.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace kexprint::report {

using similarity::TargetRecords;

std::string column_label(std::size_t index)
{
  std::string out;
  ++index;
  while (index > 0) {
    --index;
    out.insert(out.begin(), static_cast<char>('A' + index % 26));
    index /= 26;
  }
  return out;
}

namespace {

std::map<std::string, std::size_t> class_counts(const std::vector<ResponseRecord>& records)
{
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[error_class_name(r.error_class)];
  return counts;
}

std::size_t shared_probe_count(const TargetRecords& targets)
{
  std::set<std::string> shared;
  bool first = true;
  for (const auto& [name, records] : targets) {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.probe_id);
    if (first) {
      shared = std::move(ids);
      first = false;
      continue;
    }
    std::set<std::string> keep;
    for (const auto& id : shared)
      if (ids.count(id)) keep.insert(id);
    shared = std::move(keep);
  }
  return shared.size();
}

std::string fixed(double v, int decimals)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

} // namespace

std::string render_text(const TargetRecords& targets, std::span<const similarity::FingerprintClass> db,
                        double threshold)
{
  std::ostringstream out;
  out << "Targets\n";
  std::size_t i = 0;
  for (const auto& [name, records] : targets)
    out << "  " << column_label(i++) << "  " << name << "  (" << records.size() << " records)\n";

  std::size_t shared = shared_probe_count(targets);
  out << "\nSimilarity (mean cosine over " << shared << " shared probes)\n";
  if (shared == 0 || targets.empty()) {
    out << "  no probe was sent to every target\n";
  } else {
    auto m = similarity::similarity_matrix(targets);
    const int width = 8;
    std::string pad(4, ' ');
    out << pad;
    for (std::size_t c = 0; c < m.labels.size(); ++c) {
      auto label = column_label(c);
      out << std::string(width - label.size(), ' ') << label;
    }
    out << '\n';
    for (std::size_t r = 0; r < m.labels.size(); ++r) {
      auto label = column_label(r);
      out << label << std::string(pad.size() - std::min(pad.size(), label.size()), ' ');
      for (std::size_t c = 0; c < m.labels.size(); ++c) {
        if (c < r) out << std::string(width, ' ');
        else {
          auto v = fixed(m.values[r][c], 4);
          out << std::string(width - v.size(), ' ') << v;
        }
      }
      out << '\n';
    }
  }

  out << "\nError classes\n";
  i = 0;
  for (const auto& [name, records] : targets) {
    out << "  " << column_label(i++) << " ";
    for (const auto& [cls, n] : class_counts(records)) out << ' ' << cls << '=' << n;
    out << '\n';
  }

  if (!db.empty()) {
    out << "\nVerdicts (threshold " << fixed(threshold, 2) << ")\n";
    i = 0;
    for (const auto& [name, records] : targets) {
      auto v = similarity::classify(records, db, threshold);
      out << "  " << column_label(i++) << "  class=" << v.class_name << "  score=" << fixed(v.score, 4) << "  "
          << (v.honeypot_flag ? "HONEYPOT" : "genuine") << '\n';
    }
  }
  return out.str();
}

nlohmann::json render_json(const TargetRecords& targets, std::span<const similarity::FingerprintClass> db,
                           double threshold)
{
  nlohmann::json j;
  j["targets"] = nlohmann::json::array();
  std::size_t i = 0;
  for (const auto& [name, records] : targets) {
    j["targets"].push_back({{"label", column_label(i++)},
                            {"target", name},
                            {"records", records.size()},
                            {"error_classes", class_counts(records)}});
  }
  j["shared_probes"] = shared_probe_count(targets);
  j["matrix"] = j["shared_probes"].get<std::size_t>() > 0 && !targets.empty()
                  ? similarity::similarity_matrix(targets).to_json()
                  : nlohmann::json(nullptr);
  if (!db.empty()) {
    j["threshold"] = threshold;
    j["verdicts"] = nlohmann::json::array();
    for (const auto& [name, records] : targets) {
      auto v = similarity::classify(records, db, threshold);
      j["verdicts"].push_back(
        {{"target", name}, {"class", v.class_name}, {"score", v.score}, {"honeypot", v.honeypot_flag}});
    }
  }
  return j;
}

} // namespace kexprint::report
