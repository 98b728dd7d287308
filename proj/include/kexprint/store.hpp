// SPDX-License-Identifier: Apache-2.0
//
// On-disk formats. Response records are JSONL with hex-encoded byte fields;
// a fingerprint database is one JSON document.

#pragma once

#include "kexprint/record.hpp"
#include "kexprint/similarity.hpp"

#include "json.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace kexprint::store {

using similarity::FingerprintClass;

nlohmann::json record_to_json(const ResponseRecord& r);
/// Throws Errc::ParseError.
ResponseRecord record_from_json(const nlohmann::json& j);

/// One line per record, each written with a single append. Returns the count.
/// Throws Errc::IoFailure.
std::size_t append_records(const std::string& path, std::span<const ResponseRecord> records);

/// Blank lines are skipped. Throws ParseError carrying the 1-based line
/// number, or Errc::IoFailure.
std::vector<ResponseRecord> load_records(const std::string& path);

/// Order-independent identifier of a probe set.
std::string probe_set_id(std::vector<std::string> probe_ids);

struct FingerprintDb {
  std::map<std::string, FingerprintClass> classes;
  std::string created_at;
  std::string probe_set_id;
  std::vector<std::string> probe_ids; // empty: any probe id is accepted
  std::string tool_version;

  static FingerprintDb create(std::vector<std::string> probe_ids = {});
  std::vector<FingerprintClass> class_list() const;
};

/// Creates or extends class `name` and recomputes its centroid. Imports are
/// additive. Throws Errc::InvalidArgument for an empty name or no records,
/// Errc::ProbeSetMismatch when a record's probe id is not in the db's set.
void import_reference(FingerprintDb& db, const std::string& name, std::span<const ResponseRecord> records,
                      bool reference = true);

nlohmann::json db_to_json(const FingerprintDb& db);
/// Verifies stored centroids against the records. Throws Errc::ParseError.
FingerprintDb db_from_json(const nlohmann::json& j);

void save_db(const std::string& path, const FingerprintDb& db);
FingerprintDb load_db(const std::string& path);

} // namespace kexprint::store
