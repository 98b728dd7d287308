// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kexprint/similarity.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace kexprint::report {

/// Targets get letters A, B, ... in sorted order (AA, AB, ... past Z).
std::string column_label(std::size_t index);

/// Plain-text report: target legend, upper-triangular similarity matrix,
/// error-class counts and, when `db` is non-empty, one verdict per target.
std::string render_text(const similarity::TargetRecords& targets, std::span<const similarity::FingerprintClass> db,
                        double threshold);

nlohmann::json render_json(const similarity::TargetRecords& targets,
                           std::span<const similarity::FingerprintClass> db, double threshold);

} // namespace kexprint::report
