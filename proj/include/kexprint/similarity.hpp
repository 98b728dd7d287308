// SPDX-License-Identifier: Apache-2.0
//
// Transcript vectors and the cosine similarity coefficient used to score how
// far one endpoint's reactions deviate from another's.

#pragma once

#include "kexprint/record.hpp"

#include "json.hpp"

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace kexprint::similarity {

/// Byte-value histogram over a transcript. Entries are counts; they are held
/// as doubles so class centroids (component-wise means) share the type.
struct ResponseVector {
  std::array<double, 256> counts{};

  double total() const noexcept;
  bool operator==(const ResponseVector&) const = default;
};

ResponseVector vectorize(const ResponseRecord& r);
ResponseVector vectorize_bytes(ByteView transcript);

/// (a.b) / (|a| |b|), clamped to [0, 1]; 0 when either vector is all zeros.
double cosine(const ResponseVector& a, const ResponseVector& b) noexcept;

/// Mean cosine over every cross pair of the two record groups; 0 if either is empty.
double group_similarity(std::span<const ResponseRecord* const> a, std::span<const ResponseRecord* const> b);

struct SimilarityMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;

  /// Header row and column of labels, coefficients with 6 decimals.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

using TargetRecords = std::map<std::string, std::vector<ResponseRecord>>;

/// Entry (i, j) is the mean over probe ids shared by every target of the
/// per-probe group similarity. Throws Errc::NoSharedProbes when none are shared.
SimilarityMatrix similarity_matrix(const TargetRecords& targets);

/// Groups records by their target field.
TargetRecords group_by_target(std::span<const ResponseRecord> records);

struct FingerprintClass {
  std::string name;
  bool reference = true; // counts as a genuine implementation when flagging honeypots
  std::vector<ResponseRecord> records;
  ResponseVector centroid;

  void add(std::span<const ResponseRecord> more);
  void recompute_centroid();
};

FingerprintClass make_class(std::string name, std::vector<ResponseRecord> records, bool reference = true);

inline constexpr double kDefaultThreshold = 0.90;

struct Verdict {
  std::string class_name;
  double score = 0.0;
  bool honeypot_flag = false;
};

/// Mean probe-aligned cosine of `target` against each class member set.
double class_score(std::span<const ResponseRecord> target, const FingerprintClass& cls);

/// Best-scoring class wins. The target is flagged when its best score against
/// any reference class is below `threshold`. Throws Errc::EmptyInput.
Verdict classify(std::span<const ResponseRecord> target, std::span<const FingerprintClass> db,
                 double threshold = kDefaultThreshold);

} // namespace kexprint::similarity
