// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "json.hpp"

#include <mutex>
#include <string>

namespace kexprint {

/// Append-only JSONL sink. Each line goes out in a single O_APPEND write, so
/// concurrent writers never interleave within a record.
class JsonlWriter {
public:
  JsonlWriter() = default;
  /// Throws Errc::IoFailure.
  explicit JsonlWriter(const std::string& path);
  ~JsonlWriter();

  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  bool is_open() const noexcept { return fd_ >= 0; }
  void write(const nlohmann::json& record);

private:
  std::mutex mu_;
  int fd_ = -1;
  std::string path_;
};

} // namespace kexprint
