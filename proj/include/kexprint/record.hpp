// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kexprint/bytes.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace kexprint {

enum class ErrorClass {
  None,
  ConnectRefused,
  Timeout,
  Reset,
  NotSsh,
  VersionRejected,
  BadPacketLength,
};

const char* error_class_name(ErrorClass c) noexcept;
ErrorClass error_class_from_name(std::string_view name);

/// Everything observed during one probe session against one endpoint.
struct ResponseRecord {
  std::string target;  // "host:port"
  std::string probe_id;
  Bytes server_banner;
  std::vector<Bytes> reply_payloads;
  Bytes error_text;
  std::string disconnect_reason;
  ErrorClass error_class = ErrorClass::None;
  double rtt_ms = 0.0;
  std::string captured_at;

  bool operator==(const ResponseRecord&) const = default;
};

/// Banner, reply payloads, error text and disconnect reason, concatenated in
/// that order. Timing fields never contribute.
Bytes transcript_bytes(const ResponseRecord& r);

} // namespace kexprint
