// SPDX-License-Identifier: Apache-2.0
//
// Deterministic mock SSH servers. REFERENCE behaves like a stock OpenSSH
// daemon at the transport level; HONEYPOT reproduces the TwistedConch/Cowrie
// deviations (strict 1.99/2.0 check answered with "bad packet length", 1 MiB
// packet limit, NULL padding).

#pragma once

#include "kexprint/jsonl.hpp"
#include "kexprint/server.hpp"
#include "kexprint/wire.hpp"

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace kexprint {

enum class PersonaKind { Reference, Honeypot };

const char* persona_kind_name(PersonaKind k) noexcept;
PersonaKind persona_kind_from_name(std::string_view name);

/// Which client protoversions a server accepts.
///   Reference: "SSH-" prefix, LF-terminated line, protoversion >= 1.99.
///   Honeypot:  "SSH-" prefix, protoversion exactly "1.99" or "2.0".
struct VersionPolicy {
  PersonaKind kind = PersonaKind::Reference;

  static VersionPolicy reference() { return {PersonaKind::Reference}; }
  static VersionPolicy honeypot() { return {PersonaKind::Honeypot}; }

  bool accepts(const wire::VersionString& v) const;
};

inline constexpr std::string_view kVersionsDiffer = "Protocol major versions differ.\n";

struct BannerDecision {
  bool accepted = false;
  Bytes message; // sent to the client before closing when rejected
};

/// Rejections carry the policy's error form: kVersionsDiffer for Reference,
/// "bad packet length <n>" for Honeypot, where n is the first four line bytes
/// read as a big-endian length.
BannerDecision validate_client_banner(ByteView line, const VersionPolicy& policy);

} // namespace kexprint

namespace kexprint::personas {

struct PersonaConfig {
  PersonaKind kind = PersonaKind::Reference;
  wire::VersionString banner;
  std::size_t max_packet = wire::kRfcMaxPacket;
  wire::PaddingMode padding_mode = wire::PaddingMode::Random;
  std::uint64_t seed = 0;
  net::Endpoint listen{"127.0.0.1", 0};
  std::string access_log_path; // empty: in-memory log only
  std::chrono::milliseconds idle_timeout{10000};

  static PersonaConfig defaults(PersonaKind kind);

  /// Throws Errc::InvalidArgument.
  void validate() const;
};

/// Keys: kind, banner, max_packet, padding_mode, seed, listen, access_log,
/// idle_timeout_ms. Missing keys keep the kind's defaults.
PersonaConfig persona_config_from_json(const nlohmann::json& j);
PersonaConfig load_persona_config(const std::string& path);

/// Server-side KEXINIT algorithm lists typical for the persona (cookie zeroed).
wire::KexInit persona_kexinit(PersonaKind kind);

namespace decision {
inline constexpr const char* kKexInit = "KEXINIT";
inline constexpr const char* kVersionRejected = "VERSION_REJECTED";
inline constexpr const char* kBadPacketLength = "BAD_PACKET_LENGTH";
inline constexpr const char* kOversizeDisconnect = "OVERSIZE_DISCONNECT";
inline constexpr const char* kFramingDisconnect = "FRAMING_DISCONNECT";
inline constexpr const char* kNoBanner = "NO_BANNER";
inline constexpr const char* kNoPacket = "NO_PACKET";
} // namespace decision

struct AccessLogEntry {
  std::string peer;
  Bytes client_banner;
  std::string decision;
  std::string timestamp;
};

nlohmann::json access_entry_to_json(const AccessLogEntry& e);

class Persona {
public:
  /// Binds and starts serving. Throws Errc::BindFailure.
  static std::unique_ptr<Persona> start(PersonaConfig cfg);
  ~Persona();

  std::uint16_t port() const noexcept;
  net::Endpoint endpoint() const;
  const PersonaConfig& config() const noexcept { return cfg_; }

  /// Closes the listener and aborts live sessions. Idempotent.
  void stop();

  std::vector<AccessLogEntry> access_log() const;

private:
  explicit Persona(PersonaConfig cfg);
  void serve(net::Socket& conn, const net::Endpoint& peer, net::CancelFlag stop);
  void record(AccessLogEntry e);

  PersonaConfig cfg_;
  std::unique_ptr<JsonlWriter> log_file_;
  mutable std::mutex log_mu_;
  std::vector<AccessLogEntry> log_;
  std::unique_ptr<net::ConnectionServer> server_;
};

} // namespace kexprint::personas
