// SPDX-License-Identifier: Apache-2.0
//
// Disguise proxy: fronts a honeypot backend and presents reference transport
// behaviour to clients. The version check and the cleartext packet limit are
// enforced here; the backend's own deviations never reach the client.

#pragma once

#include "kexprint/jsonl.hpp"
#include "kexprint/personas.hpp"
#include "kexprint/server.hpp"

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace kexprint::proxy {

enum class SessionVerdict { Forwarded, RejectedVersion, RejectedOversize, BackendUnavailable };

const char* session_verdict_name(SessionVerdict v) noexcept;
SessionVerdict session_verdict_from_name(std::string_view name);

struct ProxyConfig {
  net::Endpoint listen{"127.0.0.1", 0};
  net::Endpoint backend{"127.0.0.1", 65522};
  VersionPolicy reference_policy = VersionPolicy::reference();
  std::size_t max_packet = wire::kRfcMaxPacket;
  std::string session_log_path; // empty: in-memory only
  std::chrono::milliseconds idle_timeout{30000};
  std::chrono::milliseconds backend_connect_timeout{2000};

  /// Throws Errc::InvalidArgument.
  void validate() const;
};

/// Keys: listen, backend, max_packet, session_log, idle_timeout_ms,
/// backend_connect_timeout_ms.
ProxyConfig proxy_config_from_json(const nlohmann::json& j);
ProxyConfig load_proxy_config(const std::string& path);

namespace close_reason {
inline constexpr const char* kClientClosed = "client_closed";
inline constexpr const char* kBackendClosed = "backend_closed";
inline constexpr const char* kIdleTimeout = "idle_timeout";
inline constexpr const char* kOversize = "oversize_frame";
inline constexpr const char* kMalformedClientFrame = "malformed_client_frame";
inline constexpr const char* kBackendDeviation = "backend_deviation_suppressed";
inline constexpr const char* kVersionRejected = "version_rejected";
inline constexpr const char* kBackendUnavailable = "backend_unavailable";
inline constexpr const char* kNoClientBanner = "no_client_banner";
inline constexpr const char* kStopped = "proxy_stopped";
inline constexpr const char* kIoError = "io_error";
} // namespace close_reason

struct SessionRecord {
  std::string client;
  Bytes client_banner;
  SessionVerdict verdict = SessionVerdict::Forwarded;
  std::uint64_t bytes_c2s = 0; // relayed after the identification lines
  std::uint64_t bytes_s2c = 0;
  std::string opened_at;
  std::string closed_at;
  std::string close_reason;
};

nlohmann::json session_record_to_json(const SessionRecord& r);
SessionRecord session_record_from_json(const nlohmann::json& j);

/// Per-direction cleartext policing. Bytes are released only as whole binary
/// packets until a NEWKEYS packet passes; from then on everything is released
/// as it arrives.
class FramePolicer {
public:
  enum class Outcome { Pass, Oversize, NotPacket };

  explicit FramePolicer(std::size_t max_packet) : max_packet_(max_packet) {}

  /// Appends the releasable bytes to `out`. After a non-Pass outcome the
  /// policer stays in that state.
  Outcome feed(ByteView in, Bytes& out);

  bool opaque() const noexcept { return opaque_; }
  std::size_t buffered() const noexcept { return pending_.size(); }

private:
  std::size_t max_packet_;
  Bytes pending_;
  bool opaque_ = false;
  Outcome failed_ = Outcome::Pass;
};

/// Full-duplex relay after the identification exchange. The pending buffers
/// hold bytes already read past each side's identification line. Fills the
/// byte counters, close reason and verdict of `rec` (oversize client frames
/// turn a Forwarded session into RejectedOversize).
void relay_session(net::Socket& client, net::Socket& backend, Bytes client_pending, Bytes backend_pending,
                   const ProxyConfig& cfg, SessionRecord& rec, net::CancelFlag stop = nullptr);

class ProxyServer {
public:
  /// Checks the backend is reachable, then binds.
  /// Throws Errc::BackendUnavailable, Errc::BindFailure, Errc::IoFailure.
  static std::unique_ptr<ProxyServer> start(ProxyConfig cfg);
  ~ProxyServer();

  std::uint16_t port() const noexcept;
  net::Endpoint endpoint() const;
  const ProxyConfig& config() const noexcept { return cfg_; }

  /// Idempotent.
  void stop();

  /// Finished sessions in completion order.
  std::vector<SessionRecord> sessions() const;

private:
  explicit ProxyServer(ProxyConfig cfg);
  void serve(net::Socket& client, const net::Endpoint& peer, net::CancelFlag stop);
  void record(SessionRecord r);

  ProxyConfig cfg_;
  std::unique_ptr<JsonlWriter> log_file_;
  mutable std::mutex mu_;
  std::vector<SessionRecord> sessions_;
  std::unique_ptr<net::ConnectionServer> server_;
};

} // namespace kexprint::proxy
