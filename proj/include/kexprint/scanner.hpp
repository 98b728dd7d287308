// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kexprint/net.hpp"
#include "kexprint/probes.hpp"
#include "kexprint/record.hpp"

#include <chrono>
#include <functional>
#include <vector>

namespace kexprint::scanner {

struct CampaignConfig {
  std::vector<net::Endpoint> endpoints;
  std::vector<probes::Probe> probes;
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{3000};
  // Once a KEXINIT reply is in, capture continues until the peer has been
  // quiet this long (catches a disconnect that follows the server KEXINIT).
  std::chrono::milliseconds settle{200};
  std::size_t max_capture_bytes = 64 * 1024;
  std::size_t parallelism = 8;
  std::uint64_t seed = probes::kDefaultSeed;
  bool send_banner_first = false; // default: wait for the server banner first

  /// Throws Errc::InvalidArgument.
  void validate() const;
};

/// Keys: targets (["host:port", ...]), connect_timeout_ms, read_timeout_ms,
/// settle_ms, max_capture_bytes, parallelism, seed, send_banner_first.
/// Probes are not part of the file. Throws Errc::InvalidArgument.
CampaignConfig campaign_config_from_json(const nlohmann::json& j);
CampaignConfig load_campaign_config(const std::string& path);

/// Largest frame the transcript splitter treats as a binary packet.
inline constexpr std::size_t kMaxReplyFrame = 256 * 1024;

/// Splits the bytes received after the server banner into cleartext packet
/// payloads and trailing non-packet data (e.g. an error line).
struct SplitTranscript {
  std::vector<Bytes> payloads;
  Bytes trailing;
  bool incomplete_frame = false; // the tail looks like a frame but is cut short
};
SplitTranscript split_replies(ByteView after_banner);

/// Derives the error class from a finished transcript. `io` is how reading
/// ended; `got_banner` is whether an SSH identification line arrived.
ErrorClass classify_transcript(const ResponseRecord& r, bool got_banner, net::IoStatus io);

/// One session: connect, exchange identification lines, send the KEXINIT
/// probe, then capture the server's immediate reaction. Never throws for
/// network conditions; they become the record's error class.
ResponseRecord probe_target(const net::Endpoint& endpoint, const probes::Probe& probe, const CampaignConfig& cfg);

/// Bytes the scanner writes for `probe` (identification line then framed KEXINIT).
Bytes probe_wire_bytes(const probes::Probe& probe, std::uint64_t campaign_seed);

using RecordSink = std::function<void(const ResponseRecord&)>;

/// |endpoints| x |probes| records sorted by target, then probe id. `sink`,
/// when set, receives each record as it completes (serialized).
std::vector<ResponseRecord> run_campaign(const CampaignConfig& cfg, const RecordSink& sink = {});

} // namespace kexprint::scanner
