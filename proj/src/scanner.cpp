// SPDX-License-Identifier: Apache-2.0
#include "kexprint/scanner.hpp"
#include "kexprint/errors.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

namespace kexprint::scanner {

using namespace std::chrono_literals;
using net::IoStatus;

void CampaignConfig::validate() const
{
  if (connect_timeout.count() <= 0 || read_timeout.count() <= 0)
    throw Error(Errc::InvalidArgument, "timeouts must be positive");
  if (parallelism < 1) throw Error(Errc::InvalidArgument, "parallelism must be at least 1");
  if (max_capture_bytes < 1) throw Error(Errc::InvalidArgument, "max_capture_bytes must be positive");
  if (settle.count() < 0) throw Error(Errc::InvalidArgument, "settle must not be negative");
}

CampaignConfig campaign_config_from_json(const nlohmann::json& j)
{
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "scan config must be a JSON object");
  CampaignConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "targets") {
        for (const auto& t : value) c.endpoints.push_back(net::parse_endpoint(t.get<std::string>()));
      }
      else if (key == "connect_timeout_ms") c.connect_timeout = std::chrono::milliseconds(value.get<long>());
      else if (key == "read_timeout_ms") c.read_timeout = std::chrono::milliseconds(value.get<long>());
      else if (key == "settle_ms") c.settle = std::chrono::milliseconds(value.get<long>());
      else if (key == "max_capture_bytes") c.max_capture_bytes = value.get<std::size_t>();
      else if (key == "parallelism") c.parallelism = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "send_banner_first") c.send_banner_first = value.get<bool>();
      else throw Error(Errc::InvalidArgument, "unknown scan config key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("scan config: ") + e.what());
  }
  c.validate();
  return c;
}

CampaignConfig load_campaign_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  try {
    return campaign_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

SplitTranscript split_replies(ByteView b)
{
  SplitTranscript out;
  std::size_t pos = 0;
  while (pos < b.size()) {
    auto rest = b.subspan(pos);
    if (rest.size() < 5) {
      out.incomplete_frame = rest[0] == 0;
      out.trailing.assign(rest.begin(), rest.end());
      break;
    }
    std::uint32_t len = get_u32(rest);
    std::size_t pad = rest[4];
    bool frame_like = std::size_t{len} + 4 <= kMaxReplyFrame && pad + 1 < len;
    if (!frame_like) {
      out.trailing.assign(rest.begin(), rest.end());
      break;
    }
    if (rest.size() < std::size_t{len} + 4) {
      out.incomplete_frame = true;
      out.trailing.assign(rest.begin(), rest.end());
      break;
    }
    out.payloads.push_back(wire::decode_packet(rest, kMaxReplyFrame));
    pos += std::size_t{len} + 4;
  }
  return out;
}

namespace {

// Offset just past the server identification line ("SSH-"/"ssh-" prefixed,
// LF-terminated); earlier lines are pre-banner text. nullopt if not seen yet.
std::optional<std::size_t> banner_end(ByteView buf)
{
  std::size_t line_start = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    if (buf[i] != '\n') continue;
    auto line = buf.subspan(line_start, i + 1 - line_start);
    std::string_view text(reinterpret_cast<const char*>(line.data()), line.size());
    if (text.starts_with("SSH-") || text.starts_with("ssh-")) return i + 1;
    line_start = i + 1;
  }
  return std::nullopt;
}

std::string disconnect_description(ByteView payload)
{
  // byte type, uint32 reason, string description, string language
  if (payload.size() < 9 || payload[0] != wire::kMsgDisconnect) return {};
  std::uint32_t len = get_u32(payload.subspan(5));
  if (payload.size() - 9 < len) return {};
  return to_string(payload.subspan(9, len));
}

bool has_kexinit(const std::vector<Bytes>& payloads)
{
  return std::any_of(payloads.begin(), payloads.end(),
                     [](const Bytes& p) { return !p.empty() && p[0] == wire::kMsgKexInit; });
}

double ms_between(net::Clock::time_point a, net::Clock::time_point b)
{
  return std::chrono::duration<double, std::milli>(b - a).count();
}

} // namespace

ErrorClass classify_transcript(const ResponseRecord& r, bool got_banner, IoStatus io)
{
  if (!got_banner) {
    if (!r.server_banner.empty()) return ErrorClass::NotSsh;
    return io == IoStatus::Timeout ? ErrorClass::Timeout : ErrorClass::Reset;
  }
  auto transcript = transcript_bytes(r);
  if (contains(transcript, "bad packet length")) return ErrorClass::BadPacketLength;
  if (contains(transcript, "Protocol major versions differ") ||
      contains(transcript, "Invalid SSH identification string") || contains(transcript, "Protocol mismatch"))
    return ErrorClass::VersionRejected;
  if (io == IoStatus::Reset && r.reply_payloads.empty() && r.error_text.empty()) return ErrorClass::Reset;
  return ErrorClass::None;
}

Bytes probe_wire_bytes(const probes::Probe& probe, std::uint64_t campaign_seed)
{
  Bytes out = wire::encode_version_line(probe.version);
  std::uint64_t padding_seed = mix_seed(campaign_seed, fnv1a64(as_bytes(probe.id)));
  append(out, wire::encode_packet(wire::encode_kexinit(probe.kexinit), wire::kCleartextBlock, probe.padding,
                                  padding_seed));
  return out;
}

ResponseRecord probe_target(const net::Endpoint& endpoint, const probes::Probe& probe, const CampaignConfig& cfg)
{
  ResponseRecord r;
  r.target = endpoint.to_string();
  r.probe_id = probe.id;

  const auto started = net::Clock::now();
  auto conn = net::connect_tcp(endpoint, cfg.connect_timeout);
  if (conn.status != net::ConnectStatus::Ok) {
    r.error_class = conn.status == net::ConnectStatus::Timeout ? ErrorClass::Timeout : ErrorClass::ConnectRefused;
    r.rtt_ms = ms_between(started, net::Clock::now());
    r.captured_at = utc_now_iso8601();
    return r;
  }
  auto& sock = conn.socket;

  Bytes buf;
  std::optional<std::size_t> banner_at;
  IoStatus io = IoStatus::Ok;
  auto room = [&] { return cfg.max_capture_bytes - std::min(buf.size(), cfg.max_capture_bytes); };

  if (!cfg.send_banner_first) {
    auto deadline = net::deadline_after(cfg.read_timeout);
    while (!banner_at && room() > 0) {
      io = sock.read_some(buf, std::min<std::size_t>(4096, room()), deadline);
      if (io != IoStatus::Ok) break;
      banner_at = banner_end(buf);
    }
  }

  bool finished = !cfg.send_banner_first && !banner_at;
  auto sent_at = net::Clock::now();
  std::optional<net::Clock::time_point> first_reply;
  if (!finished) {
    auto wire_bytes = probe_wire_bytes(probe, cfg.seed);
    auto line_size = wire::encode_version_line(probe.version).size();
    auto write_deadline = net::deadline_after(cfg.read_timeout);
    sent_at = net::Clock::now();
    if (sock.write_all(ByteView(wire_bytes).first(line_size), write_deadline) == IoStatus::Ok)
      sock.write_all(ByteView(wire_bytes).subspan(line_size), write_deadline);

    std::size_t before = buf.size();
    auto deadline = sent_at + cfg.read_timeout;
    bool settling = false;
    while (room() > 0) {
      if (!banner_at) banner_at = banner_end(buf);
      if (banner_at && !settling && has_kexinit(split_replies(ByteView(buf).subspan(*banner_at)).payloads)) {
        settling = true;
        deadline = std::min(deadline, net::Clock::now() + cfg.settle);
      }
      io = sock.read_some(buf, std::min<std::size_t>(16384, room()), deadline);
      if (io != IoStatus::Ok) break;
      if (!first_reply && buf.size() > before) first_reply = net::Clock::now();
      if (settling) deadline = std::min(sent_at + cfg.read_timeout, net::Clock::now() + cfg.settle);
    }
    if (!banner_at) banner_at = banner_end(buf);
  }

  if (banner_at) {
    r.server_banner.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(*banner_at));
    auto split = split_replies(ByteView(buf).subspan(*banner_at));
    r.reply_payloads = std::move(split.payloads);
    r.error_text = std::move(split.trailing);
    for (const auto& p : r.reply_payloads) {
      auto reason = disconnect_description(p);
      if (!reason.empty()) {
        r.disconnect_reason = reason;
        break;
      }
    }
  } else {
    r.server_banner = buf;
  }
  r.error_class = classify_transcript(r, banner_at.has_value(), io);
  r.rtt_ms = ms_between(sent_at, first_reply.value_or(net::Clock::now()));
  r.captured_at = utc_now_iso8601();
  return r;
}

std::vector<ResponseRecord> run_campaign(const CampaignConfig& cfg, const RecordSink& sink)
{
  cfg.validate();
  const std::size_t total = cfg.endpoints.size() * cfg.probes.size();
  std::vector<ResponseRecord> results(total);
  std::atomic<std::size_t> next{0};
  std::mutex sink_mu;

  auto worker = [&] {
    while (true) {
      std::size_t task = next.fetch_add(1);
      if (task >= total) return;
      const auto& ep = cfg.endpoints[task / cfg.probes.size()];
      const auto& probe = cfg.probes[task % cfg.probes.size()];
      results[task] = probe_target(ep, probe, cfg);
      if (sink) {
        std::lock_guard lock(sink_mu);
        sink(results[task]);
      }
    }
  };

  std::size_t n = std::min(cfg.parallelism, std::max<std::size_t>(total, 1));
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::stable_sort(results.begin(), results.end(), [](const ResponseRecord& a, const ResponseRecord& b) {
    if (a.target != b.target) return a.target < b.target;
    return a.probe_id < b.probe_id;
  });
  return results;
}

} // namespace kexprint::scanner
