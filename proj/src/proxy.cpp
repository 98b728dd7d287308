// SPDX-License-Identifier: Apache-2.0
#include "kexprint/proxy.hpp"
#include "kexprint/errors.hpp"

#include <poll.h>

#include <cerrno>
#include <fstream>

namespace kexprint::proxy {

using nlohmann::json;
using namespace std::chrono_literals;
using net::IoStatus;

const char* session_verdict_name(SessionVerdict v) noexcept
{
  switch (v) {
  case SessionVerdict::Forwarded: return "FORWARDED";
  case SessionVerdict::RejectedVersion: return "REJECTED_VERSION";
  case SessionVerdict::RejectedOversize: return "REJECTED_OVERSIZE";
  case SessionVerdict::BackendUnavailable: return "BACKEND_UNAVAILABLE";
  }
  return "FORWARDED";
}

SessionVerdict session_verdict_from_name(std::string_view name)
{
  for (auto v : {SessionVerdict::Forwarded, SessionVerdict::RejectedVersion, SessionVerdict::RejectedOversize,
                 SessionVerdict::BackendUnavailable})
    if (name == session_verdict_name(v)) return v;
  throw Error(Errc::InvalidArgument, "unknown session verdict: " + std::string(name));
}

void ProxyConfig::validate() const
{
  if (listen.port != 0 && listen == backend) throw Error(Errc::InvalidArgument, "listen and backend must differ");
  if (backend.port == 0) throw Error(Errc::InvalidArgument, "backend port must be set");
  if (max_packet < 4096 || max_packet > wire::kTwistedMaxPacket)
    throw Error(Errc::InvalidArgument, "max_packet must be within [4096, 1048576]");
  if (idle_timeout.count() <= 0 || backend_connect_timeout.count() <= 0)
    throw Error(Errc::InvalidArgument, "timeouts must be positive");
}

ProxyConfig proxy_config_from_json(const json& j)
{
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "proxy config must be a JSON object");
  ProxyConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "listen") c.listen = net::parse_endpoint(value.get<std::string>());
      else if (key == "backend") c.backend = net::parse_endpoint(value.get<std::string>());
      else if (key == "max_packet") c.max_packet = value.get<std::size_t>();
      else if (key == "session_log") c.session_log_path = value.get<std::string>();
      else if (key == "idle_timeout_ms") c.idle_timeout = std::chrono::milliseconds(value.get<long>());
      else if (key == "backend_connect_timeout_ms")
        c.backend_connect_timeout = std::chrono::milliseconds(value.get<long>());
      else throw Error(Errc::InvalidArgument, "unknown proxy config key: " + key);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("proxy config: ") + e.what());
  }
  c.validate();
  return c;
}

ProxyConfig load_proxy_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  try {
    return proxy_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

json session_record_to_json(const SessionRecord& r)
{
  return {{"client", r.client},
          {"client_banner", hex_encode(r.client_banner)},
          {"verdict", session_verdict_name(r.verdict)},
          {"bytes_c2s", r.bytes_c2s},
          {"bytes_s2c", r.bytes_s2c},
          {"opened_at", r.opened_at},
          {"closed_at", r.closed_at},
          {"close_reason", r.close_reason}};
}

SessionRecord session_record_from_json(const json& j)
{
  try {
    SessionRecord r;
    r.client = j.at("client").get<std::string>();
    r.client_banner = hex_decode(j.at("client_banner").get<std::string>());
    r.verdict = session_verdict_from_name(j.at("verdict").get<std::string>());
    r.bytes_c2s = j.at("bytes_c2s").get<std::uint64_t>();
    r.bytes_s2c = j.at("bytes_s2c").get<std::uint64_t>();
    r.opened_at = j.at("opened_at").get<std::string>();
    r.closed_at = j.at("closed_at").get<std::string>();
    r.close_reason = j.value("close_reason", "");
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("session record: ") + e.what());
  }
}

FramePolicer::Outcome FramePolicer::feed(ByteView in, Bytes& out)
{
  if (failed_ != Outcome::Pass) return failed_;
  if (opaque_) {
    append(out, in);
    return Outcome::Pass;
  }
  append(pending_, in);
  std::size_t pos = 0;
  while (!opaque_) {
    std::size_t avail = pending_.size() - pos;
    if (avail < 4) break;
    std::uint32_t len = get_u32(ByteView(pending_).subspan(pos));
    if (std::size_t{len} + 4 > max_packet_) {
      failed_ = Outcome::Oversize;
      break;
    }
    if (avail < 5) break;
    std::size_t pad = pending_[pos + 4];
    if (pad + 1 >= len) {
      failed_ = Outcome::NotPacket;
      break;
    }
    if (avail < std::size_t{len} + 4) break;
    auto frame = ByteView(pending_).subspan(pos, std::size_t{len} + 4);
    append(out, frame);
    if (frame[5] == wire::kMsgNewKeys) opaque_ = true;
    pos += frame.size();
  }
  if (opaque_) {
    append(out, ByteView(pending_).subspan(pos));
    pending_.clear();
  } else {
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  return failed_;
}

namespace {

// Reference-style ending: no words, FIN after the peer stops sending.
void silent_close(net::Socket& s)
{
  s.shutdown_write();
  s.drain(256 * 1024, 50ms);
  s.close();
}

} // namespace

void relay_session(net::Socket& client, net::Socket& backend, Bytes client_pending, Bytes backend_pending,
                   const ProxyConfig& cfg, SessionRecord& rec, net::CancelFlag stop)
{
  // Backend frames are checked for packet shape only; its size limit is its own.
  FramePolicer up(cfg.max_packet), down(wire::kTwistedMaxPacket);
  bool up_open = true, down_open = true;
  bool policed = false; // ended by a policing decision
  std::string reason;
  auto idle_deadline = net::deadline_after(cfg.idle_timeout);

  auto pass = [&](bool c2s, ByteView data) {
    Bytes out;
    auto outcome = (c2s ? up : down).feed(data, out);
    if (!out.empty()) {
      auto& dst = c2s ? backend : client;
      if (dst.write_all(out, net::deadline_after(cfg.idle_timeout), stop) != IoStatus::Ok) {
        reason = c2s ? close_reason::kBackendClosed : close_reason::kClientClosed;
        return false;
      }
      (c2s ? rec.bytes_c2s : rec.bytes_s2c) += out.size();
    }
    if (outcome == FramePolicer::Outcome::Pass) return true;
    policed = true;
    if (!c2s) {
      reason = close_reason::kBackendDeviation;
    } else if (outcome == FramePolicer::Outcome::Oversize) {
      reason = close_reason::kOversize;
      rec.verdict = SessionVerdict::RejectedOversize;
    } else {
      reason = close_reason::kMalformedClientFrame;
    }
    return false;
  };

  bool alive = (client_pending.empty() || pass(true, client_pending)) &&
               (backend_pending.empty() || pass(false, backend_pending));

  while (alive && (up_open || down_open)) {
    if (stop && stop->load()) {
      reason = close_reason::kStopped;
      break;
    }
    auto now = net::Clock::now();
    if (now >= idle_deadline) {
      reason = close_reason::kIdleTimeout;
      break;
    }
    pollfd fds[2];
    bool dir_of[2];
    nfds_t n = 0;
    if (up_open) {
      fds[n] = {client.fd(), POLLIN, 0};
      dir_of[n++] = true;
    }
    if (down_open) {
      fds[n] = {backend.fd(), POLLIN, 0};
      dir_of[n++] = false;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(idle_deadline - now) + 1ms;
    int rc = ::poll(fds, n, static_cast<int>(std::min<std::chrono::milliseconds>(left, 50ms).count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      reason = close_reason::kIoError;
      break;
    }
    for (nfds_t i = 0; i < n && alive; ++i) {
      if (fds[i].revents == 0) continue;
      bool c2s = dir_of[i];
      auto& src = c2s ? client : backend;
      Bytes buf;
      auto st = src.read_some(buf, 16384, net::deadline_after(50ms), stop);
      if (st == IoStatus::Ok) {
        idle_deadline = net::deadline_after(cfg.idle_timeout);
        alive = pass(c2s, buf);
      } else if (st == IoStatus::Closed) {
        // Half-close travels to the other side; the session ends when both are done.
        (c2s ? up_open : down_open) = false;
        (c2s ? backend : client).shutdown_write();
        if (reason.empty()) reason = c2s ? close_reason::kClientClosed : close_reason::kBackendClosed;
      } else if (st == IoStatus::Cancelled) {
        reason = close_reason::kStopped;
        alive = false;
      } else if (st != IoStatus::Timeout) {
        reason = c2s ? close_reason::kClientClosed : close_reason::kBackendClosed;
        alive = false;
      }
    }
  }

  rec.close_reason = reason;
  backend.close();
  if (policed) silent_close(client);
  else client.close();
}

ProxyServer::ProxyServer(ProxyConfig cfg) : cfg_(std::move(cfg)) {}

ProxyServer::~ProxyServer() { stop(); }

std::unique_ptr<ProxyServer> ProxyServer::start(ProxyConfig cfg)
{
  cfg.validate();
  {
    auto probe = net::connect_tcp(cfg.backend, cfg.backend_connect_timeout);
    if (probe.status != net::ConnectStatus::Ok)
      throw Error(Errc::BackendUnavailable, "backend " + cfg.backend.to_string() + " unreachable: " + probe.error);
  }
  std::unique_ptr<ProxyServer> p(new ProxyServer(std::move(cfg)));
  if (!p->cfg_.session_log_path.empty()) p->log_file_ = std::make_unique<JsonlWriter>(p->cfg_.session_log_path);
  auto* self = p.get();
  p->server_ = std::make_unique<net::ConnectionServer>(
    p->cfg_.listen, [self](net::Socket& conn, const net::Endpoint& peer, std::size_t, net::CancelFlag stop) {
      self->serve(conn, peer, stop);
    });
  return p;
}

std::uint16_t ProxyServer::port() const noexcept { return server_ ? server_->port() : 0; }

net::Endpoint ProxyServer::endpoint() const { return {cfg_.listen.host, port()}; }

void ProxyServer::stop()
{
  if (server_) server_->stop();
}

std::vector<SessionRecord> ProxyServer::sessions() const
{
  std::lock_guard lock(mu_);
  return sessions_;
}

void ProxyServer::record(SessionRecord r)
{
  r.closed_at = utc_now_iso8601();
  if (log_file_) {
    try {
      log_file_->write(session_record_to_json(r));
    } catch (const Error&) {
      // Keep serving; the in-memory list still has the session.
    }
  }
  std::lock_guard lock(mu_);
  sessions_.push_back(std::move(r));
}

void ProxyServer::serve(net::Socket& client, const net::Endpoint& peer, net::CancelFlag stop)
{
  SessionRecord rec;
  rec.client = peer.to_string();
  rec.opened_at = utc_now_iso8601();
  auto finish = [&](SessionVerdict v, const char* reason) {
    rec.verdict = v;
    rec.close_reason = reason;
    record(std::move(rec));
  };

  // The backend is dialled first so its banner can go out before the client
  // speaks; clients that wait for the server banner would otherwise stall.
  auto dial = net::connect_tcp(cfg_.backend, cfg_.backend_connect_timeout);
  if (dial.status != net::ConnectStatus::Ok) {
    client.close();
    return finish(SessionVerdict::BackendUnavailable, close_reason::kBackendUnavailable);
  }
  auto& backend = dial.socket;
  auto deadline = net::deadline_after(cfg_.idle_timeout);

  // Relay the backend's banner, and any lines before it, unchanged.
  Bytes backend_pending, greeting;
  while (true) {
    auto line = net::read_ident_line(backend, backend_pending, wire::kMaxVersionLine, deadline, stop);
    append(greeting, line.line);
    if (line.end == net::LineEnd::Lf) {
      std::string_view text(reinterpret_cast<const char*>(line.line.data()), line.line.size());
      if (text.starts_with("SSH-") || text.starts_with("ssh-")) break;
    }
    if (line.end == net::LineEnd::Closed || line.end == net::LineEnd::Timeout || line.end == net::LineEnd::Nul ||
        greeting.size() > 8192) {
      client.close();
      return finish(SessionVerdict::BackendUnavailable, close_reason::kBackendUnavailable);
    }
  }
  if (client.write_all(greeting, deadline, stop) != IoStatus::Ok)
    return finish(SessionVerdict::RejectedVersion, close_reason::kNoClientBanner);

  Bytes client_pending;
  auto ident = net::read_ident_line(client, client_pending, wire::kMaxVersionLine, deadline, stop);
  rec.client_banner = ident.line;
  if (ident.end == net::LineEnd::Closed || ident.end == net::LineEnd::Timeout)
    return finish(SessionVerdict::RejectedVersion, close_reason::kNoClientBanner);

  auto decision = validate_client_banner(ident.line, cfg_.reference_policy);
  if (!decision.accepted) {
    backend.close();
    client.write_all(decision.message, net::deadline_after(1s), stop);
    silent_close(client);
    return finish(SessionVerdict::RejectedVersion, close_reason::kVersionRejected);
  }

  if (backend.write_all(ident.line, deadline, stop) != IoStatus::Ok) {
    silent_close(client);
    return finish(SessionVerdict::BackendUnavailable, close_reason::kBackendClosed);
  }
  rec.verdict = SessionVerdict::Forwarded;
  relay_session(client, backend, std::move(client_pending), std::move(backend_pending), cfg_, rec, stop);
  record(std::move(rec));
}

} // namespace kexprint::proxy
