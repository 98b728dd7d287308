// SPDX-License-Identifier: Apache-2.0
#include "kexprint/personas.hpp"
#include "kexprint/errors.hpp"

#include <fstream>

namespace kexprint {

const char* persona_kind_name(PersonaKind k) noexcept
{
  return k == PersonaKind::Reference ? "reference" : "honeypot";
}

PersonaKind persona_kind_from_name(std::string_view name)
{
  if (name == "reference" || name == "REFERENCE") return PersonaKind::Reference;
  if (name == "honeypot" || name == "HONEYPOT") return PersonaKind::Honeypot;
  throw Error(Errc::InvalidArgument, "unknown persona kind: " + std::string(name));
}

bool VersionPolicy::accepts(const wire::VersionString& v) const
{
  if (v.prefix_case != wire::PrefixCase::Upper) return false;
  if (kind == PersonaKind::Honeypot) return v.protoversion == "1.99" || v.protoversion == "2.0";
  auto value = wire::protoversion_value(v.protoversion);
  return value && *value >= 1.99;
}

BannerDecision validate_client_banner(ByteView line, const VersionPolicy& policy)
{
  auto reject = [&] {
    if (policy.kind == PersonaKind::Reference) return BannerDecision{false, to_bytes(kVersionsDiffer)};
    std::uint8_t head[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < 4 && i < line.size(); ++i) head[i] = line[i];
    return BannerDecision{false, to_bytes("bad packet length " + std::to_string(get_u32(head)))};
  };

  if (line.size() > wire::kMaxVersionLine) return reject();
  if (policy.kind == PersonaKind::Reference && (line.empty() || line.back() != '\n')) return reject();
  try {
    if (policy.accepts(wire::parse_version_line(line))) return {true, {}};
  } catch (const Error&) {
  }
  return reject();
}

} // namespace kexprint

namespace kexprint::personas {

using nlohmann::json;
using namespace std::chrono_literals;

PersonaConfig PersonaConfig::defaults(PersonaKind kind)
{
  PersonaConfig c;
  c.kind = kind;
  if (kind == PersonaKind::Reference) {
    c.banner = {wire::PrefixCase::Upper, "2.0", "OpenSSH_8.8p1", "", false, true};
    c.max_packet = wire::kRfcMaxPacket;
    c.padding_mode = wire::PaddingMode::Random;
  } else {
    c.banner = {wire::PrefixCase::Upper, "2.0", "OpenSSH_6.0p1", "Debian-4+deb7u2", true, true};
    c.max_packet = wire::kTwistedMaxPacket;
    c.padding_mode = wire::PaddingMode::Null;
  }
  return c;
}

void PersonaConfig::validate() const
{
  if (max_packet < 4096) throw Error(Errc::InvalidArgument, "max_packet must be at least 4096");
  if (padding_mode == wire::PaddingMode::Wrong)
    throw Error(Errc::InvalidArgument, "persona padding must be RANDOM or NULL");
  if (idle_timeout.count() <= 0) throw Error(Errc::InvalidArgument, "idle_timeout must be positive");
  try {
    wire::encode_version_line(banner);
  } catch (const Error& e) {
    throw Error(Errc::InvalidArgument, std::string("invalid banner: ") + e.what());
  }
}

PersonaConfig persona_config_from_json(const json& j)
{
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "persona config must be a JSON object");
  auto kind = j.contains("kind") ? persona_kind_from_name(j.at("kind").get<std::string>()) : PersonaKind::Reference;
  auto c = PersonaConfig::defaults(kind);
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") continue;
      if (key == "banner") {
        auto text = value.get<std::string>();
        if (!text.ends_with('\n')) text += "\r\n";
        c.banner = wire::parse_version_line(as_bytes(text));
      }
      else if (key == "max_packet") c.max_packet = value.get<std::size_t>();
      else if (key == "padding_mode") c.padding_mode = wire::padding_mode_from_name(value.get<std::string>());
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "listen") c.listen = net::parse_endpoint(value.get<std::string>());
      else if (key == "access_log") c.access_log_path = value.get<std::string>();
      else if (key == "idle_timeout_ms") c.idle_timeout = std::chrono::milliseconds(value.get<long>());
      else throw Error(Errc::InvalidArgument, "unknown persona config key: " + key);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("persona config: ") + e.what());
  }
  c.validate();
  return c;
}

PersonaConfig load_persona_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  try {
    return persona_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
}

wire::KexInit persona_kexinit(PersonaKind kind)
{
  wire::KexInit k;
  if (kind == PersonaKind::Reference) {
    k.kex_algorithms = {"curve25519-sha256", "curve25519-sha256@libssh.org", "ecdh-sha2-nistp256",
                        "ecdh-sha2-nistp384", "ecdh-sha2-nistp521", "sntrup761x25519-sha512@openssh.com",
                        "diffie-hellman-group-exchange-sha256", "diffie-hellman-group16-sha512",
                        "diffie-hellman-group18-sha512", "diffie-hellman-group14-sha256"};
    k.server_host_key_algorithms = {"rsa-sha2-512", "rsa-sha2-256", "ecdsa-sha2-nistp256", "ssh-ed25519"};
    k.encryption_c2s = {"chacha20-poly1305@openssh.com", "aes128-ctr", "aes192-ctr", "aes256-ctr",
                        "aes128-gcm@openssh.com", "aes256-gcm@openssh.com"};
    k.mac_c2s = {"umac-64-etm@openssh.com", "umac-128-etm@openssh.com", "hmac-sha2-256-etm@openssh.com",
                 "hmac-sha2-512-etm@openssh.com", "hmac-sha1-etm@openssh.com", "umac-64@openssh.com",
                 "umac-128@openssh.com", "hmac-sha2-256", "hmac-sha2-512", "hmac-sha1"};
    k.compression_c2s = {"none", "zlib@openssh.com"};
  } else {
    k.kex_algorithms = {"curve25519-sha256", "curve25519-sha256@libssh.org", "ecdh-sha2-nistp256",
                        "ecdh-sha2-nistp384", "ecdh-sha2-nistp521", "diffie-hellman-group18-sha512",
                        "diffie-hellman-group16-sha512", "diffie-hellman-group-exchange-sha256",
                        "diffie-hellman-group14-sha256", "diffie-hellman-group-exchange-sha1",
                        "diffie-hellman-group14-sha1", "diffie-hellman-group1-sha1"};
    k.server_host_key_algorithms = {"ssh-rsa", "ecdsa-sha2-nistp256", "ssh-ed25519"};
    k.encryption_c2s = {"aes128-ctr", "aes192-ctr", "aes256-ctr", "aes256-cbc", "aes192-cbc",
                        "aes128-cbc", "3des-cbc", "blowfish-cbc", "cast128-cbc"};
    k.mac_c2s = {"hmac-sha2-512", "hmac-sha2-384", "hmac-sha2-256", "hmac-sha1", "hmac-md5"};
    k.compression_c2s = {"none", "zlib@openssh.com", "zlib"};
  }
  k.encryption_s2c = k.encryption_c2s;
  k.mac_s2c = k.mac_c2s;
  k.compression_s2c = k.compression_c2s;
  return k;
}

json access_entry_to_json(const AccessLogEntry& e)
{
  return {{"peer", e.peer},
          {"client_banner", hex_encode(e.client_banner)},
          {"decision", e.decision},
          {"timestamp", e.timestamp}};
}

Persona::Persona(PersonaConfig cfg) : cfg_(std::move(cfg)) {}

Persona::~Persona() { stop(); }

std::unique_ptr<Persona> Persona::start(PersonaConfig cfg)
{
  cfg.validate();
  std::unique_ptr<Persona> p(new Persona(std::move(cfg)));
  if (!p->cfg_.access_log_path.empty()) p->log_file_ = std::make_unique<JsonlWriter>(p->cfg_.access_log_path);
  auto* self = p.get();
  p->server_ = std::make_unique<net::ConnectionServer>(
    p->cfg_.listen, [self](net::Socket& conn, const net::Endpoint& peer, std::size_t, net::CancelFlag stop) {
      self->serve(conn, peer, stop);
    });
  return p;
}

std::uint16_t Persona::port() const noexcept { return server_ ? server_->port() : 0; }

net::Endpoint Persona::endpoint() const { return {cfg_.listen.host, port()}; }

void Persona::stop()
{
  if (server_) server_->stop();
}

std::vector<AccessLogEntry> Persona::access_log() const
{
  std::lock_guard lock(log_mu_);
  return log_;
}

void Persona::record(AccessLogEntry e)
{
  if (log_file_) {
    try {
      log_file_->write(access_entry_to_json(e));
    } catch (const Error&) {
      // The in-memory log still has the entry.
    }
  }
  std::lock_guard lock(log_mu_);
  log_.push_back(std::move(e));
}

namespace {

// Ends a session so the client reads our last bytes followed by FIN.
void close_after(net::Socket& conn, ByteView last_words)
{
  if (!last_words.empty()) conn.write_all(last_words, net::deadline_after(1s));
  conn.shutdown_write();
  conn.drain(256 * 1024, 50ms);
}

} // namespace

void Persona::serve(net::Socket& conn, const net::Endpoint& peer, net::CancelFlag stop)
{
  AccessLogEntry entry{peer.to_string(), {}, decision::kNoBanner, utc_now_iso8601()};
  const auto idle = cfg_.idle_timeout;
  const VersionPolicy policy{cfg_.kind};
  const bool honeypot = cfg_.kind == PersonaKind::Honeypot;

  if (conn.write_all(wire::encode_version_line(cfg_.banner), net::deadline_after(idle), stop) != net::IoStatus::Ok) {
    record(std::move(entry));
    return;
  }

  Bytes pending;
  auto ident = net::read_ident_line(conn, pending, wire::kMaxVersionLine, net::deadline_after(idle), stop);
  entry.client_banner = ident.line;
  if (ident.end == net::LineEnd::Closed || ident.end == net::LineEnd::Timeout) {
    record(std::move(entry));
    return;
  }

  auto verdict = validate_client_banner(ident.line, policy);
  if (!verdict.accepted) {
    entry.decision = honeypot ? decision::kBadPacketLength : decision::kVersionRejected;
    close_after(conn, verdict.message);
    record(std::move(entry));
    return;
  }

  if (net::fill_to(conn, pending, 4, net::deadline_after(idle), stop) != net::IoStatus::Ok) {
    entry.decision = decision::kNoPacket;
    record(std::move(entry));
    return;
  }
  std::uint32_t packet_length = get_u32(pending);
  try {
    wire::check_packet_length(packet_length, cfg_.max_packet);
  } catch (const Error&) {
    if (honeypot) {
      entry.decision = decision::kBadPacketLength;
      close_after(conn, as_bytes("bad packet length " + std::to_string(packet_length)));
    } else {
      entry.decision = decision::kOversizeDisconnect;
      close_after(conn, {});
    }
    record(std::move(entry));
    return;
  }

  std::size_t frame_size = std::size_t{packet_length} + 4;
  if (net::fill_to(conn, pending, std::max<std::size_t>(frame_size, 9), net::deadline_after(idle), stop) !=
      net::IoStatus::Ok) {
    entry.decision = decision::kNoPacket;
    record(std::move(entry));
    return;
  }
  try {
    wire::decode_packet(pending, cfg_.max_packet);
  } catch (const Error&) {
    entry.decision = decision::kFramingDisconnect;
    close_after(conn, {});
    record(std::move(entry));
    return;
  }

  // Session randomness is a function of the seed and the client's bytes only,
  // so concurrent sessions stay reproducible regardless of accept order.
  Bytes client_bytes = ident.line;
  append(client_bytes, ByteView(pending).first(frame_size));
  std::uint64_t session_seed = mix_seed(cfg_.seed, fnv1a64(client_bytes));
  auto kexinit = persona_kexinit(cfg_.kind);
  wire::seed_cookie(kexinit, mix_seed(session_seed, 1));
  auto reply = wire::encode_packet(wire::encode_kexinit(kexinit), wire::kCleartextBlock, cfg_.padding_mode,
                                   mix_seed(session_seed, 2));
  entry.decision = decision::kKexInit;
  record(entry);
  if (conn.write_all(reply, net::deadline_after(idle), stop) != net::IoStatus::Ok) return;

  // Hold until the client leaves or goes idle.
  Bytes scratch;
  while (true) {
    scratch.clear();
    if (conn.read_some(scratch, 16384, net::deadline_after(idle), stop) != net::IoStatus::Ok) break;
  }
}

} // namespace kexprint::personas
