// SPDX-License-Identifier: Apache-2.0
#include "kexprint/probes.hpp"
#include "kexprint/errors.hpp"

#include <cstdio>
#include <fstream>
#include <map>

namespace kexprint::probes {

using nlohmann::json;
using wire::KexInit;
using wire::PaddingMode;
using wire::PrefixCase;
using wire::VersionString;

// Default algorithm axes, taken from the IANA SSH parameter registry.
ProbeConfig::ProbeConfig()
  : kex{"curve25519-sha256",
        "curve25519-sha256@libssh.org",
        "ecdh-sha2-nistp256",
        "ecdh-sha2-nistp384",
        "ecdh-sha2-nistp521",
        "diffie-hellman-group-exchange-sha256",
        "diffie-hellman-group-exchange-sha1",
        "diffie-hellman-group14-sha256",
        "diffie-hellman-group14-sha1",
        "diffie-hellman-group15-sha512",
        "diffie-hellman-group16-sha512",
        "diffie-hellman-group17-sha512",
        "diffie-hellman-group18-sha512",
        "diffie-hellman-group1-sha1",
        "sntrup761x25519-sha512@openssh.com",
        "rsa2048-sha256"},
    hostkey{"ssh-dss", "ssh-ed25519"},
    enc{"aes128-ctr", "aes192-ctr", "aes256-ctr", "aes128-gcm@openssh.com", "aes256-gcm@openssh.com",
        "chacha20-poly1305@openssh.com", "aes128-cbc", "aes192-cbc", "aes256-cbc", "3des-cbc",
        "blowfish-cbc", "cast128-cbc", "arcfour", "arcfour128", "arcfour256"},
    mac{"hmac-sha1", "hmac-sha2-256", "hmac-sha2-512", "hmac-md5", "umac-64@openssh.com"},
    comp{"none", "zlib", "zlib@openssh.com"}
{
}

void ProbeConfig::validate() const
{
  auto need = [](bool non_empty, const char* axis) {
    if (!non_empty) throw Error(Errc::InvalidArgument, std::string("probe axis is empty: ") + axis);
  };
  need(!protoversions.empty(), "protoversions");
  need(!swversions.empty(), "swversions");
  need(!comments.empty(), "comments");
  need(!crlf_options.empty(), "crlf_options");
  need(!case_options.empty(), "case_options");
  need(!kex.empty(), "kex");
  need(!hostkey.empty(), "hostkey");
  need(!enc.empty(), "enc");
  need(!mac.empty(), "mac");
  need(!comp.empty(), "comp");
  need(!padding_modes.empty(), "padding_modes");
}

namespace {

PrefixCase prefix_case_from_name(const std::string& s)
{
  if (s == "UPPER") return PrefixCase::Upper;
  if (s == "LOWER") return PrefixCase::Lower;
  throw Error(Errc::InvalidArgument, "unknown case option: " + s);
}

} // namespace

ProbeConfig probe_config_from_json(const json& j)
{
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "probe config must be a JSON object");
  ProbeConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "protoversions") cfg.protoversions = value.get<std::vector<std::string>>();
      else if (key == "swversions") cfg.swversions = value.get<std::vector<std::string>>();
      else if (key == "comments") cfg.comments = value.get<std::vector<std::string>>();
      else if (key == "crlf_options") cfg.crlf_options = value.get<std::vector<bool>>();
      else if (key == "case_options") {
        cfg.case_options.clear();
        for (const auto& c : value) cfg.case_options.push_back(prefix_case_from_name(c.get<std::string>()));
      }
      else if (key == "kex") cfg.kex = value.get<std::vector<std::string>>();
      else if (key == "hostkey") cfg.hostkey = value.get<std::vector<std::string>>();
      else if (key == "enc") cfg.enc = value.get<std::vector<std::string>>();
      else if (key == "mac") cfg.mac = value.get<std::vector<std::string>>();
      else if (key == "comp") cfg.comp = value.get<std::vector<std::string>>();
      else if (key == "padding_modes") {
        cfg.padding_modes.clear();
        for (const auto& m : value) cfg.padding_modes.push_back(wire::padding_mode_from_name(m.get<std::string>()));
      }
      else if (key == "kexinit_source") {
        auto s = value.get<std::string>();
        if (s == "best") cfg.kexinit_source = KexinitSource::BestProbes;
        else if (s == "grid") cfg.kexinit_source = KexinitSource::Grid;
        else throw Error(Errc::InvalidArgument, "kexinit_source must be \"best\" or \"grid\"");
      }
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else throw Error(Errc::InvalidArgument, "unknown probe config key: " + key);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("probe config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ProbeConfig load_probe_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
  return probe_config_from_json(j);
}

std::string probe_id(const VersionString& v, const KexInit& k, PaddingMode padding)
{
  Bytes content = wire::encode_version_line(v);
  append(content, wire::encode_kexinit(k));
  content.push_back(static_cast<std::uint8_t>(padding));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(content)));
  return buf;
}

Probe make_probe(VersionString v, KexInit k, PaddingMode padding)
{
  Probe p{probe_id(v, k, padding), std::move(v), std::move(k), padding};
  return p;
}

std::vector<VersionString> generate_version_strings(const ProbeConfig& cfg)
{
  cfg.validate();
  std::map<Bytes, VersionString> unique;
  for (auto prefix : cfg.case_options)
    for (const auto& proto : cfg.protoversions)
      for (const auto& sw : cfg.swversions)
        for (const auto& comment : cfg.comments)
          for (bool crlf : cfg.crlf_options) {
            VersionString v{prefix, proto, sw, comment, true, crlf};
            unique.emplace(wire::encode_version_line(v), v);
          }
  std::vector<VersionString> out;
  out.reserve(unique.size());
  for (auto& [bytes, v] : unique) out.push_back(std::move(v));
  return out;
}

namespace {

KexInit mirrored_kexinit(const std::string& kex, const std::string& hostkey, const std::string& enc,
                         const std::string& mac, const std::string& comp)
{
  KexInit k;
  k.kex_algorithms = {kex};
  k.server_host_key_algorithms = {hostkey};
  k.encryption_c2s = k.encryption_s2c = {enc};
  k.mac_c2s = k.mac_s2c = {mac};
  k.compression_c2s = k.compression_s2c = {comp};
  return k;
}

} // namespace

std::vector<KexBody> generate_kexinit_probes(const ProbeConfig& cfg)
{
  cfg.validate();
  std::vector<KexBody> out;
  out.reserve(cfg.kex.size() * cfg.hostkey.size() * cfg.enc.size() * cfg.mac.size() *
              cfg.comp.size() * cfg.padding_modes.size());
  std::uint64_t index = 0;
  for (const auto& kex : cfg.kex)
    for (const auto& hostkey : cfg.hostkey)
      for (const auto& enc : cfg.enc)
        for (const auto& mac : cfg.mac)
          for (const auto& comp : cfg.comp)
            for (auto padding : cfg.padding_modes) {
              KexBody body{mirrored_kexinit(kex, hostkey, enc, mac, comp), padding};
              wire::seed_cookie(body.kexinit, mix_seed(cfg.seed, index++));
              out.push_back(std::move(body));
            }
  return out;
}

Probe best_probe(BestProbeVariant variant)
{
  VersionString v{PrefixCase::Upper, "2.2", "OpenSSH", "", true, true};
  if (variant == BestProbeVariant::Legacy) {
    auto k = mirrored_kexinit("ecdh-sha2-nistp521", "ssh-dss", "blowfish-cbc", "hmac-sha1", "zlib@openssh.com");
    wire::seed_cookie(k, mix_seed(kDefaultSeed, 0x4c));
    return make_probe(v, std::move(k), PaddingMode::Wrong);
  }
  auto k = mirrored_kexinit("ecdh-sha2-nistp521", "ssh-ed25519", "chacha20-poly1305@openssh.com", "hmac-sha1",
                            "zlib@openssh.com");
  wire::seed_cookie(k, mix_seed(kDefaultSeed, 0x4d));
  return make_probe(v, std::move(k), PaddingMode::Random);
}

std::vector<Probe> build_corpus(const ProbeConfig& cfg)
{
  std::vector<KexBody> bodies;
  if (cfg.kexinit_source == KexinitSource::Grid) {
    bodies = generate_kexinit_probes(cfg);
  } else {
    for (auto variant : {BestProbeVariant::Legacy, BestProbeVariant::Modern}) {
      auto p = best_probe(variant);
      bodies.push_back({std::move(p.kexinit), p.padding});
    }
  }
  auto versions = generate_version_strings(cfg);
  std::vector<Probe> out;
  out.reserve(versions.size() * bodies.size());
  for (const auto& v : versions)
    for (const auto& body : bodies) out.push_back(make_probe(v, body.kexinit, body.padding));
  return out;
}

json probe_to_json(const Probe& p)
{
  const auto& k = p.kexinit;
  json kj = {
    {"cookie", hex_encode(k.cookie)},
    {"kex_algorithms", k.kex_algorithms},
    {"server_host_key_algorithms", k.server_host_key_algorithms},
    {"encryption_algorithms_client_to_server", k.encryption_c2s},
    {"encryption_algorithms_server_to_client", k.encryption_s2c},
    {"mac_algorithms_client_to_server", k.mac_c2s},
    {"mac_algorithms_server_to_client", k.mac_s2c},
    {"compression_algorithms_client_to_server", k.compression_c2s},
    {"compression_algorithms_server_to_client", k.compression_s2c},
    {"languages_client_to_server", k.languages_c2s},
    {"languages_server_to_client", k.languages_s2c},
    {"first_kex_packet_follows", k.first_kex_packet_follows},
    {"reserved", k.reserved},
  };
  return json{{"id", p.id},
              {"version_line", hex_encode(wire::encode_version_line(p.version))},
              {"kexinit", std::move(kj)},
              {"padding", wire::padding_mode_name(p.padding)}};
}

Probe probe_from_json(const json& j)
{
  try {
    Probe p;
    p.id = j.at("id").get<std::string>();
    p.version = wire::parse_version_line(hex_decode(j.at("version_line").get<std::string>()));
    const auto& kj = j.at("kexinit");
    auto& k = p.kexinit;
    auto cookie = hex_decode(kj.at("cookie").get<std::string>());
    if (cookie.size() != k.cookie.size()) throw Error(Errc::ParseError, "cookie must be 16 bytes");
    std::copy(cookie.begin(), cookie.end(), k.cookie.begin());
    kj.at("kex_algorithms").get_to(k.kex_algorithms);
    kj.at("server_host_key_algorithms").get_to(k.server_host_key_algorithms);
    kj.at("encryption_algorithms_client_to_server").get_to(k.encryption_c2s);
    kj.at("encryption_algorithms_server_to_client").get_to(k.encryption_s2c);
    kj.at("mac_algorithms_client_to_server").get_to(k.mac_c2s);
    kj.at("mac_algorithms_server_to_client").get_to(k.mac_s2c);
    kj.at("compression_algorithms_client_to_server").get_to(k.compression_c2s);
    kj.at("compression_algorithms_server_to_client").get_to(k.compression_s2c);
    kj.at("languages_client_to_server").get_to(k.languages_c2s);
    kj.at("languages_server_to_client").get_to(k.languages_s2c);
    kj.at("first_kex_packet_follows").get_to(k.first_kex_packet_follows);
    kj.at("reserved").get_to(k.reserved);
    p.padding = wire::padding_mode_from_name(j.at("padding").get<std::string>());
    if (probe_id(p.version, p.kexinit, p.padding) != p.id)
      throw Error(Errc::ParseError, "probe id does not match probe content");
    return p;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
}

void save_probes(const std::string& path, const std::vector<Probe>& probes)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path);
  for (const auto& p : probes) out << probe_to_json(p).dump() << '\n';
  if (!out) throw Error(Errc::IoFailure, "write failed: " + path);
}

std::vector<Probe> load_probes(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  std::vector<Probe> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(probe_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(n, e.what());
    } catch (const Error& e) {
      throw ParseError(n, e.what());
    }
  }
  return out;
}

} // namespace kexprint::probes
