// SPDX-License-Identifier: Apache-2.0
#include "kexprint/errors.hpp"
#include "kexprint/personas.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace kexprint;
using namespace kexprint::personas;
using namespace std::chrono_literals;
using kexprint::testing::claimed_frame;
using kexprint::testing::client_line;
using kexprint::testing::exchange;

namespace {

std::unique_ptr<Persona> start(PersonaKind kind, std::uint64_t seed = 1)
{
  auto cfg = PersonaConfig::defaults(kind);
  cfg.seed = seed;
  return Persona::start(cfg);
}

Bytes kexinit_frame()
{
  wire::KexInit k;
  k.kex_algorithms = {"curve25519-sha256"};
  return wire::encode_packet(wire::encode_kexinit(k), 8, wire::PaddingMode::Random, 5);
}

Bytes hello(const std::string& protoversion)
{
  auto b = client_line(protoversion);
  append(b, kexinit_frame());
  return b;
}

bool got_kexinit(const kexprint::testing::Exchange& x)
{
  if (x.after.size() < 6) return false;
  try {
    auto payload = wire::decode_packet(x.after, wire::kRfcMaxPacket);
    return payload[0] == wire::kMsgKexInit;
  } catch (const Error&) {
    return false;
  }
}

} // namespace

TEST(VersionPolicy, Decisions)
{
  auto ref = VersionPolicy::reference();
  auto hp = VersionPolicy::honeypot();
  for (auto [pv, r, h] : std::vector<std::tuple<std::string, bool, bool>>{
         {"1.0", false, false}, {"1.99", true, true}, {"2.0", true, true}, {"2.2", true, false}, {"3.2", true, false},
         {"0.0", false, false}, {"1.9", false, false}}) {
    wire::VersionString v;
    v.protoversion = pv;
    v.swversion = "x";
    EXPECT_EQ(ref.accepts(v), r) << pv;
    EXPECT_EQ(hp.accepts(v), h) << pv;
  }
}

TEST(ValidateClientBanner, Examples)
{
  auto ref = VersionPolicy::reference();
  EXPECT_TRUE(validate_client_banner(as_bytes("SSH-2.0-OpenSSH_8.8\r\n"), ref).accepted);
  auto old = validate_client_banner(as_bytes("SSH-1.0-Old\r\n"), ref);
  EXPECT_FALSE(old.accepted);
  EXPECT_EQ(to_string(old.message), "Protocol major versions differ.\n");
  auto http = validate_client_banner(as_bytes("GET / HTTP/1.1"), ref);
  EXPECT_FALSE(http.accepted);
  EXPECT_EQ(to_string(http.message), "Protocol major versions differ.\n");
  EXPECT_FALSE(validate_client_banner(as_bytes("SSH-2.0-OpenSSH_8.8"), ref).accepted); // no terminator
  EXPECT_FALSE(validate_client_banner(as_bytes("ssh-2.0-OpenSSH_8.8\r\n"), ref).accepted);
}

TEST(ValidateClientBanner, HoneypotRendersLength)
{
  auto d = validate_client_banner(as_bytes("SSH-2.2-OpenSSH \r\n"), VersionPolicy::honeypot());
  EXPECT_FALSE(d.accepted);
  // "SSH-" read as a big-endian u32.
  const std::uint32_t n = (0x53u << 24) | (0x53u << 16) | (0x48u << 8) | 0x2Du;
  EXPECT_EQ(to_string(d.message), "bad packet length " + std::to_string(n));
  EXPECT_TRUE(validate_client_banner(as_bytes("SSH-2.0-x"), VersionPolicy::honeypot()).accepted);
}

TEST(PersonaConfig, DefaultsAndValidation)
{
  auto r = PersonaConfig::defaults(PersonaKind::Reference);
  EXPECT_EQ(to_string(wire::encode_version_line(r.banner)), "SSH-2.0-OpenSSH_8.8p1\r\n");
  EXPECT_EQ(r.max_packet, 32768u);
  EXPECT_EQ(r.padding_mode, wire::PaddingMode::Random);
  auto h = PersonaConfig::defaults(PersonaKind::Honeypot);
  EXPECT_EQ(to_string(wire::encode_version_line(h.banner)), "SSH-2.0-OpenSSH_6.0p1 Debian-4+deb7u2\r\n");
  EXPECT_EQ(h.max_packet, 1048576u);
  EXPECT_EQ(h.padding_mode, wire::PaddingMode::Null);

  h.max_packet = 100;
  EXPECT_THROW(h.validate(), Error);
  auto j = persona_config_from_json({{"kind", "honeypot"}, {"banner", "SSH-2.0-Custom"}, {"padding_mode", "RANDOM"}});
  EXPECT_EQ(j.kind, PersonaKind::Honeypot);
  EXPECT_EQ(j.banner.swversion, "Custom");
  EXPECT_EQ(j.padding_mode, wire::PaddingMode::Random);
  EXPECT_THROW(persona_config_from_json({{"bogus", 1}}), Error);
}

TEST(Persona, BehaviourMatrix)
{
  auto ref = start(PersonaKind::Reference);
  auto hp = start(PersonaKind::Honeypot);
  for (auto pv : {"1.0", "1.99", "2.0", "2.2"}) {
    auto r = exchange(ref->endpoint(), hello(pv));
    auto h = exchange(hp->endpoint(), hello(pv));
    std::string p(pv);
    EXPECT_EQ(to_string(r.banner), "SSH-2.0-OpenSSH_8.8p1\r\n");
    if (p == "1.0") {
      EXPECT_EQ(to_string(r.after), "Protocol major versions differ.\n");
      EXPECT_EQ(r.end, net::IoStatus::Closed);
    } else {
      EXPECT_TRUE(got_kexinit(r)) << p;
    }
    if (p == "1.0" || p == "2.2") {
      EXPECT_TRUE(to_string(h.after).starts_with("bad packet length ")) << p;
      EXPECT_EQ(h.end, net::IoStatus::Closed);
    } else {
      EXPECT_TRUE(got_kexinit(h)) << p;
    }
  }
}

TEST(Persona, PacketLimits)
{
  auto ref = start(PersonaKind::Reference);
  auto hp = start(PersonaKind::Honeypot);

  auto oversize = client_line("2.0");
  append(oversize, claimed_frame(40000));
  auto r = exchange(ref->endpoint(), oversize);
  EXPECT_TRUE(r.after.empty());
  EXPECT_EQ(r.end, net::IoStatus::Closed);

  // The honeypot accepts the length and waits for the rest of the frame.
  auto h = exchange(hp->endpoint(), oversize, 300ms);
  EXPECT_TRUE(h.after.empty());
  EXPECT_EQ(h.end, net::IoStatus::Timeout);

  auto huge = client_line("2.0");
  append(huge, claimed_frame(1048577));
  auto h2 = exchange(hp->endpoint(), huge);
  EXPECT_EQ(to_string(h2.after), "bad packet length 1048577");
  EXPECT_EQ(h2.end, net::IoStatus::Closed);
}

TEST(Persona, HoneypotCompletesLargeFrame)
{
  auto hp = start(PersonaKind::Honeypot);
  Bytes payload(40000, 0);
  payload[0] = wire::kMsgKexInit;
  auto msg = client_line("2.0");
  append(msg, wire::encode_packet(payload, 8, wire::PaddingMode::Null, 0));
  auto h = exchange(hp->endpoint(), msg);
  EXPECT_TRUE(got_kexinit(h));
}

TEST(Persona, DeterministicTranscripts)
{
  auto a = start(PersonaKind::Reference, 77);
  auto b = start(PersonaKind::Reference, 77);
  auto c = start(PersonaKind::Reference, 78);
  auto xa = exchange(a->endpoint(), hello("2.0"));
  auto xa2 = exchange(a->endpoint(), hello("2.0"));
  auto xb = exchange(b->endpoint(), hello("2.0"));
  auto xc = exchange(c->endpoint(), hello("2.0"));
  EXPECT_EQ(xa.after, xa2.after);
  EXPECT_EQ(xa.after, xb.after);
  EXPECT_NE(xa.after, xc.after);
}

TEST(Persona, HoneypotUsesNullPadding)
{
  auto hp = start(PersonaKind::Honeypot);
  auto x = exchange(hp->endpoint(), hello("2.0"));
  ASSERT_GE(x.after.size(), 9u);
  std::uint32_t len = get_u32(x.after);
  std::size_t pad = x.after[4];
  ASSERT_EQ(x.after.size(), len + 4u);
  for (std::size_t i = x.after.size() - pad; i < x.after.size(); ++i) EXPECT_EQ(x.after[i], 0u);
}

TEST(Persona, AccessLog)
{
  kexprint::testing::TempDir dir;
  auto cfg = PersonaConfig::defaults(PersonaKind::Honeypot);
  cfg.access_log_path = dir.file("access.jsonl");
  auto hp = Persona::start(cfg);
  exchange(hp->endpoint(), hello("2.0"));
  exchange(hp->endpoint(), hello("2.2"));
  hp->stop();
  auto log = hp->access_log();
  ASSERT_EQ(log.size(), 2u);
  std::multiset<std::string> decisions{log[0].decision, log[1].decision};
  EXPECT_EQ(decisions, (std::multiset<std::string>{decision::kKexInit, decision::kBadPacketLength}));

  std::ifstream in(cfg.access_log_path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("peer") && j.contains("client_banner") && j.contains("decision") &&
                j.contains("timestamp"));
    ++lines;
  }
  EXPECT_EQ(lines, 2);
}

TEST(Persona, StopSemantics)
{
  auto p = start(PersonaKind::Reference);
  auto ep = p->endpoint();
  auto t0 = net::Clock::now();
  p->stop();
  EXPECT_LT(net::Clock::now() - t0, 1s);
  p->stop();
  auto c = net::connect_tcp(ep, 500ms);
  EXPECT_EQ(c.status, net::ConnectStatus::Refused);
}

TEST(Persona, StopAbortsHeldSessions)
{
  auto p = start(PersonaKind::Reference);
  auto c = net::connect_tcp(p->endpoint(), 1s);
  ASSERT_EQ(c.status, net::ConnectStatus::Ok);
  c.socket.write_all(hello("2.0"), net::deadline_after(1s));
  std::this_thread::sleep_for(100ms);
  auto t0 = net::Clock::now();
  p->stop();
  EXPECT_LT(net::Clock::now() - t0, 1s);
}

TEST(Persona, BindFailure)
{
  auto p = start(PersonaKind::Reference);
  auto cfg = PersonaConfig::defaults(PersonaKind::Reference);
  cfg.listen = p->endpoint();
  try {
    Persona::start(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BindFailure);
  }
}
