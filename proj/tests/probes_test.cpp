// SPDX-License-Identifier: Apache-2.0
#include "kexprint/errors.hpp"
#include "kexprint/probes.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <tuple>

using namespace kexprint;
using namespace kexprint::probes;
using wire::PaddingMode;

TEST(VersionStrings, DefaultIs192Distinct)
{
  auto v = generate_version_strings(ProbeConfig{});
  ASSERT_EQ(v.size(), 192u);
  std::set<Bytes> lines;
  for (const auto& s : v) lines.insert(wire::encode_version_line(s));
  EXPECT_EQ(lines.size(), 192u);
  // Sorted by serialized bytes.
  for (std::size_t i = 1; i < v.size(); ++i)
    EXPECT_LT(wire::encode_version_line(v[i - 1]), wire::encode_version_line(v[i]));
}

TEST(VersionStrings, AxisArithmetic)
{
  ProbeConfig one;
  one.protoversions = {"2.0"};
  one.swversions = {"OpenSSH"};
  one.comments = {""};
  one.crlf_options = {true};
  one.case_options = {wire::PrefixCase::Upper};
  EXPECT_EQ(generate_version_strings(one).size(), 1u);

  ProbeConfig no_crlf;
  no_crlf.crlf_options = {true};
  EXPECT_EQ(generate_version_strings(no_crlf).size(), 96u);

  ProbeConfig dup;
  dup.protoversions = {"2.0", "2.0"};
  EXPECT_EQ(generate_version_strings(dup).size(), 16u);
}

TEST(VersionStrings, ContainsTrailingSpaceForm)
{
  bool found = false;
  for (const auto& v : generate_version_strings(ProbeConfig{}))
    found |= wire::encode_version_line(v) == to_bytes("SSH-2.2-OpenSSH \r\n");
  EXPECT_TRUE(found);
}

TEST(KexinitProbes, GridCountMatchesCountingOracle)
{
  ProbeConfig cfg;
  ASSERT_EQ(cfg.kex.size(), 16u);
  ASSERT_EQ(cfg.hostkey.size(), 2u);
  ASSERT_EQ(cfg.enc.size(), 15u);
  ASSERT_EQ(cfg.mac.size(), 5u);
  ASSERT_EQ(cfg.comp.size(), 3u);

  // Oracle: enumerate the distinct combinations explicitly.
  std::set<std::tuple<std::string, std::string, std::string, std::string, std::string>> combos;
  for (const auto& a : cfg.kex)
    for (const auto& b : cfg.hostkey)
      for (const auto& c : cfg.enc)
        for (const auto& d : cfg.mac)
          for (const auto& e : cfg.comp) combos.emplace(a, b, c, d, e);
  const std::size_t oracle = combos.size();
  EXPECT_EQ(oracle, 7200u); // frozen from the oracle

  auto bodies = generate_kexinit_probes(cfg);
  EXPECT_EQ(bodies.size(), oracle);

  std::set<std::tuple<std::string, std::string, std::string, std::string, std::string>> seen;
  for (const auto& b : bodies) {
    const auto& k = b.kexinit;
    ASSERT_EQ(k.kex_algorithms.size(), 1u);
    EXPECT_EQ(k.encryption_c2s, k.encryption_s2c);
    EXPECT_EQ(k.mac_c2s, k.mac_s2c);
    EXPECT_EQ(k.compression_c2s, k.compression_s2c);
    EXPECT_TRUE(k.languages_c2s.empty() && k.languages_s2c.empty());
    seen.emplace(k.kex_algorithms[0], k.server_host_key_algorithms[0], k.encryption_c2s[0], k.mac_c2s[0],
                 k.compression_c2s[0]);
  }
  EXPECT_EQ(seen, combos);
}

TEST(KexinitProbes, PaddingModesMultiply)
{
  ProbeConfig cfg;
  cfg.kex = {"curve25519-sha256"};
  cfg.hostkey = {"ssh-ed25519"};
  cfg.enc = {"aes128-ctr"};
  cfg.mac = {"hmac-sha1"};
  cfg.comp = {"none"};
  EXPECT_EQ(generate_kexinit_probes(cfg).size(), 1u);
  cfg.padding_modes = {PaddingMode::Random, PaddingMode::Null};
  EXPECT_EQ(generate_kexinit_probes(cfg).size(), 2u);
}

TEST(KexinitProbes, DeterministicGivenSeed)
{
  ProbeConfig cfg;
  auto a = generate_kexinit_probes(cfg);
  auto b = generate_kexinit_probes(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].kexinit, b[i].kexinit);
  cfg.seed ^= 1;
  EXPECT_NE(generate_kexinit_probes(cfg)[0].kexinit.cookie, a[0].kexinit.cookie);
}

TEST(BestProbe, Legacy)
{
  auto p = best_probe(BestProbeVariant::Legacy);
  EXPECT_EQ(to_string(wire::encode_version_line(p.version)), "SSH-2.2-OpenSSH \r\n");
  EXPECT_EQ(p.kexinit.kex_algorithms, wire::NameList{"ecdh-sha2-nistp521"});
  EXPECT_EQ(p.kexinit.server_host_key_algorithms, wire::NameList{"ssh-dss"});
  EXPECT_EQ(p.kexinit.encryption_c2s, wire::NameList{"blowfish-cbc"});
  EXPECT_EQ(p.kexinit.mac_c2s, wire::NameList{"hmac-sha1"});
  EXPECT_EQ(p.kexinit.compression_c2s, wire::NameList{"zlib@openssh.com"});
  EXPECT_EQ(p.padding, PaddingMode::Wrong);
  EXPECT_EQ(best_probe(BestProbeVariant::Legacy).id, p.id);

  auto body = wire::encode_kexinit(p.kexinit);
  EXPECT_TRUE(contains(body, "ecdh-sha2-nistp521"));
  EXPECT_TRUE(contains(body, "blowfish-cbc"));
}

TEST(BestProbe, Modern)
{
  auto p = best_probe(BestProbeVariant::Modern);
  EXPECT_EQ(p.kexinit.server_host_key_algorithms, wire::NameList{"ssh-ed25519"});
  EXPECT_EQ(p.kexinit.encryption_c2s, wire::NameList{"chacha20-poly1305@openssh.com"});
  EXPECT_NE(p.padding, PaddingMode::Wrong);
  EXPECT_NE(p.id, best_probe(BestProbeVariant::Legacy).id);
}

TEST(Corpus, DefaultIsVersionsTimesBestProbes)
{
  auto corpus = build_corpus(ProbeConfig{});
  EXPECT_EQ(corpus.size(), 384u);
  std::set<std::string> ids;
  for (const auto& p : corpus) {
    ids.insert(p.id);
    EXPECT_EQ(p.id, probe_id(p.version, p.kexinit, p.padding));
    EXPECT_NO_THROW(wire::encode_kexinit(p.kexinit));
  }
  EXPECT_EQ(ids.size(), corpus.size());
  EXPECT_EQ(build_corpus(ProbeConfig{}), corpus);
}

TEST(Corpus, ValidateRejectsEmptyAxis)
{
  ProbeConfig cfg;
  cfg.swversions.clear();
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_THROW(build_corpus(cfg), Error);
}

TEST(Corpus, JsonlRoundTrip)
{
  kexprint::testing::TempDir dir;
  auto corpus = build_corpus(ProbeConfig{});
  save_probes(dir.file("p.jsonl"), corpus);
  EXPECT_EQ(load_probes(dir.file("p.jsonl")), corpus);
}

TEST(Corpus, LoadReportsLine)
{
  kexprint::testing::TempDir dir;
  auto corpus = build_corpus(ProbeConfig{});
  {
    std::ofstream out(dir.file("p.jsonl"));
    out << probe_to_json(corpus[0]).dump() << "\n{not json\n";
  }
  try {
    load_probes(dir.file("p.jsonl"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Corpus, TamperedIdRejected)
{
  auto j = probe_to_json(best_probe(BestProbeVariant::Modern));
  j["padding"] = "NULL";
  EXPECT_THROW(probe_from_json(j), Error);
}

TEST(Config, FromJson)
{
  auto cfg = probe_config_from_json(nlohmann::json{
    {"protoversions", {"1.0", "2.0"}}, {"case_options", {"UPPER"}}, {"kexinit_source", "grid"}, {"seed", 9},
    {"kex", {"curve25519-sha256"}}, {"hostkey", {"ssh-ed25519"}}, {"enc", {"aes128-ctr"}}, {"mac", {"hmac-sha1"}},
    {"comp", {"none"}}, {"padding_modes", {"RANDOM", "NULL"}}});
  EXPECT_EQ(cfg.protoversions.size(), 2u);
  EXPECT_EQ(cfg.kexinit_source, KexinitSource::Grid);
  EXPECT_EQ(generate_version_strings(cfg).size(), 2u * 2 * 2 * 2);
  EXPECT_EQ(build_corpus(cfg).size(), 16u * 2);
  EXPECT_THROW(probe_config_from_json(nlohmann::json{{"nonsense", 1}}), Error);
}
