// SPDX-License-Identifier: Apache-2.0
#include "kexprint/errors.hpp"
#include "kexprint/store.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace kexprint;
using namespace kexprint::store;

namespace {

ResponseRecord rec(std::string target, std::string probe, std::string banner, std::string error = {})
{
  ResponseRecord r;
  r.target = std::move(target);
  r.probe_id = std::move(probe);
  r.server_banner = to_bytes(banner);
  r.error_text = to_bytes(error);
  r.captured_at = "2026-10-16T00:00:00.000Z";
  return r;
}

std::vector<ResponseRecord> random_records(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::vector<ResponseRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    ResponseRecord r;
    r.target = "127.0.0.1:" + std::to_string(2000 + rng() % 5);
    r.probe_id = "p" + std::to_string(rng() % 100);
    r.server_banner.resize(rng() % 40);
    for (auto& b : r.server_banner) b = static_cast<std::uint8_t>(rng());
    for (std::size_t k = rng() % 3; k > 0; --k) {
      Bytes p(1 + rng() % 100);
      for (auto& b : p) b = static_cast<std::uint8_t>(rng());
      r.reply_payloads.push_back(p);
    }
    r.error_text = to_bytes(std::string("err\0\n", 5));
    r.disconnect_reason = rng() % 2 ? "" : "Protocol error";
    r.error_class = static_cast<ErrorClass>(rng() % 7);
    r.rtt_ms = static_cast<double>(rng() % 100000) / 7.0;
    r.captured_at = "2026-10-16T00:00:00.000Z";
    out.push_back(std::move(r));
  }
  return out;
}

std::size_t line_count(const std::string& path)
{
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

} // namespace

TEST(Records, AppendAndCount)
{
  kexprint::testing::TempDir dir;
  auto path = dir.file("r.jsonl");
  auto recs = random_records(3, 1);
  EXPECT_EQ(append_records(path, recs), 3u);
  EXPECT_EQ(line_count(path), 3u);
  EXPECT_EQ(append_records(path, {}), 0u);
  EXPECT_EQ(line_count(path), 3u);
  EXPECT_EQ(append_records(path, recs), 3u);
  EXPECT_EQ(load_records(path).size(), 6u);
}

TEST(Records, RoundTripRandomized)
{
  kexprint::testing::TempDir dir;
  auto path = dir.file("r.jsonl");
  auto recs = random_records(200, 2);
  append_records(path, recs);
  EXPECT_EQ(load_records(path), recs);
}

TEST(Records, JsonFieldNames)
{
  auto j = record_to_json(rec("t", "p", "SSH-2.0-X\r\n"));
  for (auto key : {"target", "probe_id", "server_banner", "reply_payloads", "error_text", "disconnect_reason",
                   "error_class", "rtt_ms", "captured_at"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["error_class"], "NONE");
  EXPECT_EQ(j["server_banner"], "5353482d322e302d580d0a");
}

TEST(Records, MalformedLineReported)
{
  kexprint::testing::TempDir dir;
  auto path = dir.file("r.jsonl");
  {
    std::ofstream out(path);
    out << record_to_json(rec("t", "p", "x")).dump() << "\n"
        << "{\"target\": 1}\n";
  }
  try {
    load_records(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Records, EmptyFileAndMissingFile)
{
  kexprint::testing::TempDir dir;
  { std::ofstream out(dir.file("empty.jsonl")); }
  EXPECT_TRUE(load_records(dir.file("empty.jsonl")).empty());
  try {
    load_records(dir.file("nope.jsonl"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoFailure);
  }
}

TEST(ProbeSetId, OrderIndependent)
{
  auto a = probe_set_id({"x", "y", "z"});
  EXPECT_EQ(a, probe_set_id({"z", "x", "y"}));
  EXPECT_NE(a, probe_set_id({"x", "y"}));
  EXPECT_EQ(a.size(), 16u);
}

TEST(Db, ImportScoresOneAgainstItself)
{
  std::vector<ResponseRecord> ref = {rec("r", "p1", "SSH-2.0-OpenSSH_8.8p1\r\n"),
                                     rec("r", "p2", "SSH-2.0-OpenSSH_8.8p1\r\n", "Protocol major versions differ.\n")};
  auto db = FingerprintDb::create({"p1", "p2"});
  import_reference(db, "openssh", ref);
  auto v = similarity::classify(ref, db.class_list());
  EXPECT_EQ(v.class_name, "openssh");
  EXPECT_NEAR(v.score, 1.0, 1e-12);
}

TEST(Db, ImportIsAdditive)
{
  auto db = FingerprintDb::create();
  std::vector<ResponseRecord> a = {rec("r", "p1", "AA")};
  std::vector<ResponseRecord> b = {rec("r", "p2", "BBBB")};
  import_reference(db, "c", a);
  import_reference(db, "c", b);
  ASSERT_EQ(db.classes.size(), 1u);
  const auto& c = db.classes.at("c");
  EXPECT_EQ(c.records.size(), 2u);
  EXPECT_DOUBLE_EQ(c.centroid.counts['A'], 1.0);
  EXPECT_DOUBLE_EQ(c.centroid.counts['B'], 2.0);
}

TEST(Db, ImportErrors)
{
  auto db = FingerprintDb::create({"p1"});
  std::vector<ResponseRecord> bad = {rec("r", "p9", "x")};
  try {
    import_reference(db, "c", bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ProbeSetMismatch);
  }
  std::vector<ResponseRecord> ok = {rec("r", "p1", "x")};
  EXPECT_THROW(import_reference(db, "", ok), Error);
  EXPECT_THROW(import_reference(db, "c", {}), Error);
  EXPECT_TRUE(db.classes.empty());
}

TEST(Db, SaveLoadRoundTrip)
{
  kexprint::testing::TempDir dir;
  auto recs = random_records(50, 3);
  std::vector<std::string> ids;
  for (const auto& r : recs) ids.push_back(r.probe_id);
  auto db = FingerprintDb::create(ids);
  import_reference(db, "genuine", std::span(recs).first(25));
  import_reference(db, "trap", std::span(recs).subspan(25), false);
  save_db(dir.file("db.json"), db);
  auto back = load_db(dir.file("db.json"));
  EXPECT_EQ(back.probe_set_id, db.probe_set_id);
  EXPECT_EQ(back.probe_ids, db.probe_ids);
  ASSERT_EQ(back.classes.size(), 2u);
  EXPECT_FALSE(back.classes.at("trap").reference);
  for (const auto& [name, cls] : db.classes) {
    const auto& other = back.classes.at(name);
    EXPECT_EQ(other.records, cls.records);
    for (std::size_t i = 0; i < 256; ++i)
      EXPECT_NEAR(other.centroid.counts[i], cls.centroid.counts[i], 1e-12 * std::max(1.0, cls.centroid.counts[i]));
  }
}

TEST(Db, TamperedCentroidRejected)
{
  auto db = FingerprintDb::create();
  std::vector<ResponseRecord> a = {rec("r", "p1", "AA")};
  import_reference(db, "c", a);
  auto j = db_to_json(db);
  EXPECT_NO_THROW(db_from_json(j));
  j["classes"][0]["centroid"][0x41] = 3.0;
  try {
    db_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
  }
}
