// SPDX-License-Identifier: Apache-2.0
//
// Exercises the shared library strictly through its C header.

#include "kexprint/kexprint.h"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "json.hpp"

namespace {

struct Dir {
  Dir()
  {
    std::string tmpl = (std::filesystem::temp_directory_path() / "kexprint-capi-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) std::abort();
    path = tmpl;
  }
  ~Dir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
  std::filesystem::path path;
};

std::string take(char* s)
{
  std::string out = s ? s : "";
  kp_string_free(s);
  return out;
}

// Two version lines (accepted and rejected by the reference) times the two
// built-in KEXINIT bodies.
std::string small_probe_config(const Dir& d)
{
  auto path = d.file("probes.json");
  std::ofstream(path) << R"({"protoversions": ["2.0", "1.0"], "swversions": ["OpenSSH"], "comments": [""],
                             "crlf_options": [true], "case_options": ["UPPER"]})";
  return path;
}

struct Fixture : ::testing::Test {
  void SetUp() override
  {
    ASSERT_EQ(kp_probe_set_generate(small_probe_config(dir).c_str(), nullptr, &probes), KP_OK) << kp_last_error();
    kp_persona_options ro{};
    ro.kind = "reference";
    ro.listen = "127.0.0.1:0";
    ASSERT_EQ(kp_persona_start(&ro, &ref), KP_OK) << kp_last_error();
    kp_persona_options ho{};
    ho.kind = "honeypot";
    ho.listen = "127.0.0.1:0";
    ASSERT_EQ(kp_persona_start(&ho, &hp), KP_OK) << kp_last_error();
  }
  void TearDown() override
  {
    kp_persona_free(ref);
    kp_persona_free(hp);
    kp_probe_set_free(probes);
  }

  kp_records* scan(const std::string& target)
  {
    const char* targets[] = {target.c_str()};
    kp_scan_options so{};
    so.targets = targets;
    so.target_count = 1;
    so.read_timeout_ms = 1500;
    kp_records* out = nullptr;
    EXPECT_EQ(kp_scan(probes, &so, &out), KP_OK) << kp_last_error();
    return out;
  }

  static std::string at(uint16_t port) { return "127.0.0.1:" + std::to_string(port); }

  Dir dir;
  kp_probe_set* probes = nullptr;
  kp_persona* ref = nullptr;
  kp_persona* hp = nullptr;
};

} // namespace

TEST(CApi, StatusNamesAndErrors)
{
  EXPECT_STREQ(kp_status_name(KP_OK), "OK");
  EXPECT_STREQ(kp_status_name(KP_ERR_BACKEND_UNAVAILABLE), "BACKEND_UNAVAILABLE");
  EXPECT_NE(std::string(kp_version()), "");

  kp_records* r = nullptr;
  EXPECT_EQ(kp_records_load("/nonexistent/x.jsonl", &r), KP_ERR_IO);
  EXPECT_EQ(r, nullptr);
  EXPECT_NE(std::string(kp_last_error()), "");
  EXPECT_EQ(kp_records_new(nullptr), KP_ERR_INVALID_ARGUMENT);
  kp_string_free(nullptr);
  kp_records_free(nullptr);
}

TEST(CApi, PrivateEndpoints)
{
  EXPECT_EQ(kp_endpoint_is_private("127.0.0.1:22"), 1);
  EXPECT_EQ(kp_endpoint_is_private("10.1.2.3:22"), 1);
  EXPECT_EQ(kp_endpoint_is_private("192.168.0.1:22"), 1);
  EXPECT_EQ(kp_endpoint_is_private("8.8.8.8:22"), 0);
  EXPECT_EQ(kp_endpoint_is_private("garbage"), 0);
}

TEST(CApi, DefaultProbeSet)
{
  kp_probe_set* set = nullptr;
  ASSERT_EQ(kp_probe_set_generate(nullptr, nullptr, &set), KP_OK);
  EXPECT_EQ(kp_probe_set_size(set), 384u);
  EXPECT_EQ(kp_probe_set_version_count(set), 192u);
  EXPECT_NE(kp_probe_set_id(set, 0), nullptr);
  EXPECT_EQ(kp_probe_set_id(set, 384), nullptr);

  Dir d;
  ASSERT_EQ(kp_probe_set_save(set, d.file("p.jsonl").c_str()), KP_OK);
  kp_probe_set* back = nullptr;
  ASSERT_EQ(kp_probe_set_load(d.file("p.jsonl").c_str(), &back), KP_OK);
  EXPECT_EQ(kp_probe_set_size(back), 384u);
  EXPECT_STREQ(kp_probe_set_id(back, 7), kp_probe_set_id(set, 7));
  kp_probe_set_free(back);
  kp_probe_set_free(set);
}

TEST_F(Fixture, ScanScoreClassify)
{
  ASSERT_EQ(kp_probe_set_size(probes), 4u);
  kp_records* r = scan(at(kp_persona_port(ref)));
  kp_records* h = scan(at(kp_persona_port(hp)));
  ASSERT_TRUE(r && h);
  EXPECT_EQ(kp_records_size(r), 4u);
  EXPECT_EQ(kp_records_count_containing(r, "Protocol major versions differ."), 2u);
  EXPECT_EQ(kp_records_count_containing(h, "bad packet length"), 2u);

  kp_db* db = nullptr;
  ASSERT_EQ(kp_db_create(probes, &db), KP_OK);
  ASSERT_EQ(kp_db_import(db, "openssh", r, 1), KP_OK) << kp_last_error();
  EXPECT_EQ(kp_db_class_count(db), 1u);

  kp_verdict v{};
  ASSERT_EQ(kp_classify(r, db, 0.90, &v), KP_OK);
  EXPECT_STREQ(v.class_name, "openssh");
  EXPECT_NEAR(v.score, 1.0, 1e-12);
  EXPECT_EQ(v.honeypot_flag, 0);
  ASSERT_EQ(kp_classify(h, db, 0.90, &v), KP_OK);
  EXPECT_EQ(v.honeypot_flag, 1);
  EXPECT_LT(v.score, 0.90);

  kp_records* all = nullptr;
  ASSERT_EQ(kp_records_new(&all), KP_OK);
  kp_records_merge(all, r);
  kp_records_merge(all, h);
  EXPECT_EQ(kp_records_target_count(all), 2u);

  char* csv = nullptr;
  ASSERT_EQ(kp_similarity_matrix(all, KP_FORMAT_CSV, &csv), KP_OK);
  EXPECT_EQ(take(csv).rfind("target,", 0), 0u);

  char* verdicts = nullptr;
  ASSERT_EQ(kp_classify_targets(all, db, 0.90, &verdicts), KP_OK);
  auto j = nlohmann::json::parse(take(verdicts));
  ASSERT_EQ(j.size(), 2u);

  char* text = nullptr;
  ASSERT_EQ(kp_report(all, db, 0.90, KP_FORMAT_TEXT, &text), KP_OK);
  auto report = take(text);
  EXPECT_NE(report.find("HONEYPOT"), std::string::npos);
  EXPECT_NE(report.find("genuine"), std::string::npos);

  // Persist and reload the db and the records.
  ASSERT_EQ(kp_db_save(db, dir.file("db.json").c_str()), KP_OK);
  kp_db* db2 = nullptr;
  ASSERT_EQ(kp_db_load(dir.file("db.json").c_str(), &db2), KP_OK);
  EXPECT_EQ(kp_db_class_count(db2), 1u);
  ASSERT_EQ(kp_records_append_to(all, dir.file("r.jsonl").c_str()), KP_OK);
  kp_records* loaded = nullptr;
  ASSERT_EQ(kp_records_load(dir.file("r.jsonl").c_str(), &loaded), KP_OK);
  EXPECT_EQ(kp_records_size(loaded), 8u);

  kp_records_free(loaded);
  kp_db_free(db2);
  kp_records_free(all);
  kp_db_free(db);
  kp_records_free(r);
  kp_records_free(h);
}

TEST_F(Fixture, ImportWrongProbeSetFails)
{
  kp_records* r = scan(at(kp_persona_port(ref)));
  kp_db* db = nullptr;
  std::ofstream(dir.file("one.json")) << R"({"protoversions": ["2.0"], "swversions": ["Other"], "comments": [""],
                                            "crlf_options": [true], "case_options": ["UPPER"]})";
  kp_probe_set* one = nullptr;
  ASSERT_EQ(kp_probe_set_generate(dir.file("one.json").c_str(), nullptr, &one), KP_OK);
  ASSERT_EQ(kp_db_create(one, &db), KP_OK);
  EXPECT_EQ(kp_db_import(db, "x", r, 1), KP_ERR_PROBE_SET_MISMATCH);
  kp_db_free(db);
  kp_probe_set_free(one);
  kp_records_free(r);
}

TEST_F(Fixture, ProxyThroughCApi)
{
  kp_proxy_options po{};
  auto backend = at(kp_persona_port(hp));
  po.backend = backend.c_str();
  po.listen = "127.0.0.1:0";
  po.idle_timeout_ms = 2000;
  kp_proxy* proxy = nullptr;
  ASSERT_EQ(kp_proxy_start(&po, &proxy), KP_OK) << kp_last_error();
  kp_records* p = scan(at(kp_proxy_port(proxy)));
  EXPECT_EQ(kp_records_count_containing(p, "bad packet length"), 0u);
  EXPECT_EQ(kp_records_count_containing(p, "Protocol major versions differ."), 2u);
  char* sessions = nullptr;
  ASSERT_EQ(kp_proxy_sessions(proxy, &sessions), KP_OK);
  EXPECT_TRUE(nlohmann::json::parse(take(sessions)).is_array());
  kp_proxy_stop(proxy);
  kp_proxy_free(proxy);
  kp_records_free(p);

  kp_proxy_options dead{};
  dead.backend = "127.0.0.1:1";
  kp_proxy* none = nullptr;
  EXPECT_EQ(kp_proxy_start(&dead, &none), KP_ERR_BACKEND_UNAVAILABLE);
  EXPECT_EQ(none, nullptr);
}

TEST_F(Fixture, PersonaAccessLog)
{
  kp_records* r = scan(at(kp_persona_port(ref)));
  char* log = nullptr;
  ASSERT_EQ(kp_persona_access_log(ref, &log), KP_OK);
  auto j = nlohmann::json::parse(take(log));
  EXPECT_EQ(j.size(), 4u);
  kp_persona_stop(ref);
  kp_persona_stop(ref);
  kp_records_free(r);
}

TEST(CApi, EmptyAndBadInputs)
{
  kp_records* empty = nullptr;
  ASSERT_EQ(kp_records_new(&empty), KP_OK);
  char* out = nullptr;
  EXPECT_EQ(kp_similarity_matrix(empty, KP_FORMAT_CSV, &out), KP_ERR_EMPTY_INPUT);
  kp_db* db = nullptr;
  ASSERT_EQ(kp_db_create(nullptr, &db), KP_OK);
  kp_verdict v{};
  EXPECT_NE(kp_classify(empty, db, 0.9, &v), KP_OK);
  EXPECT_EQ(kp_db_import(db, "", empty, 1), KP_ERR_INVALID_ARGUMENT);
  kp_db_free(db);
  kp_records_free(empty);
}
