// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kexprint/wire.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kexprint::probes {

inline constexpr std::uint64_t kDefaultSeed = 0x6b65787072696e74ULL; // "kexprint"

/// Which KEXINIT bodies a corpus pairs with every version string.
enum class KexinitSource {
  BestProbes, // the legacy and modern best probes
  Grid,       // the full kex x hostkey x enc x mac x comp x padding product
};

struct ProbeConfig {
  std::vector<std::string> protoversions{"0.0", "0.9", "1.0",  "1.3", "1.5", "1.9",
                                         "1.99", "2.0", "2.2", "2.99", "3.0", "3.2"};
  std::vector<std::string> swversions{"OpenSSH", ""};
  std::vector<std::string> comments{"FreeBSD", ""};
  std::vector<bool> crlf_options{true, false};
  std::vector<wire::PrefixCase> case_options{wire::PrefixCase::Upper, wire::PrefixCase::Lower};

  std::vector<std::string> kex;
  std::vector<std::string> hostkey;
  std::vector<std::string> enc;
  std::vector<std::string> mac;
  std::vector<std::string> comp;
  std::vector<wire::PaddingMode> padding_modes{wire::PaddingMode::Random};

  KexinitSource kexinit_source = KexinitSource::BestProbes;
  std::uint64_t seed = kDefaultSeed;

  ProbeConfig();

  /// Throws Errc::InvalidArgument when any axis is empty.
  void validate() const;
};

/// Keys mirror the field names; unknown keys are rejected.
ProbeConfig probe_config_from_json(const nlohmann::json& j);
ProbeConfig load_probe_config(const std::string& path);

/// A KEXINIT message together with the framing it is sent with.
struct KexBody {
  wire::KexInit kexinit;
  wire::PaddingMode padding = wire::PaddingMode::Random;
};

struct Probe {
  std::string id;
  wire::VersionString version;
  wire::KexInit kexinit;
  wire::PaddingMode padding = wire::PaddingMode::Random;

  bool operator==(const Probe&) const = default;
};

/// 16 hex digits over the serialized version line, the KEXINIT body and the padding mode.
std::string probe_id(const wire::VersionString& v, const wire::KexInit& k, wire::PaddingMode padding);

Probe make_probe(wire::VersionString v, wire::KexInit k, wire::PaddingMode padding);

/// Cartesian product of the five version axes, deduplicated and sorted by
/// serialized bytes. Every entry carries the comment separator.
std::vector<wire::VersionString> generate_version_strings(const ProbeConfig& cfg);

/// One body per kex x hostkey x enc x mac x comp x padding combination. Each
/// algorithm is mirrored into both directions; language lists stay empty.
std::vector<KexBody> generate_kexinit_probes(const ProbeConfig& cfg);

enum class BestProbeVariant { Legacy, Modern };

Probe best_probe(BestProbeVariant variant);

/// Version strings x KEXINIT bodies, per cfg.kexinit_source.
std::vector<Probe> build_corpus(const ProbeConfig& cfg);

nlohmann::json probe_to_json(const Probe& p);
Probe probe_from_json(const nlohmann::json& j);

void save_probes(const std::string& path, const std::vector<Probe>& probes);
std::vector<Probe> load_probes(const std::string& path);

} // namespace kexprint::probes
