// SPDX-License-Identifier: Apache-2.0
#include "kexprint/bytes.hpp"
#include "kexprint/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>

namespace kexprint {

const char* errc_name(Errc c) noexcept
{
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidField: return "InvalidField";
    case Errc::NotSsh: return "NotSsh";
    case Errc::Malformed: return "Malformed";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::BadPacketLength: return "BadPacketLength";
    case Errc::TooShort: return "TooShort";
    case Errc::InconsistentFraming: return "InconsistentFraming";
    case Errc::InvalidName: return "InvalidName";
    case Errc::Truncated: return "Truncated";
    case Errc::WrongMessageType: return "WrongMessageType";
    case Errc::NoSharedProbes: return "NoSharedProbes";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::BindFailure: return "BindFailure";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::IoFailure: return "IoFailure";
    case Errc::ParseError: return "ParseError";
    case Errc::ProbeSetMismatch: return "ProbeSetMismatch";
  }
  return "Unknown";
}

std::string hex_encode(ByteView b)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (auto v : b) {
    out.push_back(digits[v >> 4]);
    out.push_back(digits[v & 0x0f]);
  }
  return out;
}

namespace {
int nibble(char c)
{
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
} // namespace

Bytes hex_decode(std::string_view hex)
{
  if (hex.size() % 2 != 0)
    throw Error(Errc::ParseError, "hex string has odd length");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0)
      throw Error(Errc::ParseError, "invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

bool contains(ByteView haystack, std::string_view needle)
{
  if (needle.empty()) return true;
  auto n = as_bytes(needle);
  return std::search(haystack.begin(), haystack.end(), n.begin(), n.end()) != haystack.end();
}

std::uint64_t fnv1a64(ByteView data, std::uint64_t basis)
{
  std::uint64_t h = basis;
  for (auto b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void fill_seeded(std::span<std::uint8_t> out, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = gen();
    for (int shift = 56; shift >= 0 && i < out.size(); shift -= 8)
      out[i++] = static_cast<std::uint8_t>(word >> shift);
  }
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept
{
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string utc_now_iso8601()
{
  using namespace std::chrono;
  auto now = system_clock::now();
  auto secs = time_point_cast<seconds>(now);
  auto ms = duration_cast<milliseconds>(now - secs).count();
  std::time_t t = system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

} // namespace kexprint
