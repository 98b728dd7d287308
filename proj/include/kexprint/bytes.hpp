// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kexprint {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

inline ByteView as_bytes(std::string_view s)
{
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline void append(Bytes& out, ByteView in) { out.insert(out.end(), in.begin(), in.end()); }

inline void put_u32(Bytes& out, std::uint32_t v)
{
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

// Caller guarantees at least 4 bytes.
inline std::uint32_t get_u32(ByteView b)
{
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

std::string hex_encode(ByteView b);

// Throws kexprint::Error(Errc::ParseError) on odd length or non-hex digits.
Bytes hex_decode(std::string_view hex);

bool contains(ByteView haystack, std::string_view needle);

// 64-bit FNV-1a; used for content ids and RNG stream derivation.
std::uint64_t fnv1a64(ByteView data, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Deterministic pseudorandom bytes (mt19937_64 output, big-endian per word).
void fill_seeded(std::span<std::uint8_t> out, std::uint64_t seed);

// splitmix64-style mix of two words; derives independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

// ISO-8601 UTC with millisecond precision, e.g. "2026-10-16T19:48:00.123Z".
std::string utc_now_iso8601();

} // namespace kexprint
