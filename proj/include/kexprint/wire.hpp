// SPDX-License-Identifier: Apache-2.0
//
// Cleartext SSH transport constructs: the identification line, Binary Packet
// Protocol framing and the KEXINIT message. Everything here runs before
// NEWKEYS, so there is no MAC and the cipher block size is 8.

#pragma once

#include "kexprint/bytes.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kexprint::wire {

inline constexpr std::size_t kCleartextBlock = 8;
inline constexpr std::size_t kMinPaddingLength = 4;
inline constexpr std::size_t kMaxVersionLine = 255;
inline constexpr std::size_t kRfcMaxPacket = 32768;
inline constexpr std::size_t kTwistedMaxPacket = 1048576;

inline constexpr std::uint8_t kMsgDisconnect = 1;
inline constexpr std::uint8_t kMsgKexInit = 20;
inline constexpr std::uint8_t kMsgNewKeys = 21;

enum class PrefixCase : std::uint8_t { Upper, Lower };

/// One SSH identification line, `<prefix>-<protoversion>-<swversion>[ <comment>][\r\n]`.
///
/// `with_comment` controls the separator: when set, a space and the comment
/// follow the software version even if the comment is empty, which is how
/// "SSH-2.2-OpenSSH \r\n" is represented.
struct VersionString {
  PrefixCase prefix_case = PrefixCase::Upper;
  std::string protoversion = "2.0";
  std::string swversion;
  std::string comment;
  bool with_comment = false;
  bool crlf = true;

  bool operator==(const VersionString&) const = default;
};

Bytes encode_version_line(const VersionString& v);

/// Accepts a single line with or without its terminator. A bare "\n" is read
/// as crlf = true. Throws Errc::NotSsh or Errc::Malformed.
VersionString parse_version_line(ByteView line);

/// Numeric value of a protoversion such as "1.99"; nullopt when not a plain
/// decimal number.
std::optional<double> protoversion_value(const std::string& protoversion);

enum class PaddingMode : std::uint8_t { Random, Null, Wrong };

const char* padding_mode_name(PaddingMode m) noexcept;
PaddingMode padding_mode_from_name(std::string_view name);

/// padding_length encode_packet will use. Random/Null pick the smallest value
/// >= 4 that makes the frame a multiple of `block`; Wrong adds one to that.
std::size_t padding_length_for(std::size_t payload_size, std::size_t block, PaddingMode mode);

/// Total on-wire size of a framed payload. Throws Errc::PayloadTooLarge past 2^32-1.
std::size_t framed_size(std::size_t payload_size, std::size_t block, PaddingMode mode);

Bytes encode_packet(ByteView payload, std::size_t block, PaddingMode mode, std::uint64_t seed);

/// Throws Errc::BadPacketLength when packet_length + 4 exceeds max_packet.
void check_packet_length(std::uint32_t packet_length, std::size_t max_packet);

/// Decodes the packet at the front of `b`; trailing bytes are ignored.
/// Errors: TooShort, BadPacketLength, InconsistentFraming.
Bytes decode_packet(ByteView b, std::size_t max_packet);

using NameList = std::vector<std::string>;

struct KexInit {
  std::array<std::uint8_t, 16> cookie{};
  NameList kex_algorithms;
  NameList server_host_key_algorithms;
  NameList encryption_c2s;
  NameList encryption_s2c;
  NameList mac_c2s;
  NameList mac_s2c;
  NameList compression_c2s;
  NameList compression_s2c;
  NameList languages_c2s;
  NameList languages_s2c;
  bool first_kex_packet_follows = false;
  std::uint32_t reserved = 0;

  bool operator==(const KexInit&) const = default;
};

/// Printable ASCII, no comma, no whitespace, non-empty.
bool valid_algorithm_name(std::string_view name) noexcept;

Bytes encode_kexinit(const KexInit& k);

/// Errors: WrongMessageType, Truncated, InvalidName.
KexInit parse_kexinit(ByteView payload);

/// Fills the cookie from a seeded stream.
void seed_cookie(KexInit& k, std::uint64_t seed);

} // namespace kexprint::wire
