// SPDX-License-Identifier: Apache-2.0
#include "kexprint/wire.hpp"
#include "kexprint/errors.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

namespace kexprint::wire {

namespace {

bool has_line_breaking_byte(std::string_view s)
{
  return s.find_first_of(std::string_view("\r\n\0", 3)) != std::string_view::npos;
}

void require_field(bool ok, const char* what)
{
  if (!ok) throw Error(Errc::InvalidField, what);
}

} // namespace

Bytes encode_version_line(const VersionString& v)
{
  require_field(!has_line_breaking_byte(v.protoversion), "protoversion contains CR, LF or NUL");
  require_field(!has_line_breaking_byte(v.swversion), "swversion contains CR, LF or NUL");
  require_field(!has_line_breaking_byte(v.comment), "comment contains CR, LF or NUL");
  require_field(!v.protoversion.empty(), "protoversion is empty");
  require_field(v.protoversion.find_first_of("- ") == std::string::npos,
                "protoversion contains '-' or space");
  require_field(v.swversion.find(' ') == std::string::npos, "swversion contains a space");

  std::string line = v.prefix_case == PrefixCase::Upper ? "SSH-" : "ssh-";
  line += v.protoversion;
  line += '-';
  line += v.swversion;
  if (v.with_comment || !v.comment.empty()) {
    line += ' ';
    line += v.comment;
  }
  if (v.crlf) line += "\r\n";
  return to_bytes(line);
}

VersionString parse_version_line(ByteView line)
{
  std::string_view s(reinterpret_cast<const char*>(line.data()), line.size());
  if (s.size() > kMaxVersionLine)
    throw Error(Errc::Malformed, "identification line longer than 255 bytes");

  VersionString v;
  if (s.starts_with("SSH-")) {
    v.prefix_case = PrefixCase::Upper;
  } else if (s.starts_with("ssh-")) {
    v.prefix_case = PrefixCase::Lower;
  } else {
    throw Error(Errc::NotSsh, "line does not begin with SSH-");
  }

  if (s.ends_with("\r\n")) {
    s.remove_suffix(2);
    v.crlf = true;
  } else if (s.ends_with('\n')) {
    s.remove_suffix(1);
    v.crlf = true;
  } else {
    v.crlf = false;
  }
  if (has_line_breaking_byte(s))
    throw Error(Errc::Malformed, "identification line contains CR, LF or NUL");

  s.remove_prefix(4);
  auto dash = s.find('-');
  if (dash == std::string_view::npos || dash == 0)
    throw Error(Errc::Malformed, "missing protoversion-swversion separator");
  v.protoversion = std::string(s.substr(0, dash));
  s.remove_prefix(dash + 1);

  auto sp = s.find(' ');
  if (sp == std::string_view::npos) {
    v.swversion = std::string(s);
  } else {
    v.swversion = std::string(s.substr(0, sp));
    v.comment = std::string(s.substr(sp + 1));
    v.with_comment = true;
  }
  return v;
}

std::optional<double> protoversion_value(const std::string& protoversion)
{
  const auto& s = protoversion;
  auto dot = s.find('.');
  auto digits = [](std::string_view part) {
    return !part.empty() && std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (dot == std::string::npos) {
    if (!digits(s)) return std::nullopt;
  } else if (!digits(std::string_view(s).substr(0, dot)) || !digits(std::string_view(s).substr(dot + 1))) {
    return std::nullopt;
  }
  double value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

const char* padding_mode_name(PaddingMode m) noexcept
{
  switch (m) {
    case PaddingMode::Random: return "RANDOM";
    case PaddingMode::Null: return "NULL";
    case PaddingMode::Wrong: return "WRONG";
  }
  return "RANDOM";
}

PaddingMode padding_mode_from_name(std::string_view name)
{
  if (name == "RANDOM") return PaddingMode::Random;
  if (name == "NULL") return PaddingMode::Null;
  if (name == "WRONG") return PaddingMode::Wrong;
  throw Error(Errc::InvalidArgument, "unknown padding mode: " + std::string(name));
}

std::size_t padding_length_for(std::size_t payload_size, std::size_t block, PaddingMode mode)
{
  if (block < kCleartextBlock)
    throw Error(Errc::InvalidArgument, "block size must be at least 8");
  if (payload_size == 0)
    throw Error(Errc::InvalidArgument, "payload must not be empty");
  std::size_t header = (5 + payload_size % block) % block;
  std::size_t padding = (block - header) % block;
  while (padding < kMinPaddingLength) padding += block;
  if (mode == PaddingMode::Wrong) ++padding;
  if (padding > 255)
    throw Error(Errc::InvalidArgument, "block size too large for a one-byte padding length");
  return padding;
}

std::size_t framed_size(std::size_t payload_size, std::size_t block, PaddingMode mode)
{
  std::size_t padding = padding_length_for(payload_size, block, mode);
  constexpr std::uint64_t limit = std::numeric_limits<std::uint32_t>::max();
  if (payload_size > limit || 5 + std::uint64_t{payload_size} + padding > limit)
    throw Error(Errc::PayloadTooLarge, "framed packet exceeds 2^32-1 bytes");
  return 5 + payload_size + padding;
}

Bytes encode_packet(ByteView payload, std::size_t block, PaddingMode mode, std::uint64_t seed)
{
  std::size_t total = framed_size(payload.size(), block, mode);
  std::size_t padding = padding_length_for(payload.size(), block, mode);

  Bytes out;
  out.reserve(total);
  put_u32(out, static_cast<std::uint32_t>(total - 4));
  out.push_back(static_cast<std::uint8_t>(padding));
  append(out, payload);
  std::size_t pad_at = out.size();
  out.resize(total, 0);
  if (mode != PaddingMode::Null)
    fill_seeded(std::span(out).subspan(pad_at), seed);
  return out;
}

void check_packet_length(std::uint32_t packet_length, std::size_t max_packet)
{
  if (std::uint64_t{packet_length} + 4 > max_packet)
    throw Error(Errc::BadPacketLength, "bad packet length " + std::to_string(packet_length));
}

Bytes decode_packet(ByteView b, std::size_t max_packet)
{
  if (b.size() < 9)
    throw Error(Errc::TooShort, "packet shorter than 9 bytes");
  std::uint32_t packet_length = get_u32(b);
  check_packet_length(packet_length, max_packet);
  std::size_t padding = b[4];
  if (padding + 1 > packet_length)
    throw Error(Errc::InconsistentFraming, "padding length exceeds packet length");
  if (b.size() < std::size_t{packet_length} + 4)
    throw Error(Errc::TooShort, "packet truncated");
  std::size_t payload_size = packet_length - padding - 1;
  return Bytes(b.begin() + 5, b.begin() + 5 + static_cast<std::ptrdiff_t>(payload_size));
}

// KEXINIT

bool valid_algorithm_name(std::string_view name) noexcept
{
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) { return c > 0x20 && c < 0x7f && c != ','; });
}

namespace {

void put_name_list(Bytes& out, const NameList& names)
{
  std::string joined;
  for (const auto& n : names) {
    if (!valid_algorithm_name(n))
      throw Error(Errc::InvalidName, "invalid algorithm name '" + n + "'");
    if (!joined.empty()) joined += ',';
    joined += n;
  }
  put_u32(out, static_cast<std::uint32_t>(joined.size()));
  append(out, as_bytes(joined));
}

class Reader {
public:
  explicit Reader(ByteView b) : b_(b) {}

  std::uint8_t u8()
  {
    need(1);
    return b_[pos_++];
  }

  std::uint32_t u32()
  {
    need(4);
    auto v = get_u32(b_.subspan(pos_));
    pos_ += 4;
    return v;
  }

  ByteView take(std::size_t n)
  {
    need(n);
    auto v = b_.subspan(pos_, n);
    pos_ += n;
    return v;
  }

  NameList name_list()
  {
    auto raw = take(u32());
    NameList names;
    std::string_view s(reinterpret_cast<const char*>(raw.data()), raw.size());
    if (s.empty()) return names;
    std::size_t start = 0;
    while (true) {
      auto comma = s.find(',', start);
      auto name = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (!valid_algorithm_name(name))
        throw Error(Errc::InvalidName, "invalid algorithm name in name-list");
      names.emplace_back(name);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return names;
  }

private:
  void need(std::size_t n) const
  {
    if (b_.size() - pos_ < n) throw Error(Errc::Truncated, "KEXINIT truncated");
  }

  ByteView b_;
  std::size_t pos_ = 0;
};

} // namespace

Bytes encode_kexinit(const KexInit& k)
{
  Bytes out;
  out.reserve(128);
  out.push_back(kMsgKexInit);
  append(out, k.cookie);
  for (const NameList* list : {&k.kex_algorithms, &k.server_host_key_algorithms, &k.encryption_c2s,
                               &k.encryption_s2c, &k.mac_c2s, &k.mac_s2c, &k.compression_c2s,
                               &k.compression_s2c, &k.languages_c2s, &k.languages_s2c})
    put_name_list(out, *list);
  out.push_back(k.first_kex_packet_follows ? 1 : 0);
  put_u32(out, k.reserved);
  return out;
}

KexInit parse_kexinit(ByteView payload)
{
  if (payload.empty()) throw Error(Errc::Truncated, "empty KEXINIT payload");
  if (payload[0] != kMsgKexInit)
    throw Error(Errc::WrongMessageType, "expected message type 20, got " + std::to_string(payload[0]));
  Reader r(payload.subspan(1));
  KexInit k;
  auto cookie = r.take(16);
  std::copy(cookie.begin(), cookie.end(), k.cookie.begin());
  for (NameList* list : {&k.kex_algorithms, &k.server_host_key_algorithms, &k.encryption_c2s,
                         &k.encryption_s2c, &k.mac_c2s, &k.mac_s2c, &k.compression_c2s,
                         &k.compression_s2c, &k.languages_c2s, &k.languages_s2c})
    *list = r.name_list();
  k.first_kex_packet_follows = r.u8() != 0;
  k.reserved = r.u32();
  return k;
}

void seed_cookie(KexInit& k, std::uint64_t seed) { fill_seeded(k.cookie, seed); }

} // namespace kexprint::wire
