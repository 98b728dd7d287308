// SPDX-License-Identifier: Apache-2.0
//
// Helpers shared by the test binaries: temp directories and a minimal raw
// client for poking servers byte by byte.

#pragma once

#include "kexprint/bytes.hpp"
#include "kexprint/net.hpp"
#include "kexprint/wire.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>

namespace kexprint::testing {

class TempDir {
public:
  TempDir()
  {
    std::string tmpl = (std::filesystem::temp_directory_path() / "kexprint-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) std::abort();
    path_ = tmpl;
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

/// What a raw client saw during one exchange.
struct Exchange {
  Bytes banner;    // server identification line as received
  Bytes after;     // everything received after the banner
  net::IoStatus end = net::IoStatus::Ok;
};

/// Connects, reads the server banner line, sends `send`, then reads until the
/// peer closes or `quiet` passes without data.
inline Exchange exchange(const net::Endpoint& ep, ByteView send,
                         std::chrono::milliseconds quiet = std::chrono::milliseconds(400))
{
  Exchange x;
  auto c = net::connect_tcp(ep, std::chrono::milliseconds(2000));
  if (c.status != net::ConnectStatus::Ok) {
    x.end = net::IoStatus::Error;
    return x;
  }
  Bytes buf;
  auto deadline = net::deadline_after(std::chrono::milliseconds(2000));
  while (true) {
    auto lf = std::find(buf.begin(), buf.end(), '\n');
    if (lf != buf.end()) {
      x.banner.assign(buf.begin(), lf + 1);
      x.after.assign(lf + 1, buf.end());
      break;
    }
    if (c.socket.read_some(buf, 4096, deadline) != net::IoStatus::Ok) {
      x.banner = buf;
      x.end = net::IoStatus::Closed;
      return x;
    }
  }
  c.socket.write_all(send, net::deadline_after(std::chrono::milliseconds(2000)));
  while (true) {
    x.end = c.socket.read_some(x.after, 65536, net::deadline_after(quiet));
    if (x.end != net::IoStatus::Ok) break;
  }
  return x;
}

/// Identification line for a protoversion, uppercase prefix, CRLF.
inline Bytes client_line(const std::string& protoversion, const std::string& sw = "OpenSSH_9.0")
{
  wire::VersionString v;
  v.protoversion = protoversion;
  v.swversion = sw;
  return wire::encode_version_line(v);
}

/// A frame header claiming `packet_length` with some bytes after it.
inline Bytes claimed_frame(std::uint32_t packet_length)
{
  Bytes b;
  put_u32(b, packet_length);
  b.push_back(4);
  b.push_back(wire::kMsgKexInit);
  b.insert(b.end(), 58, 0);
  return b;
}

} // namespace kexprint::testing
