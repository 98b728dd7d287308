// SPDX-License-Identifier: Apache-2.0
//
// Thin POSIX TCP layer. Sockets are non-blocking; every wait is bounded by a
// deadline and polls an optional cancel flag so servers can stop promptly.

#pragma once

#include "kexprint/bytes.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>

namespace kexprint::net {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;
using CancelFlag = const std::atomic<bool>*;

inline Deadline deadline_after(std::chrono::milliseconds ms) { return Clock::now() + ms; }

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const;
  bool operator==(const Endpoint&) const = default;
};

/// "host:port" or "[v6]:port". Throws Errc::InvalidArgument.
Endpoint parse_endpoint(std::string_view text);

/// True when every address `host` resolves to is loopback or RFC1918
/// (or IPv6 loopback / unique-local). Unresolvable hosts are not private.
bool is_private_host(const std::string& host);

enum class IoStatus { Ok, Closed, Timeout, Reset, Error, Cancelled };

class Socket {
public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }

  /// Appends up to `max` bytes once data is available.
  IoStatus read_some(Bytes& out, std::size_t max, Deadline deadline, CancelFlag cancel = nullptr);
  IoStatus write_all(ByteView data, Deadline deadline, CancelFlag cancel = nullptr);

  void shutdown_write() noexcept;
  void close() noexcept;

  /// Reads and discards input until the peer goes quiet for `quiet`, closes,
  /// or `limit` bytes have been swallowed. Lets a close end with FIN rather
  /// than RST when the peer is still sending.
  void drain(std::size_t limit, std::chrono::milliseconds quiet) noexcept;

  std::string peer() const;

private:
  int fd_ = -1;
};

enum class ConnectStatus { Ok, Refused, Timeout, Unresolved, Error };

struct ConnectResult {
  Socket socket;
  ConnectStatus status = ConnectStatus::Error;
  std::string error;
};

ConnectResult connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout);

class Listener {
public:
  /// Binds and listens; port 0 picks an ephemeral port. Throws Errc::BindFailure.
  explicit Listener(const Endpoint& ep);

  std::uint16_t port() const noexcept { return port_; }

  /// Waits up to `wait` for a connection; returns an invalid Socket on timeout.
  Socket accept(std::chrono::milliseconds wait, Endpoint* peer = nullptr);

  void close() noexcept { sock_.close(); }

private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

} // namespace kexprint::net
