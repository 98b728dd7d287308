// SPDX-License-Identifier: Apache-2.0
#include "kexprint/net.hpp"
#include "kexprint/errors.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <memory>

namespace kexprint::net {

using namespace std::chrono_literals;

namespace {

constexpr auto kPollSlice = 50ms;

void set_nonblocking(int fd)
{
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

// Waits for `events` on fd in short slices so cancellation is noticed.
IoStatus wait_for(int fd, short events, Deadline deadline, CancelFlag cancel)
{
  while (true) {
    if (cancel && cancel->load()) return IoStatus::Cancelled;
    auto now = Clock::now();
    if (now >= deadline) return IoStatus::Timeout;
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
    auto slice = std::min<std::chrono::milliseconds>(left + 1ms, kPollSlice);
    pollfd p{fd, events, 0};
    int rc = ::poll(&p, 1, static_cast<int>(slice.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      return IoStatus::Error;
    }
    if (rc > 0) return IoStatus::Ok;
  }
}

std::string sockaddr_to_string(const sockaddr_storage& ss)
{
  char host[INET6_ADDRSTRLEN] = {};
  std::uint16_t port = 0;
  if (ss.ss_family == AF_INET) {
    const auto* a = reinterpret_cast<const sockaddr_in*>(&ss);
    ::inet_ntop(AF_INET, &a->sin_addr, host, sizeof host);
    port = ntohs(a->sin_port);
    return std::string(host) + ":" + std::to_string(port);
  }
  if (ss.ss_family == AF_INET6) {
    const auto* a = reinterpret_cast<const sockaddr_in6*>(&ss);
    ::inet_ntop(AF_INET6, &a->sin6_addr, host, sizeof host);
    port = ntohs(a->sin6_port);
    return "[" + std::string(host) + "]:" + std::to_string(port);
  }
  return "unknown";
}

struct AddrInfoDeleter {
  void operator()(addrinfo* p) const noexcept { ::freeaddrinfo(p); }
};
using AddrInfoPtr = std::unique_ptr<addrinfo, AddrInfoDeleter>;

AddrInfoPtr resolve(const std::string& host, std::uint16_t port, bool passive)
{
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  auto service = std::to_string(port);
  if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res) != 0)
    return nullptr;
  return AddrInfoPtr(res);
}

bool private_v4(std::uint32_t a)
{
  return (a >> 24) == 127 || (a >> 24) == 10 || (a >> 20) == 0xac1 || (a >> 16) == 0xc0a8;
}

} // namespace

std::string Endpoint::to_string() const
{
  if (host.find(':') != std::string::npos) return "[" + host + "]:" + std::to_string(port);
  return host + ":" + std::to_string(port);
}

Endpoint parse_endpoint(std::string_view text)
{
  std::string_view host, port;
  if (text.starts_with('[')) {
    auto close = text.find("]:");
    if (close == std::string_view::npos) throw Error(Errc::InvalidArgument, "bad endpoint: " + std::string(text));
    host = text.substr(1, close - 1);
    port = text.substr(close + 2);
  } else {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos) throw Error(Errc::InvalidArgument, "endpoint needs host:port: " + std::string(text));
    host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (host.empty() || ec != std::errc{} || ptr != port.data() + port.size() || value > 65535)
    throw Error(Errc::InvalidArgument, "bad endpoint: " + std::string(text));
  return {std::string(host), static_cast<std::uint16_t>(value)};
}

bool is_private_host(const std::string& host)
{
  auto res = resolve(host, 0, false);
  if (!res) return false;
  for (auto* ai = res.get(); ai; ai = ai->ai_next) {
    if (ai->ai_family == AF_INET) {
      auto a = ntohl(reinterpret_cast<const sockaddr_in*>(ai->ai_addr)->sin_addr.s_addr);
      if (!private_v4(a)) return false;
    } else if (ai->ai_family == AF_INET6) {
      const auto& a6 = reinterpret_cast<const sockaddr_in6*>(ai->ai_addr)->sin6_addr;
      bool loopback = IN6_IS_ADDR_LOOPBACK(&a6);
      bool unique_local = (a6.s6_addr[0] & 0xfe) == 0xfc;
      bool mapped_private = IN6_IS_ADDR_V4MAPPED(&a6) &&
                            private_v4((std::uint32_t{a6.s6_addr[12]} << 24) | (std::uint32_t{a6.s6_addr[13]} << 16) |
                                       (std::uint32_t{a6.s6_addr[14]} << 8) | a6.s6_addr[15]);
      if (!loopback && !unique_local && !mapped_private) return false;
    } else {
      return false;
    }
  }
  return true;
}

Socket& Socket::operator=(Socket&& o) noexcept
{
  if (this != &o) {
    close();
    fd_ = o.fd_;
    o.fd_ = -1;
  }
  return *this;
}

IoStatus Socket::read_some(Bytes& out, std::size_t max, Deadline deadline, CancelFlag cancel)
{
  if (!valid()) return IoStatus::Error;
  while (true) {
    auto st = wait_for(fd_, POLLIN, deadline, cancel);
    if (st != IoStatus::Ok) return st;
    std::size_t old = out.size();
    out.resize(old + max);
    ssize_t n = ::recv(fd_, out.data() + old, max, 0);
    if (n > 0) {
      out.resize(old + static_cast<std::size_t>(n));
      return IoStatus::Ok;
    }
    out.resize(old);
    if (n == 0) return IoStatus::Closed;
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
    if (errno == ECONNRESET) return IoStatus::Reset;
    return IoStatus::Error;
  }
}

IoStatus Socket::write_all(ByteView data, Deadline deadline, CancelFlag cancel)
{
  if (!valid()) return IoStatus::Error;
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::send(fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n > 0) {
      done += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
      auto st = wait_for(fd_, POLLOUT, deadline, cancel);
      if (st != IoStatus::Ok) return st;
      continue;
    }
    if (errno == ECONNRESET || errno == EPIPE) return IoStatus::Reset;
    return IoStatus::Error;
  }
  return IoStatus::Ok;
}

void Socket::shutdown_write() noexcept
{
  if (valid()) ::shutdown(fd_, SHUT_WR);
}

void Socket::close() noexcept
{
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::drain(std::size_t limit, std::chrono::milliseconds quiet) noexcept
{
  std::size_t swallowed = 0;
  Bytes scratch;
  while (swallowed < limit) {
    scratch.clear();
    auto st = read_some(scratch, 16384, deadline_after(quiet));
    if (st != IoStatus::Ok) return;
    swallowed += scratch.size();
  }
}

std::string Socket::peer() const
{
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (!valid() || ::getpeername(fd_, reinterpret_cast<sockaddr*>(&ss), &len) != 0) return "unknown";
  return sockaddr_to_string(ss);
}

ConnectResult connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout)
{
  ConnectResult result;
  auto res = resolve(ep.host, ep.port, false);
  if (!res) {
    result.status = ConnectStatus::Unresolved;
    result.error = "cannot resolve " + ep.host;
    return result;
  }
  auto deadline = deadline_after(timeout);
  for (auto* ai = res.get(); ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) continue;
    set_nonblocking(s.fd());
    int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    int rc = ::connect(s.fd(), ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno != EINPROGRESS) {
      result.status = errno == ECONNREFUSED ? ConnectStatus::Refused : ConnectStatus::Error;
      result.error = std::strerror(errno);
      continue;
    }
    if (rc != 0) {
      auto st = wait_for(s.fd(), POLLOUT, deadline, nullptr);
      if (st == IoStatus::Timeout) {
        result.status = ConnectStatus::Timeout;
        result.error = "connect timed out";
        return result;
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) {
        result.status = err == ECONNREFUSED ? ConnectStatus::Refused : ConnectStatus::Error;
        result.error = std::strerror(err);
        continue;
      }
    }
    result.socket = std::move(s);
    result.status = ConnectStatus::Ok;
    result.error.clear();
    return result;
  }
  return result;
}

Listener::Listener(const Endpoint& ep)
{
  auto res = resolve(ep.host, ep.port, true);
  if (!res) throw Error(Errc::BindFailure, "cannot resolve listen address " + ep.host);
  std::string last_error = "no usable address";
  for (auto* ai = res.get(); ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) continue;
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(s.fd(), 128) != 0) {
      last_error = std::strerror(errno);
      continue;
    }
    set_nonblocking(s.fd());
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&ss), &len);
    port_ = ss.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port)
                                     : ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
    sock_ = std::move(s);
    return;
  }
  throw Error(Errc::BindFailure, "cannot bind " + ep.to_string() + ": " + last_error);
}

Socket Listener::accept(std::chrono::milliseconds wait, Endpoint* peer)
{
  if (!sock_.valid()) return {};
  if (wait_for(sock_.fd(), POLLIN, deadline_after(wait), nullptr) != IoStatus::Ok) return {};
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  int fd = ::accept4(sock_.fd(), reinterpret_cast<sockaddr*>(&ss), &len, SOCK_NONBLOCK | SOCK_CLOEXEC);
  if (fd < 0) return {};
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  if (peer) {
    auto text = sockaddr_to_string(ss);
    try {
      *peer = parse_endpoint(text);
    } catch (const Error&) {
      *peer = {};
    }
  }
  return Socket(fd);
}

} // namespace kexprint::net
