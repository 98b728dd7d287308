// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kexprint/net.hpp"

#include <atomic>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

namespace kexprint::net {

/// Accept loop with one thread per connection. Handlers must honour the
/// cancel flag (every Socket wait does) so stop() returns within about a
/// poll slice plus the handler's own cleanup.
class ConnectionServer {
public:
  using Handler = std::function<void(Socket& conn, const Endpoint& peer, std::size_t index, CancelFlag stop)>;

  /// Throws Errc::BindFailure.
  ConnectionServer(const Endpoint& listen, Handler handler);
  ~ConnectionServer();

  ConnectionServer(const ConnectionServer&) = delete;
  ConnectionServer& operator=(const ConnectionServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  bool running() const noexcept { return !stopping_.load(); }

  /// Idempotent.
  void stop();

private:
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  void accept_loop();
  void reap(bool all);

  Listener listener_;
  std::uint16_t port_;
  Handler handler_;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::list<Worker> workers_;
  std::thread acceptor_;
  std::once_flag stop_once_;
};

enum class LineEnd { Lf, Nul, Overflow, Closed, Timeout };

struct IdentLine {
  Bytes line; // includes the LF when end == Lf; never includes a NUL
  LineEnd end = LineEnd::Closed;
};

/// Reads a peer identification line: up to and including the first LF, or up
/// to (not including) the first NUL, or `max` bytes. Bytes read past the line
/// stay in `pending`, so a NUL terminator is still the next byte there.
IdentLine read_ident_line(Socket& s, Bytes& pending, std::size_t max, Deadline deadline, CancelFlag cancel);

/// Makes sure `pending` holds at least `n` bytes. Returns Ok or the failing status.
IoStatus fill_to(Socket& s, Bytes& pending, std::size_t n, Deadline deadline, CancelFlag cancel);

} // namespace kexprint::net
