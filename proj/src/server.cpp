// SPDX-License-Identifier: Apache-2.0
#include "kexprint/server.hpp"

#include <algorithm>

namespace kexprint::net {

using namespace std::chrono_literals;

ConnectionServer::ConnectionServer(const Endpoint& listen, Handler handler)
  : listener_(listen), port_(listener_.port()), handler_(std::move(handler))
{
  acceptor_ = std::thread([this] { accept_loop(); });
}

ConnectionServer::~ConnectionServer() { stop(); }

void ConnectionServer::stop()
{
  std::call_once(stop_once_, [this] {
    stopping_.store(true);
    if (acceptor_.joinable()) acceptor_.join();
    listener_.close();
    reap(true);
  });
}

void ConnectionServer::accept_loop()
{
  std::size_t index = 0;
  while (!stopping_.load()) {
    Endpoint peer;
    Socket conn = listener_.accept(50ms, &peer);
    reap(false);
    if (!conn.valid()) continue;
    auto done = std::make_shared<std::atomic<bool>>(false);
    std::lock_guard lock(mu_);
    workers_.push_back({std::thread([this, c = std::move(conn), peer, index, done]() mutable {
                          try {
                            handler_(c, peer, index, &stopping_);
                          } catch (...) {
                            // A failing session must not take the server down.
                          }
                          c.close();
                          done->store(true);
                        }),
                        done});
    ++index;
  }
}

void ConnectionServer::reap(bool all)
{
  std::list<Worker> finished;
  {
    std::lock_guard lock(mu_);
    for (auto it = workers_.begin(); it != workers_.end();) {
      if (all || it->done->load()) {
        auto next = std::next(it);
        finished.splice(finished.end(), workers_, it);
        it = next;
      } else {
        ++it;
      }
    }
  }
  for (auto& w : finished)
    if (w.thread.joinable()) w.thread.join();
}

IdentLine read_ident_line(Socket& s, Bytes& pending, std::size_t max, Deadline deadline, CancelFlag cancel)
{
  std::size_t scanned = 0;
  while (true) {
    for (; scanned < pending.size() && scanned < max; ++scanned) {
      auto b = pending[scanned];
      if (b == '\n') {
        IdentLine out{Bytes(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(scanned + 1)), LineEnd::Lf};
        pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(scanned + 1));
        return out;
      }
      if (b == 0) {
        IdentLine out{Bytes(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(scanned)), LineEnd::Nul};
        pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(scanned));
        return out;
      }
    }
    if (scanned >= max) {
      IdentLine out{Bytes(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(max)), LineEnd::Overflow};
      pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(max));
      return out;
    }
    auto st = s.read_some(pending, 4096, deadline, cancel);
    if (st != IoStatus::Ok) {
      IdentLine out{std::move(pending), st == IoStatus::Timeout ? LineEnd::Timeout : LineEnd::Closed};
      pending.clear();
      return out;
    }
  }
}

IoStatus fill_to(Socket& s, Bytes& pending, std::size_t n, Deadline deadline, CancelFlag cancel)
{
  while (pending.size() < n) {
    auto st = s.read_some(pending, std::max<std::size_t>(4096, n - pending.size()), deadline, cancel);
    if (st != IoStatus::Ok) return st;
  }
  return IoStatus::Ok;
}

} // namespace kexprint::net
