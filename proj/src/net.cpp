// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>
#include <vector>

#include "ksfusion/error.hpp"

namespace ksf {
namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string errno_text() { return std::strerror(errno); }

bool write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

/// Resolves host:port into a connected or bound socket.
int open_socket(const std::string& host, std::uint16_t port, bool listen) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (listen) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::TransportError, "cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  std::string last = "no address";
  int fd = -1;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last = errno_text();
      continue;
    }
    if (listen) {
      const int one = 1;
      ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
      if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 16) == 0) break;
    } else {
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        break;
      }
    }
    last = errno_text();
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw Error(ErrorCode::TransportError,
                std::string(listen ? "cannot listen on " : "cannot connect to ") + host + ":" + service + ": " + last);
  }
  return fd;
}

}  // namespace

Listener::Listener(const std::string& host, std::uint16_t port, Store& store) : store_(store) {
  fd_ = open_socket(host, port, true);
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                           : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

void Listener::serve(std::optional<std::size_t> max_connections, std::optional<std::int64_t> idle_ms) {
  std::vector<std::thread> workers;
  std::atomic<std::size_t> open{0};
  std::size_t accepted = 0;
  std::int64_t idle_since = now_ms();
  while (!stopping_) {
    if (max_connections && accepted >= *max_connections) break;
    if (idle_ms && open == 0 && now_ms() - idle_since >= *idle_ms) break;
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 50);
    if (rc < 0 && errno != EINTR) throw Error(ErrorCode::TransportError, "poll failed: " + errno_text());
    if (open > 0) idle_since = now_ms();
    if (rc <= 0) continue;
    const int client = ::accept(fd_, nullptr, nullptr);
    if (client < 0) continue;
    ++accepted;
    ++open;
    workers.emplace_back([this, client, &open] {
      handle(client);
      --open;
    });
  }
  for (auto& w : workers) w.join();
}

void Listener::handle(int fd) {
  wire::FrameReader reader;
  std::uint8_t buf[64 * 1024];
  for (;;) {
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc == 0) {
      if (stopping_) break;
      continue;
    }
    if (rc < 0 && errno == EINTR) continue;
    const ssize_t n = rc < 0 ? -1 : ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) break;
    reader.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    bool alive = true;
    try {
      while (auto frame = reader.next()) {
        std::uint8_t ack = kAckStored;
        try {
          const auto r = store_.ingest_frame(*frame, now_ms());
          std::lock_guard lock(mutex_);
          report_ += r;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::StorageFailure) throw;
          ack = kAckRejected;
          std::lock_guard lock(mutex_);
          ++rejected_;
        }
        if (!write_all(fd, &ack, 1)) {
          alive = false;
          break;
        }
      }
    } catch (const Error&) {
      alive = false;  // oversized frame or storage failure: drop the connection unacknowledged
    }
    if (!alive) break;
  }
  ::close(fd);
}

IngestReport Listener::report() const {
  std::lock_guard lock(mutex_);
  return report_;
}

std::size_t Listener::rejected_frames() const {
  std::lock_guard lock(mutex_);
  return rejected_;
}

SocketTransport::SocketTransport(std::string host, std::uint16_t port) : host_(std::move(host)), port_(port) {}

SocketTransport::~SocketTransport() { close_now(); }

bool SocketTransport::connect_now() {
  if (fd_ >= 0) return true;
  try {
    fd_ = open_socket(host_, port_, false);
  } catch (const Error&) {
    return false;
  }
  return true;
}

void SocketTransport::close_now() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

bool SocketTransport::send(std::span<const std::uint8_t> frame) {
  if (!connect_now()) return false;
  std::vector<std::uint8_t> out;
  wire::append_frame(out, frame);
  std::uint8_t ack = 0;
  ssize_t n = -1;
  if (write_all(fd_, out.data(), out.size())) {
    do {
      n = ::recv(fd_, &ack, 1, 0);
    } while (n < 0 && errno == EINTR);
  }
  if (n != 1) {
    close_now();
    return false;
  }
  return ack == kAckStored;
}

}  // namespace ksf
