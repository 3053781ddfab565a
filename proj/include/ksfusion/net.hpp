// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "ksfusion/aggregators.hpp"
#include "ksfusion/store.hpp"

namespace ksf {

// Stream protocol: the client sends .ksb frames (u32 little-endian length,
// encoded batch). The server answers every frame with one byte, kAckStored
// once the batch is in the store (duplicates included) or kAckRejected when
// the frame does not decode.
inline constexpr std::uint8_t kAckStored = 0x01;
inline constexpr std::uint8_t kAckRejected = 0x00;

/// TCP ingestion endpoint; one thread per connection, store writes are
/// serialized by the store.
class Listener {
 public:
  /// Binds and listens; port 0 picks a free port. Throws Error(TransportError).
  Listener(const std::string& host, std::uint16_t port, Store& store);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const { return port_; }

  /// Accepts connections until stop() is called, `max_connections` have been
  /// accepted and closed, or no connection has been open for `idle_ms`.
  void serve(std::optional<std::size_t> max_connections = std::nullopt,
             std::optional<std::int64_t> idle_ms = std::nullopt);

  /// Thread-safe; makes serve() return after open connections finish.
  void stop() { stopping_ = true; }

  IngestReport report() const;
  std::size_t rejected_frames() const;

 private:
  void handle(int fd);

  Store& store_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  mutable std::mutex mutex_;
  IngestReport report_;
  std::size_t rejected_ = 0;
};

/// Client side of the stream protocol: one connection, one acknowledged
/// frame per send(). Connection failures surface as send() == false and are
/// retried with a fresh connection on the next call.
class SocketTransport : public Transport {
 public:
  SocketTransport(std::string host, std::uint16_t port);
  ~SocketTransport() override;
  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  bool send(std::span<const std::uint8_t> frame) override;

 private:
  bool connect_now();
  void close_now();

  std::string host_;
  std::uint16_t port_;
  int fd_ = -1;
};

}  // namespace ksf
