//  Copyright 2026 The GentleRain+ Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

// TCP deployment of the partition state machine. Each server runs one event
// loop thread that owns its Partition; connection readers only parse frames
// and queue them. Every directed peer pair gets one persistent connection,
// which keeps replication and heartbeats FIFO.

#ifndef GENTLERAIN_NET_HPP_
#define GENTLERAIN_NET_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gentlerain/protocol.hpp"

namespace gentlerain {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// Parses "host:port". Throws std::invalid_argument.
  static Endpoint parse(const std::string& text);
  std::string str() const { return host + ":" + std::to_string(port); }
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Protocol intervals are kept in microseconds of the partition clock and
/// drive the wall-time timers one to one.
struct ClusterConfig {
  Topology topology;
  ProtocolConfig protocol;
  std::vector<Endpoint> addresses;  // indexed m * N + n

  const Endpoint& address(ReplicaId m, PartitionId n) const;
  /// Throws std::invalid_argument when the address table is not total.
  void validate() const;
};

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Connection failures and timeouts are retriable; errors reported by the
/// server are not.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, bool retriable)
      : std::runtime_error(what), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

 private:
  bool retriable_;
};

using ClockSource = std::function<Micros()>;

/// The host clock truncated to microseconds: a wall-clock reading taken at
/// construction advanced by the monotonic clock, so it never steps back.
ClockSource host_clock();

class PartitionServer {
 public:
  PartitionServer(ClusterConfig config, ReplicaId m, PartitionId n,
                  ClockSource clock = host_clock());
  ~PartitionServer();
  PartitionServer(const PartitionServer&) = delete;
  PartitionServer& operator=(const PartitionServer&) = delete;

  /// Binds the listen address and starts serving. Throws BindError.
  void start();
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler
  /// sets the flag passed to it.
  void wait(const std::atomic<bool>* interrupt = nullptr);

  std::uint16_t port() const;
  bool running() const;
  /// Snapshot of the loop-owned stable time.
  HlcTimestamp gst() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Synchronous client with one connection per partition of its replica.
class NetClient {
 public:
  NetClient(ClusterConfig config, ReplicaId home,
            std::chrono::milliseconds timeout = std::chrono::milliseconds(2'000));
  ~NetClient();
  NetClient(const NetClient&) = delete;
  NetClient& operator=(const NetClient&) = delete;

  /// Returns the applied reply. On TransportError the client state is
  /// unchanged.
  GetReply get(const std::string& key);
  PutReply put(const std::string& key, const std::string& value);
  void move_to(ReplicaId replica);

  const ClientState& state() const { return proto_.state(); }

 private:
  Message call(PartitionId n, const Message& request);

  ClusterConfig config_;
  Client proto_;
  std::chrono::milliseconds timeout_;
  std::vector<int> fds_;  // per partition of the current replica, -1 closed
};

}  // namespace gentlerain

#endif  // GENTLERAIN_NET_HPP_
