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

// Deterministic discrete-event simulator. Virtual time is in microseconds.
// Each partition server reads its own ClockModel; links have a base latency
// plus seeded uniform jitter and deliver FIFO per ordered pair.

#ifndef GENTLERAIN_SIM_HPP_
#define GENTLERAIN_SIM_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gentlerain/protocol.hpp"
#include "gentlerain/trace.hpp"

namespace gentlerain {

struct ClockJump {
  Micros at = 0;     // sim time the jump takes effect
  Micros delta = 0;  // signed step applied to the reading
};

/// pc(t) = t + offset + drift_ppm * t / 1e6 + sum of jumps with at <= t,
/// floored to a whole microsecond and clamped at zero.
struct ClockModel {
  Micros offset = 0;
  double drift_ppm = 0.0;
  std::vector<ClockJump> jumps;

  Micros read(Micros t) const;
  /// A clock that never moves from `value`.
  static ClockModel fixed(Micros value);
};

struct LinkSpec {
  Micros base = 0;
  Micros jitter = 0;  // uniform over [0, jitter]
};

struct NetworkModel {
  LinkSpec intra_replica{100, 0};  // partitions of the same replica
  LinkSpec inter_replica{1'000, 0};  // peer partitions across replicas
  LinkSpec client{100, 0};           // client to its server and back
  std::map<std::pair<NodeId, NodeId>, LinkSpec> overrides;  // by ordered pair
  std::vector<PartitionWindow> partitions;
};

struct ClientAction {
  OpKind kind = OpKind::Get;
  std::string key;
  std::string value;
  Micros not_before = 0;
  /// When set and different from the current replica, the client moves
  /// there before issuing this op.
  std::optional<ReplicaId> replica;
};

struct ClientScript {
  ReplicaId home = 0;
  Micros think_time = 0;  // pause after each completed op
  bool moving = false;    // client is allowed to contact several replicas
  std::vector<ClientAction> actions;
};

struct Workload {
  std::vector<ClientScript> clients;
  std::size_t op_count() const;
};

struct SimConfig {
  std::string scenario = "custom";
  Topology topology;
  ProtocolConfig protocol;
  /// Indexed by m * N + n; missing entries read true time.
  std::vector<ClockModel> clocks;
  NetworkModel network;
  Workload workload;
  std::uint64_t seed = 1;
  Micros until = 1'000'000;
  Micros heartbeat_phase = 0;
  Micros stabilization_phase = 0;
  bool record_clock_reads = true;
};

struct SimResult {
  Trace trace;
  bool starved = false;
  std::vector<OpId> pending;  // client ops started but never completed
  std::size_t events = 0;
};

/// Runs the protocol state machines under the configured models. Identical
/// configs give identical traces.
SimResult run_scenario(const SimConfig& config);

}  // namespace gentlerain

#endif  // GENTLERAIN_SIM_HPP_
