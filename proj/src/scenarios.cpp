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

#include "gentlerain/scenarios.hpp"

namespace gentlerain {

std::string key_for_partition(const Topology& topology, PartitionId n,
                              std::string_view prefix) {
  if (n >= topology.partitions) {
    throw std::invalid_argument("partition index outside topology");
  }
  for (int i = 0;; ++i) {
    std::string key = std::string(prefix) + std::to_string(i);
    if (topology.partition_of(key) == n) return key;
  }
}

namespace {

ClientAction put(std::string key, std::string value, Micros at = 0) {
  return ClientAction{OpKind::Put, std::move(key), std::move(value), at, std::nullopt};
}

ClientAction get(std::string key, Micros at = 0,
                 std::optional<ReplicaId> replica = std::nullopt) {
  return ClientAction{OpKind::Get, std::move(key), "", at, replica};
}

std::vector<NodeId> replica_nodes(const Topology& topo, ReplicaId m) {
  std::vector<NodeId> nodes;
  for (PartitionId n = 0; n < topo.partitions; ++n) {
    nodes.push_back(static_cast<NodeId>(m) * topo.partitions + n);
  }
  return nodes;
}

}  // namespace

SimConfig backward_clock_config(Variant variant, Micros jump_delta) {
  constexpr Micros kJumpAt = 99'000;
  constexpr Micros kWriteAt = 100'000;

  SimConfig cfg;
  cfg.scenario = "backward_clock";
  cfg.topology = Topology{2, 2};
  cfg.protocol.variant = variant;
  cfg.until = 300'000;

  const std::string x = key_for_partition(cfg.topology, 0, "x");
  const std::string y = key_for_partition(cfg.topology, 1, "y");

  cfg.clocks.resize(4);
  for (PartitionId n = 0; n < 2; ++n) {
    cfg.clocks[n].jumps.push_back(ClockJump{kJumpAt, jump_delta});
  }
  // A/px -> B/px is slow; everything else crosses in 1 ms.
  cfg.network.inter_replica = LinkSpec{1'000, 0};
  cfg.network.overrides[{0, 2}] = LinkSpec{20'000, 0};

  ClientScript writer;
  writer.home = 0;
  writer.actions = {put(x, "X", kWriteAt), put(y, "Y")};
  ClientScript reader;
  reader.home = 1;
  reader.actions = {get(y, kWriteAt + 5'000), get(x, kWriteAt + 6'000)};
  cfg.workload.clients = {writer, reader};
  return cfg;
}

SimResult scripted_backward_clock_scenario(Variant variant, Micros jump_delta) {
  return run_scenario(backward_clock_config(variant, jump_delta));
}

SimConfig moving_client_config(Variant variant, MovingClientOptions options) {
  constexpr Micros kCutAt = 150'000;
  constexpr Micros kWriteAt = 200'000;
  constexpr ReplicaId r = 0;
  constexpr ReplicaId r_prime = 1;

  SimConfig cfg;
  cfg.scenario = "moving_client";
  cfg.topology = Topology{2, 2};
  cfg.protocol.variant = variant;
  cfg.until = 500'000;
  if (options.partitioned) {
    cfg.network.partitions.push_back(PartitionWindow{
        replica_nodes(cfg.topology, r), replica_nodes(cfg.topology, r_prime), kCutAt, -1});
  }

  ClientScript setup;
  setup.home = r;
  setup.actions = {put("k1", "v1^0", 1'000), put("k2", "v2^0")};
  ClientScript c;
  c.home = r;
  c.actions = {put("k1", "v1^1", kWriteAt), put("k2", "v2^1")};
  ClientScript c_prime;
  c_prime.home = r;
  c_prime.moving = true;
  const Micros second_read = options.delayed_reads ? 400'000 : kWriteAt + 11'000;
  c_prime.actions = {get("k2", kWriteAt + 10'000),
                     get("k1", second_read, options.move ? r_prime : r)};
  cfg.workload.clients = {setup, c, c_prime};
  return cfg;
}

SimResult scripted_moving_client_scenario(Variant variant, MovingClientOptions options) {
  return run_scenario(moving_client_config(variant, options));
}

}  // namespace gentlerain
