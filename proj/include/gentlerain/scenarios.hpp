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

// Scripted executions: the backward-clock counterexample for physical
// timestamps and the moving-client execution behind the impossibility
// result for causal++ under partitions.

#ifndef GENTLERAIN_SCENARIOS_HPP_
#define GENTLERAIN_SCENARIOS_HPP_

#include <string>
#include <string_view>

#include "gentlerain/sim.hpp"

namespace gentlerain {

/// First key "<prefix><i>" (i = 0, 1, ...) owned by partition n.
std::string key_for_partition(const Topology& topology, PartitionId n,
                              std::string_view prefix);

/// Two replicas A and B, two partitions each. Once gst has advanced at both,
/// every clock of A steps by jump_delta. A client at A then writes x and
/// then y on different partitions while a client at B reads y then x. The
/// A->B link of x's partition is slow, so x reaches B well after y does.
SimConfig backward_clock_config(Variant variant, Micros jump_delta = -80'000);
SimResult scripted_backward_clock_scenario(Variant variant,
                                           Micros jump_delta = -80'000);

struct MovingClientOptions {
  bool partitioned = true;     // cut r from r' before c writes
  bool move = true;            // c' reads k1 at r' instead of r
  bool delayed_reads = false;  // c' reads k1 long after replication settles
};

/// Replica r holds v1^0 and v2^0, replicated everywhere. With r cut from r',
/// client c writes v1^1 then v2^1 at r; client c' reads k2 at r, moves to r'
/// and reads k1.
SimConfig moving_client_config(Variant variant, MovingClientOptions options = {});
SimResult scripted_moving_client_scenario(Variant variant,
                                          MovingClientOptions options = {});

}  // namespace gentlerain

#endif  // GENTLERAIN_SCENARIOS_HPP_
