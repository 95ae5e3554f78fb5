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

// Offline consistency checks over a simulation trace. The happens-before
// graph has one node per client op with program-order and read-from edges;
// transitivity is left to reachability.

#ifndef GENTLERAIN_CHECKER_HPP_
#define GENTLERAIN_CHECKER_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "gentlerain/protocol.hpp"
#include "gentlerain/trace.hpp"

namespace gentlerain {

/// The trace itself is inconsistent: unmatched ops, reads of versions no PUT
/// produced, or a cycle in happens-before.
class TraceIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A check was asked of a trace that does not meet its precondition.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OpRecord {
  std::size_t index = 0;  // node id in the graph, op-start order
  OpId op = 0;
  ClientId client = 0;
  OpKind kind = OpKind::Get;
  std::string key;
  std::string value;
  HlcTimestamp ut;
  ReplicaId sr = 0;
  bool initial = false;
  ReplicaId replica = 0;
  PartitionId partition = 0;
  HlcTimestamp gst;
  bool moving = false;
  std::size_t start_pos = 0;     // record index of the op start
  std::size_t complete_pos = 0;  // record index of the op completion
  Micros start_t = 0;
  Micros complete_t = 0;

  /// The version a PUT wrote or a GET returned.
  Version version() const { return Version{key, value, ut, sr}; }
};

struct DependencyGraph {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<OpRecord> ops;
  std::vector<std::vector<std::size_t>> preds;
  std::vector<std::vector<std::size_t>> succs;
  std::vector<std::size_t> read_from;   // GET -> writing PUT, kNone otherwise
  std::vector<std::size_t> topo_order;  // a topological order of ops
  std::map<std::tuple<std::string, std::uint64_t, ReplicaId>, std::size_t> writers;

  /// Shortest path from -> ... -> to along edges, empty if unreachable.
  std::vector<std::size_t> path(std::size_t from, std::size_t to) const;
  bool reaches(std::size_t from, std::size_t to) const { return !path(from, to).empty(); }
  /// The PUT that wrote (key, ut, sr), kNone when absent.
  std::size_t writer_of(const std::string& key, const HlcTimestamp& ut, ReplicaId sr) const;
};

DependencyGraph build_happens_before(const Trace& trace);

struct WitnessItem {
  std::string role;
  std::optional<OpRecord> op;
  std::optional<Version> version;
  std::optional<ReplicaId> replica;
  std::optional<PartitionId> partition;
  std::optional<HlcTimestamp> ts;
  std::string note;
};

struct Verdict {
  std::string property;
  bool pass = true;
  std::size_t violations = 0;
  std::vector<WitnessItem> witness;  // the first violation found, empty on pass
  std::string detail;
};

/// Whether the required version of `key` (or an f-winner over it) was
/// selectable by a GET at the replica of op `get` when that op completed.
struct VisibilityVerdict {
  std::size_t get = 0;
  std::string key;
  HlcTimestamp required_ut;
  ReplicaId required_sr = 0;
  bool selected = false;
  HlcTimestamp selected_ut;
  ReplicaId selected_sr = 0;
  HlcTimestamp effective_gst;
  bool visible = false;
};

/// One verdict per (GET, dependency key) pair: for every GET returning v1
/// and every other key k2 that v1 depends on, evaluated against the newest
/// dependency of k2.
std::vector<VisibilityVerdict> visibility_verdicts(const Trace& trace,
                                                   const DependencyGraph& graph);

Verdict check_causal_plus(const Trace& trace, const DependencyGraph& graph);
Verdict check_causal_plus_plus(const Trace& trace, const DependencyGraph& graph);
Verdict check_convergence(const Trace& trace, const DependencyGraph& graph);
/// Every version with ut <= gst at some partition of a replica has already
/// been inserted at that replica.
Verdict check_stable_time(const Trace& trace, const DependencyGraph& graph);
/// PUT timestamps increase along happens-before; under HybridClock, every
/// partition's emitted timestamps also increase strictly.
Verdict check_causality(const Trace& trace, const DependencyGraph& graph);

enum class Property : std::uint8_t { CausalPlus, CausalPlusPlus, Convergence, StableTime, Causality };

std::string_view property_name(Property p);
/// Throws std::invalid_argument naming the known properties.
Property parse_property(std::string_view name);
std::vector<Property> all_properties();
Verdict check(const Trace& trace, const DependencyGraph& graph, Property p);

/// Largest logical counter carried by any timestamp in the trace.
std::uint32_t max_counter(const Trace& trace);

std::string verdict_to_json(const Verdict& verdict);

}  // namespace gentlerain

#endif  // GENTLERAIN_CHECKER_HPP_
