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

// Execution trace of a simulated run. The NDJSON form has one object per
// line; every object carries a "type" field naming the record kind.

#ifndef GENTLERAIN_TRACE_HPP_
#define GENTLERAIN_TRACE_HPP_

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gentlerain/hlc.hpp"
#include "gentlerain/protocol.hpp"

namespace gentlerain {

using NodeId = std::uint32_t;
using OpId = std::uint64_t;
using ClientId = std::uint32_t;

enum class OpKind : std::uint8_t { Get, Put };

/// Messages between any node of `side_a` and any node of `side_b` are cut
/// during [from, to). `to < 0` means the cut never heals and messages are
/// lost. A finite cut holds messages and releases them at `to`, the way a
/// reliable ordered transport retransmits after a heal.
struct PartitionWindow {
  std::vector<NodeId> side_a;
  std::vector<NodeId> side_b;
  Micros from = 0;
  Micros to = -1;

  bool permanent() const { return to < 0; }
  bool separates(NodeId x, NodeId y) const;
  bool active_at(Micros t) const { return t >= from && (permanent() || t < to); }
};

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace rec {

struct Header {
  std::string scenario;
  Topology topology;
  ProtocolConfig protocol;
  std::uint32_t clients = 0;
  std::uint64_t seed = 0;
  Micros until = 0;
  std::vector<PartitionWindow> partitions;
};

struct OpStart {
  Micros t = 0;
  ClientId client = 0;
  OpId op = 0;
  OpKind kind = OpKind::Get;
  std::string key;
  std::string value;  // written value for PUT
  ReplicaId replica = 0;
  PartitionId partition = 0;
  bool moving = false;  // client may contact several replicas
};

struct OpComplete {
  Micros t = 0;
  ClientId client = 0;
  OpId op = 0;
  OpKind kind = OpKind::Get;
  std::string key;
  std::string value;  // returned or written value
  HlcTimestamp ut;    // returned or assigned update time
  ReplicaId sr = 0;   // source replica of that version
  bool initial = false;  // GET served the never-written initial version
  HlcTimestamp gst;
  ReplicaId replica = 0;
  PartitionId partition = 0;
};

struct ClientMove {
  Micros t = 0;
  ClientId client = 0;
  ReplicaId from = 0;
  ReplicaId to = 0;
};

struct MsgSend {
  Micros t = 0;
  std::uint64_t id = 0;
  NodeId from = 0;
  NodeId to = 0;
  MessageKind kind = MessageKind::GetReq;
  HlcTimestamp ts;  // the timestamp the message carries
  OpId op = 0;      // client op this message belongs to, 0 otherwise
};

struct MsgDeliver {
  Micros t = 0;
  std::uint64_t id = 0;
  NodeId from = 0;
  NodeId to = 0;
  MessageKind kind = MessageKind::GetReq;
};

struct MsgDrop {
  Micros t = 0;
  std::uint64_t id = 0;
  NodeId from = 0;
  NodeId to = 0;
  MessageKind kind = MessageKind::GetReq;
};

struct ClockRead {
  Micros t = 0;
  ReplicaId replica = 0;
  PartitionId partition = 0;
  Micros pt = 0;
};

struct VvChange {
  Micros t = 0;
  ReplicaId replica = 0;
  PartitionId partition = 0;
  ReplicaId index = 0;
  HlcTimestamp ts;
};

struct LstChange {
  Micros t = 0;
  ReplicaId replica = 0;
  PartitionId partition = 0;
  HlcTimestamp ts;
};

struct GstChange {
  Micros t = 0;
  ReplicaId replica = 0;
  PartitionId partition = 0;
  HlcTimestamp ts;
};

struct VersionInsert {
  Micros t = 0;
  ReplicaId replica = 0;
  PartitionId partition = 0;
  std::string key;
  std::string value;
  HlcTimestamp ut;
  ReplicaId sr = 0;
};

struct PutDeferred {
  Micros t = 0;
  ReplicaId replica = 0;
  PartitionId partition = 0;
  ClientId client = 0;
  OpId op = 0;
  Micros delay = 0;
};

struct Starvation {
  Micros t = 0;
  std::vector<OpId> pending;
};

}  // namespace rec

using Record = std::variant<rec::Header, rec::OpStart, rec::OpComplete,
                            rec::ClientMove, rec::MsgSend, rec::MsgDeliver,
                            rec::MsgDrop, rec::ClockRead, rec::VvChange,
                            rec::LstChange, rec::GstChange, rec::VersionInsert,
                            rec::PutDeferred, rec::Starvation>;

struct Trace {
  std::vector<Record> records;

  /// The first record. Throws TraceFormatError when absent.
  const rec::Header& header() const;

  NodeId partition_node(ReplicaId m, PartitionId n) const;
  NodeId client_node(ClientId c) const;
  bool is_partition_node(NodeId id) const;
};

std::string_view record_type(const Record& r);
std::string to_ndjson(const Record& r);
Record from_ndjson(const std::string& line);

void write_trace(std::ostream& os, const Trace& trace);
void write_trace_file(const std::string& path, const Trace& trace);
Trace read_trace(std::istream& is);
Trace read_trace_file(const std::string& path);

/// FNV-1a over the NDJSON text.
std::uint64_t trace_hash(const Trace& trace);
std::string hex64(std::uint64_t v);

}  // namespace gentlerain

#endif  // GENTLERAIN_TRACE_HPP_
