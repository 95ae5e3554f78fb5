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

#ifndef GENTLERAIN_PROTOCOL_HPP_
#define GENTLERAIN_PROTOCOL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gentlerain/hlc.hpp"

namespace gentlerain {

using ReplicaId = std::uint16_t;
using PartitionId = std::uint16_t;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two versions share (ut, sr) but carry different values.
class DataCorruption : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

enum class Variant : std::uint8_t { PhysicalClock, HybridClock };

std::string_view variant_name(Variant v);
/// Accepts "physical"/"hybrid" (and the enum spellings). Throws
/// std::invalid_argument otherwise.
Variant parse_variant(std::string_view name);

enum class ConflictPolicy : std::uint8_t { LastWriterWins };

/// M replicas, each split into N partitions.
struct Topology {
  std::uint16_t replicas = 1;
  std::uint16_t partitions = 1;

  PartitionId partition_of(std::string_view key) const;
  void validate() const;
};

struct ProtocolConfig {
  Variant variant = Variant::HybridClock;
  Micros heartbeat_interval = 5'000;
  Micros stabilization_interval = 10'000;
  ConflictPolicy conflict_policy = ConflictPolicy::LastWriterWins;

  void validate() const;
};

struct Version {
  std::string key;
  std::string value;
  HlcTimestamp ut;
  ReplicaId sr = 0;

  friend bool operator==(const Version&, const Version&) = default;
};

/// Chain order: greater (ut, sr) is newer.
inline bool newer_than(const Version& a, const Version& b) {
  return a.ut != b.ut ? a.ut > b.ut : a.sr > b.sr;
}

/// Last-writer-wins on (ut, sr). Throws DataCorruption when both versions
/// share (ut, sr) with different values, std::invalid_argument on a key
/// mismatch.
const Version& resolve_conflict(const Version& v1, const Version& v2);

// Messages. Heartbeat carries its sender so that a receiver does not depend
// on transport identity.
struct GetReq {
  std::string key;
  HlcTimestamp gst;
  friend bool operator==(const GetReq&, const GetReq&) = default;
};
struct GetReply {
  std::string value;
  HlcTimestamp ut;
  HlcTimestamp gst;
  friend bool operator==(const GetReply&, const GetReply&) = default;
};
struct PutReq {
  std::string key;
  std::string value;
  HlcTimestamp dt;
  friend bool operator==(const PutReq&, const PutReq&) = default;
};
struct PutReply {
  HlcTimestamp ut;
  friend bool operator==(const PutReply&, const PutReply&) = default;
};
struct Replicate {
  Version d;
  friend bool operator==(const Replicate&, const Replicate&) = default;
};
struct Heartbeat {
  HlcTimestamp ts;
  ReplicaId from = 0;
  friend bool operator==(const Heartbeat&, const Heartbeat&) = default;
};
struct LstReport {
  HlcTimestamp lst;
  PartitionId partition = 0;
  friend bool operator==(const LstReport&, const LstReport&) = default;
};
struct GstBroadcast {
  HlcTimestamp gst;
  friend bool operator==(const GstBroadcast&, const GstBroadcast&) = default;
};

using Message = std::variant<GetReq, GetReply, PutReq, PutReply, Replicate,
                             Heartbeat, LstReport, GstBroadcast>;

enum class MessageKind : std::uint8_t {
  GetReq = 0x01,
  GetReply = 0x02,
  PutReq = 0x03,
  PutReply = 0x04,
  Replicate = 0x05,
  Heartbeat = 0x06,
  LstReport = 0x07,
  GstBroadcast = 0x08,
};

MessageKind kind_of(const Message& msg);
std::string_view kind_name(MessageKind kind);
std::optional<MessageKind> parse_kind(std::string_view name);

/// A message addressed to partition (replica, partition).
struct PeerMessage {
  ReplicaId replica = 0;
  PartitionId partition = 0;
  Message msg;
};

struct ClientState {
  HlcTimestamp dt;
  HlcTimestamp gst;
  ReplicaId home_replica = 0;
};

/// Client side of the protocol. Holds dependency time and the largest
/// stable time it has seen; both only grow.
class Client {
 public:
  explicit Client(ReplicaId home = 0) { state_.home_replica = home; }

  const ClientState& state() const { return state_; }
  ReplicaId home_replica() const { return state_.home_replica; }
  void move_to(ReplicaId replica) { state_.home_replica = replica; }

  GetReq issue_get(std::string key) const;
  std::string apply_get_reply(const GetReply& reply);
  PutReq issue_put(std::string key, std::string value) const;
  void apply_put_reply(const PutReply& reply);

 private:
  ClientState state_;
};

/// Server p^m_n: version chains plus the clock, version vector and stable
/// times a partition server keeps.
class Partition {
 public:
  struct GetOutcome {
    GetReply reply;
    ReplicaId served_sr = 0;
    bool initial = false;
  };

  /// Either deferred (delay > 0, no reply) or completed.
  struct PutOutcome {
    Micros delay = 0;
    std::optional<PutReply> reply;
    std::optional<Version> version;
    std::vector<PeerMessage> replicates;

    bool deferred() const { return !reply.has_value(); }
  };

  struct StabilizationOutcome {
    HlcTimestamp lst;
    std::vector<PeerMessage> messages;
  };

  Partition(Topology topology, ProtocolConfig config, ReplicaId m, PartitionId n);

  GetOutcome handle_get(const GetReq& req);
  PutOutcome handle_put(const PutReq& req, Micros now_pt);
  /// Returns false when `d` was already present (duplicate delivery).
  bool handle_replicate(const Version& d, ReplicaId from);
  std::vector<PeerMessage> heartbeat_tick(Micros now_pt);
  void handle_heartbeat(const HlcTimestamp& ts, ReplicaId from);
  StabilizationOutcome stabilization_tick();
  /// Gatherer only: returns the broadcasts when the round is complete.
  std::vector<PeerMessage> handle_lst_report(const LstReport& report);
  void handle_gst_broadcast(const GstBroadcast& msg);

  ReplicaId replica() const { return m_; }
  PartitionId partition() const { return n_; }
  const Topology& topology() const { return topology_; }
  const ProtocolConfig& config() const { return config_; }
  const HlcState& hlc() const { return hlc_; }
  const std::vector<HlcTimestamp>& vv() const { return vv_; }
  const HlcTimestamp& lst() const { return lst_; }
  const HlcTimestamp& gst() const { return gst_; }
  Micros lrt() const { return lrt_; }
  bool is_gatherer() const { return n_ == 0; }

  /// Versions of `key`, newest first.
  const std::vector<Version>& chain(const std::string& key) const;
  const std::map<std::string, std::vector<Version>>& chains() const { return chains_; }

  /// Writes an entry of the version vector directly (test fixtures).
  void set_vv(ReplicaId k, const HlcTimestamp& ts) { vv_.at(k) = ts; }
  void set_hlc(const HlcTimestamp& ts) { hlc_ = HlcState(ts); }
  void set_gst(const HlcTimestamp& ts) { gst_ = ts; }
  void set_lrt(Micros t) { lrt_ = t; }

 private:
  bool insert(const Version& d);
  bool insert_into(std::vector<Version>& versions, const Version& d);
  void check_key(const std::string& key) const;
  std::vector<PeerMessage> complete_round();

  Topology topology_;
  ProtocolConfig config_;
  ReplicaId m_;
  PartitionId n_;
  HlcState hlc_;
  std::vector<HlcTimestamp> vv_;
  HlcTimestamp lst_;
  HlcTimestamp gst_;
  Micros lrt_ = 0;
  std::map<std::string, std::vector<Version>> chains_;

  // Gatherer bookkeeping: latest LST per partition and whether it arrived
  // since the last broadcast.
  std::vector<HlcTimestamp> round_lsts_;
  std::vector<bool> round_fresh_;
};

}  // namespace gentlerain

#endif  // GENTLERAIN_PROTOCOL_HPP_
