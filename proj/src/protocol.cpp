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

#include "gentlerain/protocol.hpp"

#include <algorithm>

namespace gentlerain {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

HlcTimestamp physical_stamp(Micros pt) {
  if (pt < 0 || static_cast<std::uint64_t>(pt) > HlcTimestamp::kMaxL) {
    throw HlcError("physical time " + std::to_string(pt) + " out of range");
  }
  return HlcTimestamp{static_cast<std::uint64_t>(pt), 0};
}

}  // namespace

std::string_view variant_name(Variant v) {
  return v == Variant::PhysicalClock ? "physical" : "hybrid";
}

Variant parse_variant(std::string_view name) {
  if (name == "physical" || name == "PhysicalClock" || name == "gentlerain") {
    return Variant::PhysicalClock;
  }
  if (name == "hybrid" || name == "HybridClock" || name == "gentlerain+") {
    return Variant::HybridClock;
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected physical or hybrid)");
}

PartitionId Topology::partition_of(std::string_view key) const {
  std::uint64_t h = kFnvOffset;
  for (unsigned char ch : key) {
    h ^= ch;
    h *= kFnvPrime;
  }
  return static_cast<PartitionId>(h % partitions);
}

void Topology::validate() const {
  if (replicas < 1) throw std::invalid_argument("topology.replicas must be >= 1");
  if (partitions < 1) throw std::invalid_argument("topology.partitions must be >= 1");
}

void ProtocolConfig::validate() const {
  if (heartbeat_interval <= 0) {
    throw std::invalid_argument("protocol.heartbeat_interval must be > 0");
  }
  if (stabilization_interval <= 0) {
    throw std::invalid_argument("protocol.stabilization_interval must be > 0");
  }
}

const Version& resolve_conflict(const Version& v1, const Version& v2) {
  if (v1.key != v2.key) {
    throw std::invalid_argument("resolve_conflict across keys '" + v1.key +
                                "' and '" + v2.key + "'");
  }
  if (v1.ut == v2.ut && v1.sr == v2.sr) {
    if (v1.value != v2.value) {
      throw DataCorruption("key '" + v1.key + "': two values at ut=" +
                           v1.ut.str() + " sr=" + std::to_string(v1.sr));
    }
    return v1;
  }
  return newer_than(v1, v2) ? v1 : v2;
}

MessageKind kind_of(const Message& msg) {
  return static_cast<MessageKind>(msg.index() + 1);
}

std::string_view kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::GetReq: return "GetReq";
    case MessageKind::GetReply: return "GetReply";
    case MessageKind::PutReq: return "PutReq";
    case MessageKind::PutReply: return "PutReply";
    case MessageKind::Replicate: return "Replicate";
    case MessageKind::Heartbeat: return "Heartbeat";
    case MessageKind::LstReport: return "LstReport";
    case MessageKind::GstBroadcast: return "GstBroadcast";
  }
  return "?";
}

std::optional<MessageKind> parse_kind(std::string_view name) {
  for (int k = 1; k <= 8; ++k) {
    auto kind = static_cast<MessageKind>(k);
    if (kind_name(kind) == name) return kind;
  }
  return std::nullopt;
}

// ---- client -------------------------------------------------------------

GetReq Client::issue_get(std::string key) const {
  return GetReq{std::move(key), state_.gst};
}

std::string Client::apply_get_reply(const GetReply& reply) {
  state_.dt = std::max(state_.dt, reply.ut);
  state_.gst = std::max(state_.gst, reply.gst);
  return reply.value;
}

PutReq Client::issue_put(std::string key, std::string value) const {
  return PutReq{std::move(key), std::move(value), state_.dt};
}

void Client::apply_put_reply(const PutReply& reply) {
  state_.dt = std::max(state_.dt, reply.ut);
}

// ---- partition ----------------------------------------------------------

Partition::Partition(Topology topology, ProtocolConfig config, ReplicaId m,
                     PartitionId n)
    : topology_(topology),
      config_(config),
      m_(m),
      n_(n),
      vv_(topology.replicas),
      round_lsts_(topology.partitions),
      round_fresh_(topology.partitions, false) {
  topology_.validate();
  config_.validate();
  if (m >= topology.replicas || n >= topology.partitions) {
    throw std::invalid_argument("partition id outside topology");
  }
}

void Partition::check_key(const std::string& key) const {
  if (topology_.partition_of(key) != n_) {
    throw ProtocolError("key '" + key + "' does not belong to partition " +
                        std::to_string(n_));
  }
}

const std::vector<Version>& Partition::chain(const std::string& key) const {
  static const std::vector<Version> kEmpty;
  auto it = chains_.find(key);
  return it == chains_.end() ? kEmpty : it->second;
}

bool Partition::insert(const Version& d) { return insert_into(chains_[d.key], d); }

bool Partition::insert_into(std::vector<Version>& versions, const Version& d) {
  auto pos = std::find_if(versions.begin(), versions.end(),
                          [&](const Version& v) { return !newer_than(v, d); });
  if (pos != versions.end() && pos->ut == d.ut && pos->sr == d.sr) {
    resolve_conflict(*pos, d);  // throws on a value mismatch
    return false;
  }
  versions.insert(pos, d);
  return true;
}

Partition::GetOutcome Partition::handle_get(const GetReq& req) {
  check_key(req.key);
  gst_ = std::max(gst_, req.gst);
  for (const Version& d : chain(req.key)) {
    if (d.sr == m_ || d.ut <= gst_) {
      return GetOutcome{GetReply{d.value, d.ut, gst_}, d.sr, false};
    }
  }
  return GetOutcome{GetReply{std::string(), HlcTimestamp{}, gst_}, m_, true};
}

Partition::PutOutcome Partition::handle_put(const PutReq& req, Micros now_pt) {
  check_key(req.key);
  PutOutcome out;
  auto& versions = chains_[req.key];
  HlcTimestamp ut;
  if (config_.variant == Variant::PhysicalClock) {
    const HlcTimestamp pc = physical_stamp(now_pt);
    if (pc.l <= req.dt.l) {
      out.delay = static_cast<Micros>(req.dt.l - pc.l) + 1;
      return out;
    }
    // A second local write of the same key within one clock tick would
    // collide on (ut, sr); wait for the next tick.
    for (const Version& v : versions) {
      if (v.ut < pc) break;
      if (v.sr == m_ && v.ut == pc) {
        out.delay = 1;
        return out;
      }
    }
    ut = pc;
  } else {
    ut = hlc_.update_for_put(now_pt, req.dt);
  }
  vv_[m_] = ut;
  Version d{req.key, req.value, ut, m_};
  insert_into(versions, d);
  out.reply = PutReply{ut};
  for (ReplicaId k = 0; k < topology_.replicas; ++k) {
    if (k != m_) out.replicates.push_back(PeerMessage{k, n_, Replicate{d}});
  }
  lrt_ = now_pt;
  out.version = std::move(d);
  return out;
}

bool Partition::handle_replicate(const Version& d, ReplicaId from) {
  if (from == m_ || from >= topology_.replicas || d.sr != from) {
    throw ProtocolError("replicate from replica " + std::to_string(from) +
                        " carrying sr=" + std::to_string(d.sr) +
                        " at replica " + std::to_string(m_));
  }
  check_key(d.key);
  if (!insert(d)) return false;
  vv_[from] = d.ut;
  return true;
}

std::vector<PeerMessage> Partition::heartbeat_tick(Micros now_pt) {
  std::vector<PeerMessage> out;
  if (now_pt < lrt_ + config_.heartbeat_interval) return out;
  const HlcTimestamp ts = config_.variant == Variant::HybridClock
                              ? hlc_.update(now_pt)
                              : physical_stamp(now_pt);
  vv_[m_] = ts;
  lrt_ = now_pt;
  for (ReplicaId k = 0; k < topology_.replicas; ++k) {
    if (k != m_) out.push_back(PeerMessage{k, n_, Heartbeat{ts, m_}});
  }
  return out;
}

void Partition::handle_heartbeat(const HlcTimestamp& ts, ReplicaId from) {
  if (from == m_ || from >= topology_.replicas) {
    throw ProtocolError("heartbeat from invalid replica " + std::to_string(from));
  }
  vv_[from] = ts;
}

Partition::StabilizationOutcome Partition::stabilization_tick() {
  lst_ = *std::min_element(vv_.begin(), vv_.end());
  StabilizationOutcome out{lst_, {}};
  if (topology_.partitions == 1) {
    gst_ = std::max(gst_, lst_);
    return out;
  }
  if (!is_gatherer()) {
    out.messages.push_back(PeerMessage{m_, 0, LstReport{lst_, n_}});
    return out;
  }
  round_lsts_[0] = lst_;
  round_fresh_[0] = true;
  out.messages = complete_round();
  return out;
}

std::vector<PeerMessage> Partition::handle_lst_report(const LstReport& report) {
  if (!is_gatherer() || report.partition >= topology_.partitions) {
    throw ProtocolError("LstReport misrouted to partition " + std::to_string(n_));
  }
  round_lsts_[report.partition] = report.lst;
  round_fresh_[report.partition] = true;
  return complete_round();
}

std::vector<PeerMessage> Partition::complete_round() {
  std::vector<PeerMessage> out;
  if (!std::all_of(round_fresh_.begin(), round_fresh_.end(),
                   [](bool fresh) { return fresh; })) {
    return out;
  }
  const HlcTimestamp round_gst =
      *std::min_element(round_lsts_.begin(), round_lsts_.end());
  std::fill(round_fresh_.begin(), round_fresh_.end(), false);
  gst_ = std::max(gst_, round_gst);
  for (PartitionId j = 1; j < topology_.partitions; ++j) {
    out.push_back(PeerMessage{m_, j, GstBroadcast{round_gst}});
  }
  return out;
}

void Partition::handle_gst_broadcast(const GstBroadcast& msg) {
  gst_ = std::max(gst_, msg.gst);
}

}  // namespace gentlerain
