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

#include "gentlerain/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <random>

namespace gentlerain {

Micros ClockModel::read(Micros t) const {
  long double reading = static_cast<long double>(t) + offset +
                        static_cast<long double>(drift_ppm) * t / 1e6L;
  for (const auto& jump : jumps) {
    if (jump.at <= t) reading += jump.delta;
  }
  const auto floored = static_cast<Micros>(std::floor(reading));
  return std::max<Micros>(floored, 0);
}

ClockModel ClockModel::fixed(Micros value) {
  return ClockModel{value, -1e6, {}};
}

std::size_t Workload::op_count() const {
  std::size_t n = 0;
  for (const auto& c : clients) n += c.actions.size();
  return n;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class EventKind : std::uint8_t {
  Deliver,
  HeartbeatTimer,
  StabilizationTimer,
  ClientIssue,
  PutResume,
};

struct Event {
  Micros t;
  std::uint64_t seq;
  EventKind kind;
  std::uint32_t target;    // node (timers, put resume) or client (issue)
  std::size_t envelope;    // Deliver / PutResume
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    return a.t != b.t ? a.t > b.t : a.seq > b.seq;
  }
};

struct Envelope {
  std::uint64_t id = 0;
  NodeId from = 0;
  NodeId to = 0;
  Message msg;
  OpId op = 0;
  ReplicaId served_sr = 0;
  bool initial = false;
};

HlcTimestamp carried_ts(const Message& msg) {
  return std::visit(
      [](const auto& m) -> HlcTimestamp {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GetReq>) return m.gst;
        if constexpr (std::is_same_v<T, GetReply>) return m.ut;
        if constexpr (std::is_same_v<T, PutReq>) return m.dt;
        if constexpr (std::is_same_v<T, PutReply>) return m.ut;
        if constexpr (std::is_same_v<T, Replicate>) return m.d.ut;
        if constexpr (std::is_same_v<T, Heartbeat>) return m.ts;
        if constexpr (std::is_same_v<T, LstReport>) return m.lst;
        if constexpr (std::is_same_v<T, GstBroadcast>) return m.gst;
      },
      msg);
}

struct ClientRuntime {
  Client proto;
  const ClientScript* script = nullptr;
  std::size_t next = 0;
  bool in_flight = false;
  OpId op = 0;
  Micros ready_at = 0;
};

struct Recorded {
  std::vector<HlcTimestamp> vv;
  HlcTimestamp lst;
  HlcTimestamp gst;
};

class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg) : cfg_(cfg), topo_(cfg.topology) {
    topo_.validate();
    cfg_.protocol.validate();
    const std::size_t nodes = std::size_t{topo_.replicas} * topo_.partitions;
    if (!cfg_.clocks.empty() && cfg_.clocks.size() != nodes) {
      throw std::invalid_argument("clock model count must equal replicas * partitions");
    }
    for (ReplicaId m = 0; m < topo_.replicas; ++m) {
      for (PartitionId n = 0; n < topo_.partitions; ++n) {
        parts_.emplace_back(topo_, cfg_.protocol, m, n);
        recorded_.push_back(Recorded{std::vector<HlcTimestamp>(topo_.replicas), {}, {}});
      }
    }
    for (const auto& script : cfg_.workload.clients) {
      if (script.home >= topo_.replicas) {
        throw std::invalid_argument("client home replica outside topology");
      }
      ClientRuntime rt{Client(script.home), &script, 0, false, 0, 0};
      clients_.push_back(std::move(rt));
    }
  }

  SimResult run() {
    rec::Header header;
    header.scenario = cfg_.scenario;
    header.topology = topo_;
    header.protocol = cfg_.protocol;
    header.clients = static_cast<std::uint32_t>(clients_.size());
    header.seed = cfg_.seed;
    header.until = cfg_.until;
    header.partitions = cfg_.network.partitions;
    trace_.records.push_back(header);

    for (NodeId node = 0; node < parts_.size(); ++node) {
      schedule(cfg_.heartbeat_phase + cfg_.protocol.heartbeat_interval,
               EventKind::HeartbeatTimer, node);
      schedule(cfg_.stabilization_phase + cfg_.protocol.stabilization_interval,
               EventKind::StabilizationTimer, node);
    }
    for (ClientId c = 0; c < clients_.size(); ++c) schedule_next_op(c, 0);

    std::size_t events = 0;
    while (!queue_.empty() && queue_.top().t <= cfg_.until) {
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.t;
      ++events;
      dispatch(ev);
    }

    SimResult result;
    for (const auto& c : clients_) {
      if (c.in_flight) result.pending.push_back(c.op);
    }
    result.starved = !result.pending.empty();
    if (result.starved) {
      trace_.records.push_back(rec::Starvation{now_, result.pending});
    }
    result.events = events;
    result.trace = std::move(trace_);
    return result;
  }

 private:
  NodeId node_of(ReplicaId m, PartitionId n) const {
    return static_cast<NodeId>(m) * topo_.partitions + n;
  }
  NodeId client_node(ClientId c) const {
    return static_cast<NodeId>(parts_.size()) + c;
  }
  bool is_partition(NodeId id) const { return id < parts_.size(); }

  void schedule(Micros t, EventKind kind, std::uint32_t target,
                std::size_t envelope = 0) {
    queue_.push(Event{t, seq_++, kind, target, envelope});
  }

  Micros read_clock(NodeId node) {
    const Micros pt = cfg_.clocks.empty() ? now_ : cfg_.clocks[node].read(now_);
    if (cfg_.record_clock_reads) {
      const Partition& p = parts_[node];
      trace_.records.push_back(rec::ClockRead{now_, p.replica(), p.partition(), pt});
    }
    return pt;
  }

  LinkSpec link_for(NodeId from, NodeId to) const {
    auto it = cfg_.network.overrides.find({from, to});
    if (it != cfg_.network.overrides.end()) return it->second;
    if (!is_partition(from) || !is_partition(to)) return cfg_.network.client;
    return parts_[from].replica() == parts_[to].replica() ? cfg_.network.intra_replica
                                                          : cfg_.network.inter_replica;
  }

  Micros jitter(NodeId from, NodeId to, Micros max_jitter) {
    if (max_jitter <= 0) return 0;
    auto key = std::make_pair(from, to);
    auto it = link_rng_.find(key);
    if (it == link_rng_.end()) {
      const std::uint64_t s = splitmix64(cfg_.seed ^ splitmix64(
                                  (std::uint64_t{from} << 32) | to));
      it = link_rng_.emplace(key, std::mt19937_64(s)).first;
    }
    return static_cast<Micros>(it->second() % static_cast<std::uint64_t>(max_jitter + 1));
  }

  void send(NodeId from, NodeId to, Message msg, OpId op = 0,
            ReplicaId served_sr = 0, bool initial = false) {
    const std::uint64_t id = next_msg_id_++;
    const MessageKind kind = kind_of(msg);
    trace_.records.push_back(rec::MsgSend{now_, id, from, to, kind, carried_ts(msg), op});

    const LinkSpec link = link_for(from, to);
    const Micros latency = link.base + jitter(from, to, link.jitter);
    Micros deliver_at = now_ + latency;
    for (const auto& w : cfg_.network.partitions) {
      if (!w.separates(from, to)) continue;
      // The cut matters if it is active at some point in [now, deliver_at].
      const bool overlaps = w.from <= deliver_at && (w.permanent() || w.to > now_);
      if (!overlaps) continue;
      if (w.permanent()) {
        trace_.records.push_back(rec::MsgDrop{now_, id, from, to, kind});
        return;
      }
      deliver_at = std::max(deliver_at, w.to + latency);
    }
    auto& last = last_delivery_[{from, to}];
    deliver_at = std::max(deliver_at, last);
    last = deliver_at;

    envelopes_.push_back(Envelope{id, from, to, std::move(msg), op, served_sr, initial});
    schedule(deliver_at, EventKind::Deliver, to, envelopes_.size() - 1);
  }

  void send_all(NodeId from, std::vector<PeerMessage>& msgs) {
    for (auto& pm : msgs) send(from, node_of(pm.replica, pm.partition), std::move(pm.msg));
  }

  void record_changes(NodeId node) {
    const Partition& p = parts_[node];
    Recorded& r = recorded_[node];
    for (ReplicaId i = 0; i < topo_.replicas; ++i) {
      if (p.vv()[i] != r.vv[i]) {
        r.vv[i] = p.vv()[i];
        trace_.records.push_back(
            rec::VvChange{now_, p.replica(), p.partition(), i, r.vv[i]});
      }
    }
    if (p.lst() != r.lst) {
      r.lst = p.lst();
      trace_.records.push_back(rec::LstChange{now_, p.replica(), p.partition(), r.lst});
    }
    if (p.gst() != r.gst) {
      r.gst = p.gst();
      trace_.records.push_back(rec::GstChange{now_, p.replica(), p.partition(), r.gst});
    }
  }

  void record_insert(const Partition& p, const Version& d) {
    trace_.records.push_back(rec::VersionInsert{now_, p.replica(), p.partition(), d.key,
                                                d.value, d.ut, d.sr});
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::Deliver: deliver(ev.envelope); break;
      case EventKind::HeartbeatTimer: {
        Partition& p = parts_[ev.target];
        auto msgs = p.heartbeat_tick(read_clock(ev.target));
        record_changes(ev.target);
        send_all(ev.target, msgs);
        schedule(now_ + cfg_.protocol.heartbeat_interval, EventKind::HeartbeatTimer,
                 ev.target);
        break;
      }
      case EventKind::StabilizationTimer: {
        Partition& p = parts_[ev.target];
        auto out = p.stabilization_tick();
        record_changes(ev.target);
        send_all(ev.target, out.messages);
        schedule(now_ + cfg_.protocol.stabilization_interval,
                 EventKind::StabilizationTimer, ev.target);
        break;
      }
      case EventKind::ClientIssue: issue(ev.target); break;
      case EventKind::PutResume: handle_put(ev.target, ev.envelope); break;
    }
  }

  void deliver(std::size_t idx) {
    const Envelope& env = envelopes_[idx];
    trace_.records.push_back(
        rec::MsgDeliver{now_, env.id, env.from, env.to, kind_of(env.msg)});
    if (!is_partition(env.to)) {
      client_reply(env.to - static_cast<NodeId>(parts_.size()), idx);
      return;
    }
    const NodeId node = env.to;
    Partition& p = parts_[node];
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, GetReq>) {
            auto out = p.handle_get(m);
            record_changes(node);
            send(node, env.from, std::move(out.reply), env.op, out.served_sr, out.initial);
          } else if constexpr (std::is_same_v<T, PutReq>) {
            handle_put(node, idx);
          } else if constexpr (std::is_same_v<T, Replicate>) {
            if (p.handle_replicate(m.d, parts_[env.from].replica())) {
              record_insert(p, m.d);
            }
            record_changes(node);
          } else if constexpr (std::is_same_v<T, Heartbeat>) {
            p.handle_heartbeat(m.ts, m.from);
            record_changes(node);
          } else if constexpr (std::is_same_v<T, LstReport>) {
            auto msgs = p.handle_lst_report(m);
            record_changes(node);
            send_all(node, msgs);
          } else if constexpr (std::is_same_v<T, GstBroadcast>) {
            p.handle_gst_broadcast(m);
            record_changes(node);
          } else {
            throw ProtocolError("client reply delivered to a partition");
          }
        },
        env.msg);
  }

  void handle_put(NodeId node, std::size_t idx) {
    Partition& p = parts_[node];
    const Envelope& env = envelopes_[idx];
    const auto& req = std::get<PutReq>(env.msg);
    auto out = p.handle_put(req, read_clock(node));
    if (out.deferred()) {
      const ClientId client = env.from - static_cast<NodeId>(parts_.size());
      trace_.records.push_back(rec::PutDeferred{now_, p.replica(), p.partition(), client,
                                                env.op, out.delay});
      schedule(now_ + out.delay, EventKind::PutResume, node, idx);
      return;
    }
    record_insert(p, *out.version);
    record_changes(node);
    send(node, env.from, *out.reply, env.op, p.replica(), false);
    send_all(node, out.replicates);
  }

  void schedule_next_op(ClientId c, Micros earliest) {
    ClientRuntime& rt = clients_[c];
    if (rt.next >= rt.script->actions.size()) return;
    const Micros at = std::max(earliest, rt.script->actions[rt.next].not_before);
    schedule(at, EventKind::ClientIssue, c);
  }

  void issue(ClientId c) {
    ClientRuntime& rt = clients_[c];
    const ClientAction& action = rt.script->actions[rt.next];
    if (action.replica && *action.replica != rt.proto.home_replica()) {
      if (*action.replica >= topo_.replicas) {
        throw std::invalid_argument("client action targets a replica outside topology");
      }
      trace_.records.push_back(
          rec::ClientMove{now_, c, rt.proto.home_replica(), *action.replica});
      rt.proto.move_to(*action.replica);
    }
    const ReplicaId m = rt.proto.home_replica();
    const PartitionId n = topo_.partition_of(action.key);
    rt.op = next_op_id_++;
    rt.in_flight = true;
    trace_.records.push_back(rec::OpStart{now_, c, rt.op, action.kind, action.key,
                                          action.kind == OpKind::Put ? action.value : "",
                                          m, n, rt.script->moving});
    Message msg = action.kind == OpKind::Get
                      ? Message{rt.proto.issue_get(action.key)}
                      : Message{rt.proto.issue_put(action.key, action.value)};
    send(client_node(c), node_of(m, n), std::move(msg), rt.op);
  }

  void client_reply(ClientId c, std::size_t idx) {
    ClientRuntime& rt = clients_[c];
    const Envelope& env = envelopes_[idx];
    const ClientAction& action = rt.script->actions[rt.next];
    const Partition& server = parts_[env.from];
    rec::OpComplete done;
    done.t = now_;
    done.client = c;
    done.op = rt.op;
    done.kind = action.kind;
    done.key = action.key;
    done.replica = server.replica();
    done.partition = server.partition();
    done.sr = env.served_sr;
    done.initial = env.initial;
    if (const auto* get = std::get_if<GetReply>(&env.msg)) {
      done.value = rt.proto.apply_get_reply(*get);
      done.ut = get->ut;
      done.gst = get->gst;
    } else {
      const auto& put = std::get<PutReply>(env.msg);
      rt.proto.apply_put_reply(put);
      done.value = action.value;
      done.ut = put.ut;
      done.gst = rt.proto.state().gst;
    }
    trace_.records.push_back(std::move(done));
    rt.in_flight = false;
    ++rt.next;
    schedule_next_op(c, now_ + rt.script->think_time);
  }

  SimConfig cfg_;
  Topology topo_;
  std::vector<Partition> parts_;
  std::vector<Recorded> recorded_;
  std::vector<ClientRuntime> clients_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  std::deque<Envelope> envelopes_;
  std::map<std::pair<NodeId, NodeId>, Micros> last_delivery_;
  std::map<std::pair<NodeId, NodeId>, std::mt19937_64> link_rng_;
  Trace trace_;
  Micros now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t next_msg_id_ = 1;
  OpId next_op_id_ = 1;
};

}  // namespace

SimResult run_scenario(const SimConfig& config) { return Simulator(config).run(); }

}  // namespace gentlerain
