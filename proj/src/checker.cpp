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

#include "gentlerain/checker.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace gentlerain {

namespace {

using json = nlohmann::json;
constexpr std::size_t kNone = DependencyGraph::kNone;

// (ut, sr) order used by the conflict policy.
bool older(const HlcTimestamp& ut1, ReplicaId sr1, const HlcTimestamp& ut2, ReplicaId sr2) {
  return ut1 != ut2 ? ut1 < ut2 : sr1 < sr2;
}

bool older_op(const OpRecord& a, const OpRecord& b) { return older(a.ut, a.sr, b.ut, b.sr); }

std::string op_label(const OpRecord& op) {
  return std::string(op.kind == OpKind::Put ? "PUT" : "GET") + "(" + op.key + ") op " +
         std::to_string(op.op) + " client " + std::to_string(op.client);
}

}  // namespace

// ---- graph ----------------------------------------------------------------

std::vector<std::size_t> DependencyGraph::path(std::size_t from, std::size_t to) const {
  if (from >= ops.size() || to >= ops.size()) return {};
  std::vector<std::size_t> parent(ops.size(), kNone);
  std::deque<std::size_t> frontier{from};
  parent[from] = from;
  while (!frontier.empty()) {
    const std::size_t x = frontier.front();
    frontier.pop_front();
    if (x == to) break;
    for (std::size_t y : succs[x]) {
      if (parent[y] == kNone) {
        parent[y] = x;
        frontier.push_back(y);
      }
    }
  }
  if (parent[to] == kNone) return {};
  std::vector<std::size_t> out{to};
  while (out.back() != from) out.push_back(parent[out.back()]);
  std::reverse(out.begin(), out.end());
  return out;
}

std::size_t DependencyGraph::writer_of(const std::string& key, const HlcTimestamp& ut,
                                       ReplicaId sr) const {
  auto it = writers.find({key, encode_compact(ut), sr});
  return it == writers.end() ? kNone : it->second;
}

DependencyGraph build_happens_before(const Trace& trace) {
  DependencyGraph g;
  std::unordered_map<OpId, std::size_t> by_op;
  std::unordered_map<ClientId, std::size_t> last_of_client;
  std::vector<bool> done;

  auto add_edge = [&](std::size_t a, std::size_t b) {
    g.succs[a].push_back(b);
    g.preds[b].push_back(a);
  };

  for (std::size_t pos = 0; pos < trace.records.size(); ++pos) {
    const Record& r = trace.records[pos];
    if (const auto* s = std::get_if<rec::OpStart>(&r)) {
      if (by_op.count(s->op)) {
        throw TraceIntegrityError("op " + std::to_string(s->op) + " started twice");
      }
      OpRecord op;
      op.index = g.ops.size();
      op.op = s->op;
      op.client = s->client;
      op.kind = s->kind;
      op.key = s->key;
      op.value = s->value;
      op.replica = s->replica;
      op.partition = s->partition;
      op.moving = s->moving;
      op.start_pos = pos;
      op.start_t = s->t;
      by_op[s->op] = op.index;
      g.ops.push_back(std::move(op));
      g.preds.emplace_back();
      g.succs.emplace_back();
      done.push_back(false);
      auto prev = last_of_client.find(s->client);
      if (prev != last_of_client.end()) {
        if (!done[prev->second]) {
          throw TraceIntegrityError("client " + std::to_string(s->client) +
                                    " started op " + std::to_string(s->op) +
                                    " with another op in flight");
        }
        add_edge(prev->second, g.ops.size() - 1);
      }
      last_of_client[s->client] = g.ops.size() - 1;
    } else if (const auto* c = std::get_if<rec::OpComplete>(&r)) {
      auto it = by_op.find(c->op);
      if (it == by_op.end()) {
        throw TraceIntegrityError("completion of unknown op " + std::to_string(c->op));
      }
      OpRecord& op = g.ops[it->second];
      if (done[op.index]) {
        throw TraceIntegrityError("op " + std::to_string(c->op) + " completed twice");
      }
      if (op.client != c->client || op.kind != c->kind || op.key != c->key) {
        throw TraceIntegrityError("completion of op " + std::to_string(c->op) +
                                  " does not match its start");
      }
      done[op.index] = true;
      op.value = c->value;
      op.ut = c->ut;
      op.sr = c->sr;
      op.initial = c->initial;
      op.replica = c->replica;
      op.partition = c->partition;
      op.gst = c->gst;
      op.complete_pos = pos;
      op.complete_t = c->t;
    }
  }
  for (const OpRecord& op : g.ops) {
    if (!done[op.index]) {
      throw TraceIntegrityError("op " + std::to_string(op.op) + " of client " +
                                std::to_string(op.client) + " never completed");
    }
  }

  for (const OpRecord& op : g.ops) {
    if (op.kind != OpKind::Put) continue;
    auto [it, fresh] = g.writers.emplace(
        std::make_tuple(op.key, encode_compact(op.ut), op.sr), op.index);
    if (!fresh) {
      throw TraceIntegrityError("two PUTs wrote key '" + op.key + "' at ut=" + op.ut.str() +
                                " sr=" + std::to_string(op.sr));
    }
  }
  g.read_from.assign(g.ops.size(), kNone);
  for (const OpRecord& op : g.ops) {
    if (op.kind != OpKind::Get || op.initial) continue;
    const std::size_t w = g.writer_of(op.key, op.ut, op.sr);
    if (w == kNone) {
      throw TraceIntegrityError(op_label(op) + " returned a version no PUT wrote: ut=" +
                                op.ut.str() + " sr=" + std::to_string(op.sr));
    }
    if (g.ops[w].value != op.value) {
      throw TraceIntegrityError(op_label(op) + " returned a value that differs from its writer");
    }
    g.read_from[op.index] = w;
    add_edge(w, op.index);
  }

  std::vector<std::size_t> indegree(g.ops.size());
  for (std::size_t i = 0; i < g.ops.size(); ++i) indegree[i] = g.preds[i].size();
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < g.ops.size(); ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  while (!ready.empty()) {
    const std::size_t x = ready.front();
    ready.pop_front();
    g.topo_order.push_back(x);
    for (std::size_t y : g.succs[x]) {
      if (--indegree[y] == 0) ready.push_back(y);
    }
  }
  if (g.topo_order.size() != g.ops.size()) {
    throw TraceIntegrityError("happens-before has a cycle");
  }
  return g;
}

// ---- dependency summaries -------------------------------------------------

namespace {

// Newest ancestor PUT per key, as sorted (key id, PUT op) pairs.
using AncMap = std::vector<std::pair<std::uint32_t, std::size_t>>;

struct Analysis {
  const DependencyGraph& g;
  std::unordered_map<std::string, std::uint32_t> key_ids;
  std::vector<std::string> keys;
  std::vector<std::uint32_t> op_key;
  std::vector<AncMap> snap;  // strict ancestors of each PUT; empty for GETs

  explicit Analysis(const DependencyGraph& graph) : g(graph) {
    for (const OpRecord& op : g.ops) op_key.push_back(id(op.key));
    snap.resize(g.ops.size());
    std::unordered_map<ClientId, AncMap> running;
    for (std::size_t x : g.topo_order) {
      const OpRecord& op = g.ops[x];
      AncMap& run = running[op.client];
      if (op.kind == OpKind::Put) {
        snap[x] = run;
        add(run, op_key[x], x);
      } else if (g.read_from[x] != kNone) {
        const std::size_t w = g.read_from[x];
        merge(run, snap[w]);
        add(run, op_key[w], w);
      }
    }
  }

  std::uint32_t id(const std::string& key) {
    auto [it, fresh] = key_ids.emplace(key, static_cast<std::uint32_t>(keys.size()));
    if (fresh) keys.push_back(key);
    return it->second;
  }

  bool newer_put(std::size_t a, std::size_t b) const { return older_op(g.ops[b], g.ops[a]); }

  void add(AncMap& m, std::uint32_t key, std::size_t put) const {
    auto it = std::lower_bound(m.begin(), m.end(), std::make_pair(key, std::size_t{0}));
    if (it != m.end() && it->first == key) {
      if (newer_put(put, it->second)) it->second = put;
    } else {
      m.insert(it, {key, put});
    }
  }

  void merge(AncMap& into, const AncMap& from) const {
    AncMap out;
    out.reserve(into.size() + from.size());
    auto a = into.begin();
    auto b = from.begin();
    while (a != into.end() || b != from.end()) {
      if (b == from.end() || (a != into.end() && a->first < b->first)) {
        out.push_back(*a++);
      } else if (a == into.end() || b->first < a->first) {
        out.push_back(*b++);
      } else {
        out.emplace_back(a->first, newer_put(b->second, a->second) ? b->second : a->second);
        ++a;
        ++b;
      }
    }
    into = std::move(out);
  }
};

struct StoredVersion {
  HlcTimestamp ut;
  ReplicaId sr;
  std::string value;
};

// Per-partition state rebuilt from the trace while walking it.
class Replay {
 public:
  Replay(const Trace& trace, Analysis& a)
      : topo_(trace.header().topology),
        chains_(std::size_t{topo_.replicas} * topo_.partitions),
        gst_(chains_.size()),
        a_(a) {}

  void apply(const Record& r) {
    if (const auto* ins = std::get_if<rec::VersionInsert>(&r)) {
      auto& chain = chains_[node(ins->replica, ins->partition)][a_.id(ins->key)];
      auto pos = std::find_if(chain.begin(), chain.end(), [&](const StoredVersion& v) {
        return older(v.ut, v.sr, ins->ut, ins->sr);
      });
      chain.insert(pos, StoredVersion{ins->ut, ins->sr, ins->value});
    } else if (const auto* g = std::get_if<rec::GstChange>(&r)) {
      gst_[node(g->replica, g->partition)] = g->ts;
    }
  }

  // Newest version of `key` that the GET rule would select at replica r
  // with the given client gst.
  const StoredVersion* select(ReplicaId r, std::uint32_t key, const HlcTimestamp& client_gst,
                              HlcTimestamp* effective) const {
    const std::size_t nd = node(r, topo_.partition_of(a_.keys[key]));
    const HlcTimestamp g = std::max(gst_[nd], client_gst);
    if (effective) *effective = g;
    auto it = chains_[nd].find(key);
    if (it == chains_[nd].end()) return nullptr;
    for (const StoredVersion& v : it->second) {
      if (v.sr == r || v.ut <= g) return &v;
    }
    return nullptr;
  }

  const std::vector<StoredVersion>& chain(ReplicaId r, std::uint32_t key) const {
    static const std::vector<StoredVersion> kEmpty;
    const auto& m = chains_[node(r, topo_.partition_of(a_.keys[key]))];
    auto it = m.find(key);
    return it == m.end() ? kEmpty : it->second;
  }

  const Topology& topology() const { return topo_; }

 private:
  std::size_t node(ReplicaId r, PartitionId n) const {
    if (r >= topo_.replicas || n >= topo_.partitions) {
      throw TraceIntegrityError("record names a partition outside the topology");
    }
    return std::size_t{r} * topo_.partitions + n;
  }

  Topology topo_;
  std::vector<std::unordered_map<std::uint32_t, std::vector<StoredVersion>>> chains_;
  std::vector<HlcTimestamp> gst_;
  Analysis& a_;
};

// Index from record position to the op completing there.
std::unordered_map<std::size_t, std::size_t> completions(const DependencyGraph& g) {
  std::unordered_map<std::size_t, std::size_t> out;
  for (const OpRecord& op : g.ops) out[op.complete_pos] = op.index;
  return out;
}

WitnessItem op_item(std::string role, const OpRecord& op) {
  WitnessItem w;
  w.role = std::move(role);
  w.op = op;
  w.version = op.version();
  return w;
}

void add_path(std::vector<WitnessItem>& out, const DependencyGraph& g, std::size_t from,
              std::size_t to) {
  for (std::size_t x : g.path(from, to)) out.push_back(op_item("path", g.ops[x]));
}

struct Finding {
  std::size_t pos = 0;
  std::vector<WitnessItem> witness;
  std::string detail;
};

struct Collector {
  std::size_t count = 0;
  std::optional<Finding> first;

  void add(std::size_t pos, const std::function<Finding()>& make) {
    ++count;
    if (!first || pos < first->pos) {
      first = make();
      first->pos = pos;
    }
  }

  Verdict verdict(std::string property) const {
    Verdict v;
    v.property = std::move(property);
    v.pass = count == 0;
    v.violations = count;
    if (first) {
      v.witness = first->witness;
      v.detail = first->detail;
    }
    return v;
  }
};

// Walks the trace once, evaluating the hypothetical reads behind causal+.
struct ReadChecks {
  std::vector<VisibilityVerdict> visibility;
  Collector hypothetical;  // dependency not selectable at the read's replica
  Collector observed;      // a later read by the same client missed a dependency
  Collector immediacy;     // a local write not returned by a later local read
};

ReadChecks run_read_checks(const Trace& trace, const DependencyGraph& g, bool want_immediacy) {
  Analysis a(g);
  Replay replay(trace, a);
  ReadChecks out;
  const auto done_at = completions(g);

  std::unordered_map<std::size_t, std::size_t> start_at;
  for (const OpRecord& op : g.ops) start_at[op.start_pos] = op.index;

  // Sticky dependencies per client: key -> (dependency PUT, read that exposed it).
  std::unordered_map<ClientId, std::map<std::uint32_t, std::pair<std::size_t, std::size_t>>> sticky;
  std::map<std::pair<ReplicaId, std::uint32_t>, std::size_t> local_best;
  std::unordered_map<std::size_t, std::size_t> required_local;

  for (std::size_t pos = 0; pos < trace.records.size(); ++pos) {
    const Record& r = trace.records[pos];
    replay.apply(r);

    if (want_immediacy) {
      if (auto s = start_at.find(pos); s != start_at.end()) {
        const OpRecord& op = g.ops[s->second];
        if (op.kind == OpKind::Get) {
          auto best = local_best.find({op.replica, a.op_key[op.index]});
          if (best != local_best.end()) required_local[op.index] = best->second;
        }
      }
    }

    auto c = done_at.find(pos);
    if (c == done_at.end()) continue;
    const OpRecord& op = g.ops[c->second];
    const std::uint32_t k1 = a.op_key[op.index];

    if (op.kind == OpKind::Put) {
      auto [it, fresh] = local_best.emplace(std::make_pair(op.replica, k1), op.index);
      if (!fresh && older_op(g.ops[it->second], op)) it->second = op.index;
      continue;
    }

    if (want_immediacy) {
      if (auto req = required_local.find(op.index); req != required_local.end()) {
        const OpRecord& w = g.ops[req->second];
        if (op.initial || older_op(op, w)) {
          out.immediacy.add(pos, [&] {
            Finding f;
            f.witness = {op_item("write", w), op_item("read", op)};
            f.detail = op_label(op) + " at replica " + std::to_string(op.replica) +
                       " started after " + op_label(w) + " completed there but returned an" +
                       " older version";
            return f;
          });
        }
      }
    }

    auto& mine = sticky[op.client];
    if (auto dep = mine.find(k1); dep != mine.end()) {
      const OpRecord& v2 = g.ops[dep->second.first];
      if (op.initial || older_op(op, v2)) {
        const std::size_t via = dep->second.second;
        out.observed.add(pos, [&] {
          Finding f;
          const OpRecord& read = g.ops[via];
          f.witness.push_back(op_item("visible", read));
          f.witness.push_back(op_item("dependency", v2));
          add_path(f.witness, g, v2.index, g.read_from[via]);
          f.witness.push_back(op_item("observed", op));
          f.detail = "client " + std::to_string(op.client) + " saw '" + read.value + "' of " +
                     read.key + ", which depends on '" + v2.value + "' of " + v2.key +
                     ", then read '" + op.value + "' of " + op.key;
          return f;
        });
      }
    }

    const std::size_t w = g.read_from[op.index];
    if (w == kNone) continue;
    for (const auto& [k2, dep] : a.snap[w]) {
      if (k2 == k1) continue;
      const OpRecord& v2 = g.ops[dep];
      VisibilityVerdict vv;
      vv.get = op.index;
      vv.key = a.keys[k2];
      vv.required_ut = v2.ut;
      vv.required_sr = v2.sr;
      const StoredVersion* sel = replay.select(op.replica, k2, op.gst, &vv.effective_gst);
      if (sel) {
        vv.selected = true;
        vv.selected_ut = sel->ut;
        vv.selected_sr = sel->sr;
      }
      vv.visible = sel && !older(sel->ut, sel->sr, v2.ut, v2.sr);
      if (!vv.visible) {
        out.hypothetical.add(pos, [&] {
          Finding f;
          f.witness.push_back(op_item("visible", op));
          f.witness.push_back(op_item("dependency", v2));
          add_path(f.witness, g, v2.index, w);
          for (const StoredVersion& present : replay.chain(op.replica, k2)) {
            WitnessItem item;
            item.role = "present";
            item.version = Version{a.keys[k2], present.value, present.ut, present.sr};
            item.replica = op.replica;
            f.witness.push_back(std::move(item));
          }
          WitnessItem stable;
          stable.role = "stable";
          stable.replica = op.replica;
          stable.partition = replay.topology().partition_of(a.keys[k2]);
          stable.ts = vv.effective_gst;
          f.witness.push_back(std::move(stable));
          f.detail = op_label(op) + " returned '" + op.value + "' at replica " +
                     std::to_string(op.replica) + " while its dependency '" + v2.value +
                     "' of " + v2.key + " was not selectable there";
          return f;
        });
      }
      out.visibility.push_back(std::move(vv));
    }
    for (const auto& [k2, dep] : a.snap[w]) {
      auto [it, fresh] = mine.emplace(k2, std::make_pair(dep, op.index));
      if (!fresh && a.newer_put(dep, it->second.first)) it->second = {dep, op.index};
    }
  }
  return out;
}

Verdict combine(std::string property, std::initializer_list<const Collector*> parts) {
  Collector all;
  for (const Collector* c : parts) {
    all.count += c->count;
    if (c->first && (!all.first || c->first->pos < all.first->pos)) all.first = c->first;
  }
  return all.verdict(std::move(property));
}

}  // namespace

std::vector<VisibilityVerdict> visibility_verdicts(const Trace& trace,
                                                   const DependencyGraph& graph) {
  return run_read_checks(trace, graph, false).visibility;
}

Verdict check_causal_plus(const Trace& trace, const DependencyGraph& graph) {
  const ReadChecks rc = run_read_checks(trace, graph, false);
  return combine("causal+", {&rc.hypothetical, &rc.observed});
}

Verdict check_causal_plus_plus(const Trace& trace, const DependencyGraph& graph) {
  const ReadChecks rc = run_read_checks(trace, graph, true);
  return combine("causal++", {&rc.hypothetical, &rc.observed, &rc.immediacy});
}

// ---- convergence ----------------------------------------------------------

Verdict check_convergence(const Trace& trace, const DependencyGraph& /*graph*/) {
  const rec::Header& header = trace.header();
  const Topology topo = header.topology;

  std::set<std::uint64_t> replicates;
  Micros end = 0;
  for (const Record& r : trace.records) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (!std::is_same_v<T, rec::Header>) end = std::max(end, x.t);
          if constexpr (std::is_same_v<T, rec::MsgSend>) {
            if (x.kind == MessageKind::Replicate) replicates.insert(x.id);
          } else if constexpr (std::is_same_v<T, rec::MsgDeliver> ||
                               std::is_same_v<T, rec::MsgDrop>) {
            replicates.erase(x.id);
          } else if constexpr (std::is_same_v<T, rec::Starvation>) {
            throw PreconditionError("trace ends with client ops in flight");
          }
        },
        r);
  }
  if (!replicates.empty()) {
    throw PreconditionError(std::to_string(replicates.size()) +
                            " replicate messages still in flight at the end of the trace");
  }

  // f-maximal version per (replica, key).
  std::map<std::pair<ReplicaId, std::string>, Version> best;
  std::set<std::string> keys;
  for (const Record& r : trace.records) {
    const auto* ins = std::get_if<rec::VersionInsert>(&r);
    if (!ins) continue;
    keys.insert(ins->key);
    Version v{ins->key, ins->value, ins->ut, ins->sr};
    auto [it, fresh] = best.emplace(std::make_pair(ins->replica, ins->key), v);
    if (!fresh) it->second = resolve_conflict(it->second, v);
  }

  auto connected = [&](ReplicaId a, ReplicaId b, PartitionId n) {
    const NodeId x = static_cast<NodeId>(a) * topo.partitions + n;
    const NodeId y = static_cast<NodeId>(b) * topo.partitions + n;
    return std::none_of(header.partitions.begin(), header.partitions.end(),
                        [&](const PartitionWindow& w) {
                          return w.separates(x, y) && w.active_at(end);
                        });
  };

  Collector bad;
  std::size_t serial = 0;
  for (const std::string& key : keys) {
    const PartitionId n = topo.partition_of(key);
    for (ReplicaId a = 0; a < topo.replicas; ++a) {
      for (ReplicaId b = a + 1; b < topo.replicas; ++b) {
        if (!connected(a, b, n)) continue;
        auto va = best.find({a, key});
        auto vb = best.find({b, key});
        const bool same = va != best.end() && vb != best.end() && va->second == vb->second;
        if (same) continue;
        bad.add(serial++, [&] {
          Finding f;
          for (auto [r, it] : {std::make_pair(a, va), std::make_pair(b, vb)}) {
            WitnessItem item;
            item.role = "replica-max";
            item.replica = r;
            item.partition = n;
            if (it != best.end()) {
              item.version = it->second;
            } else {
              item.note = "no version";
            }
            f.witness.push_back(std::move(item));
          }
          f.detail = "replicas " + std::to_string(a) + " and " + std::to_string(b) +
                     " disagree on key '" + key + "'";
          return f;
        });
      }
    }
  }
  return bad.verdict("convergence");
}

// ---- stable time ----------------------------------------------------------

Verdict check_stable_time(const Trace& trace, const DependencyGraph& /*graph*/) {
  const Topology topo = trace.header().topology;
  using Pending = std::tuple<HlcTimestamp, ReplicaId, std::string>;
  std::vector<std::map<Pending, Version>> pending(topo.replicas);
  std::vector<std::vector<HlcTimestamp>> gst(
      topo.replicas, std::vector<HlcTimestamp>(topo.partitions));
  Collector bad;

  auto report = [&](std::size_t pos, const Version& v, ReplicaId r, PartitionId n,
                    const HlcTimestamp& g) {
    bad.add(pos, [&] {
      Finding f;
      WitnessItem version;
      version.role = "version";
      version.version = v;
      WitnessItem stable;
      stable.role = "stable";
      stable.replica = r;
      stable.partition = n;
      stable.ts = g;
      f.witness = {version, stable};
      f.detail = "gst " + g.str() + " at replica " + std::to_string(r) + " partition " +
                 std::to_string(n) + " covers '" + v.value + "' of " + v.key + " (ut " +
                 v.ut.str() + ") before it arrived";
      return f;
    });
  };

  for (std::size_t pos = 0; pos < trace.records.size(); ++pos) {
    const Record& rr = trace.records[pos];
    if (const auto* ins = std::get_if<rec::VersionInsert>(&rr)) {
      if (ins->replica >= topo.replicas || ins->sr >= topo.replicas) {
        throw TraceIntegrityError("insert names a replica outside the topology");
      }
      const Version v{ins->key, ins->value, ins->ut, ins->sr};
      const Pending id{ins->ut, ins->sr, ins->key};
      if (ins->replica == ins->sr) {
        for (ReplicaId r = 0; r < topo.replicas; ++r) {
          if (r == ins->sr) continue;
          pending[r].emplace(id, v);
          for (PartitionId n = 0; n < topo.partitions; ++n) {
            if (ins->ut <= gst[r][n]) report(pos, v, r, n, gst[r][n]);
          }
        }
      } else {
        pending[ins->replica].erase(id);
      }
    } else if (const auto* g = std::get_if<rec::GstChange>(&rr)) {
      if (g->replica >= topo.replicas || g->partition >= topo.partitions) {
        throw TraceIntegrityError("gst record names a partition outside the topology");
      }
      gst[g->replica][g->partition] = g->ts;
      const auto& waiting = pending[g->replica];
      if (!waiting.empty() && std::get<0>(waiting.begin()->first) <= g->ts) {
        report(pos, waiting.begin()->second, g->replica, g->partition, g->ts);
      }
    }
  }
  return bad.verdict("stable-time");
}

// ---- causality ------------------------------------------------------------

Verdict check_causality(const Trace& trace, const DependencyGraph& graph) {
  const rec::Header& header = trace.header();
  Collector bad;

  // Newest ancestor PUT stamp along happens-before.
  std::vector<std::size_t> up(graph.ops.size(), kNone);
  for (std::size_t x : graph.topo_order) {
    std::size_t best = kNone;
    for (std::size_t q : graph.preds[x]) {
      for (std::size_t cand : {up[q], graph.ops[q].kind == OpKind::Put ? q : kNone}) {
        if (cand != kNone && (best == kNone || graph.ops[best].ut < graph.ops[cand].ut)) {
          best = cand;
        }
      }
    }
    up[x] = best;
    const OpRecord& op = graph.ops[x];
    if (op.kind == OpKind::Put && best != kNone && !(graph.ops[best].ut < op.ut)) {
      bad.add(op.complete_pos, [&] {
        Finding f;
        add_path(f.witness, graph, best, x);
        f.detail = op_label(op) + " stamped " + op.ut.str() + " after depending on " +
                   op_label(graph.ops[best]) + " stamped " + graph.ops[best].ut.str();
        return f;
      });
    }
  }

  if (header.protocol.variant == Variant::HybridClock) {
    const Topology topo = header.topology;
    struct Last {
      HlcTimestamp ts;
      Micros t = -1;
      bool heartbeat = false;
      bool any = false;
    };
    std::vector<Last> last(std::size_t{topo.replicas} * topo.partitions);
    auto emitted = [&](std::size_t pos, std::size_t node, const HlcTimestamp& ts, Micros t,
                       bool heartbeat) {
      Last& l = last.at(node);
      const bool same_event = heartbeat && l.heartbeat && l.t == t && l.ts == ts;
      if (l.any && !same_event && !(l.ts < ts)) {
        const HlcTimestamp before = l.ts;
        bad.add(pos, [&] {
          Finding f;
          WitnessItem item;
          item.role = "stamp";
          item.replica = static_cast<ReplicaId>(node / topo.partitions);
          item.partition = static_cast<PartitionId>(node % topo.partitions);
          item.ts = ts;
          item.note = "previous stamp " + before.str();
          f.witness = {item};
          f.detail = "partition stamp did not increase";
          return f;
        });
      }
      l = Last{ts, t, heartbeat, true};
    };
    for (std::size_t pos = 0; pos < trace.records.size(); ++pos) {
      const Record& r = trace.records[pos];
      if (const auto* ins = std::get_if<rec::VersionInsert>(&r)) {
        if (ins->replica == ins->sr) {
          emitted(pos, std::size_t{ins->replica} * topo.partitions + ins->partition, ins->ut,
                  ins->t, false);
        }
      } else if (const auto* s = std::get_if<rec::MsgSend>(&r)) {
        if (s->kind == MessageKind::Heartbeat && trace.is_partition_node(s->from)) {
          emitted(pos, s->from, s->ts, s->t, true);
        }
      }
    }
  }
  Verdict v = bad.verdict("causality");
  if (v.pass) v.detail = "max counter " + std::to_string(max_counter(trace));
  return v;
}

// ---- dispatch -------------------------------------------------------------

std::string_view property_name(Property p) {
  switch (p) {
    case Property::CausalPlus: return "causal+";
    case Property::CausalPlusPlus: return "causal++";
    case Property::Convergence: return "convergence";
    case Property::StableTime: return "stable-time";
    case Property::Causality: return "causality";
  }
  return "?";
}

std::vector<Property> all_properties() {
  return {Property::CausalPlus, Property::CausalPlusPlus, Property::Convergence,
          Property::StableTime, Property::Causality};
}

Property parse_property(std::string_view name) {
  for (Property p : all_properties()) {
    if (property_name(p) == name) return p;
  }
  throw std::invalid_argument("unknown property '" + std::string(name) +
                              "' (known: causal+, causal++, convergence, stable-time, causality)");
}

Verdict check(const Trace& trace, const DependencyGraph& graph, Property p) {
  switch (p) {
    case Property::CausalPlus: return check_causal_plus(trace, graph);
    case Property::CausalPlusPlus: return check_causal_plus_plus(trace, graph);
    case Property::Convergence: return check_convergence(trace, graph);
    case Property::StableTime: return check_stable_time(trace, graph);
    case Property::Causality: return check_causality(trace, graph);
  }
  throw std::invalid_argument("unknown property");
}

std::uint32_t max_counter(const Trace& trace) {
  std::uint32_t c = 0;
  for (const Record& r : trace.records) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, rec::OpComplete>) {
            c = std::max({c, x.ut.c, x.gst.c});
          } else if constexpr (std::is_same_v<T, rec::MsgSend> ||
                               std::is_same_v<T, rec::VvChange> ||
                               std::is_same_v<T, rec::LstChange> ||
                               std::is_same_v<T, rec::GstChange>) {
            c = std::max(c, x.ts.c);
          } else if constexpr (std::is_same_v<T, rec::VersionInsert>) {
            c = std::max(c, x.ut.c);
          }
        },
        r);
  }
  return c;
}

namespace {

json ts_json(const HlcTimestamp& ts) { return json::array({ts.l, ts.c}); }

json witness_json(const WitnessItem& w) {
  json j;
  j["role"] = w.role;
  if (w.op) {
    j["op"] = {{"op", w.op->op},
               {"client", w.op->client},
               {"kind", w.op->kind == OpKind::Put ? "put" : "get"},
               {"key", w.op->key},
               {"value", w.op->value},
               {"ut", ts_json(w.op->ut)},
               {"sr", w.op->sr},
               {"initial", w.op->initial},
               {"replica", w.op->replica},
               {"start", w.op->start_pos},
               {"complete", w.op->complete_pos}};
  }
  if (w.version) {
    j["version"] = {{"key", w.version->key},
                    {"value", w.version->value},
                    {"ut", ts_json(w.version->ut)},
                    {"sr", w.version->sr}};
  }
  if (w.replica) j["replica"] = *w.replica;
  if (w.partition) j["partition"] = *w.partition;
  if (w.ts) j["ts"] = ts_json(*w.ts);
  if (!w.note.empty()) j["note"] = w.note;
  return j;
}

}  // namespace

std::string verdict_to_json(const Verdict& verdict) {
  json j;
  j["property"] = verdict.property;
  j["outcome"] = verdict.pass ? "pass" : "fail";
  j["violations"] = verdict.violations;
  j["witness"] = json::array();
  for (const auto& w : verdict.witness) j["witness"].push_back(witness_json(w));
  if (!verdict.detail.empty()) j["detail"] = verdict.detail;
  return j.dump();
}

}  // namespace gentlerain
