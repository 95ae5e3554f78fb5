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

#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "gentlerain/scenarios.hpp"

using namespace gentlerain;

namespace {

template <typename T>
std::vector<T> all(const Trace& trace) {
  std::vector<T> out;
  for (const auto& r : trace.records) {
    if (const auto* p = std::get_if<T>(&r)) out.push_back(*p);
  }
  return out;
}

ClientAction put(std::string k, std::string v, Micros at = 0) {
  return ClientAction{OpKind::Put, std::move(k), std::move(v), at, std::nullopt};
}
ClientAction get(std::string k, Micros at = 0) {
  return ClientAction{OpKind::Get, std::move(k), "", at, std::nullopt};
}

// A busy run with skew, drift and jitter on every link class.
SimConfig busy_config(std::uint64_t seed, Variant v) {
  SimConfig cfg;
  cfg.topology = Topology{3, 2};
  cfg.protocol.variant = v;
  cfg.seed = seed;
  cfg.until = 400'000;
  cfg.network.intra_replica = LinkSpec{100, 50};
  cfg.network.inter_replica = LinkSpec{2'000, 3'000};
  cfg.network.client = LinkSpec{100, 400};
  for (int i = 0; i < 6; ++i) {
    cfg.clocks.push_back(ClockModel{(i * 1'700) % 5'000, (i % 3) * 20.0 - 20.0, {}});
  }
  for (ClientId c = 0; c < 6; ++c) {
    ClientScript s;
    s.home = static_cast<ReplicaId>(c % 3);
    s.think_time = 500 + 100 * c;
    for (int i = 0; i < 40; ++i) {
      const std::string key = "k" + std::to_string((i * 7 + c) % 9);
      if ((i + c) % 3 == 0) {
        s.actions.push_back(put(key, "c" + std::to_string(c) + "-" + std::to_string(i)));
      } else {
        s.actions.push_back(get(key));
      }
    }
    cfg.workload.clients.push_back(s);
  }
  return cfg;
}

}  // namespace

TEST_CASE("clock model formula") {
  ClockModel m{500, 100.0, {ClockJump{1'000'000, -2'000}}};
  CHECK(m.read(0) == 500);
  CHECK(m.read(999'999) == 999'999 + 500 + 99);
  CHECK(m.read(1'000'000) == 1'000'000 + 500 + 100 - 2'000);
  CHECK(ClockModel{-10, 0, {}}.read(5) == 0);
  CHECK(ClockModel::fixed(42).read(0) == 42);
  CHECK(ClockModel::fixed(42).read(123'456) == 42);
}

TEST_CASE("single node: GET returns the preceding PUT") {
  SimConfig cfg;
  cfg.until = 50'000;
  ClientScript s;
  s.actions = {put("a", "hello"), get("a")};
  cfg.workload.clients = {s};
  const SimResult r = run_scenario(cfg);
  CHECK_FALSE(r.starved);
  const auto done = all<rec::OpComplete>(r.trace);
  REQUIRE(done.size() == 2);
  CHECK(done[1].value == "hello");
  CHECK(done[1].ut == done[0].ut);
}

TEST_CASE("identical inputs give byte-identical traces") {
  const SimConfig cfg = busy_config(11, Variant::HybridClock);
  std::ostringstream a, b;
  write_trace(a, run_scenario(cfg).trace);
  write_trace(b, run_scenario(cfg).trace);
  CHECK(a.str() == b.str());
  std::ostringstream c;
  write_trace(c, run_scenario(busy_config(12, Variant::HybridClock)).trace);
  CHECK(a.str() != c.str());
}

TEST_CASE("permanent partition: replica 1 never sees replica 0's writes") {
  SimConfig cfg;
  cfg.topology = Topology{2, 1};
  cfg.until = 100'000;
  cfg.network.partitions.push_back(PartitionWindow{{0}, {1}, 0, -1});
  ClientScript s;
  s.actions = {put("a", "1"), put("b", "2")};
  cfg.workload.clients = {s};
  const SimResult r = run_scenario(cfg);
  for (const auto& ins : all<rec::VersionInsert>(r.trace)) CHECK(ins.replica == 0);
  CHECK_FALSE(all<rec::MsgDrop>(r.trace).empty());
  for (const auto& d : all<rec::MsgDeliver>(r.trace)) {
    CHECK_FALSE((d.from < 2 && d.to < 2 && d.from != d.to));
  }
}

TEST_CASE("trace invariants over jittery runs") {
  for (Variant v : {Variant::PhysicalClock, Variant::HybridClock}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SimConfig cfg = busy_config(seed, v);
      cfg.network.partitions.push_back(PartitionWindow{{0, 1}, {2, 3}, 50'000, 80'000});
      const SimResult r = run_scenario(cfg);
      CHECK_FALSE(r.starved);
      const Trace& t = r.trace;

      // Exact matching of op starts and completions.
      std::map<OpId, int> open;
      for (const auto& s : all<rec::OpStart>(t)) ++open[s.op];
      for (const auto& c : all<rec::OpComplete>(t)) {
        REQUIRE(open[c.op] == 1);
        open[c.op] = 0;
      }

      // FIFO per ordered pair and no delivery across an active cut.
      std::map<std::uint64_t, rec::MsgSend> sent;
      for (const auto& s : all<rec::MsgSend>(t)) sent[s.id] = s;
      std::map<std::pair<NodeId, NodeId>, std::uint64_t> last;
      const PartitionWindow& cut = cfg.network.partitions[0];
      for (const auto& d : all<rec::MsgDeliver>(t)) {
        auto& prev = last[{d.from, d.to}];
        CHECK(prev < d.id);
        prev = d.id;
        if (cut.separates(d.from, d.to)) CHECK_FALSE(cut.active_at(d.t));
      }

      // Recorded clock reads follow the model.
      for (const auto& c : all<rec::ClockRead>(t)) {
        CHECK(c.pt == cfg.clocks[c.replica * 2 + c.partition].read(c.t));
      }

      // vv entries never move back under FIFO links (HybridClock stamps).
      if (v == Variant::HybridClock) {
        std::map<std::tuple<int, int, int>, HlcTimestamp> vv;
        for (const auto& c : all<rec::VvChange>(t)) {
          auto& cur = vv[{c.replica, c.partition, c.index}];
          CHECK(cur <= c.ts);
          cur = c.ts;
        }
      }

      // Every returned value is local or covered by the reply's gst.
      for (const auto& c : all<rec::OpComplete>(t)) {
        if (c.kind == OpKind::Get && !c.initial) {
          CHECK((c.sr == c.replica || c.ut <= c.gst));
        }
      }

      // Each local write fans out to the M-1 peers.
      std::map<std::tuple<std::string, std::uint64_t, int>, int> copies;
      for (const auto& ins : all<rec::VersionInsert>(t)) {
        ++copies[{ins.key, encode_compact(ins.ut), ins.sr}];
      }
      std::size_t replicates = 0;
      for (const auto& [id, s] : sent) {
        if (s.kind == MessageKind::Replicate) ++replicates;
      }
      CHECK(replicates == 2 * copies.size());
    }
  }
}

TEST_CASE("backward clock scenario: physical timestamps fall under remote gst") {
  const SimResult phys = scripted_backward_clock_scenario(Variant::PhysicalClock);
  const SimResult hyb = scripted_backward_clock_scenario(Variant::HybridClock);
  const SimResult clean = scripted_backward_clock_scenario(Variant::PhysicalClock, 0);

  auto min_margin = [](const Trace& t) {
    // Smallest (ut - gst at B at insertion time at A) over A's own writes.
    std::map<int, HlcTimestamp> gst_b;
    std::int64_t worst = INT64_MAX;
    for (const auto& r : t.records) {
      if (const auto* g = std::get_if<rec::GstChange>(&r)) {
        if (g->replica == 1) gst_b[g->partition] = g->ts;
      } else if (const auto* ins = std::get_if<rec::VersionInsert>(&r)) {
        if (ins->replica == 0 && ins->sr == 0) {
          for (const auto& [n, g] : gst_b) {
            worst = std::min(worst, static_cast<std::int64_t>(encode_compact(ins->ut)) -
                                        static_cast<std::int64_t>(encode_compact(g)));
          }
        }
      }
    }
    return worst;
  };
  CHECK(min_margin(phys.trace) <= 0);
  CHECK(min_margin(hyb.trace) > 0);
  CHECK(min_margin(clean.trace) > 0);
  CHECK(min_margin(scripted_backward_clock_scenario(Variant::HybridClock, 0).trace) > 0);

  // Under physical clocks the reader at B sees y but not x.
  const auto done = all<rec::OpComplete>(phys.trace);
  std::vector<std::string> reads;
  for (const auto& c : done) {
    if (c.client == 1) reads.push_back(c.value);
  }
  CHECK(reads == std::vector<std::string>{"Y", ""});
}

TEST_CASE("moving client scenario observations") {
  auto reads_of = [](const SimResult& r) {
    std::vector<std::string> out;
    for (const auto& c : all<rec::OpComplete>(r.trace)) {
      if (c.client == 2) out.push_back(c.value);
    }
    return out;
  };
  for (Variant v : {Variant::PhysicalClock, Variant::HybridClock}) {
    const SimResult cut = scripted_moving_client_scenario(v);
    CHECK(reads_of(cut) == std::vector<std::string>{"v2^1", "v1^0"});
    const auto moves = all<rec::ClientMove>(cut.trace);
    REQUIRE(moves.size() == 1);
    CHECK(moves[0].from == 0);
    CHECK(moves[0].to == 1);
    for (const auto& s : all<rec::OpStart>(cut.trace)) {
      CHECK(s.moving == (s.client == 2));
    }

    MovingClientOptions healed;
    healed.partitioned = false;
    healed.delayed_reads = true;
    CHECK(reads_of(scripted_moving_client_scenario(v, healed)) ==
          std::vector<std::string>{"v2^1", "v1^1"});

    MovingClientOptions stay;
    stay.move = false;
    CHECK(reads_of(scripted_moving_client_scenario(v, stay)) ==
          std::vector<std::string>{"v2^1", "v1^1"});
  }
}

TEST_CASE("deferred physical PUT resumes after the analytic wait") {
  SimConfig cfg;
  cfg.topology = Topology{1, 2};
  cfg.protocol.variant = Variant::PhysicalClock;
  cfg.until = 100'000;
  cfg.clocks = {ClockModel{5'000, 0, {}}, ClockModel{0, 0, {}}};
  const std::string a = key_for_partition(cfg.topology, 0, "a");
  const std::string b = key_for_partition(cfg.topology, 1, "b");
  ClientScript s;
  s.actions = {put(a, "1", 10'000), put(b, "2")};
  cfg.workload.clients = {s};
  const SimResult r = run_scenario(cfg);
  const auto deferred = all<rec::PutDeferred>(r.trace);
  REQUIRE(deferred.size() == 1);
  // a stamped 15'100 at server 0; b arrives at server 1 reading 10'300.
  CHECK(deferred[0].delay == 15'100 - 10'300 + 1);
  const auto done = all<rec::OpComplete>(r.trace);
  CHECK(done[1].ut == HlcTimestamp{15'101, 0});
}

TEST_CASE("starvation is reported, not thrown") {
  SimConfig cfg;
  cfg.topology = Topology{1, 1};
  cfg.until = 1'000;
  cfg.network.client = LinkSpec{5'000, 0};
  ClientScript s;
  s.actions = {put("a", "1")};
  cfg.workload.clients = {s};
  const SimResult r = run_scenario(cfg);
  CHECK(r.starved);
  CHECK(r.pending.size() == 1);
  CHECK(std::holds_alternative<rec::Starvation>(r.trace.records.back()));
}
