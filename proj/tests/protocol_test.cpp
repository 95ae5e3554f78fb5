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

#include "doctest.h"

using namespace gentlerain;

namespace {

HlcTimestamp ts(std::uint64_t l, std::uint32_t c = 0) { return HlcTimestamp{l, c}; }

ProtocolConfig config(Variant v) {
  ProtocolConfig cfg;
  cfg.variant = v;
  return cfg;
}

// First key of the form "<prefix><i>" owned by partition n.
std::string key_on(const Topology& topo, PartitionId n, const std::string& prefix = "k") {
  for (int i = 0;; ++i) {
    std::string k = prefix + std::to_string(i);
    if (topo.partition_of(k) == n) return k;
  }
}

}  // namespace

TEST_CASE("client GET bookkeeping") {
  Client c;
  CHECK(c.issue_get("a") == GetReq{"a", ts(0)});
  c.apply_get_reply(GetReply{"x", ts(8), ts(60)});
  CHECK(c.issue_get("a").gst == ts(60));
  CHECK(c.state().dt == ts(8));

  Client d;
  d.apply_get_reply(GetReply{"", ts(10), ts(5)});
  CHECK(d.apply_get_reply(GetReply{"v", ts(8), ts(9)}) == "v");
  CHECK(d.state().dt == ts(10));
  CHECK(d.state().gst == ts(9));
  d.apply_get_reply(GetReply{"", ts(12, 3), ts(1)});
  CHECK(d.state().dt == ts(12, 3));
  CHECK(d.state().gst == ts(9));
}

TEST_CASE("client PUT bookkeeping") {
  Client c;
  CHECK(c.issue_put("k", "v") == PutReq{"k", "v", ts(0)});
  c.apply_get_reply(GetReply{"", ts(40), ts(0)});
  CHECK(c.issue_put("k", "v").dt == ts(40));
  Client d;
  d.apply_put_reply(PutReply{ts(7)});
  CHECK(d.state().dt == ts(7));
  d.apply_put_reply(PutReply{ts(9, 9)});
  d.apply_put_reply(PutReply{ts(9, 1)});
  CHECK(d.state().dt == ts(9, 9));
}

TEST_CASE("two sequential PUTs: dt follows the second, larger ut") {
  for (Variant v : {Variant::PhysicalClock, Variant::HybridClock}) {
    Partition p(Topology{1, 1}, config(v), 0, 0);
    Client c;
    auto first = p.handle_put(c.issue_put("k", "1"), 50);
    REQUIRE_FALSE(first.deferred());
    c.apply_put_reply(*first.reply);
    auto second = p.handle_put(c.issue_put("k", "2"), 90);
    REQUIRE_FALSE(second.deferred());
    c.apply_put_reply(*second.reply);
    CHECK(c.state().dt == second.reply->ut);
    CHECK(first.reply->ut < second.reply->ut);
  }
}

TEST_CASE("GET rule: local versions are always selectable, remote ones need gst") {
  for (Variant v : {Variant::PhysicalClock, Variant::HybridClock}) {
    Partition p(Topology{2, 1}, config(v), 0, 0);
    auto local = p.handle_put(PutReq{"a", "local", ts(0)}, 3);
    REQUIRE(local.reply->ut.l == 3);
    REQUIRE(p.handle_replicate(Version{"a", "remote", ts(9), 1}, 1));

    auto r1 = p.handle_get(GetReq{"a", ts(5)});
    CHECK(r1.reply.value == "local");
    CHECK(r1.reply.ut.l == 3);
    CHECK(r1.reply.gst == ts(5));
    CHECK(r1.served_sr == 0);

    auto r2 = p.handle_get(GetReq{"a", ts(9)});
    CHECK(r2.reply.value == "remote");
    CHECK(r2.reply.ut == ts(9));
    CHECK(r2.served_sr == 1);

    auto r3 = p.handle_get(GetReq{"missing", ts(0)});
    CHECK(r3.initial);
    CHECK(r3.reply.ut == ts(0));
    CHECK(r3.reply.value.empty());
    CHECK(r3.reply.gst == ts(9));  // gst never moves back
  }
}

TEST_CASE("HybridClock PUT never waits and exceeds dt and the register") {
  Partition p(Topology{3, 1}, config(Variant::HybridClock), 1, 0);
  p.set_hlc(ts(100, 2));
  auto out = p.handle_put(PutReq{"k", "v", ts(100, 5)}, 99);
  REQUIRE_FALSE(out.deferred());
  CHECK(out.delay == 0);
  CHECK(out.reply->ut == ts(100, 6));
  CHECK(p.vv()[1] == ts(100, 6));
  CHECK(p.lrt() == 99);
  REQUIRE(out.replicates.size() == 2);
  for (const auto& pm : out.replicates) {
    CHECK(pm.replica != 1);
    CHECK(pm.partition == 0);
    CHECK(std::get<Replicate>(pm.msg).d == Version{"k", "v", ts(100, 6), 1});
  }
}

TEST_CASE("PhysicalClock PUT waits until the clock passes dt") {
  Partition p(Topology{2, 1}, config(Variant::PhysicalClock), 0, 0);
  auto wait = p.handle_put(PutReq{"k", "v", ts(120)}, 100);
  CHECK(wait.deferred());
  CHECK(wait.delay == 21);
  CHECK(p.chain("k").empty());
  CHECK(p.vv()[0] == ts(0));
  auto equal = p.handle_put(PutReq{"k", "v", ts(120)}, 120);
  CHECK(equal.delay == 1);
  auto done = p.handle_put(PutReq{"k", "v", ts(120)}, 121);
  REQUIRE_FALSE(done.deferred());
  CHECK(done.reply->ut == ts(121));
  // Same key again inside the same microsecond.
  auto again = p.handle_put(PutReq{"k", "w", ts(121)}, 122);
  CHECK(again.reply->ut == ts(122));
  auto tick = p.handle_put(PutReq{"k", "x", ts(0)}, 122);
  CHECK(tick.deferred());
  CHECK(tick.delay == 1);
}

TEST_CASE("replicate updates vv and ignores duplicates") {
  Partition p(Topology{2, 1}, config(Variant::HybridClock), 0, 0);
  Version d{"k", "v", ts(40, 1), 1};
  CHECK(p.handle_replicate(d, 1));
  CHECK(p.vv()[1] == ts(40, 1));
  CHECK_FALSE(p.handle_replicate(d, 1));
  CHECK(p.chain("k").size() == 1);
  CHECK_THROWS_AS(p.handle_replicate(Version{"k", "other", ts(40, 1), 1}, 1), DataCorruption);
  CHECK_THROWS_AS(p.handle_replicate(Version{"k", "v", ts(50), 0}, 0), ProtocolError);
  CHECK_THROWS_AS(p.handle_replicate(Version{"k", "v", ts(50), 0}, 1), ProtocolError);
  // Replicate does not advance the local register.
  CHECK(p.hlc().current() == ts(0));
}

TEST_CASE("chains stay ordered by (ut, sr) descending") {
  Partition p(Topology{3, 1}, config(Variant::HybridClock), 0, 0);
  p.handle_replicate(Version{"k", "a", ts(10), 2}, 2);
  p.handle_replicate(Version{"k", "b", ts(10), 1}, 1);
  p.handle_replicate(Version{"k", "c", ts(12), 1}, 1);
  p.handle_put(PutReq{"k", "d", ts(0)}, 11);
  const auto& chain = p.chain("k");
  REQUIRE(chain.size() == 4);
  for (std::size_t i = 1; i < chain.size(); ++i) CHECK(newer_than(chain[i - 1], chain[i]));
  CHECK(chain.front().value == "c");
}

TEST_CASE("heartbeat fires only after delta of silence") {
  ProtocolConfig cfg = config(Variant::HybridClock);
  cfg.heartbeat_interval = 5'000;
  Partition p(Topology{2, 1}, cfg, 0, 0);
  p.handle_put(PutReq{"k", "v", ts(0)}, 1'000);
  CHECK(p.heartbeat_tick(5'999).empty());
  auto hb = p.heartbeat_tick(6'000);
  REQUIRE(hb.size() == 1);
  const auto& h = std::get<Heartbeat>(hb[0].msg);
  CHECK(h.ts == ts(6'000));
  CHECK(h.from == 0);
  CHECK(p.vv()[0] == ts(6'000));
  CHECK(p.lrt() == 6'000);

  // A backward clock still yields an increasing heartbeat stamp.
  p.set_lrt(0);
  auto back = p.heartbeat_tick(5'500);
  CHECK(std::get<Heartbeat>(back[0].msg).ts == ts(6'000, 1));

  Partition q(Topology{2, 1}, cfg, 1, 0);
  q.handle_heartbeat(ts(77), 0);
  CHECK(q.vv()[0] == ts(77));
  CHECK_THROWS_AS(q.handle_heartbeat(ts(1), 1), ProtocolError);
}

TEST_CASE("stabilization: lst is min(vv), gst is min over partitions") {
  const Topology topo{2, 3};
  const ProtocolConfig cfg = config(Variant::HybridClock);
  std::vector<Partition> parts;
  for (PartitionId n = 0; n < 3; ++n) parts.emplace_back(topo, cfg, 0, n);
  const HlcTimestamp own[] = {ts(50), ts(30), ts(70)};
  const HlcTimestamp peer[] = {ts(40), ts(60), ts(80)};
  for (PartitionId n = 0; n < 3; ++n) {
    parts[n].set_vv(0, own[n]);
    parts[n].set_vv(1, peer[n]);
  }
  auto r1 = parts[1].stabilization_tick();
  CHECK(r1.lst == ts(30));
  REQUIRE(r1.messages.size() == 1);
  CHECK(r1.messages[0].partition == 0);
  auto r2 = parts[2].stabilization_tick();
  CHECK(r2.lst == ts(70));
  auto r0 = parts[0].stabilization_tick();
  CHECK(r0.lst == ts(40));
  CHECK(r0.messages.empty());  // round incomplete until reports arrive
  CHECK(parts[0].handle_lst_report(std::get<LstReport>(r1.messages[0].msg)).empty());
  auto bcast = parts[0].handle_lst_report(std::get<LstReport>(r2.messages[0].msg));
  REQUIRE(bcast.size() == 2);
  CHECK(parts[0].gst() == ts(30));
  for (const auto& pm : bcast) {
    parts[pm.partition].handle_gst_broadcast(std::get<GstBroadcast>(pm.msg));
    CHECK(parts[pm.partition].gst() == ts(30));
  }
  CHECK_THROWS_AS(parts[1].handle_lst_report(LstReport{ts(1), 2}), ProtocolError);

  Partition solo(Topology{2, 1}, cfg, 0, 0);
  solo.set_vv(0, ts(9));
  solo.set_vv(1, ts(4));
  CHECK(solo.stabilization_tick().lst == ts(4));
  CHECK(solo.gst() == ts(4));
}

TEST_CASE("resolve_conflict is last-writer-wins on (ut, sr)") {
  Version a{"k", "a", ts(10), 0};
  Version b{"k", "b", ts(10), 1};
  Version c{"k", "c", ts(11), 0};
  CHECK(&resolve_conflict(a, b) == &b);
  CHECK(&resolve_conflict(b, a) == &b);
  CHECK(&resolve_conflict(a, c) == &c);
  CHECK(&resolve_conflict(a, a) == &a);
  CHECK_THROWS_AS(resolve_conflict(a, Version{"k", "z", ts(10), 0}), DataCorruption);
  CHECK_THROWS_AS(resolve_conflict(a, Version{"j", "a", ts(10), 0}), std::invalid_argument);
}

TEST_CASE("config and topology validation") {
  CHECK_THROWS_AS((Topology{0, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((Topology{1, 0}).validate(), std::invalid_argument);
  ProtocolConfig bad;
  bad.heartbeat_interval = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(parse_variant("physical") == Variant::PhysicalClock);
  CHECK(parse_variant("HybridClock") == Variant::HybridClock);
  CHECK_THROWS_AS(parse_variant("lamport"), std::invalid_argument);
  CHECK(parse_kind("Replicate") == MessageKind::Replicate);
  CHECK_FALSE(parse_kind("Nope").has_value());
  CHECK(key_on(Topology{1, 4}, 3).size() > 1);
  Partition p(Topology{1, 4}, config(Variant::HybridClock), 0, 0);
  CHECK_THROWS_AS(p.handle_get(GetReq{key_on(Topology{1, 4}, 2), ts(0)}), ProtocolError);
}
