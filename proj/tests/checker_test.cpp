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
#include <random>

#include "doctest.h"
#include "gentlerain/scenarios.hpp"
#include "json.hpp"
#include "oracle/visibility_oracle.hpp"
#include "oracle/witness_validator.hpp"

using namespace gentlerain;

namespace {

// Appends hand-written records in trace order.
struct TraceBuilder {
  Trace trace;
  OpId next = 1;

  TraceBuilder(std::uint16_t replicas, std::uint16_t partitions, std::uint32_t clients) {
    rec::Header h;
    h.scenario = "hand";
    h.topology = Topology{replicas, partitions};
    h.clients = clients;
    trace.records.push_back(h);
  }

  const Topology& topo() const { return trace.header().topology; }

  OpId put(Micros t, ClientId c, ReplicaId m, const std::string& key, const std::string& value,
           HlcTimestamp ut) {
    const OpId op = next++;
    const PartitionId n = topo().partition_of(key);
    trace.records.push_back(rec::OpStart{t, c, op, OpKind::Put, key, value, m, n, false});
    insert(t, m, key, value, ut, m);
    trace.records.push_back(
        rec::OpComplete{t + 1, c, op, OpKind::Put, key, value, ut, m, false, {}, m, n});
    return op;
  }

  OpId get(Micros t, ClientId c, ReplicaId m, const std::string& key, const std::string& value,
           HlcTimestamp ut, ReplicaId sr, bool initial = false) {
    const OpId op = next++;
    const PartitionId n = topo().partition_of(key);
    trace.records.push_back(rec::OpStart{t, c, op, OpKind::Get, key, "", m, n, false});
    trace.records.push_back(
        rec::OpComplete{t + 1, c, op, OpKind::Get, key, value, ut, sr, initial, {}, m, n});
    return op;
  }

  void insert(Micros t, ReplicaId m, const std::string& key, const std::string& value,
              HlcTimestamp ut, ReplicaId sr) {
    trace.records.push_back(
        rec::VersionInsert{t, m, topo().partition_of(key), key, value, ut, sr});
  }

  void gst(Micros t, ReplicaId m, PartitionId n, HlcTimestamp ts) {
    trace.records.push_back(rec::GstChange{t, m, n, ts});
  }
};

HlcTimestamp ts(std::uint64_t l, std::uint32_t c = 0) { return HlcTimestamp{l, c}; }

// Alice uploads a photo and then posts a status pointing at it. Bob, at the
// other replica, sees the status but not the photo.
Trace album_anomaly(const std::string& photo, const std::string& status) {
  TraceBuilder b(2, 2, 2);
  b.put(10, 0, 0, photo, "pic", ts(10));
  b.put(20, 0, 0, status, "look", ts(20));
  b.insert(30, 1, status, "look", ts(20), 0);
  b.gst(31, 1, b.topo().partition_of(status), ts(25));
  b.get(40, 1, 1, status, "look", ts(20), 0);
  b.get(50, 1, 1, photo, "", ts(0), 0, true);
  return b.trace;
}

struct Keys {
  std::string photo;
  std::string status;
};

Keys album_keys() {
  const Topology t{2, 2};
  return Keys{key_for_partition(t, 0, "photo"), key_for_partition(t, 1, "status")};
}

ClientAction put(std::string k, std::string v) {
  return ClientAction{OpKind::Put, std::move(k), std::move(v), 0, std::nullopt};
}
ClientAction get(std::string k) {
  return ClientAction{OpKind::Get, std::move(k), "", 0, std::nullopt};
}

// Random workload with skewed, drifting clocks and jitter on the wide-area
// and client links. Intra-replica links stay tight.
SimConfig random_config(std::uint64_t seed, Variant v, std::size_t ops_per_client = 40) {
  SimConfig cfg;
  cfg.topology = Topology{3, 2};
  cfg.protocol.variant = v;
  cfg.seed = seed;
  cfg.until = 2'000'000;
  cfg.network.intra_replica = LinkSpec{100, 20};
  cfg.network.inter_replica = LinkSpec{3'000, 4'000};
  cfg.network.client = LinkSpec{100, 300};
  std::mt19937_64 gen(seed);
  for (int i = 0; i < 6; ++i) {
    cfg.clocks.push_back(ClockModel{static_cast<Micros>(gen() % 10'000),
                                    static_cast<double>(gen() % 41) - 20.0, {}});
  }
  for (ClientId c = 0; c < 6; ++c) {
    ClientScript s;
    s.home = static_cast<ReplicaId>(c % 3);
    s.think_time = 200 + static_cast<Micros>(gen() % 800);
    for (std::size_t i = 0; i < ops_per_client; ++i) {
      const std::string key = "k" + std::to_string(gen() % 8);
      if (gen() % 3 == 0) {
        s.actions.push_back(put(key, "c" + std::to_string(c) + "-" + std::to_string(i)));
      } else {
        s.actions.push_back(get(key));
      }
    }
    cfg.workload.clients.push_back(s);
  }
  return cfg;
}

std::vector<oracle::Verdict> checker_visibility(const Trace& trace) {
  const DependencyGraph g = build_happens_before(trace);
  std::vector<oracle::Verdict> out;
  for (const VisibilityVerdict& v : visibility_verdicts(trace, g)) {
    out.push_back(oracle::Verdict{g.ops[v.get].op, v.key, v.visible});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("happens-before: program order and read-from edges") {
  TraceBuilder b(2, 1, 2);
  b.put(10, 0, 0, "a", "1", ts(10));
  b.put(20, 0, 0, "b", "2", ts(20));
  b.insert(30, 1, "b", "2", ts(20), 0);
  b.get(40, 1, 1, "b", "2", ts(20), 0);
  b.get(50, 1, 1, "a", "", ts(0), 0, true);
  const DependencyGraph g = build_happens_before(b.trace);
  REQUIRE(g.ops.size() == 4);
  CHECK(g.preds[1] == std::vector<std::size_t>{0});
  CHECK(g.read_from[2] == 1);
  CHECK(g.read_from[3] == DependencyGraph::kNone);
  CHECK(g.reaches(0, 3));
  CHECK_FALSE(g.reaches(3, 0));
  CHECK(g.path(0, 3) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(g.writer_of("b", ts(20), 0) == 1);
  CHECK(g.writer_of("b", ts(20), 1) == DependencyGraph::kNone);
  CHECK(g.topo_order.size() == 4);
}

TEST_CASE("happens-before: integrity errors") {
  SUBCASE("read of a version nobody wrote") {
    TraceBuilder b(1, 1, 1);
    b.get(10, 0, 0, "a", "x", ts(5), 0);
    CHECK_THROWS_AS(build_happens_before(b.trace), TraceIntegrityError);
  }
  SUBCASE("unmatched start") {
    TraceBuilder b(1, 1, 1);
    b.trace.records.push_back(rec::OpStart{1, 0, 9, OpKind::Get, "a", "", 0, 0, false});
    CHECK_THROWS_AS(build_happens_before(b.trace), TraceIntegrityError);
  }
  SUBCASE("completion without start") {
    TraceBuilder b(1, 1, 1);
    b.trace.records.push_back(
        rec::OpComplete{1, 0, 9, OpKind::Get, "a", "", {}, 0, true, {}, 0, 0});
    CHECK_THROWS_AS(build_happens_before(b.trace), TraceIntegrityError);
  }
  SUBCASE("value differs from the writer") {
    TraceBuilder b(1, 1, 2);
    b.put(10, 0, 0, "a", "1", ts(10));
    b.get(20, 1, 0, "a", "other", ts(10), 0);
    CHECK_THROWS_AS(build_happens_before(b.trace), TraceIntegrityError);
  }
}

TEST_CASE("album anomaly fails causal+ with a (photo, status) witness") {
  const Keys k = album_keys();
  const Trace trace = album_anomaly(k.photo, k.status);
  const DependencyGraph g = build_happens_before(trace);
  for (const Verdict& v : {check_causal_plus(trace, g), check_causal_plus_plus(trace, g)}) {
    CHECK_FALSE(v.pass);
    CHECK(v.violations >= 1);
    const auto visible = oracle::items(v, "visible");
    const auto dependency = oracle::items(v, "dependency");
    REQUIRE(visible.size() == 1);
    REQUIRE(dependency.size() == 1);
    CHECK(visible[0]->op->key == k.status);
    CHECK(dependency[0]->op->key == k.photo);
    CHECK(oracle::validate_causal_witness(v) == "");
  }
}

TEST_CASE("album without the anomaly passes") {
  const Keys k = album_keys();
  TraceBuilder b(2, 2, 2);
  b.put(10, 0, 0, k.photo, "pic", ts(10));
  b.put(20, 0, 0, k.status, "look", ts(20));
  b.insert(25, 1, k.photo, "pic", ts(10), 0);
  b.insert(30, 1, k.status, "look", ts(20), 0);
  b.gst(31, 1, 0, ts(25));
  b.gst(31, 1, 1, ts(25));
  b.get(40, 1, 1, k.status, "look", ts(20), 0);
  b.get(50, 1, 1, k.photo, "pic", ts(10), 0);
  const DependencyGraph g = build_happens_before(b.trace);
  CHECK(check_causal_plus(b.trace, g).pass);
  CHECK(check_causal_plus_plus(b.trace, g).pass);
  CHECK(checker_visibility(b.trace) == oracle::visibility(b.trace));
}

TEST_CASE("immediacy: a local read must see the completed local write") {
  TraceBuilder b(2, 1, 2);
  b.insert(5, 0, "a", "old", ts(5), 1);
  b.gst(6, 0, 0, ts(6));
  b.put(10, 0, 0, "a", "new", ts(10));
  b.get(20, 1, 0, "a", "old", ts(5), 1);
  // The writer of "old" lives at replica 1.
  b.trace.records.insert(b.trace.records.begin() + 1,
                         rec::OpStart{1, 1, 100, OpKind::Put, "a", "old", 1, 0, false});
  b.trace.records.insert(
      b.trace.records.begin() + 2,
      rec::OpComplete{2, 1, 100, OpKind::Put, "a", "old", ts(5), 1, false, {}, 1, 0});
  const DependencyGraph g = build_happens_before(b.trace);
  CHECK(check_causal_plus(b.trace, g).pass);
  const Verdict v = check_causal_plus_plus(b.trace, g);
  CHECK_FALSE(v.pass);
  CHECK(oracle::items(v, "write").size() == 1);
  CHECK(oracle::validate_causal_witness(v) == "");
}

TEST_CASE("backward clock verdicts") {
  const Trace phys = scripted_backward_clock_scenario(Variant::PhysicalClock).trace;
  const DependencyGraph gp = build_happens_before(phys);
  const Verdict cp = check_causal_plus(phys, gp);
  CHECK_FALSE(cp.pass);
  CHECK(oracle::validate_causal_witness(cp) == "");
  CHECK(oracle::items(cp, "visible").at(0)->op->value == "Y");
  CHECK(oracle::items(cp, "dependency").at(0)->op->value == "X");
  CHECK_FALSE(check_stable_time(phys, gp).pass);
  CHECK(check_convergence(phys, gp).pass);

  const Trace hyb = scripted_backward_clock_scenario(Variant::HybridClock).trace;
  const DependencyGraph gh = build_happens_before(hyb);
  for (Property p : all_properties()) {
    INFO(property_name(p));
    CHECK(check(hyb, gh, p).pass);
  }
  CHECK(checker_visibility(phys) == oracle::visibility(phys));
  CHECK(checker_visibility(hyb) == oracle::visibility(hyb));
}

TEST_CASE("moving client verdicts") {
  for (Variant v : {Variant::PhysicalClock, Variant::HybridClock}) {
    const Trace trace = scripted_moving_client_scenario(v).trace;
    const DependencyGraph g = build_happens_before(trace);
    const Verdict pp = check_causal_plus_plus(trace, g);
    CHECK_FALSE(pp.pass);
    CHECK(oracle::validate_causal_witness(pp) == "");
    CHECK(oracle::items(pp, "visible").at(0)->op->value == "v2^1");
    CHECK(oracle::items(pp, "dependency").at(0)->op->value == "v1^1");

    MovingClientOptions stay;
    stay.move = false;
    const Trace still = scripted_moving_client_scenario(v, stay).trace;
    const DependencyGraph gs = build_happens_before(still);
    CHECK(check_causal_plus_plus(still, gs).pass);
  }
}

TEST_CASE("random HybridClock runs keep causal+ and causal++") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    INFO("seed " << seed);
    const SimResult r = run_scenario(random_config(seed, Variant::HybridClock));
    REQUIRE_FALSE(r.starved);
    const DependencyGraph g = build_happens_before(r.trace);
    CHECK(check_causal_plus(r.trace, g).pass);
    CHECK(check_causal_plus_plus(r.trace, g).pass);
    CHECK(check_causality(r.trace, g).pass);
    CHECK(check_stable_time(r.trace, g).pass);
    CHECK(check_convergence(r.trace, g).pass);
  }
}

TEST_CASE("causal++ pass implies causal+ pass") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    for (Variant v : {Variant::PhysicalClock, Variant::HybridClock}) {
      const SimResult r = run_scenario(random_config(seed, v, 25));
      const DependencyGraph g = build_happens_before(r.trace);
      if (check_causal_plus_plus(r.trace, g).pass) CHECK(check_causal_plus(r.trace, g).pass);
    }
  }
  for (Variant v : {Variant::PhysicalClock, Variant::HybridClock}) {
    const Trace t = scripted_backward_clock_scenario(v).trace;
    const DependencyGraph g = build_happens_before(t);
    if (check_causal_plus_plus(t, g).pass) CHECK(check_causal_plus(t, g).pass);
  }
}

TEST_CASE("visibility verdicts agree with the brute-force oracle") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    for (Variant v : {Variant::PhysicalClock, Variant::HybridClock}) {
      INFO("seed " << seed);
      const SimResult r = run_scenario(random_config(seed, v, 20));
      CHECK(checker_visibility(r.trace) == oracle::visibility(r.trace));
    }
  }
  const Keys k = album_keys();
  const Trace album = album_anomaly(k.photo, k.status);
  const auto verdicts = oracle::visibility(album);
  CHECK(checker_visibility(album) == verdicts);
  REQUIRE(verdicts.size() == 1);
  CHECK_FALSE(verdicts[0].visible);
}

TEST_CASE("convergence") {
  SUBCASE("replicas agree under last-writer-wins") {
    TraceBuilder b(2, 1, 2);
    b.put(10, 0, 0, "a", "x", ts(10));
    b.put(10, 1, 1, "a", "y", ts(10));
    b.insert(20, 1, "a", "x", ts(10), 0);
    b.insert(20, 0, "a", "y", ts(10), 1);
    const DependencyGraph g = build_happens_before(b.trace);
    CHECK(check_convergence(b.trace, g).pass);
  }
  SUBCASE("a missing replicate diverges") {
    TraceBuilder b(2, 1, 2);
    b.put(10, 0, 0, "a", "x", ts(10));
    b.put(10, 1, 1, "a", "y", ts(10));
    b.insert(20, 1, "a", "x", ts(10), 0);
    const DependencyGraph g = build_happens_before(b.trace);
    const Verdict v = check_convergence(b.trace, g);
    CHECK_FALSE(v.pass);
    CHECK(oracle::items(v, "replica-max").size() == 2);
  }
  SUBCASE("replicas cut apart at the end are not compared") {
    TraceBuilder b(2, 1, 1);
    std::get<rec::Header>(b.trace.records[0]).partitions.push_back(
        PartitionWindow{{0}, {1}, 0, -1});
    b.put(10, 0, 0, "a", "x", ts(10));
    const DependencyGraph g = build_happens_before(b.trace);
    CHECK(check_convergence(b.trace, g).pass);
  }
  SUBCASE("replicates in flight") {
    TraceBuilder b(2, 1, 1);
    b.put(10, 0, 0, "a", "x", ts(10));
    b.trace.records.push_back(rec::MsgSend{11, 7, 0, 1, MessageKind::Replicate, ts(10), 0});
    const DependencyGraph g = build_happens_before(b.trace);
    CHECK_THROWS_AS(check_convergence(b.trace, g), PreconditionError);
  }
  SUBCASE("starved run") {
    TraceBuilder b(2, 1, 1);
    b.trace.records.push_back(rec::Starvation{100, {3}});
    const DependencyGraph g = build_happens_before(b.trace);
    CHECK_THROWS_AS(check_convergence(b.trace, g), PreconditionError);
  }
}

TEST_CASE("stable time: gst may not pass a version not yet inserted") {
  TraceBuilder b(2, 1, 1);
  b.put(10, 0, 0, "a", "x", ts(10));
  b.gst(20, 1, 0, ts(15));
  b.insert(30, 1, "a", "x", ts(10), 0);
  const DependencyGraph g = build_happens_before(b.trace);
  const Verdict v = check_stable_time(b.trace, g);
  CHECK_FALSE(v.pass);
  CHECK(oracle::items(v, "version").size() == 1);
}

TEST_CASE("causality: a later PUT needs a larger timestamp") {
  TraceBuilder b(1, 1, 1);
  std::get<rec::Header>(b.trace.records[0]).protocol.variant = Variant::PhysicalClock;
  b.put(10, 0, 0, "a", "x", ts(50));
  b.put(20, 0, 0, "b", "y", ts(40));
  const DependencyGraph g = build_happens_before(b.trace);
  const Verdict v = check_causality(b.trace, g);
  CHECK_FALSE(v.pass);
  CHECK(oracle::items(v, "path").size() == 2);

  // Under HybridClock the partition's own stamps must increase as well.
  std::get<rec::Header>(b.trace.records[0]).protocol.variant = Variant::HybridClock;
  const Verdict h = check_causality(b.trace, g);
  CHECK_FALSE(h.pass);
  CHECK(oracle::items(h, "stamp").size() == 1);
}

TEST_CASE("empty trace passes everything") {
  TraceBuilder b(2, 2, 0);
  const DependencyGraph g = build_happens_before(b.trace);
  for (Property p : all_properties()) CHECK(check(b.trace, g, p).pass);
  CHECK(max_counter(b.trace) == 0);
}

TEST_CASE("property names and JSON verdicts") {
  for (Property p : all_properties()) CHECK(parse_property(property_name(p)) == p);
  CHECK_THROWS_AS(parse_property("linearizable"), std::invalid_argument);

  const Keys k = album_keys();
  const Trace trace = album_anomaly(k.photo, k.status);
  const auto j = nlohmann::json::parse(
      verdict_to_json(check_causal_plus(trace, build_happens_before(trace))));
  CHECK(j.at("property") == "causal+");
  CHECK(j.at("outcome") == "fail");
  CHECK(j.at("witness").size() >= 2);
}
