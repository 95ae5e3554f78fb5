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

#include "gentlerain/bench.hpp"

#include <cmath>

#include "doctest.h"

using namespace gentlerain;

namespace {

Trace header_only(std::uint16_t replicas) {
  Trace t;
  rec::Header h;
  h.topology = Topology{replicas, 1};
  t.records.push_back(h);
  return t;
}

}  // namespace

TEST_CASE("workload: put fraction and determinism") {
  WorkloadSpec spec;
  spec.clients = 4;
  spec.put_fraction = 0.3;
  spec.ops_per_client = 2'500;
  const Topology topo{2, 3};
  const Workload a = generate_workload(spec, topo, 7);
  const Workload b = generate_workload(spec, topo, 7);
  const Workload c = generate_workload(spec, topo, 8);
  REQUIRE(a.op_count() == 10'000);
  std::size_t puts = 0;
  bool same = true;
  bool differs = false;
  for (std::size_t i = 0; i < a.clients.size(); ++i) {
    CHECK(a.clients[i].home == i % 2);
    for (std::size_t j = 0; j < a.clients[i].actions.size(); ++j) {
      const auto& x = a.clients[i].actions[j];
      puts += x.kind == OpKind::Put;
      if (x.kind == OpKind::Put) CHECK(x.value.size() == spec.value_size);
      same = same && x.key == b.clients[i].actions[j].key &&
             x.value == b.clients[i].actions[j].value && x.kind == b.clients[i].actions[j].kind;
      differs = differs || x.key != c.clients[i].actions[j].key;
    }
  }
  CHECK(same);
  CHECK(differs);
  CHECK(std::abs(static_cast<double>(puts) / 10'000 - 0.3) < 0.03);
}

TEST_CASE("workload: round robin over two partitions alternates") {
  WorkloadSpec spec;
  spec.ops_per_client = 10;
  const Topology topo{1, 2};
  const Workload w = generate_workload(spec, topo, 1);
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < 10; ++i) {
    const PartitionId n = topo.partition_of(w.clients[0].actions[i].key);
    CHECK(n == i % 2);
    ++count[n];
  }
  CHECK(count[0] == 5);
  CHECK(count[1] == 5);
}

TEST_CASE("workload: pacing and validation") {
  WorkloadSpec spec;
  spec.rate = 500;
  spec.duration = 2'000'000;
  spec.start = 1'000;
  const Workload w = generate_workload(spec, Topology{1, 1}, 3);
  CHECK(w.clients[0].actions.size() == 1'000);
  CHECK(w.clients[0].think_time == 2'000);
  CHECK(w.clients[0].actions[0].not_before == 1'000);

  WorkloadSpec bad;
  bad.put_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = WorkloadSpec{};
  bad.rate = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("summary statistics") {
  const Summary s = summarize({5, 1, 4, 2, 3});
  CHECK(s.count == 5);
  CHECK(s.mean == doctest::Approx(3));
  CHECK(s.p50 == 3);
  CHECK(s.p99 == 5);
  CHECK(s.max == 5);
  CHECK(summarize({}).count == 0);
}

TEST_CASE("line fit") {
  const LinearFit exact = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(exact.intercept == doctest::Approx(1));
  CHECK(exact.slope == doctest::Approx(2));
  CHECK(exact.r2 == doctest::Approx(1));
  const LinearFit noisy = fit_line({0, 1, 2, 3}, {0, 2, 1, 3});
  CHECK(noisy.r2 < 1);
  CHECK(noisy.slope > 0);
}

TEST_CASE("put metrics") {
  CHECK_THROWS_AS(measure_put_metrics(header_only(1)), EmptyReport);

  SimConfig cfg = skew_sweep_config(Variant::PhysicalClock, 4'000, 1, 50);
  const MetricReport phys = measure_put_metrics(run_scenario(cfg).trace);
  CHECK(phys.response.count == 50);
  // Every other PUT lands on the server ahead by 4 ms and then on the one
  // behind, which waits out the gap.
  CHECK(phys.put_delay.max > 3'000);
  CHECK(phys.ops_per_sec > 0);

  cfg = skew_sweep_config(Variant::HybridClock, 4'000, 1, 50);
  const MetricReport hyb = measure_put_metrics(run_scenario(cfg).trace);
  CHECK(hyb.put_delay.max == 0);
  CHECK(hyb.response.mean < phys.response.mean);
}

TEST_CASE("visibility latency") {
  CHECK(measure_visibility_latency(header_only(1)).visibility.empty());

  SimConfig cfg;
  cfg.topology = Topology{2, 1};
  cfg.network.inter_replica = LinkSpec{10'000, 0};
  cfg.until = 300'000;
  ClientScript s;
  s.think_time = 1'000;
  for (int i = 0; i < 20; ++i) {
    s.actions.push_back(ClientAction{OpKind::Put, "k" + std::to_string(i), "v", 0, {}});
  }
  cfg.workload.clients.push_back(s);
  const MetricReport m = measure_visibility_latency(run_scenario(cfg).trace);
  REQUIRE(m.visibility.count(1) == 1);
  CHECK(m.visibility.at(1).count == 20);
  CHECK(m.unresolved == 0);
  CHECK(m.visibility.at(1).p50 >= 10'000);
  CHECK(m.visibility.at(1).max <= 10'000 + cfg.protocol.heartbeat_interval +
                                      2 * cfg.protocol.stabilization_interval + 1'000);
}

TEST_CASE("microbenchmark runs both clock paths") {
  CHECK(clock_overhead_microbench(Variant::PhysicalClock, 16, std::chrono::milliseconds(20)) > 0);
  CHECK(clock_overhead_microbench(Variant::HybridClock, 16, std::chrono::milliseconds(20), 2) > 0);
  CHECK_THROWS_AS(clock_overhead_microbench(Variant::HybridClock, 16, std::chrono::milliseconds(0)),
                  std::invalid_argument);
  const auto rows = parity_table({16, 64}, std::chrono::milliseconds(40), 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].value_size == 64);
  CHECK(rows[0].ratio >= 0);
}
