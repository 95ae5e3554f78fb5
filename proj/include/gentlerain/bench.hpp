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

// Workload generation, trace-derived metrics and the clock-path
// microbenchmark.

#ifndef GENTLERAIN_BENCH_HPP_
#define GENTLERAIN_BENCH_HPP_

#include <chrono>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gentlerain/sim.hpp"

namespace gentlerain {

enum class Assignment : std::uint8_t {
  RoundRobin,  // each client cycles over the partitions of its replica
  FixedHome,   // keys drawn uniformly from the whole key space
};

struct WorkloadSpec {
  std::uint32_t clients = 1;
  double put_fraction = 1.0;
  std::size_t value_size = 16;
  std::uint32_t key_space = 1'000;
  double rate = 1'000.0;            // target ops/s per client
  Micros duration = 1'000'000;      // sets ops per client as duration * rate
  std::size_t ops_per_client = 0;   // overrides duration when nonzero
  Assignment assignment = Assignment::RoundRobin;
  Micros start = 0;                 // first op issued no earlier than this

  std::size_t ops_for_each_client() const;
  void validate() const;
};

/// Deterministic in (spec, topology, seed). Client c lives at replica c % M.
/// Pacing: the first op is issued at `start`, the next one 1/rate after the
/// previous completes.
Workload generate_workload(const WorkloadSpec& spec, const Topology& topology,
                           std::uint64_t seed);

class EmptyReport : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Summary {
  std::size_t count = 0;
  double mean = 0;
  double p50 = 0;
  double p99 = 0;
  double max = 0;
};

Summary summarize(std::vector<double> samples);

struct MetricReport {
  Summary response;   // op start to completion, microseconds
  Summary put_delay;  // server-side wait per PUT, microseconds
  std::map<ReplicaId, Summary> visibility;  // per remote replica, microseconds
  std::size_t unresolved = 0;  // versions never stable at some remote replica
  double ops_per_sec = 0;
};

/// Response times and server-side deferral of PUT ops. Throws EmptyReport
/// when the trace has no completed PUT.
MetricReport measure_put_metrics(const Trace& trace);

/// For each version and each replica other than its source: the first time
/// gst at the owning partition there reaches ut, minus the write's
/// completion time (clamped at 0).
MetricReport measure_visibility_latency(const Trace& trace);

/// Least-squares fit y = a + b x.
struct LinearFit {
  double intercept = 0;
  double slope = 0;
  double r2 = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Two servers of one replica, the first ahead by `skew`, one client
/// alternating PUTs between them over links of 50 us plus up to 20 us jitter.
SimConfig skew_sweep_config(Variant variant, Micros skew, std::uint64_t seed,
                            std::size_t puts = 1'000);

struct SkewRow {
  Micros skew = 0;
  Variant variant = Variant::HybridClock;
  double mean_response = 0;  // microseconds, averaged over seeds
  double p99_response = 0;   // worst per-seed p99
  double mean_delay = 0;
};

/// One row per (skew, variant), both variants per skew, same seeds.
std::vector<SkewRow> sweep_skew(const std::vector<Micros>& skews,
                                const std::vector<std::uint64_t>& seeds,
                                std::size_t puts = 1'000);

/// PUT path of a single in-process partition on the host clock: decode a
/// PutReq frame, stamp and insert, encode the Replicate and PutReply frames.
/// Returns completed ops per second summed over `workers` loops.
double clock_overhead_microbench(Variant variant, std::size_t value_size,
                                 std::chrono::milliseconds duration, unsigned workers = 1);

struct ParityRow {
  std::size_t value_size = 0;
  double physical = 0;  // median ops/s
  double hybrid = 0;
  double ratio = 0;     // |hybrid - physical| / physical
  double noise = 0;     // largest (max - min) / median over the two variants
};

/// Median over `repetitions` runs. Within a run all (size, variant) cells are
/// interleaved in short slices and a run scores a cell by its median slice rate.
std::vector<ParityRow> parity_table(const std::vector<std::size_t>& value_sizes,
                                    std::chrono::milliseconds duration,
                                    unsigned repetitions = 5, unsigned workers = 1);

}  // namespace gentlerain

#endif  // GENTLERAIN_BENCH_HPP_
