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

// Experiment and cluster configuration files: JSON with // and /* */
// comments allowed. Unknown fields are rejected so that typos surface.
// The schema is documented in configs/README.md.

#ifndef GENTLERAIN_CONFIG_HPP_
#define GENTLERAIN_CONFIG_HPP_

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gentlerain/bench.hpp"
#include "gentlerain/net.hpp"
#include "gentlerain/scenarios.hpp"
#include "gentlerain/sim.hpp"

namespace gentlerain {

/// Every message names the offending field by its dotted path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RandomClocks {
  bool enabled = false;
  Micros max_offset = 0;    // offsets uniform over [0, max_offset]
  double max_drift_ppm = 0;  // drifts uniform over [-max, max]
};

struct SweepSpec {
  std::vector<Micros> skews{0, 2'000, 4'000, 8'000, 16'000};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t puts = 1'000;
};

struct BenchSpec {
  std::vector<std::size_t> value_sizes{16, 128, 1024};
  std::chrono::milliseconds duration{400};
  unsigned repetitions = 5;
  unsigned workers = 1;
};

struct ExperimentConfig {
  /// "backward_clock", "moving_client" or "workload"; empty in files that
  /// only carry sweep or bench settings.
  std::string scenario;
  Micros jump_delta = -80'000;    // backward_clock
  MovingClientOptions moving;     // moving_client
  WorkloadSpec workload;          // workload
  RandomClocks random_clocks;     // workload
  /// Topology, protocol, clocks, network, seed and until. For scripted
  /// scenarios only the variant, seed and until are taken from it.
  SimConfig sim;
  bool until_set = false;
  SweepSpec sweep;
  BenchSpec bench;
  std::string trace_out;    // default trace path for simulate
  std::string summary_out;  // optional summary file

  /// The run for `seed`; identical (config, seed) pairs give identical runs.
  SimConfig build(std::uint64_t seed) const;
  SimConfig build() const { return build(sim.seed); }
};

ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::string& path);

ClusterConfig parse_cluster_config(std::string_view text);
ClusterConfig load_cluster_config(const std::string& path);

}  // namespace gentlerain

#endif  // GENTLERAIN_CONFIG_HPP_
