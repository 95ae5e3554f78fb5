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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>
#include <unordered_map>

#include "gentlerain/wire.hpp"

namespace gentlerain {

// ---- workload -------------------------------------------------------------

std::size_t WorkloadSpec::ops_for_each_client() const {
  if (ops_per_client > 0) return ops_per_client;
  return static_cast<std::size_t>(std::llround(static_cast<double>(duration) * rate / 1e6));
}

void WorkloadSpec::validate() const {
  if (clients < 1) throw std::invalid_argument("workload.clients must be >= 1");
  if (!(put_fraction >= 0.0 && put_fraction <= 1.0)) {
    throw std::invalid_argument("workload.put_fraction must be in [0, 1]");
  }
  if (!(rate > 0.0)) throw std::invalid_argument("workload.rate must be > 0");
  if (key_space < 1) throw std::invalid_argument("workload.key_space must be >= 1");
  if (value_size > 0xFFFF) throw std::invalid_argument("workload.value_size must be <= 65535");
  if (ops_per_client == 0 && duration <= 0) {
    throw std::invalid_argument("workload.duration must be > 0");
  }
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

}  // namespace

Workload generate_workload(const WorkloadSpec& spec, const Topology& topology,
                           std::uint64_t seed) {
  spec.validate();
  topology.validate();
  std::vector<std::string> keys;
  std::vector<std::vector<std::size_t>> by_partition(topology.partitions);
  for (std::uint32_t i = 0; i < spec.key_space; ++i) {
    keys.push_back("k" + std::to_string(i));
    by_partition[topology.partition_of(keys.back())].push_back(i);
  }
  if (spec.assignment == Assignment::RoundRobin) {
    for (const auto& owned : by_partition) {
      if (owned.empty()) {
        throw std::invalid_argument("workload.key_space leaves a partition without keys");
      }
    }
  }

  static constexpr char kAlphabet[] =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  const auto think = std::max<Micros>(0, std::llround(1e6 / spec.rate));
  const std::size_t per_client = spec.ops_for_each_client();

  Workload w;
  for (std::uint32_t c = 0; c < spec.clients; ++c) {
    std::mt19937_64 gen(mix(seed ^ mix(c + 1)));
    ClientScript script;
    script.home = static_cast<ReplicaId>(c % topology.replicas);
    script.think_time = think;
    for (std::size_t i = 0; i < per_client; ++i) {
      ClientAction a;
      a.kind = spec.put_fraction >= 1.0 || unit(gen) < spec.put_fraction ? OpKind::Put
                                                                         : OpKind::Get;
      if (spec.assignment == Assignment::RoundRobin) {
        const auto& owned = by_partition[(c + i) % topology.partitions];
        a.key = keys[owned[gen() % owned.size()]];
      } else {
        a.key = keys[gen() % keys.size()];
      }
      if (a.kind == OpKind::Put) {
        a.value.resize(spec.value_size);
        for (char& ch : a.value) ch = kAlphabet[gen() % (sizeof(kAlphabet) - 1)];
      }
      a.not_before = i == 0 ? spec.start : 0;
      script.actions.push_back(std::move(a));
    }
    w.clients.push_back(std::move(script));
  }
  return w;
}

// ---- metrics --------------------------------------------------------------

Summary summarize(std::vector<double> samples) {
  Summary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
  auto rank = [&](double p) {
    const auto idx = static_cast<std::size_t>(std::ceil(p * samples.size()));
    return samples[std::min(samples.size() - 1, idx == 0 ? 0 : idx - 1)];
  };
  s.p50 = rank(0.50);
  s.p99 = rank(0.99);
  s.max = samples.back();
  return s;
}

MetricReport measure_put_metrics(const Trace& trace) {
  std::unordered_map<OpId, Micros> started;
  std::unordered_map<OpId, Micros> delay;
  std::vector<double> response;
  std::vector<double> delays;
  Micros first = -1;
  Micros last = 0;
  for (const Record& r : trace.records) {
    if (const auto* s = std::get_if<rec::OpStart>(&r)) {
      if (s->kind == OpKind::Put) started[s->op] = s->t;
    } else if (const auto* d = std::get_if<rec::PutDeferred>(&r)) {
      delay[d->op] += d->delay;
    } else if (const auto* c = std::get_if<rec::OpComplete>(&r)) {
      auto it = started.find(c->op);
      if (c->kind != OpKind::Put || it == started.end()) continue;
      response.push_back(static_cast<double>(c->t - it->second));
      delays.push_back(static_cast<double>(delay[c->op]));
      if (first < 0) first = it->second;
      first = std::min(first, it->second);
      last = std::max(last, c->t);
    }
  }
  if (response.empty()) throw EmptyReport("trace has no completed PUT operations");
  MetricReport m;
  m.response = summarize(std::move(response));
  m.put_delay = summarize(std::move(delays));
  if (last > first) m.ops_per_sec = m.response.count * 1e6 / static_cast<double>(last - first);
  return m;
}

MetricReport measure_visibility_latency(const Trace& trace) {
  const Topology topo = trace.header().topology;
  struct Write {
    std::string key;
    HlcTimestamp ut;
    ReplicaId sr;
    Micros done;
  };
  std::vector<Write> writes;
  std::vector<std::vector<std::pair<HlcTimestamp, Micros>>> gst(
      std::size_t{topo.replicas} * topo.partitions);
  for (const Record& r : trace.records) {
    if (const auto* c = std::get_if<rec::OpComplete>(&r)) {
      if (c->kind == OpKind::Put) writes.push_back(Write{c->key, c->ut, c->sr, c->t});
    } else if (const auto* g = std::get_if<rec::GstChange>(&r)) {
      // gst only grows, so each node's list is sorted by ts.
      gst.at(std::size_t{g->replica} * topo.partitions + g->partition).push_back({g->ts, g->t});
    }
  }
  MetricReport m;
  std::map<ReplicaId, std::vector<double>> samples;
  for (const Write& w : writes) {
    const PartitionId n = topo.partition_of(w.key);
    for (ReplicaId r = 0; r < topo.replicas; ++r) {
      if (r == w.sr) continue;
      const auto& list = gst[std::size_t{r} * topo.partitions + n];
      auto it = std::lower_bound(list.begin(), list.end(), w.ut,
                                 [](const auto& e, const HlcTimestamp& ut) { return e.first < ut; });
      if (it == list.end()) {
        ++m.unresolved;
        continue;
      }
      samples[r].push_back(static_cast<double>(std::max<Micros>(0, it->second - w.done)));
    }
  }
  for (auto& [r, s] : samples) m.visibility[r] = summarize(std::move(s));
  return m;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_line needs two equal-length series of >= 2 points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// ---- skew sweep -----------------------------------------------------------

SimConfig skew_sweep_config(Variant variant, Micros skew, std::uint64_t seed,
                            std::size_t puts) {
  SimConfig cfg;
  cfg.scenario = "skew_sweep";
  cfg.topology = Topology{1, 2};
  cfg.protocol.variant = variant;
  cfg.seed = seed;
  cfg.clocks = {ClockModel{skew, 0, {}}, ClockModel{0, 0, {}}};
  cfg.network.client = LinkSpec{50, 20};
  cfg.record_clock_reads = false;

  WorkloadSpec spec;
  spec.clients = 1;
  spec.put_fraction = 1.0;
  spec.ops_per_client = puts;
  spec.rate = 1e6;  // back to back
  spec.key_space = 1'000;
  spec.start = 1'000;
  cfg.workload = generate_workload(spec, cfg.topology, seed);
  cfg.until = spec.start + static_cast<Micros>(puts) * (skew + 1'000) + 100'000;
  return cfg;
}

std::vector<SkewRow> sweep_skew(const std::vector<Micros>& skews,
                                const std::vector<std::uint64_t>& seeds, std::size_t puts) {
  if (skews.empty()) throw std::invalid_argument("skew list is empty");
  if (seeds.empty()) throw std::invalid_argument("seed list is empty");
  std::vector<SkewRow> rows;
  for (Micros skew : skews) {
    for (Variant v : {Variant::PhysicalClock, Variant::HybridClock}) {
      SkewRow row{skew, v, 0, 0, 0};
      for (std::uint64_t seed : seeds) {
        const SimResult r = run_scenario(skew_sweep_config(v, skew, seed, puts));
        const MetricReport m = measure_put_metrics(r.trace);
        row.mean_response += m.response.mean / seeds.size();
        row.mean_delay += m.put_delay.mean / seeds.size();
        row.p99_response = std::max(row.p99_response, m.response.p99);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// ---- microbenchmark -------------------------------------------------------

namespace {

constexpr std::size_t kKeys = 1'024;
constexpr std::size_t kOpsPerPartition = 8'192;

std::size_t microbench_loop(Variant variant, std::size_t value_size,
                            std::chrono::steady_clock::time_point deadline, unsigned worker) {
  ProtocolConfig cfg;
  cfg.variant = variant;
  const Topology topo{2, 1};
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < kKeys; ++i) {
    keys.push_back("w" + std::to_string(worker) + "-k" + std::to_string(i));
  }
  const std::string value(value_size, 'v');
  std::size_t ops = 0;
  std::size_t sink = 0;
  while (std::chrono::steady_clock::now() < deadline) {
    Partition p(topo, cfg, 0, 0);
    for (std::size_t i = 0; i < kOpsPerPartition; ++i) {
      const std::string request = encode_frame(PutReq{keys[i % kKeys], value, HlcTimestamp{}});
      Message msg = decode_frame(request);
      const auto& req = std::get<PutReq>(msg);
      Partition::PutOutcome out;
      do {
        out = p.handle_put(req, wall_clock_micros());
      } while (out.deferred());
      for (const auto& peer : out.replicates) sink += encode_frame(peer.msg).size();
      sink += encode_frame(*out.reply).size();
      ++ops;
      if ((i & 255) == 255 && std::chrono::steady_clock::now() >= deadline) break;
    }
  }
  // Keeps the frame encoding observable to the optimizer.
  if (sink == 0) return 0;
  return ops;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

struct Measured {
  double ops = 0;
  double seconds = 0;
};

Measured measure(Variant variant, std::size_t value_size, std::chrono::nanoseconds duration,
                 unsigned workers) {
  const auto start = std::chrono::steady_clock::now();
  const auto deadline = start + duration;
  std::vector<std::size_t> counts(workers);
  std::vector<std::thread> threads;
  for (unsigned w = 1; w < workers; ++w) {
    threads.emplace_back([&, w] { counts[w] = microbench_loop(variant, value_size, deadline, w); });
  }
  counts[0] = microbench_loop(variant, value_size, deadline, 0);
  for (auto& t : threads) t.join();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return Measured{std::accumulate(counts.begin(), counts.end(), 0.0), secs};
}

}  // namespace

double clock_overhead_microbench(Variant variant, std::size_t value_size,
                                 std::chrono::milliseconds duration, unsigned workers) {
  if (duration.count() <= 0) throw std::invalid_argument("duration must be > 0");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  const Measured m = measure(variant, value_size, duration, workers);
  return m.ops / m.seconds;
}

std::vector<ParityRow> parity_table(const std::vector<std::size_t>& value_sizes,
                                    std::chrono::milliseconds duration, unsigned repetitions,
                                    unsigned workers) {
  if (value_sizes.empty()) throw std::invalid_argument("value size list is empty");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (duration.count() <= 0) throw std::invalid_argument("duration must be > 0");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");

  // Each repetition interleaves every (size, variant) cell in short slices so
  // that host load drifts hit all cells alike. The cell order is shuffled per
  // slice, since a cell right after a large-value cell inherits its heap
  // state. A repetition scores a cell by its median slice rate, which shrugs
  // off slices that lost the CPU.
  constexpr auto kSlice = std::chrono::milliseconds(20);
  const auto slices = std::max<std::int64_t>(1, duration / kSlice);
  const auto slice = std::chrono::duration_cast<std::chrono::nanoseconds>(duration) / slices;
  std::vector<std::pair<std::size_t, Variant>> cells;
  for (std::size_t i = 0; i < value_sizes.size(); ++i) {
    cells.emplace_back(i, Variant::PhysicalClock);
    cells.emplace_back(i, Variant::HybridClock);
  }
  std::mt19937_64 gen(0x5eed);
  std::vector<std::vector<double>> phys(value_sizes.size()), hyb(value_sizes.size());
  for (unsigned rep = 0; rep < repetitions; ++rep) {
    std::vector<std::vector<double>> cell_p(value_sizes.size()), cell_h(value_sizes.size());
    for (std::int64_t s = 0; s < slices; ++s) {
      std::shuffle(cells.begin(), cells.end(), gen);
      for (const auto& [i, v] : cells) {
        const Measured m = measure(v, value_sizes[i], slice, workers);
        (v == Variant::PhysicalClock ? cell_p[i] : cell_h[i]).push_back(m.ops / m.seconds);
      }
    }
    for (std::size_t i = 0; i < value_sizes.size(); ++i) {
      phys[i].push_back(median(cell_p[i]));
      hyb[i].push_back(median(cell_h[i]));
    }
  }

  std::vector<ParityRow> rows;
  for (std::size_t i = 0; i < value_sizes.size(); ++i) {
    ParityRow row;
    row.value_size = value_sizes[i];
    row.physical = median(phys[i]);
    row.hybrid = median(hyb[i]);
    row.ratio = std::abs(row.hybrid - row.physical) / row.physical;
    auto spread = [](const std::vector<double>& v, double med) {
      auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      return (*hi - *lo) / med;
    };
    row.noise = std::max(spread(phys[i], row.physical), spread(hyb[i], row.hybrid));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gentlerain
