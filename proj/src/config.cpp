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

#include "gentlerain/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gentlerain {

namespace {

using nlohmann::json;

// A JSON object being consumed field by field. finish() rejects whatever
// was not read.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& need(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError("config: missing field '" + name(key) + "'");
    used_.insert(key);
    return j_.at(key);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  Obj obj(const std::string& key) { return Obj(need(key), name(key)); }

  std::int64_t i64(const std::string& key) {
    const json& v = need(key);
    if (!v.is_number_integer()) fail(name(key), "must be an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t i64(const std::string& key, std::int64_t def) { return has(key) ? i64(key) : def; }

  std::uint64_t u64(const std::string& key) {
    const json& v = need(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(name(key), "must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::uint64_t u64(const std::string& key, std::uint64_t def) {
    return has(key) ? u64(key) : def;
  }

  double num(const std::string& key) {
    const json& v = need(key);
    if (!v.is_number()) fail(name(key), "must be a number");
    return v.get<double>();
  }
  double num(const std::string& key, double def) { return has(key) ? num(key) : def; }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = need(key);
    if (!v.is_boolean()) fail(name(key), "must be true or false");
    return v.get<bool>();
  }

  std::string str(const std::string& key) {
    const json& v = need(key);
    if (!v.is_string()) fail(name(key), "must be a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& key, const std::string& def) {
    return has(key) ? str(key) : def;
  }

  const json& arr(const std::string& key) {
    const json& v = need(key);
    if (!v.is_array()) fail(name(key), "must be an array");
    return v;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("config: unknown field '" + name(it.key()) + "'");
    }
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config: field '" + field + "' " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint16_t u16(Obj& o, const std::string& key) {
  const std::uint64_t v = o.u64(key);
  if (v > 0xFFFF) Obj::fail(o.name(key), "must be at most 65535");
  return static_cast<std::uint16_t>(v);
}

Topology parse_topology(Obj o) {
  Topology t;
  t.replicas = u16(o, "replicas");
  t.partitions = u16(o, "partitions");
  o.finish();
  if (t.replicas < 1) Obj::fail(o.name("replicas"), "must be >= 1");
  if (t.partitions < 1) Obj::fail(o.name("partitions"), "must be >= 1");
  return t;
}

Variant variant_field(Obj& o, const std::string& key) {
  try {
    return parse_variant(o.str(key));
  } catch (const std::invalid_argument& e) {
    Obj::fail(o.name(key), std::string("is invalid: ") + e.what());
  }
}

void parse_protocol(Obj o, ProtocolConfig& p, bool scripted) {
  if (o.has("variant")) p.variant = variant_field(o, "variant");
  if (!scripted) {
    p.heartbeat_interval = o.i64("heartbeat_us", p.heartbeat_interval);
    p.stabilization_interval = o.i64("stabilization_us", p.stabilization_interval);
    if (p.heartbeat_interval <= 0) Obj::fail(o.name("heartbeat_us"), "must be > 0");
    if (p.stabilization_interval <= 0) Obj::fail(o.name("stabilization_us"), "must be > 0");
  }
  o.finish();
}

LinkSpec parse_link(Obj o, LinkSpec def) {
  def.base = o.i64("base_us", def.base);
  def.jitter = o.i64("jitter_us", def.jitter);
  o.finish();
  if (def.base < 0) Obj::fail(o.name("base_us"), "must be >= 0");
  if (def.jitter < 0) Obj::fail(o.name("jitter_us"), "must be >= 0");
  return def;
}

std::vector<NodeId> node_list(Obj& o, const std::string& key) {
  std::vector<NodeId> out;
  for (const json& v : o.arr(key)) {
    if (!v.is_number_unsigned()) Obj::fail(o.name(key), "must hold node ids");
    out.push_back(v.get<NodeId>());
  }
  return out;
}

void parse_network(Obj o, NetworkModel& net) {
  if (o.has("intra_replica")) net.intra_replica = parse_link(o.obj("intra_replica"), net.intra_replica);
  if (o.has("inter_replica")) net.inter_replica = parse_link(o.obj("inter_replica"), net.inter_replica);
  if (o.has("client")) net.client = parse_link(o.obj("client"), net.client);
  if (o.has("overrides")) {
    const json& list = o.arr("overrides");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Obj e(list[i], o.name("overrides") + "[" + std::to_string(i) + "]");
      const auto from = static_cast<NodeId>(e.u64("from"));
      const auto to = static_cast<NodeId>(e.u64("to"));
      LinkSpec l{e.i64("base_us"), e.i64("jitter_us", 0)};
      e.finish();
      net.overrides[{from, to}] = l;
    }
  }
  if (o.has("partitions")) {
    const json& list = o.arr("partitions");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Obj e(list[i], o.name("partitions") + "[" + std::to_string(i) + "]");
      PartitionWindow w;
      w.side_a = node_list(e, "side_a");
      w.side_b = node_list(e, "side_b");
      w.from = e.i64("from_us");
      w.to = e.i64("to_us", -1);
      e.finish();
      if (w.to >= 0 && w.to <= w.from) Obj::fail(e.name("to_us"), "must be after from_us");
      net.partitions.push_back(std::move(w));
    }
  }
  o.finish();
}

ClockModel parse_clock(Obj& o) {
  ClockModel c;
  c.offset = o.i64("offset_us", 0);
  c.drift_ppm = o.num("drift_ppm", 0.0);
  if (o.has("jumps")) {
    const json& list = o.arr("jumps");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Obj j(list[i], o.name("jumps") + "[" + std::to_string(i) + "]");
      c.jumps.push_back(ClockJump{j.i64("at_us"), j.i64("delta_us")});
      j.finish();
    }
  }
  return c;
}

void parse_clocks(Obj o, ExperimentConfig& cfg) {
  const Topology& t = cfg.sim.topology;
  if (o.has("random")) {
    Obj r = o.obj("random");
    cfg.random_clocks.enabled = true;
    cfg.random_clocks.max_offset = r.i64("max_offset_us");
    cfg.random_clocks.max_drift_ppm = r.num("max_drift_ppm", 0.0);
    r.finish();
    if (cfg.random_clocks.max_offset < 0) Obj::fail(r.name("max_offset_us"), "must be >= 0");
  }
  if (o.has("nodes")) {
    cfg.sim.clocks.assign(std::size_t{t.replicas} * t.partitions, ClockModel{});
    const json& list = o.arr("nodes");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Obj e(list[i], o.name("nodes") + "[" + std::to_string(i) + "]");
      const auto m = e.u64("replica");
      const auto n = e.u64("partition");
      if (m >= t.replicas) Obj::fail(e.name("replica"), "is outside the topology");
      if (n >= t.partitions) Obj::fail(e.name("partition"), "is outside the topology");
      cfg.sim.clocks[m * t.partitions + n] = parse_clock(e);
      e.finish();
    }
  }
  o.finish();
}

void parse_workload(Obj o, WorkloadSpec& w) {
  w.clients = static_cast<std::uint32_t>(o.u64("clients"));
  w.put_fraction = o.num("put_fraction", w.put_fraction);
  w.value_size = o.u64("value_size", w.value_size);
  w.key_space = static_cast<std::uint32_t>(o.u64("key_space", w.key_space));
  w.rate = o.num("rate", w.rate);
  if (!o.has("ops_per_client") && !o.has("duration_us")) {
    throw ConfigError("config: missing field '" + o.name("ops_per_client") +
                      "' (or '" + o.name("duration_us") + "')");
  }
  w.ops_per_client = o.u64("ops_per_client", 0);
  w.duration = o.i64("duration_us", w.duration);
  const std::string a = o.str("assignment", "round_robin");
  if (a == "round_robin") {
    w.assignment = Assignment::RoundRobin;
  } else if (a == "fixed_home") {
    w.assignment = Assignment::FixedHome;
  } else {
    Obj::fail(o.name("assignment"), "must be round_robin or fixed_home");
  }
  w.start = o.i64("start_us", w.start);
  o.finish();
  try {
    w.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

template <typename T>
std::vector<T> number_list(Obj& o, const std::string& key, double scale = 1.0) {
  std::vector<T> out;
  for (const json& v : o.arr(key)) {
    if (!v.is_number() || v.get<double>() < 0) Obj::fail(o.name(key), "must hold non-negative numbers");
    out.push_back(static_cast<T>(std::llround(v.get<double>() * scale)));
  }
  return out;
}

}  // namespace

SimConfig ExperimentConfig::build(std::uint64_t seed) const {
  if (scenario.empty()) throw ConfigError("config: missing field 'scenario'");
  SimConfig out;
  if (scenario == "backward_clock") {
    out = backward_clock_config(sim.protocol.variant, jump_delta);
  } else if (scenario == "moving_client") {
    out = moving_client_config(sim.protocol.variant, moving);
  } else {
    out = sim;
    out.workload = generate_workload(workload, sim.topology, seed);
    if (random_clocks.enabled) {
      std::mt19937_64 gen(seed ^ 0xc10c4e5ULL);
      std::uniform_int_distribution<Micros> offset(0, random_clocks.max_offset);
      std::uniform_real_distribution<double> drift(-random_clocks.max_drift_ppm,
                                                   random_clocks.max_drift_ppm);
      out.clocks.resize(std::size_t{sim.topology.replicas} * sim.topology.partitions);
      for (ClockModel& c : out.clocks) {
        c.offset += offset(gen);
        c.drift_ppm += drift(gen);
      }
    }
  }
  out.seed = seed;
  if (until_set) out.until = sim.until;
  return out;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  const json j = parse_json(text);
  Obj o(j, "");
  ExperimentConfig cfg;
  // Sweep- and bench-only files may leave the scenario out.
  cfg.scenario = o.str("scenario", "");
  const bool scripted = cfg.scenario == "backward_clock" || cfg.scenario == "moving_client";
  if (!scripted && cfg.scenario != "workload" && !cfg.scenario.empty()) {
    Obj::fail("scenario", "must be backward_clock, moving_client or workload");
  }
  cfg.sim.scenario = cfg.scenario;

  if (o.has("protocol")) parse_protocol(o.obj("protocol"), cfg.sim.protocol, scripted);
  cfg.sim.seed = o.u64("seed", cfg.sim.seed);
  if (o.has("until_us")) {
    cfg.sim.until = o.i64("until_us");
    cfg.until_set = true;
    if (cfg.sim.until <= 0) Obj::fail("until_us", "must be > 0");
  }

  if (cfg.scenario == "backward_clock") {
    if (o.has("options")) {
      Obj opt = o.obj("options");
      cfg.jump_delta = opt.i64("jump_delta_us", cfg.jump_delta);
      opt.finish();
    }
  } else if (cfg.scenario == "moving_client") {
    if (o.has("options")) {
      Obj opt = o.obj("options");
      cfg.moving.partitioned = opt.boolean("partitioned", cfg.moving.partitioned);
      cfg.moving.move = opt.boolean("move", cfg.moving.move);
      cfg.moving.delayed_reads = opt.boolean("delayed_reads", cfg.moving.delayed_reads);
      opt.finish();
    }
  } else if (cfg.scenario == "workload") {
    cfg.sim.topology = parse_topology(o.obj("topology"));
    parse_workload(o.obj("workload"), cfg.workload);
    if (o.has("clocks")) parse_clocks(o.obj("clocks"), cfg);
    if (o.has("network")) parse_network(o.obj("network"), cfg.sim.network);
    cfg.sim.heartbeat_phase = o.i64("heartbeat_phase_us", 0);
    cfg.sim.stabilization_phase = o.i64("stabilization_phase_us", 0);
    cfg.sim.record_clock_reads = o.boolean("record_clock_reads", true);
  }

  if (o.has("sweep")) {
    Obj s = o.obj("sweep");
    if (s.has("skews_ms")) cfg.sweep.skews = number_list<Micros>(s, "skews_ms", 1'000.0);
    if (s.has("seeds")) cfg.sweep.seeds = number_list<std::uint64_t>(s, "seeds");
    cfg.sweep.puts = s.u64("puts", cfg.sweep.puts);
    s.finish();
    if (cfg.sweep.skews.empty()) Obj::fail("sweep.skews_ms", "must not be empty");
    if (cfg.sweep.seeds.empty()) Obj::fail("sweep.seeds", "must not be empty");
  }
  if (o.has("bench")) {
    Obj b = o.obj("bench");
    if (b.has("value_sizes")) cfg.bench.value_sizes = number_list<std::size_t>(b, "value_sizes");
    cfg.bench.duration = std::chrono::milliseconds(b.u64("duration_ms", cfg.bench.duration.count()));
    cfg.bench.repetitions = static_cast<unsigned>(b.u64("repetitions", cfg.bench.repetitions));
    cfg.bench.workers = static_cast<unsigned>(b.u64("workers", cfg.bench.workers));
    b.finish();
    if (cfg.bench.value_sizes.empty()) Obj::fail("bench.value_sizes", "must not be empty");
    if (cfg.bench.duration.count() <= 0) Obj::fail("bench.duration_ms", "must be > 0");
    if (cfg.bench.repetitions < 1) Obj::fail("bench.repetitions", "must be >= 1");
    if (cfg.bench.workers < 1) Obj::fail("bench.workers", "must be >= 1");
  }
  if (o.has("output")) {
    Obj out = o.obj("output");
    cfg.trace_out = out.str("trace", "");
    cfg.summary_out = out.str("summary", "");
    out.finish();
  }
  o.finish();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file(path));
}

ClusterConfig parse_cluster_config(std::string_view text) {
  const json j = parse_json(text);
  Obj o(j, "");
  ClusterConfig cfg;
  cfg.topology = parse_topology(o.obj("topology"));
  if (o.has("variant")) cfg.protocol.variant = variant_field(o, "variant");
  const double hb = o.num("heartbeat_ms", 5.0);
  const double st = o.num("stabilization_ms", 10.0);
  if (!(hb > 0)) Obj::fail("heartbeat_ms", "must be > 0");
  if (!(st > 0)) Obj::fail("stabilization_ms", "must be > 0");
  cfg.protocol.heartbeat_interval = std::llround(hb * 1'000);
  cfg.protocol.stabilization_interval = std::llround(st * 1'000);

  const json& rows = o.arr("addresses");
  if (rows.size() != cfg.topology.replicas) {
    Obj::fail("addresses", "must have one row per replica (" +
                               std::to_string(cfg.topology.replicas) + ")");
  }
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const std::string row = "addresses[" + std::to_string(m) + "]";
    if (!rows[m].is_array() || rows[m].size() != cfg.topology.partitions) {
      Obj::fail(row, "must list one address per partition (" +
                         std::to_string(cfg.topology.partitions) + ")");
    }
    for (std::size_t n = 0; n < rows[m].size(); ++n) {
      const std::string field = row + "[" + std::to_string(n) + "]";
      if (!rows[m][n].is_string()) Obj::fail(field, "must be a host:port string");
      try {
        cfg.addresses.push_back(Endpoint::parse(rows[m][n].get<std::string>()));
      } catch (const std::invalid_argument& e) {
        Obj::fail(field, std::string("is invalid: ") + e.what());
      }
    }
  }
  o.finish();
  return cfg;
}

ClusterConfig load_cluster_config(const std::string& path) {
  return parse_cluster_config(read_file(path));
}

}  // namespace gentlerain
