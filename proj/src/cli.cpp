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

#include "gentlerain/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "gentlerain/bench.hpp"
#include "gentlerain/checker.hpp"
#include "gentlerain/config.hpp"
#include "gentlerain/net.hpp"
#include "gentlerain/trace.hpp"
#include "gentlerain/wire.hpp"

namespace gentlerain {

namespace {

// Raised for bad flag values found after CLI11 has parsed them.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> number_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const std::string& s : split(text, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || v < 0) throw UsageError(flag + ": '" + s + "' is not a non-negative number");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(flag + " must list at least one value");
  return out;
}

Variant variant_flag(const std::string& name) {
  try {
    return parse_variant(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--variant: ") + e.what());
  }
}

// Writes to `path` when set; stdout always gets a copy.
void emit(std::ostream& out, const std::string& path, const std::string& text) {
  out << text;
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
  std::optional<Micros> until;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  ExperimentConfig cfg = load_experiment_config(a.config);
  if (!a.variant.empty()) cfg.sim.protocol.variant = variant_flag(a.variant);
  if (a.until) {
    if (*a.until <= 0) throw UsageError("--until must be > 0");
    cfg.sim.until = *a.until;
    cfg.until_set = true;
  }
  const std::uint64_t seed = a.seed.value_or(cfg.sim.seed);
  const SimResult r = run_scenario(cfg.build(seed));
  const std::string path = !a.out.empty() ? a.out
                           : !cfg.trace_out.empty() ? cfg.trace_out
                                                    : cfg.scenario + ".ndjson";
  write_trace_file(path, r.trace);

  std::size_t ops = 0;
  std::size_t messages = 0;
  for (const Record& rec : r.trace.records) {
    ops += std::holds_alternative<rec::OpComplete>(rec);
    messages += std::holds_alternative<rec::MsgSend>(rec);
  }
  std::ostringstream line;
  line << "scenario=" << cfg.scenario << " variant=" << variant_name(r.trace.header().protocol.variant)
       << " seed=" << seed << " ops=" << ops << " messages=" << messages
       << " max_c=" << max_counter(r.trace) << " starved=" << (r.starved ? 1 : 0)
       << " trace=" << path << " hash=" << hex64(trace_hash(r.trace)) << "\n";
  emit(out, cfg.summary_out, line.str());
  return kExitPass;
}

// ---- check ----------------------------------------------------------------

struct CheckArgs {
  std::string trace;
  std::string properties = "all";
  std::string out;
};

int cmd_check(const CheckArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<Property> props;
  for (const std::string& name : split(a.properties, ',')) {
    if (name == "all") {
      for (Property p : all_properties()) props.push_back(p);
      continue;
    }
    try {
      props.push_back(parse_property(name));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--properties: ") + e.what());
    }
  }
  if (props.empty()) throw UsageError("--properties must name at least one property");

  Trace trace;
  DependencyGraph graph;
  try {
    trace = read_trace_file(a.trace);
    graph = build_happens_before(trace);
  } catch (const TraceFormatError& e) {
    err << "trace error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const TraceIntegrityError& e) {
    err << "trace integrity error: " << e.what() << "\n";
    return kExitRuntime;
  }

  int rc = kExitPass;
  std::ostringstream report;
  for (Property p : props) {
    Verdict v;
    try {
      v = check(trace, graph, p);
    } catch (const PreconditionError& e) {
      err << property_name(p) << ": not applicable: " << e.what() << "\n";
      return kExitUsage;
    } catch (const TraceIntegrityError& e) {
      err << "trace integrity error: " << e.what() << "\n";
      return kExitRuntime;
    }
    out << property_name(p) << ": " << (v.pass ? "PASS" : "FAIL");
    if (!v.pass) out << " (" << v.violations << " violations)";
    if (!v.detail.empty()) out << " " << v.detail;
    out << "\n";
    if (!v.pass) {
      out << "  witness: " << verdict_to_json(v) << "\n";
      rc = kExitFail;
    }
    report << verdict_to_json(v) << "\n";
  }
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw std::runtime_error("cannot write '" + a.out + "'");
    f << report.str();
  }
  return rc;
}

// ---- sweep-skew -----------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string skews;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> puts;
  std::string out;
};

int cmd_sweep(const SweepArgs& a, bool skews_given, std::ostream& out) {
  SweepSpec spec;
  if (!a.config.empty()) spec = load_experiment_config(a.config).sweep;
  if (skews_given) {
    spec.skews.clear();
    for (double ms : number_list(a.skews, "--skews")) spec.skews.push_back(std::llround(ms * 1'000));
  }
  if (!a.seeds.empty()) spec.seeds = a.seeds;
  if (a.puts) spec.puts = *a.puts;
  if (spec.puts == 0) throw UsageError("--puts must be > 0");

  std::ostringstream table;
  table << "skew_ms\tvariant\tmean_response_us\tp99_response_us\tmean_delay_us\n";
  for (const SkewRow& row : sweep_skew(spec.skews, spec.seeds, spec.puts)) {
    table << fmt(static_cast<double>(row.skew) / 1'000.0) << "\t" << variant_name(row.variant)
          << "\t" << fmt(row.mean_response) << "\t" << fmt(row.p99_response) << "\t"
          << fmt(row.mean_delay) << "\n";
  }
  emit(out, a.out, table.str());
  return kExitPass;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::string sizes;
  std::optional<long> duration_ms;
  std::optional<unsigned> repetitions;
  std::optional<unsigned> workers;
  std::string variant;
  std::string out;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  BenchSpec spec;
  if (!a.config.empty()) spec = load_experiment_config(a.config).bench;
  if (!a.sizes.empty()) {
    spec.value_sizes.clear();
    for (double s : number_list(a.sizes, "--sizes")) spec.value_sizes.push_back(static_cast<std::size_t>(s));
  }
  if (a.duration_ms) {
    if (*a.duration_ms <= 0) throw UsageError("--duration must be > 0 ms");
    spec.duration = std::chrono::milliseconds(*a.duration_ms);
  }
  if (a.repetitions) spec.repetitions = *a.repetitions;
  if (a.workers) spec.workers = *a.workers;
  if (spec.repetitions < 1) throw UsageError("--repetitions must be >= 1");
  if (spec.workers < 1) throw UsageError("--workers must be >= 1");
  for (std::size_t s : spec.value_sizes) {
    if (s > 0xFFFF) throw UsageError("--sizes: value sizes must be <= 65535");
  }

  std::ostringstream table;
  if (!a.variant.empty()) {
    const Variant v = variant_flag(a.variant);
    table << "value_size\tvariant\tops_per_sec\n";
    for (std::size_t size : spec.value_sizes) {
      std::vector<double> runs;
      for (unsigned i = 0; i < spec.repetitions; ++i) {
        runs.push_back(clock_overhead_microbench(v, size, spec.duration, spec.workers));
      }
      table << size << "\t" << variant_name(v) << "\t" << fmt(median(runs), 0) << "\n";
    }
  } else {
    table << "value_size\tphysical_ops_per_sec\thybrid_ops_per_sec\tparity_ratio\tnoise\n";
    for (const ParityRow& row :
         parity_table(spec.value_sizes, spec.duration, spec.repetitions, spec.workers)) {
      table << row.value_size << "\t" << fmt(row.physical, 0) << "\t" << fmt(row.hybrid, 0) << "\t"
            << fmt(row.ratio, 4) << "\t" << fmt(row.noise, 4) << "\n";
    }
  }
  emit(out, a.out, table.str());
  return kExitPass;
}

// ---- serve / client -------------------------------------------------------

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct ServeArgs {
  std::string config;
  unsigned replica = 0;
  unsigned partition = 0;
  std::string variant;
  std::string listen;
  std::optional<double> heartbeat_ms;
  std::optional<double> stabilization_ms;
};

ClusterConfig cluster_with_overrides(const std::string& path, const std::string& variant,
                                     std::optional<double> heartbeat_ms,
                                     std::optional<double> stabilization_ms) {
  ClusterConfig cfg = load_cluster_config(path);
  if (!variant.empty()) cfg.protocol.variant = variant_flag(variant);
  if (heartbeat_ms) {
    if (!(*heartbeat_ms > 0)) throw UsageError("--heartbeat-ms must be > 0");
    cfg.protocol.heartbeat_interval = std::llround(*heartbeat_ms * 1'000);
  }
  if (stabilization_ms) {
    if (!(*stabilization_ms > 0)) throw UsageError("--stabilization-ms must be > 0");
    cfg.protocol.stabilization_interval = std::llround(*stabilization_ms * 1'000);
  }
  return cfg;
}

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  ClusterConfig cfg =
      cluster_with_overrides(a.config, a.variant, a.heartbeat_ms, a.stabilization_ms);
  if (a.replica >= cfg.topology.replicas || a.partition >= cfg.topology.partitions) {
    throw UsageError("--replica/--partition outside the cluster topology");
  }
  if (!a.listen.empty()) {
    try {
      cfg.addresses[std::size_t{a.replica} * cfg.topology.partitions + a.partition] =
          Endpoint::parse(a.listen);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--listen: ") + e.what());
    }
  }
  PartitionServer server(cfg, static_cast<ReplicaId>(a.replica),
                         static_cast<PartitionId>(a.partition));
  try {
    server.start();
  } catch (const BindError& e) {
    err << "bind error: " << e.what() << "\n";
    return kExitRuntime;
  }
  out << "serving partition (" << a.replica << ", " << a.partition << ") on port "
      << server.port() << " variant=" << variant_name(cfg.protocol.variant) << std::endl;
  g_interrupted = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.wait(&g_interrupted);
  server.stop();
  return kExitPass;
}

struct ClientArgs {
  std::string config;
  unsigned replica = 0;
  std::string script;
  long timeout_ms = 2'000;
  std::string out;
};

// Script lines: "put <key> <value>", "get <key> [expected]",
// "move <replica>", "sleep <ms>". Blank lines and '#' comments are skipped.
int cmd_client(const ClientArgs& a, std::ostream& out, std::ostream& err) {
  const ClusterConfig cfg = load_cluster_config(a.config);
  if (a.replica >= cfg.topology.replicas) throw UsageError("--replica outside the cluster topology");
  if (a.timeout_ms <= 0) throw UsageError("--timeout must be > 0 ms");
  std::ifstream file;
  std::istream* in = &std::cin;
  if (a.script != "-") {
    file.open(a.script);
    if (!file) throw UsageError("cannot read script '" + a.script + "'");
    in = &file;
  }
  NetClient client(cfg, static_cast<ReplicaId>(a.replica), std::chrono::milliseconds(a.timeout_ms));
  std::ostringstream log;
  int rc = kExitPass;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(*in, line)) {
    ++lineno;
    const auto words = split(line, ' ');
    if (words.empty() || words[0][0] == '#') continue;
    const std::string where = "script line " + std::to_string(lineno);
    try {
      if (words[0] == "put" && words.size() == 3) {
        const PutReply r = client.put(words[1], words[2]);
        log << "put " << words[1] << " ut=" << r.ut.str() << "\n";
      } else if (words[0] == "get" && (words.size() == 2 || words.size() == 3)) {
        const GetReply r = client.get(words[1]);
        log << "get " << words[1] << " = \"" << r.value << "\" ut=" << r.ut.str()
            << " gst=" << r.gst.str();
        if (words.size() == 3 && r.value != words[2]) {
          log << " MISMATCH expected \"" << words[2] << "\"";
          rc = kExitFail;
        }
        log << "\n";
      } else if (words[0] == "move" && words.size() == 2) {
        client.move_to(static_cast<ReplicaId>(std::stoul(words[1])));
        log << "move " << words[1] << "\n";
      } else if (words[0] == "sleep" && words.size() == 2) {
        std::this_thread::sleep_for(std::chrono::milliseconds(std::stol(words[1])));
      } else {
        throw UsageError(where + ": cannot parse '" + line + "'");
      }
    } catch (const TransportError& e) {
      out << log.str();
      err << where << ": transport error" << (e.retriable() ? " (retriable)" : "") << ": "
          << e.what() << "\n";
      return kExitRuntime;
    } catch (const std::invalid_argument& e) {
      throw UsageError(where + ": " + e.what());
    }
  }
  emit(out, a.out, log.str());
  return rc;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GentleRain+ experiment runner: simulate, check, sweep, benchmark, serve."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a configured scenario and write its trace");
  simulate->add_option("--config", sim.config, "Experiment config file")
      ->required()
      ->envname("GENTLERAIN_CONFIG");
  simulate->add_option("--seed", sim.seed, "Seed, overrides the config")->envname("GENTLERAIN_SEED");
  simulate->add_option("--out", sim.out, "Trace output path")->envname("GENTLERAIN_OUT");
  simulate->add_option("--variant", sim.variant, "physical or hybrid")->envname("GENTLERAIN_VARIANT");
  simulate->add_option("--until", sim.until, "Simulated end time in microseconds")
      ->envname("GENTLERAIN_UNTIL");

  CheckArgs chk;
  auto* checkcmd = app.add_subcommand("check", "Check consistency properties of a trace");
  checkcmd->add_option("trace,--trace", chk.trace, "Trace file (NDJSON)")->required();
  checkcmd->add_option("--properties", chk.properties,
                       "Comma list of causal+, causal++, convergence, stable-time, causality, all")
      ->envname("GENTLERAIN_PROPERTIES");
  checkcmd->add_option("--out", chk.out, "Write verdicts as JSON lines")->envname("GENTLERAIN_OUT");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep-skew", "Response time against clock skew, both variants");
  sweep->add_option("--config", sw.config, "Experiment config with a sweep section")
      ->envname("GENTLERAIN_CONFIG");
  auto* skews_opt = sweep->add_option("--skews", sw.skews, "Comma list of skews in ms");
  sweep->add_option("--seed", sw.seeds, "Seed (repeatable)")->envname("GENTLERAIN_SEED");
  sweep->add_option("--puts", sw.puts, "PUTs per run");
  sweep->add_option("--out", sw.out, "Also write the table here")->envname("GENTLERAIN_OUT");

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "Clock-path throughput microbenchmark");
  bench->add_option("--config", bn.config, "Experiment config with a bench section")
      ->envname("GENTLERAIN_CONFIG");
  bench->add_option("--sizes", bn.sizes, "Comma list of value sizes in bytes");
  bench->add_option("--duration", bn.duration_ms, "Milliseconds per (size, variant) cell");
  bench->add_option("--repetitions", bn.repetitions, "Runs per cell, median reported");
  bench->add_option("--workers", bn.workers, "Independent worker loops");
  bench->add_option("--variant", bn.variant, "Run only this variant")->envname("GENTLERAIN_VARIANT");
  bench->add_option("--out", bn.out, "Also write the table here")->envname("GENTLERAIN_OUT");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Serve one partition over TCP");
  serve->add_option("--config", sv.config, "Cluster config file")
      ->required()
      ->envname("GENTLERAIN_CONFIG");
  serve->add_option("--replica", sv.replica, "Replica id m")->envname("GENTLERAIN_REPLICA");
  serve->add_option("--partition", sv.partition, "Partition id n")->envname("GENTLERAIN_PARTITION");
  serve->add_option("--variant", sv.variant, "physical or hybrid")->envname("GENTLERAIN_VARIANT");
  serve->add_option("--listen", sv.listen, "host:port, overrides the address table")
      ->envname("GENTLERAIN_LISTEN");
  serve->add_option("--heartbeat-ms", sv.heartbeat_ms, "Heartbeat interval")
      ->envname("GENTLERAIN_HEARTBEAT_MS");
  serve->add_option("--stabilization-ms", sv.stabilization_ms, "Stabilization interval")
      ->envname("GENTLERAIN_STABILIZATION_MS");

  ClientArgs cl;
  auto* clientcmd = app.add_subcommand("client", "Run a get/put script against a cluster");
  clientcmd->add_option("--config", cl.config, "Cluster config file")
      ->required()
      ->envname("GENTLERAIN_CONFIG");
  clientcmd->add_option("--replica", cl.replica, "Home replica")->envname("GENTLERAIN_REPLICA");
  clientcmd->add_option("--script", cl.script, "Script file, - for stdin")->required();
  clientcmd->add_option("--timeout", cl.timeout_ms, "Per-request timeout in ms");
  clientcmd->add_option("--out", cl.out, "Also write the log here")->envname("GENTLERAIN_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (checkcmd->parsed()) return cmd_check(chk, out, err);
    if (sweep->parsed()) return cmd_sweep(sw, skews_opt->count() > 0, out);
    if (bench->parsed()) return cmd_bench(bn, out);
    if (serve->parsed()) return cmd_serve(sv, out, err);
    if (clientcmd->parsed()) return cmd_client(cl, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace gentlerain
