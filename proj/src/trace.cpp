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

#include "gentlerain/trace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gentlerain {

using nlohmann::json;

bool PartitionWindow::separates(NodeId x, NodeId y) const {
  auto in = [](const std::vector<NodeId>& side, NodeId id) {
    return std::find(side.begin(), side.end(), id) != side.end();
  };
  return (in(side_a, x) && in(side_b, y)) || (in(side_b, x) && in(side_a, y));
}

const rec::Header& Trace::header() const {
  if (records.empty() || !std::holds_alternative<rec::Header>(records.front())) {
    throw TraceFormatError("trace has no header record");
  }
  return std::get<rec::Header>(records.front());
}

NodeId Trace::partition_node(ReplicaId m, PartitionId n) const {
  return static_cast<NodeId>(m) * header().topology.partitions + n;
}

NodeId Trace::client_node(ClientId c) const {
  const auto& topo = header().topology;
  return static_cast<NodeId>(topo.replicas) * topo.partitions + c;
}

bool Trace::is_partition_node(NodeId id) const {
  const auto& topo = header().topology;
  return id < static_cast<NodeId>(topo.replicas) * topo.partitions;
}

namespace {

json ts_json(const HlcTimestamp& ts) { return json::array({ts.l, ts.c}); }

HlcTimestamp ts_from(const json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw TraceFormatError("timestamp must be [l, c]");
  }
  return HlcTimestamp{j.at(0).get<std::uint64_t>(), j.at(1).get<std::uint32_t>()};
}

const char* op_kind_name(OpKind k) { return k == OpKind::Get ? "get" : "put"; }

OpKind op_kind_from(const std::string& s) {
  if (s == "get") return OpKind::Get;
  if (s == "put") return OpKind::Put;
  throw TraceFormatError("unknown op kind '" + s + "'");
}

MessageKind msg_kind_from(const std::string& s) {
  auto k = parse_kind(s);
  if (!k) throw TraceFormatError("unknown message kind '" + s + "'");
  return *k;
}

json window_json(const PartitionWindow& w) {
  return json{{"a", w.side_a}, {"b", w.side_b}, {"from", w.from}, {"to", w.to}};
}

PartitionWindow window_from(const json& j) {
  PartitionWindow w;
  w.side_a = j.at("a").get<std::vector<NodeId>>();
  w.side_b = j.at("b").get<std::vector<NodeId>>();
  w.from = j.at("from").get<Micros>();
  w.to = j.at("to").get<Micros>();
  return w;
}

struct ToJson {
  json operator()(const rec::Header& r) const {
    json windows = json::array();
    for (const auto& w : r.partitions) windows.push_back(window_json(w));
    return json{{"type", "header"},
                {"scenario", r.scenario},
                {"replicas", r.topology.replicas},
                {"partitions", r.topology.partitions},
                {"variant", variant_name(r.protocol.variant)},
                {"heartbeat_us", r.protocol.heartbeat_interval},
                {"stabilization_us", r.protocol.stabilization_interval},
                {"clients", r.clients},
                {"seed", r.seed},
                {"until", r.until},
                {"cuts", windows}};
  }
  json operator()(const rec::OpStart& r) const {
    return json{{"type", "op_start"}, {"t", r.t},       {"client", r.client},
                {"op", r.op},         {"kind", op_kind_name(r.kind)},
                {"key", r.key},       {"value", r.value}, {"replica", r.replica},
                {"partition", r.partition}, {"moving", r.moving}};
  }
  json operator()(const rec::OpComplete& r) const {
    return json{{"type", "op_complete"}, {"t", r.t},
                {"client", r.client},    {"op", r.op},
                {"kind", op_kind_name(r.kind)}, {"key", r.key},
                {"value", r.value},      {"ut", ts_json(r.ut)},
                {"sr", r.sr},            {"initial", r.initial},
                {"gst", ts_json(r.gst)}, {"replica", r.replica},
                {"partition", r.partition}};
  }
  json operator()(const rec::ClientMove& r) const {
    return json{{"type", "client_move"}, {"t", r.t}, {"client", r.client},
                {"from", r.from},        {"to", r.to}};
  }
  json operator()(const rec::MsgSend& r) const {
    return json{{"type", "send"}, {"t", r.t},   {"id", r.id},
                {"from", r.from}, {"to", r.to}, {"kind", kind_name(r.kind)},
                {"ts", ts_json(r.ts)}, {"op", r.op}};
  }
  json operator()(const rec::MsgDeliver& r) const {
    return json{{"type", "deliver"}, {"t", r.t}, {"id", r.id},
                {"from", r.from}, {"to", r.to}, {"kind", kind_name(r.kind)}};
  }
  json operator()(const rec::MsgDrop& r) const {
    return json{{"type", "drop"}, {"t", r.t}, {"id", r.id},
                {"from", r.from}, {"to", r.to}, {"kind", kind_name(r.kind)}};
  }
  json operator()(const rec::ClockRead& r) const {
    return json{{"type", "clock"}, {"t", r.t}, {"replica", r.replica},
                {"partition", r.partition}, {"pt", r.pt}};
  }
  json operator()(const rec::VvChange& r) const {
    return json{{"type", "vv"}, {"t", r.t}, {"replica", r.replica},
                {"partition", r.partition}, {"index", r.index},
                {"ts", ts_json(r.ts)}};
  }
  json operator()(const rec::LstChange& r) const {
    return json{{"type", "lst"}, {"t", r.t}, {"replica", r.replica},
                {"partition", r.partition}, {"ts", ts_json(r.ts)}};
  }
  json operator()(const rec::GstChange& r) const {
    return json{{"type", "gst"}, {"t", r.t}, {"replica", r.replica},
                {"partition", r.partition}, {"ts", ts_json(r.ts)}};
  }
  json operator()(const rec::VersionInsert& r) const {
    return json{{"type", "insert"}, {"t", r.t}, {"replica", r.replica},
                {"partition", r.partition}, {"key", r.key}, {"value", r.value},
                {"ut", ts_json(r.ut)}, {"sr", r.sr}};
  }
  json operator()(const rec::PutDeferred& r) const {
    return json{{"type", "put_deferred"}, {"t", r.t}, {"replica", r.replica},
                {"partition", r.partition}, {"client", r.client},
                {"op", r.op}, {"delay", r.delay}};
  }
  json operator()(const rec::Starvation& r) const {
    return json{{"type", "starvation"}, {"t", r.t}, {"pending", r.pending}};
  }
};

Record parse_record(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "header") {
    rec::Header r;
    r.scenario = j.at("scenario").get<std::string>();
    r.topology.replicas = j.at("replicas").get<std::uint16_t>();
    r.topology.partitions = j.at("partitions").get<std::uint16_t>();
    r.protocol.variant = parse_variant(j.at("variant").get<std::string>());
    r.protocol.heartbeat_interval = j.at("heartbeat_us").get<Micros>();
    r.protocol.stabilization_interval = j.at("stabilization_us").get<Micros>();
    r.clients = j.at("clients").get<std::uint32_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.until = j.at("until").get<Micros>();
    for (const auto& w : j.at("cuts")) r.partitions.push_back(window_from(w));
    return r;
  }
  if (type == "op_start") {
    rec::OpStart r;
    r.t = j.at("t").get<Micros>();
    r.client = j.at("client").get<ClientId>();
    r.op = j.at("op").get<OpId>();
    r.kind = op_kind_from(j.at("kind").get<std::string>());
    r.key = j.at("key").get<std::string>();
    r.value = j.at("value").get<std::string>();
    r.replica = j.at("replica").get<ReplicaId>();
    r.partition = j.at("partition").get<PartitionId>();
    r.moving = j.at("moving").get<bool>();
    return r;
  }
  if (type == "op_complete") {
    rec::OpComplete r;
    r.t = j.at("t").get<Micros>();
    r.client = j.at("client").get<ClientId>();
    r.op = j.at("op").get<OpId>();
    r.kind = op_kind_from(j.at("kind").get<std::string>());
    r.key = j.at("key").get<std::string>();
    r.value = j.at("value").get<std::string>();
    r.ut = ts_from(j.at("ut"));
    r.sr = j.at("sr").get<ReplicaId>();
    r.initial = j.at("initial").get<bool>();
    r.gst = ts_from(j.at("gst"));
    r.replica = j.at("replica").get<ReplicaId>();
    r.partition = j.at("partition").get<PartitionId>();
    return r;
  }
  if (type == "client_move") {
    return rec::ClientMove{j.at("t").get<Micros>(), j.at("client").get<ClientId>(),
                           j.at("from").get<ReplicaId>(), j.at("to").get<ReplicaId>()};
  }
  if (type == "send") {
    return rec::MsgSend{j.at("t").get<Micros>(), j.at("id").get<std::uint64_t>(),
                        j.at("from").get<NodeId>(), j.at("to").get<NodeId>(),
                        msg_kind_from(j.at("kind").get<std::string>()),
                        ts_from(j.at("ts")), j.at("op").get<OpId>()};
  }
  if (type == "deliver" || type == "drop") {
    const Micros t = j.at("t").get<Micros>();
    const auto id = j.at("id").get<std::uint64_t>();
    const auto from = j.at("from").get<NodeId>();
    const auto to = j.at("to").get<NodeId>();
    const auto kind = msg_kind_from(j.at("kind").get<std::string>());
    if (type == "deliver") return rec::MsgDeliver{t, id, from, to, kind};
    return rec::MsgDrop{t, id, from, to, kind};
  }
  if (type == "clock") {
    return rec::ClockRead{j.at("t").get<Micros>(), j.at("replica").get<ReplicaId>(),
                          j.at("partition").get<PartitionId>(), j.at("pt").get<Micros>()};
  }
  if (type == "vv") {
    return rec::VvChange{j.at("t").get<Micros>(), j.at("replica").get<ReplicaId>(),
                         j.at("partition").get<PartitionId>(),
                         j.at("index").get<ReplicaId>(), ts_from(j.at("ts"))};
  }
  if (type == "lst" || type == "gst") {
    const Micros t = j.at("t").get<Micros>();
    const auto m = j.at("replica").get<ReplicaId>();
    const auto n = j.at("partition").get<PartitionId>();
    const auto ts = ts_from(j.at("ts"));
    if (type == "lst") return rec::LstChange{t, m, n, ts};
    return rec::GstChange{t, m, n, ts};
  }
  if (type == "insert") {
    return rec::VersionInsert{j.at("t").get<Micros>(), j.at("replica").get<ReplicaId>(),
                              j.at("partition").get<PartitionId>(),
                              j.at("key").get<std::string>(),
                              j.at("value").get<std::string>(), ts_from(j.at("ut")),
                              j.at("sr").get<ReplicaId>()};
  }
  if (type == "put_deferred") {
    return rec::PutDeferred{j.at("t").get<Micros>(), j.at("replica").get<ReplicaId>(),
                            j.at("partition").get<PartitionId>(),
                            j.at("client").get<ClientId>(), j.at("op").get<OpId>(),
                            j.at("delay").get<Micros>()};
  }
  if (type == "starvation") {
    return rec::Starvation{j.at("t").get<Micros>(),
                           j.at("pending").get<std::vector<OpId>>()};
  }
  throw TraceFormatError("unknown record type '" + type + "'");
}

}  // namespace

std::string_view record_type(const Record& r) {
  static constexpr std::string_view kNames[] = {
      "header", "op_start", "op_complete", "client_move", "send",
      "deliver", "drop", "clock", "vv", "lst", "gst", "insert",
      "put_deferred", "starvation"};
  return kNames[r.index()];
}

std::string to_ndjson(const Record& r) { return std::visit(ToJson{}, r).dump(); }

Record from_ndjson(const std::string& line) {
  try {
    return parse_record(json::parse(line));
  } catch (const json::exception& e) {
    throw TraceFormatError(std::string("malformed trace record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw TraceFormatError(std::string("malformed trace record: ") + e.what());
  }
}

void write_trace(std::ostream& os, const Trace& trace) {
  for (const auto& r : trace.records) os << to_ndjson(r) << '\n';
}

void write_trace_file(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_trace(out, trace);
}

Trace read_trace(std::istream& is) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      trace.records.push_back(from_ndjson(line));
    } catch (const TraceFormatError& e) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  trace.header();
  return trace;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceFormatError("cannot open trace '" + path + "'");
  return read_trace(in);
}

std::uint64_t trace_hash(const Trace& trace) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : trace.records) {
    for (unsigned char ch : to_ndjson(r) + "\n") {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = kDigits[v & 0xF];
  return s;
}

}  // namespace gentlerain
