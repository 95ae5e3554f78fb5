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

#include "gentlerain/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <queue>
#include <tuple>
#include <thread>

#include "gentlerain/wire.hpp"

namespace gentlerain {

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw std::invalid_argument("address '" + text + "' is not host:port");
  }
  Endpoint e;
  e.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  if (port.find_first_not_of("0123456789") != std::string::npos || port.size() > 5 ||
      std::stoul(port) > 65535) {
    throw std::invalid_argument("address '" + text + "' has an invalid port");
  }
  e.port = static_cast<std::uint16_t>(std::stoul(port));
  return e;
}

const Endpoint& ClusterConfig::address(ReplicaId m, PartitionId n) const {
  const std::size_t idx = std::size_t{m} * topology.partitions + n;
  if (m >= topology.replicas || n >= topology.partitions || idx >= addresses.size()) {
    throw std::invalid_argument("no address for partition (" + std::to_string(m) + ", " +
                                std::to_string(n) + ")");
  }
  return addresses[idx];
}

void ClusterConfig::validate() const {
  topology.validate();
  const std::size_t want = std::size_t{topology.replicas} * topology.partitions;
  if (addresses.size() != want) {
    throw std::invalid_argument("cluster.addresses has " + std::to_string(addresses.size()) +
                                " entries, topology needs " + std::to_string(want));
  }
  if (protocol.heartbeat_interval <= 0 || protocol.stabilization_interval <= 0) {
    throw std::invalid_argument("cluster heartbeat and stabilization intervals must be > 0");
  }
}

ClockSource host_clock() {
  const Micros base = wall_clock_micros();
  const auto origin = std::chrono::steady_clock::now();
  return [base, origin] {
    return base + std::chrono::duration_cast<std::chrono::microseconds>(
                      std::chrono::steady_clock::now() - origin)
                      .count();
  };
}

namespace {

std::string errno_text() { return std::strerror(errno); }

addrinfo* resolve(const Endpoint& e, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(e.port);
  const int rc = getaddrinfo(e.host.empty() ? nullptr : e.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) return nullptr;
  return res;
}

void set_nodelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

// Returns a connected blocking socket, or -1.
int connect_endpoint(const Endpoint& e, std::chrono::milliseconds timeout) {
  addrinfo* res = resolve(e, false);
  if (!res) return -1;
  const int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    freeaddrinfo(res);
    return -1;
  }
  const int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = connect(fd, res->ai_addr, res->ai_addrlen);
  freeaddrinfo(res);
  if (rc < 0 && errno == EINPROGRESS) {
    pollfd p{fd, POLLOUT, 0};
    rc = poll(&p, 1, static_cast<int>(timeout.count()));
    int err = 0;
    socklen_t len = sizeof err;
    if (rc == 1 && getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) == 0 && err == 0) {
      rc = 0;
    } else {
      rc = -1;
    }
  }
  if (rc < 0) {
    close(fd);
    return -1;
  }
  fcntl(fd, F_SETFL, flags);
  set_nodelay(fd);
  return fd;
}

bool send_bytes(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

enum class ReadStatus { Frame, Timeout, Closed };

// Reads until buf holds a whole frame. timeout_ms < 0 waits forever. Throws
// FrameError for a malformed header.
ReadStatus read_frame(int fd, std::string& buf, Frame& out, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  char chunk[16 * 1024];
  while (true) {
    if (const std::size_t used = parse_frame(buf, out); used > 0) {
      buf.erase(0, used);
      return ReadStatus::Frame;
    }
    if (timeout_ms >= 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
      if (left <= 0) return ReadStatus::Timeout;
      pollfd p{fd, POLLIN, 0};
      const int rc = poll(&p, 1, static_cast<int>(left));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) return ReadStatus::Timeout;
      if (rc < 0) return ReadStatus::Closed;
    }
    const ssize_t n = recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return ReadStatus::Closed;
    buf.append(chunk, static_cast<std::size_t>(n));
  }
}

std::chrono::steady_clock::duration timer_period(Micros interval) {
  // Intervals far beyond any run disable the timer in practice.
  constexpr Micros kCap = 24LL * 3600 * 1'000'000;
  return std::chrono::microseconds(std::min(interval, kCap));
}

// One persistent outbound connection. Frames queued while disconnected are
// sent in order once the peer accepts.
class PeerLink {
 public:
  explicit PeerLink(Endpoint to) : to_(std::move(to)), thread_([this] { run(); }) {}

  ~PeerLink() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    thread_.join();
    if (fd_ >= 0) close(fd_);
  }

  void push(std::string frame) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      frames_.push_back(std::move(frame));
    }
    cv_.notify_all();
  }

 private:
  void run() {
    auto backoff = std::chrono::milliseconds(10);
    std::unique_lock<std::mutex> lk(mu_);
    while (true) {
      cv_.wait(lk, [&] { return stopping_ || !frames_.empty(); });
      if (stopping_) return;
      const std::string frame = frames_.front();
      lk.unlock();
      if (fd_ < 0) fd_ = connect_endpoint(to_, std::chrono::milliseconds(500));
      const bool sent = fd_ >= 0 && send_bytes(fd_, frame);
      lk.lock();
      if (sent) {
        frames_.pop_front();
        backoff = std::chrono::milliseconds(10);
        continue;
      }
      if (fd_ >= 0) {
        close(fd_);
        fd_ = -1;
      }
      cv_.wait_for(lk, backoff, [&] { return stopping_; });
      backoff = std::min(backoff * 2, std::chrono::milliseconds(1'000));
    }
  }

  Endpoint to_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> frames_;
  bool stopping_ = false;
  int fd_ = -1;
  std::thread thread_;
};

struct Conn {
  int fd = -1;
  std::mutex write_mu;
  bool open = true;
  std::atomic<bool> done{false};
  std::thread reader;

  void write(const std::string& bytes) {
    std::lock_guard<std::mutex> lk(write_mu);
    if (open && !send_bytes(fd, bytes)) open = false;
  }

  // Sends an error frame and ends the connection; the reader closes the fd.
  void fail(const std::string& message) {
    std::lock_guard<std::mutex> lk(write_mu);
    if (!open) return;
    send_bytes(fd, encode_error_frame(message));
    open = false;
    shutdown(fd, SHUT_RDWR);
  }
};

}  // namespace

struct PartitionServer::Impl {
  struct Event {
    std::shared_ptr<Conn> conn;  // null for messages to self
    Message msg;
  };
  struct Deferred {
    std::chrono::steady_clock::time_point due;
    std::uint64_t seq;
    std::shared_ptr<Conn> conn;
    PutReq req;
    bool operator>(const Deferred& o) const {
      return std::tie(due, seq) > std::tie(o.due, o.seq);
    }
  };

  ClusterConfig config;
  ReplicaId m;
  PartitionId n;
  ClockSource clock;
  Partition part;

  int listen_fd = -1;
  std::uint16_t bound_port = 0;
  std::atomic<bool> stopping{false};
  std::atomic<bool> running{false};
  std::atomic<std::uint64_t> gst_compact{0};

  std::mutex mu;
  std::condition_variable cv;
  std::deque<Event> queue;

  std::mutex conns_mu;
  std::vector<std::shared_ptr<Conn>> conns;

  std::vector<std::unique_ptr<PeerLink>> peers;  // by node id, null for self
  std::priority_queue<Deferred, std::vector<Deferred>, std::greater<>> deferred;
  std::uint64_t deferred_seq = 0;

  std::thread accept_thread;
  std::thread loop_thread;

  Impl(ClusterConfig c, ReplicaId m_, PartitionId n_, ClockSource clk)
      : config(std::move(c)),
        m(m_),
        n(n_),
        clock(std::move(clk)),
        part(config.topology, config.protocol, m_, n_) {}

  std::size_t self() const { return std::size_t{m} * config.topology.partitions + n; }

  void bind_listener() {
    const Endpoint& e = config.address(m, n);
    addrinfo* res = resolve(e, true);
    if (!res) throw BindError("cannot resolve listen address " + e.str());
    listen_fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (listen_fd < 0) {
      freeaddrinfo(res);
      throw BindError("socket: " + errno_text());
    }
    int one = 1;
    setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const int rc = ::bind(listen_fd, res->ai_addr, res->ai_addrlen);
    freeaddrinfo(res);
    if (rc < 0 || listen(listen_fd, 64) < 0) {
      const std::string why = errno_text();
      close(listen_fd);
      listen_fd = -1;
      throw BindError("cannot listen on " + e.str() + ": " + why);
    }
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port = ntohs(addr.sin_port);
  }

  void push(Event ev) {
    {
      std::lock_guard<std::mutex> lk(mu);
      queue.push_back(std::move(ev));
    }
    cv.notify_one();
  }

  void accept_loop() {
    while (!stopping) {
      pollfd p{listen_fd, POLLIN, 0};
      const int rc = poll(&p, 1, 100);
      if (rc <= 0) continue;
      const int fd = accept(listen_fd, nullptr, nullptr);
      if (fd < 0) continue;
      set_nodelay(fd);
      auto conn = std::make_shared<Conn>();
      conn->fd = fd;
      std::lock_guard<std::mutex> lk(conns_mu);
      prune();
      conn->reader = std::thread([this, conn] { read_loop(conn); });
      conns.push_back(conn);
    }
  }

  // Caller holds conns_mu.
  void prune() {
    for (auto it = conns.begin(); it != conns.end();) {
      if ((*it)->done) {
        (*it)->reader.join();
        it = conns.erase(it);
      } else {
        ++it;
      }
    }
  }

  void read_loop(const std::shared_ptr<Conn>& conn) {
    std::string buf;
    Frame f;
    try {
      while (read_frame(conn->fd, buf, f, -1) == ReadStatus::Frame) {
        if (f.type == kErrorFrameType) break;
        push(Event{conn, decode_message(f)});
      }
    } catch (const FrameError& e) {
      conn->fail(std::string("malformed frame: ") + e.what());
    }
    {
      std::lock_guard<std::mutex> lk(conn->write_mu);
      conn->open = false;
      close(conn->fd);
    }
    conn->done = true;
  }

  void send_peers(const std::vector<PeerMessage>& msgs) {
    for (const PeerMessage& pm : msgs) {
      const std::size_t node = std::size_t{pm.replica} * config.topology.partitions + pm.partition;
      if (node == self()) {
        handle(Event{nullptr, pm.msg});
      } else {
        peers.at(node)->push(encode_frame(pm.msg));
      }
    }
  }

  void do_put(const std::shared_ptr<Conn>& conn, const PutReq& req) {
    auto out = part.handle_put(req, clock());
    if (out.deferred()) {
      deferred.push(Deferred{std::chrono::steady_clock::now() + std::chrono::microseconds(out.delay),
                             deferred_seq++, conn, req});
      return;
    }
    if (conn) conn->write(encode_frame(*out.reply));
    send_peers(out.replicates);
  }

  void handle(const Event& ev) {
    try {
      std::visit(
          [&](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, GetReq>) {
              auto out = part.handle_get(msg);
              if (ev.conn) ev.conn->write(encode_frame(out.reply));
            } else if constexpr (std::is_same_v<T, PutReq>) {
              do_put(ev.conn, msg);
            } else if constexpr (std::is_same_v<T, Replicate>) {
              part.handle_replicate(msg.d, msg.d.sr);
            } else if constexpr (std::is_same_v<T, Heartbeat>) {
              part.handle_heartbeat(msg.ts, msg.from);
            } else if constexpr (std::is_same_v<T, LstReport>) {
              send_peers(part.handle_lst_report(msg));
            } else if constexpr (std::is_same_v<T, GstBroadcast>) {
              part.handle_gst_broadcast(msg);
            } else {
              throw ProtocolError(std::string(kind_name(kind_of(Message{msg}))) +
                                  " sent to a partition server");
            }
          },
          ev.msg);
    } catch (const std::exception& e) {
      if (ev.conn) ev.conn->fail(e.what());
    }
    gst_compact = encode_compact(part.gst());
  }

  void event_loop() {
    using steady = std::chrono::steady_clock;
    const auto hb_period = timer_period(config.protocol.heartbeat_interval);
    const auto stab_period = timer_period(config.protocol.stabilization_interval);
    auto next_hb = steady::now() + hb_period;
    auto next_stab = steady::now() + stab_period;
    std::vector<Event> batch;
    while (true) {
      {
        std::unique_lock<std::mutex> lk(mu);
        auto due = std::min(next_hb, next_stab);
        if (!deferred.empty()) due = std::min(due, deferred.top().due);
        cv.wait_until(lk, due, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        batch.assign(std::make_move_iterator(queue.begin()), std::make_move_iterator(queue.end()));
        queue.clear();
      }
      for (const Event& ev : batch) handle(ev);
      batch.clear();

      const auto now = steady::now();
      while (!deferred.empty() && deferred.top().due <= now) {
        Deferred d = deferred.top();
        deferred.pop();
        try {
          do_put(d.conn, d.req);
        } catch (const std::exception& e) {
          if (d.conn) d.conn->fail(e.what());
        }
      }
      if (now >= next_hb) {
        send_peers(part.heartbeat_tick(clock()));
        next_hb = std::max(next_hb + hb_period, now);
      }
      if (now >= next_stab) {
        send_peers(part.stabilization_tick().messages);
        next_stab = std::max(next_stab + stab_period, now);
      }
      gst_compact = encode_compact(part.gst());
    }
  }

  void start() {
    config.validate();
    bind_listener();
    const std::size_t nodes = config.addresses.size();
    peers.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      if (i != self()) peers[i] = std::make_unique<PeerLink>(config.addresses[i]);
    }
    running = true;
    loop_thread = std::thread([this] { event_loop(); });
    accept_thread = std::thread([this] { accept_loop(); });
  }

  void stop() {
    if (!running.exchange(false)) return;
    {
      std::lock_guard<std::mutex> lk(mu);
      stopping = true;
    }
    cv.notify_all();
    accept_thread.join();
    loop_thread.join();
    close(listen_fd);
    listen_fd = -1;
    std::lock_guard<std::mutex> lk(conns_mu);
    for (auto& c : conns) {
      {
        std::lock_guard<std::mutex> wl(c->write_mu);
        if (c->open) shutdown(c->fd, SHUT_RDWR);
      }
      c->reader.join();
    }
    conns.clear();
    peers.clear();
  }
};

PartitionServer::PartitionServer(ClusterConfig config, ReplicaId m, PartitionId n,
                                 ClockSource clock)
    : impl_(std::make_unique<Impl>(std::move(config), m, n, std::move(clock))) {}

PartitionServer::~PartitionServer() { stop(); }

void PartitionServer::start() { impl_->start(); }
void PartitionServer::stop() { impl_->stop(); }

void PartitionServer::wait(const std::atomic<bool>* interrupt) {
  while (impl_->running && !(interrupt && *interrupt)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

std::uint16_t PartitionServer::port() const { return impl_->bound_port; }
bool PartitionServer::running() const { return impl_->running; }
HlcTimestamp PartitionServer::gst() const { return decode_compact(impl_->gst_compact); }

// ---- client ---------------------------------------------------------------

NetClient::NetClient(ClusterConfig config, ReplicaId home, std::chrono::milliseconds timeout)
    : config_(std::move(config)), proto_(home), timeout_(timeout) {
  config_.validate();
  if (home >= config_.topology.replicas) {
    throw std::invalid_argument("home replica " + std::to_string(home) + " outside topology");
  }
  fds_.assign(config_.topology.partitions, -1);
}

NetClient::~NetClient() {
  for (int fd : fds_) {
    if (fd >= 0) close(fd);
  }
}

void NetClient::move_to(ReplicaId replica) {
  if (replica >= config_.topology.replicas) {
    throw std::invalid_argument("replica " + std::to_string(replica) + " outside topology");
  }
  for (int& fd : fds_) {
    if (fd >= 0) close(fd);
    fd = -1;
  }
  proto_.move_to(replica);
}

Message NetClient::call(PartitionId n, const Message& request) {
  int& fd = fds_.at(n);
  const Endpoint& to = config_.address(proto_.home_replica(), n);
  auto drop = [&] {
    close(fd);
    fd = -1;
  };
  if (fd < 0) {
    fd = connect_endpoint(to, timeout_);
    if (fd < 0) throw TransportError("cannot connect to " + to.str(), true);
  }
  if (!send_bytes(fd, encode_frame(request))) {
    drop();
    throw TransportError("send to " + to.str() + " failed", true);
  }
  std::string buf;
  Frame f;
  ReadStatus status;
  try {
    status = read_frame(fd, buf, f, static_cast<int>(timeout_.count()));
  } catch (const FrameError& e) {
    drop();
    throw TransportError(std::string("bad reply from ") + to.str() + ": " + e.what(), false);
  }
  if (status == ReadStatus::Timeout) {
    drop();
    throw TransportError("timeout waiting for " + to.str(), true);
  }
  if (status == ReadStatus::Closed) {
    drop();
    throw TransportError("connection to " + to.str() + " closed", true);
  }
  try {
    return decode_message(f);
  } catch (const FrameError& e) {
    drop();
    throw TransportError(e.what(), false);
  }
}

GetReply NetClient::get(const std::string& key) {
  const GetReq req = proto_.issue_get(key);
  Message reply = call(config_.topology.partition_of(key), req);
  auto* r = std::get_if<GetReply>(&reply);
  if (!r) throw TransportError("unexpected reply to GetReq", false);
  proto_.apply_get_reply(*r);
  return *r;
}

PutReply NetClient::put(const std::string& key, const std::string& value) {
  const PutReq req = proto_.issue_put(key, value);
  Message reply = call(config_.topology.partition_of(key), req);
  auto* r = std::get_if<PutReply>(&reply);
  if (!r) throw TransportError("unexpected reply to PutReq", false);
  proto_.apply_put_reply(*r);
  return *r;
}

}  // namespace gentlerain
