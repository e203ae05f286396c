#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "connection.hpp"
#include "demux.hpp"
#include "sim_time.hpp"
#include "trace.hpp"
#include "wire.hpp"

namespace mptcp {

// Deterministic discrete-event engine. Events run in (time, seq) order;
// seq is the insertion counter, so same-time events run FIFO.
class Engine {
 public:
  TimeNs now() const { return now_; }
  uint64_t schedule_at(TimeNs t, std::function<void()> action);
  uint64_t schedule_in(TimeNs delay, std::function<void()> action);
  void cancel(uint64_t id);
  // Runs every event with time <= until; leaves now() == until.
  void run_until(TimeNs until);
  bool step();  // one event; false when idle
  size_t pending() const { return actions_.size(); }

 private:
  struct Ev {
    TimeNs t;
    uint64_t seq;
    bool operator>(const Ev& o) const { return std::tie(t, seq) > std::tie(o.t, o.seq); }
  };
  std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> heap_;
  std::unordered_map<uint64_t, std::function<void()>> actions_;  // absent = cancelled
  TimeNs now_ = 0;
  uint64_t next_seq_ = 1;
};

enum class SegmentFate {
  Submitted,
  Delivered,
  DroppedScript,
  DroppedOverflow,
  DroppedRandom,
  DroppedLinkDown,
};

const char* segment_fate_name(SegmentFate f);

struct LinkDirStats {
  uint64_t submitted = 0;
  uint64_t data_segments = 0;
  uint64_t delivered = 0;
  uint64_t dropped_script = 0;
  uint64_t dropped_overflow = 0;
  uint64_t dropped_random = 0;
  uint64_t dropped_down = 0;
  uint64_t dropped() const {
    return dropped_script + dropped_overflow + dropped_random + dropped_down;
  }
};

struct LinkConfig {
  uint64_t bandwidth_bps = 1'000'000;
  TimeNs delay = 10 * kMillisecond;
  uint32_t queue_cap = 100;  // segments per direction
  // Per-direction 1-based data-segment ordinals to drop (pure ACKs never
  // count), and a uniform data-segment loss probability.
  std::vector<uint64_t> drop_script[2];
  double loss_rate[2] = {0.0, 0.0};
  // Serialization charges a fixed header per segment. Option bytes are not
  // charged, keeping mptcp and plain-tcp runs time-comparable.
  uint32_t header_bytes = 40;
};

class Node;

// Full-duplex point-to-point link: per-direction FIFO queue with tail drop,
// serialization at `bandwidth_bps`, fixed propagation delay, scripted and
// random data-segment drops.
class P2PLink {
 public:
  using FateHook =
      std::function<void(const P2PLink&, int dir, const Segment&, SegmentFate, uint64_t ordinal)>;

  P2PLink(int id, Engine& eng, LinkConfig cfg, uint64_t loss_seed);
  void attach(Node* a, Node* b);

  void transmit(Node* from, const Segment& seg);

  int id() const { return id_; }
  const LinkConfig& config() const { return cfg_; }
  const LinkDirStats& stats(int dir) const { return dirs_[dir].stats; }
  void set_fate_hook(FateHook hook) { hook_ = std::move(hook); }
  void set_down(bool down) { down_ = down; }
  TimeNs serialize_time(const Segment& seg) const;

 private:
  struct Dir {
    std::set<uint64_t> drop_set;
    double loss_rate = 0;
    LinkDirStats stats;
    TimeNs busy_until = 0;
    std::deque<TimeNs> tx_ends;  // serialization end times of queued segments
    uint64_t data_ordinal = 0;
  };
  void note(int dir, const Segment& seg, SegmentFate fate, uint64_t ordinal);

  int id_;
  Engine& eng_;
  LinkConfig cfg_;
  Node* ends_[2] = {nullptr, nullptr};
  Dir dirs_[2];
  std::mt19937_64 rng_;
  FateHook hook_;
  bool down_ = false;
};

// Application-side callbacks attached to a connection endpoint.
struct AppHooks {
  std::function<void(Connection&, uint64_t dsn, uint32_t len, TimeNs)> on_data;
  std::function<void(Connection&, TimeNs)> on_eof;
  bool close_on_eof = false;
};

// Protocol-event callbacks for tests and the scenario runner.
struct NodeObserver {
  std::function<void(uint32_t token, int subflow_id, TimeNs)> on_subflow_closed;
  std::function<void(uint32_t token, TimeNs)> on_conn_deallocated;
  std::function<void(const Segment&, TimeNs)> on_rst_sent;
};

// A simulated host: owns its endpoint table and connections, interprets
// protocol effects (segments out, timers, trace points) against the engine.
class Node {
 public:
  Node(std::string name, std::vector<uint32_t> addrs, Engine& eng, Tracer& tracer,
       uint64_t token_seed);

  const std::string& name() const { return name_; }
  const std::vector<uint32_t>& addrs() const { return addrs_; }
  void add_link(P2PLink* link, uint32_t local_addr);

  // Registers a LISTEN-role connection; children are forked from its config.
  Connection* listen(uint16_t port, ConnectionConfig child_template, AppHooks hooks);
  Connection* open_connection(uint32_t remote_addr, uint16_t remote_port, ConnectionConfig cfg,
                              AppHooks hooks);

  void on_receive(const Segment& seg);  // link ingress
  void app_close(Connection* conn);     // drive a close from application code
  void app_send(Connection* conn, uint64_t bytes);
  void app_bulk(Connection* conn);

  EndpointTable& table() { return table_; }
  const std::vector<std::unique_ptr<Connection>>& connections() const { return conns_; }
  // Owner of a local four-tuple, for drop attribution.
  std::pair<Connection*, size_t> resolve(const FourTuple& local_tuple) const;
  void set_observer(NodeObserver obs) { observer_ = std::move(obs); }
  uint16_t alloc_port();

 private:
  void drive(Connection* conn, Effects&& fx);
  void sync_registry(Connection* conn);
  void egress(const Segment& seg);
  void fork_child(Connection* listener, const Segment& syn);

  std::string name_;
  std::vector<uint32_t> addrs_;
  Engine& eng_;
  Tracer& tracer_;
  EndpointTable table_;
  std::mt19937_64 token_rng_;
  std::map<uint32_t, P2PLink*> links_;  // local addr -> link
  std::vector<std::unique_ptr<Connection>> conns_;
  std::map<Connection*, AppHooks> hooks_;
  std::map<Connection*, size_t> registered_subflows_;
  std::set<Connection*> token_registered_;
  std::map<uint16_t, Connection*> listeners_;  // port -> listener conn
  NodeObserver observer_;
  uint16_t next_port_ = 49152;
};

// splitmix64: stable seed derivation for per-component rngs.
uint64_t mix_seed(uint64_t seed, uint64_t stream);

}  // namespace mptcp
