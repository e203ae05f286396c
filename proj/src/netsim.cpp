#include "netsim.hpp"

#include <algorithm>

#include "errors.hpp"

namespace mptcp {

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t Engine::schedule_at(TimeNs t, std::function<void()> action) {
  if (t < now_) throw InternalError("event scheduled in the past");
  if (!action) throw InternalError("event without an action");
  const uint64_t id = next_seq_++;
  heap_.push(Ev{t, id});
  actions_.emplace(id, std::move(action));
  return id;
}

uint64_t Engine::schedule_in(TimeNs delay, std::function<void()> action) {
  if (delay < 0) throw InternalError("negative delay");
  return schedule_at(now_ + delay, std::move(action));
}

void Engine::cancel(uint64_t id) { actions_.erase(id); }

bool Engine::step() {
  while (!heap_.empty()) {
    const Ev ev = heap_.top();
    heap_.pop();
    auto it = actions_.find(ev.seq);
    if (it == actions_.end()) continue;  // cancelled
    std::function<void()> action = std::move(it->second);
    actions_.erase(it);
    now_ = ev.t;
    action();
    return true;
  }
  return false;
}

void Engine::run_until(TimeNs until) {
  while (!heap_.empty() && heap_.top().t <= until) {
    if (!step()) break;
  }
  if (now_ < until) now_ = until;
}

const char* segment_fate_name(SegmentFate f) {
  switch (f) {
    case SegmentFate::Submitted: return "submitted";
    case SegmentFate::Delivered: return "delivered";
    case SegmentFate::DroppedScript: return "dropped_script";
    case SegmentFate::DroppedOverflow: return "dropped_overflow";
    case SegmentFate::DroppedRandom: return "dropped_random";
    case SegmentFate::DroppedLinkDown: return "dropped_down";
  }
  return "?";
}

P2PLink::P2PLink(int id, Engine& eng, LinkConfig cfg, uint64_t loss_seed)
    : id_(id), eng_(eng), cfg_(std::move(cfg)), rng_(loss_seed) {
  if (cfg_.bandwidth_bps == 0) throw ConfigError("link bandwidth must be positive");
  if (cfg_.delay < 0) throw ConfigError("link delay must be non-negative");
  if (cfg_.queue_cap == 0) throw ConfigError("link queue_cap must be positive");
  for (int d = 0; d < 2; ++d) {
    dirs_[d].drop_set.insert(cfg_.drop_script[d].begin(), cfg_.drop_script[d].end());
    if (cfg_.loss_rate[d] < 0 || cfg_.loss_rate[d] >= 1)
      throw ConfigError("loss_rate must be in [0, 1)");
    dirs_[d].loss_rate = cfg_.loss_rate[d];
  }
}

void P2PLink::attach(Node* a, Node* b) {
  ends_[0] = a;
  ends_[1] = b;
}

TimeNs P2PLink::serialize_time(const Segment& seg) const {
  const uint64_t bits = (cfg_.header_bytes + uint64_t{seg.payload_len}) * 8;
  return static_cast<TimeNs>(bits * uint64_t{kSecond} / cfg_.bandwidth_bps);
}

void P2PLink::note(int dir, const Segment& seg, SegmentFate fate, uint64_t ordinal) {
  if (hook_) hook_(*this, dir, seg, fate, ordinal);
}

void P2PLink::transmit(Node* from, const Segment& seg) {
  if (from != ends_[0] && from != ends_[1]) throw InternalError("transmit from unattached node");
  const int dir = from == ends_[0] ? 0 : 1;
  Dir& d = dirs_[dir];
  const TimeNs now = eng_.now();

  const bool data = seg.payload_len > 0;
  uint64_t ordinal = 0;
  if (data) {
    ordinal = ++d.data_ordinal;
    ++d.stats.data_segments;
  }
  ++d.stats.submitted;
  note(dir, seg, SegmentFate::Submitted, ordinal);

  if (down_) {
    ++d.stats.dropped_down;
    note(dir, seg, SegmentFate::DroppedLinkDown, ordinal);
    return;
  }
  if (data && d.drop_set.count(ordinal)) {
    ++d.stats.dropped_script;
    note(dir, seg, SegmentFate::DroppedScript, ordinal);
    return;
  }
  if (data && d.loss_rate > 0) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (u < d.loss_rate) {
      ++d.stats.dropped_random;
      note(dir, seg, SegmentFate::DroppedRandom, ordinal);
      return;
    }
  }

  // Queue occupancy: segments not yet fully serialized.
  while (!d.tx_ends.empty() && d.tx_ends.front() <= now) d.tx_ends.pop_front();
  if (d.tx_ends.size() >= cfg_.queue_cap) {
    ++d.stats.dropped_overflow;
    note(dir, seg, SegmentFate::DroppedOverflow, ordinal);
    return;
  }

  const TimeNs start = std::max(now, d.busy_until);
  const TimeNs end = start + serialize_time(seg);
  d.busy_until = end;
  d.tx_ends.push_back(end);

  Node* dst = ends_[1 - dir];
  eng_.schedule_at(end + cfg_.delay, [this, dir, dst, seg, ordinal] {
    ++dirs_[dir].stats.delivered;
    note(dir, seg, SegmentFate::Delivered, ordinal);
    dst->on_receive(seg);
  });
}

Node::Node(std::string name, std::vector<uint32_t> addrs, Engine& eng, Tracer& tracer,
           uint64_t token_seed)
    : name_(std::move(name)),
      addrs_(std::move(addrs)),
      eng_(eng),
      tracer_(tracer),
      table_([this] { return static_cast<uint32_t>(token_rng_()); }),
      token_rng_(token_seed) {
  if (addrs_.empty()) throw ConfigError("node needs at least one address");
}

void Node::add_link(P2PLink* link, uint32_t local_addr) {
  if (std::find(addrs_.begin(), addrs_.end(), local_addr) == addrs_.end())
    throw ConfigError("link bound to a foreign address");
  const auto [it, inserted] = links_.emplace(local_addr, link);
  if (!inserted) throw ConfigError("address already bound to a link");
}

uint16_t Node::alloc_port() {
  if (next_port_ == 0) throw InternalError("ephemeral port space exhausted");
  return next_port_++;
}

Connection* Node::listen(uint16_t port, ConnectionConfig child_template, AppHooks hooks) {
  child_template.local_addrs = addrs_;
  child_template.alloc_port = [this] { return alloc_port(); };
  conns_.push_back(std::make_unique<Connection>(ConnRole::Listener, child_template));
  Connection* listener = conns_.back().get();
  table_.add_listener(0, port, listener);
  listeners_[port] = listener;
  hooks_[listener] = std::move(hooks);
  return listener;
}

Connection* Node::open_connection(uint32_t remote_addr, uint16_t remote_port,
                                  ConnectionConfig cfg, AppHooks hooks) {
  cfg.local_addrs = addrs_;
  cfg.alloc_port = [this] { return alloc_port(); };
  conns_.push_back(std::make_unique<Connection>(ConnRole::Initiator, cfg));
  Connection* conn = conns_.back().get();
  hooks_[conn] = std::move(hooks);
  const FourTuple tuple{addrs_[0], alloc_port(), remote_addr, remote_port};
  drive(conn, conn->connect(tuple, eng_.now()));
  return conn;
}

void Node::app_close(Connection* conn) { drive(conn, conn->close(eng_.now())); }

void Node::app_send(Connection* conn, uint64_t bytes) {
  drive(conn, conn->send(bytes, eng_.now()));
}

void Node::app_bulk(Connection* conn) { drive(conn, conn->start_bulk(eng_.now())); }

std::pair<Connection*, size_t> Node::resolve(const FourTuple& local_tuple) const {
  return table_.find_tuple(local_tuple);
}

void Node::on_receive(const Segment& seg) {
  const RoutingDecision rd = table_.dispatch(seg);
  const TimeNs now = eng_.now();
  switch (rd.kind) {
    case RoutingDecision::Kind::ToSubflow:
      drive(rd.conn, rd.conn->on_segment(rd.subflow_idx, seg, now));
      return;
    case RoutingDecision::Kind::JoinByToken:
      drive(rd.conn, rd.conn->accept_join(seg, now));
      return;
    case RoutingDecision::Kind::ForkListener:
      fork_child(rd.conn, seg);
      return;
    case RoutingDecision::Kind::Rst: {
      const Segment rst = rst_for(seg);
      if (observer_.on_rst_sent) observer_.on_rst_sent(rst, now);
      egress(rst);
      return;
    }
    case RoutingDecision::Kind::Drop:
      return;
  }
}

void Node::fork_child(Connection* listener, const Segment& syn) {
  ConnectionConfig cfg = listener->config();
  // An MPTCP listener accepts option-less SYNs as plain TCP (fallback).
  if (cfg.mode == ConnMode::Mptcp && !syn.mp_capable()) cfg.mode = ConnMode::Tcp;
  conns_.push_back(std::make_unique<Connection>(ConnRole::Acceptor, cfg));
  Connection* child = conns_.back().get();
  hooks_[child] = hooks_[listener];
  std::optional<Token> token;
  if (cfg.mode == ConnMode::Mptcp) token = table_.allocate_token(child);
  if (token) token_registered_.insert(child);  // allocate_token already bound it
  drive(child, child->accept_master(syn, token, eng_.now()));
}

void Node::sync_registry(Connection* conn) {
  if (conn->token() && !token_registered_.count(conn)) {
    table_.learn_token(*conn->token(), conn);
    token_registered_.insert(conn);
  }
  size_t& registered = registered_subflows_[conn];
  const auto& sfs = conn->subflows();
  for (; registered < sfs.size(); ++registered)
    table_.bind_tuple(sfs[registered]->tuple(), conn, registered);
}

void Node::egress(const Segment& seg) {
  auto it = links_.find(seg.tuple.src_addr);
  if (it == links_.end()) throw InternalError("no link for source address");
  it->second->transmit(this, seg);
}

void Node::drive(Connection* conn, Effects&& fx) {
  sync_registry(conn);
  const TimeNs now = eng_.now();
  const uint32_t token = conn->trace_token();
  for (Effect& e : fx) {
    if (auto* so = std::get_if<SegmentOut>(&e)) {
      egress(so->seg);
    } else if (auto* ts = std::get_if<TimerSet>(&e)) {
      const TimerSet t = *ts;
      eng_.schedule_at(t.deadline, [this, conn, t] {
        drive(conn, conn->on_timer(t.kind, t.subflow_id, t.generation, eng_.now()));
      });
    } else if (std::holds_alternative<TimerCancel>(e)) {
      // Lazy cancellation: stale firings fail their generation check.
    } else if (auto* sc = std::get_if<StateChanged>(&e)) {
      tracer_.state(now, token, sc->subflow_id, sc->to);
    } else if (auto* cw = std::get_if<CwndChanged>(&e)) {
      tracer_.cwnd(now, token, cw->subflow_id, cw->cwnd, cw->ssthresh);
    } else if (auto* rc = std::get_if<RtoChanged>(&e)) {
      tracer_.rto(now, token, rc->subflow_id, rc->rto);
    } else if (auto* dd = std::get_if<DataDelivered>(&e)) {
      tracer_.delivered(now, token, conn->delivered_bytes());
      if (auto h = hooks_.find(conn); h != hooks_.end() && h->second.on_data)
        h->second.on_data(*conn, dd->dsn, dd->len, now);
    } else if (std::holds_alternative<PeerDataFin>(e)) {
      bool close_it = false;
      if (auto h = hooks_.find(conn); h != hooks_.end()) {
        if (h->second.on_eof) h->second.on_eof(*conn, now);
        close_it = h->second.close_on_eof;
      }
      if (close_it) drive(conn, conn->close(now));
    } else if (auto* sc2 = std::get_if<SubflowClosed>(&e)) {
      if (observer_.on_subflow_closed) observer_.on_subflow_closed(token, sc2->subflow_id, now);
    } else if (std::holds_alternative<ConnectionDeallocated>(e)) {
      if (conn->token())
        table_.deallocate(*conn->token());
      else
        table_.remove_tuples(conn);
      if (observer_.on_conn_deallocated) observer_.on_conn_deallocated(token, now);
    }
    // SubflowEstablished / MappingDelivered are connection-internal.
  }
}

}  // namespace mptcp
