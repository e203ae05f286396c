#include "connection.hpp"

#include <algorithm>
#include <set>

#include "errors.hpp"

namespace mptcp {

const char* conn_mode_name(ConnMode m) {
  return m == ConnMode::Mptcp ? "mptcp" : "tcp";
}

const char* conn_role_name(ConnRole r) {
  switch (r) {
    case ConnRole::Initiator: return "initiator";
    case ConnRole::Acceptor: return "acceptor";
    case ConnRole::Listener: return "listener";
  }
  return "?";
}

Connection::Connection(ConnRole role, ConnectionConfig cfg)
    : role_(role), cfg_(std::move(cfg)), mode_(cfg_.mode) {
  cfg_.sf.mptcp = mode_ == ConnMode::Mptcp;
  if (cfg_.max_subflows == 0) throw ConfigError("max_subflows must be positive");
}

Subflow& Connection::make_subflow(const FourTuple& tuple) {
  if (subflows_.size() >= cfg_.max_subflows)
    throw InternalError("subflow limit must be checked before make_subflow");
  const int id = static_cast<int>(subflows_.size());
  subflows_.push_back(std::make_unique<Subflow>(id, tuple, cfg_.sf));
  return *subflows_.back();
}

Effects Connection::connect(const FourTuple& master_tuple, TimeNs now) {
  if (role_ != ConnRole::Initiator) throw InvalidState("connect() needs the initiator role");
  if (!subflows_.empty()) throw InvalidState("connect() called twice");
  if (cfg_.local_addrs.empty() || cfg_.local_addrs[0] != master_tuple.src_addr)
    throw ConfigError("master tuple source must be the first local address");
  master_remote_port_ = master_tuple.dst_port;
  Subflow& sf = make_subflow(master_tuple);
  std::vector<MptcpOption> opts;
  if (mode_ == ConnMode::Mptcp) opts.push_back(MpCapableOpt{});  // token request
  return finish(postprocess(0, sf.connect(now, std::move(opts)), now), now);
}

Effects Connection::accept_master(const Segment& syn, std::optional<Token> token, TimeNs now) {
  if (role_ != ConnRole::Acceptor) throw InvalidState("accept_master() on an initiator");
  if (!subflows_.empty()) throw InvalidState("accept_master() called twice");
  if (mode_ == ConnMode::Mptcp && !token)
    throw InternalError("mptcp acceptor needs an allocated token");
  token_ = token;
  const FourTuple local = syn.tuple.reversed();
  master_remote_port_ = local.dst_port;
  if (cfg_.local_addrs.empty() || cfg_.local_addrs[0] != local.src_addr) {
    // Listener children inherit the address list; the master may have been
    // reached via a secondary address. Reorder so addr_id 1 matches it.
    auto it = std::find(cfg_.local_addrs.begin(), cfg_.local_addrs.end(), local.src_addr);
    if (it == cfg_.local_addrs.end()) throw ConfigError("SYN addressed to a foreign address");
    std::rotate(cfg_.local_addrs.begin(), it, it + 1);
  }
  Subflow& sf = make_subflow(local);
  std::vector<MptcpOption> synack_opts;
  if (mode_ == ConnMode::Mptcp) synack_opts.push_back(MpCapableOpt{token_});
  sf.listen(std::move(synack_opts));
  return finish(postprocess(0, sf.on_segment(syn, now), now), now);
}

Effects Connection::accept_join(const Segment& syn, TimeNs now) {
  if (mode_ != ConnMode::Mptcp) throw InvalidState("join on a plain TCP connection");
  const MpJoinOpt* mj = syn.mp_join();
  if (!mj) throw InternalError("accept_join requires an MP_JOIN option");
  Effects out;
  if (subflows_.size() >= cfg_.max_subflows) {
    out.push_back(SegmentOut{rst_for(syn)});
    return out;
  }
  record_remote_addr(mj->addr_id, syn.tuple.src_addr);
  const size_t idx = subflows_.size();
  Subflow& sf = make_subflow(syn.tuple.reversed());
  sf.listen({});
  append(out, postprocess(idx, sf.on_segment(syn, now), now));
  return finish(std::move(out), now);
}

Effects Connection::on_segment(size_t idx, const Segment& seg, TimeNs now) {
  Subflow& sf = *subflows_.at(idx);
  Effects out;
  bool saw_datafin = false;
  if (mode_ == ConnMode::Mptcp) {
    if (idx == 0 && role_ == ConnRole::Initiator && seg.syn() && seg.ack() && !token_) {
      const MpCapableOpt* mc = seg.mp_capable();
      if (!mc || !mc->token)
        throw ProtocolViolation("SYN-ACK on an MPTCP master without MP_CAPABLE token");
      token_ = *mc->token;
    }
    if (const AddAddrOpt* aa = seg.add_addr()) on_add_addr(*aa, out, now);
    if (const DssOpt* d = seg.dss()) {
      if (d->data_ack) on_data_ack(*d->data_ack);
      if (d->data_fin) {
        note_peer_data_fin(d->dsn);
        saw_datafin = true;
      }
    }
  }
  append(out, postprocess(idx, sf.on_segment(seg, now), now));
  try_consume_peer_fin(out);
  if (saw_datafin && sf.state() != TcpState::Closed) {
    // Data-ack the DATA-FIN (first arrival and retransmitted copies alike).
    Segment ack = sf.make_pure_ack();
    patch_dss(ack);
    out.push_back(SegmentOut{ack});
  }
  return finish(std::move(out), now);
}

Effects Connection::on_timer(TimerKind kind, int subflow_id, uint64_t generation, TimeNs now) {
  if (kind == TimerKind::DataFinRtx) {
    Effects out;
    if (generation != datafin_gen_ || !datafin_sent_ || datafin_acked_) return out;
    if (Subflow* sf = first_established()) {
      out.push_back(SegmentOut{build_data_fin(*sf)});
    }
    out.push_back(TimerSet{TimerKind::DataFinRtx, -1, now + cfg_.datafin_rtx, ++datafin_gen_});
    return out;
  }
  auto& sf = *subflows_.at(static_cast<size_t>(subflow_id));
  return finish(postprocess(static_cast<size_t>(subflow_id),
                            sf.on_timer(kind, generation, now), now),
                now);
}

Effects Connection::send(uint64_t bytes, TimeNs now) {
  if (close_requested_) throw ConnectionClosing("send after close");
  if (bulk_) throw InvalidState("send during a bulk transfer");
  if (bytes == 0) return {};
  snd_end_dsn_ += bytes;
  return finish({}, now);
}

Effects Connection::start_bulk(TimeNs now) {
  if (close_requested_) throw ConnectionClosing("bulk start after close");
  bulk_ = true;
  return finish({}, now);
}

Effects Connection::close(TimeNs now) {
  if (close_requested_) return {};
  close_requested_ = true;
  if (bulk_) {
    bulk_ = false;
    snd_end_dsn_ = next_unmapped_dsn_;  // stream ends at what was mapped
  }
  return finish({}, now);
}

uint64_t Connection::remaining_bytes() const {
  if (bulk_) return UINT64_MAX;
  return snd_end_dsn_ - next_unmapped_dsn_;
}

Subflow* Connection::first_established() const {
  for (const auto& sf : subflows_)
    if (sf->established()) return sf.get();
  return nullptr;
}

Effects Connection::finish(Effects out, TimeNs now) {
  append(out, pump(now));
  maybe_close_subflows(out, now);
  check_dealloc(out);
  return out;
}

Effects Connection::pump(TimeNs now) {
  Effects out;
  const size_t n = subflows_.size();
  if (n == 0) return out;
  size_t idle = 0;
  while (idle < n) {
    const size_t idx = cursor_ % n;
    Subflow& sf = *subflows_[idx];
    cursor_ = (cursor_ + 1) % n;
    bool progressed = false;
    if (sf.has_rewind_data()) {
      const uint32_t need = sf.next_rewind_len();
      if (need == 0 || sf.retransmit_window() >= need) {
        append(out, postprocess(idx, sf.resend_next(now), now));
        progressed = true;
      }
    } else if (sf.established() && remaining_bytes() > 0) {
      const uint32_t chunk =
          static_cast<uint32_t>(std::min<uint64_t>(cfg_.sf.mss, remaining_bytes()));
      if (sf.send_window() >= chunk) {
        DssMapping m{next_unmapped_dsn_, sf.snd_nxt(), static_cast<uint16_t>(chunk), sf.id()};
        append(out, postprocess(idx, sf.transmit(m, now), now));
        next_unmapped_dsn_ += chunk;
        progressed = true;
      }
    }
    idle = progressed ? 0 : idle + 1;
  }
  maybe_send_closing_fin(out, now);
  return out;
}

void Connection::maybe_send_closing_fin(Effects& out, TimeNs now) {
  if (!close_requested_ || bulk_ || next_unmapped_dsn_ != snd_end_dsn_) return;
  if (mode_ == ConnMode::Tcp) {
    // Plain TCP teardown: FIN the master once everything is handed over.
    Subflow& sf = *subflows_.at(0);
    if (sf.state() == TcpState::Established || sf.state() == TcpState::CloseWait)
      append(out, postprocess(0, sf.start_close(now), now));
    return;
  }
  if (datafin_sent_) return;
  Subflow* sf = first_established();
  if (!sf) return;  // wait for a subflow to come up
  fin_dsn_ = snd_end_dsn_;
  datafin_sent_ = true;
  out.push_back(SegmentOut{build_data_fin(*sf)});
  out.push_back(TimerSet{TimerKind::DataFinRtx, -1, now + cfg_.datafin_rtx, ++datafin_gen_});
}

Segment Connection::build_data_fin(const Subflow& sf) const {
  Segment s = sf.make_pure_ack();
  DssOpt d;
  d.dsn = fin_dsn_;
  d.data_fin = true;
  s.options.push_back(d);
  patch_dss(s);
  return s;
}

void Connection::maybe_close_subflows(Effects& out, TimeNs now) {
  const bool ready = mode_ == ConnMode::Mptcp
                         ? (datafin_sent_ && datafin_acked_ && peer_fin_rcvd_)
                         : false;  // tcp teardown runs through maybe_send_closing_fin
  if (!ready) return;
  for (size_t i = 0; i < subflows_.size(); ++i) {
    Subflow& sf = *subflows_[i];
    if (sf.state() == TcpState::Established || sf.state() == TcpState::CloseWait)
      append(out, postprocess(i, sf.start_close(now), now));
  }
}

void Connection::check_dealloc(Effects& out) {
  if (dealloc_emitted_ || subflows_.empty()) return;
  for (const auto& sf : subflows_)
    if (sf->state() != TcpState::Closed) return;
  dealloc_emitted_ = true;
  out.push_back(ConnectionDeallocated{});
}

Effects Connection::postprocess(size_t idx, Effects&& sfx, TimeNs now) {
  Effects out;
  std::vector<size_t> established;
  for (Effect& e : sfx) {
    if (auto* so = std::get_if<SegmentOut>(&e)) {
      patch_dss(so->seg);
      out.push_back(std::move(e));
    } else if (std::holds_alternative<SubflowEstablished>(e)) {
      out.push_back(e);
      established.push_back(idx);
    } else if (auto* md = std::get_if<MappingDelivered>(&e)) {
      on_mapping(md->mapping, out);
    } else if (auto* sc = std::get_if<StateChanged>(&e)) {
      out.push_back(e);
      if (mode_ == ConnMode::Tcp && sc->to == TcpState::CloseWait)
        out.push_back(PeerDataFin{});  // plain TCP: peer FIN is end-of-stream
    } else {
      out.push_back(std::move(e));
    }
  }
  for (size_t id : established) on_established(id, out, now);
  return out;
}

void Connection::on_established(size_t idx, Effects& out, TimeNs now) {
  if (idx != 0 || mode_ != ConnMode::Mptcp) return;
  // Advertise every extra local address on the freshly established master.
  for (size_t i = 1; i < cfg_.local_addrs.size(); ++i) {
    Segment s = subflows_[0]->make_pure_ack();
    s.options.push_back(AddAddrOpt{static_cast<uint8_t>(i + 1), cfg_.local_addrs[i]});
    patch_dss(s);
    out.push_back(SegmentOut{s});
  }
  (void)now;
}

void Connection::on_add_addr(const AddAddrOpt& aa, Effects& out, TimeNs now) {
  if (aa.addr_id == 0) throw ProtocolViolation("ADD_ADDR with addr_id 0");
  const bool known = remote_addrs_.count(aa.addr_id) > 0;
  record_remote_addr(aa.addr_id, aa.addr);
  if (known || role_ != ConnRole::Initiator || !token_) return;
  try_initiate_join(aa.addr, out, now);
}

void Connection::record_remote_addr(uint8_t addr_id, uint32_t addr) {
  auto [it, inserted] = remote_addrs_.emplace(addr_id, addr);
  if (!inserted && it->second != addr)
    throw ProtocolViolation("ADD_ADDR reuses an addr_id for a different address");
}

void Connection::try_initiate_join(uint32_t remote_addr, Effects& out, TimeNs now) {
  if (subflows_.size() >= cfg_.max_subflows) return;
  std::set<uint32_t> used;
  for (const auto& sf : subflows_) used.insert(sf->tuple().src_addr);
  for (size_t i = 0; i < cfg_.local_addrs.size(); ++i) {
    const uint32_t local = cfg_.local_addrs[i];
    if (used.count(local)) continue;
    if (!cfg_.alloc_port) throw ConfigError("join requires an ephemeral port allocator");
    const FourTuple tuple{local, cfg_.alloc_port(), remote_addr, master_remote_port_};
    const size_t idx = subflows_.size();
    Subflow& sf = make_subflow(tuple);
    std::vector<MptcpOption> opts{MpJoinOpt{*token_, static_cast<uint8_t>(i + 1)}};
    append(out, postprocess(idx, sf.connect(now, std::move(opts)), now));
    return;  // one new subflow per learned address
  }
}

void Connection::on_data_ack(uint64_t ack) {
  if (ack <= snd_dsn_acked_) return;
  if (ack > next_unmapped_dsn_ + (datafin_sent_ ? 1 : 0))
    throw ProtocolViolation("data-ack beyond anything sent");
  snd_dsn_acked_ = ack;
  if (datafin_sent_ && !datafin_acked_ && snd_dsn_acked_ >= fin_dsn_ + 1) {
    datafin_acked_ = true;
    ++datafin_gen_;  // lazily cancels the retransmit timer
  }
}

void Connection::note_peer_data_fin(uint64_t dsn) {
  if (peer_fin_dsn_ && *peer_fin_dsn_ != dsn)
    throw ProtocolViolation("DATA-FIN moved to a different DSN");
  peer_fin_dsn_ = dsn;
}

void Connection::try_consume_peer_fin(Effects& out) {
  if (!peer_fin_dsn_ || peer_fin_rcvd_) return;
  if (rcv_nxt_dsn_ != *peer_fin_dsn_) return;  // data before it still missing
  rcv_nxt_dsn_ += 1;  // DATA-FIN occupies one data sequence unit
  peer_fin_rcvd_ = true;
  out.push_back(PeerDataFin{});
}

void Connection::on_mapping(const DssMapping& m, Effects& out) {
  const uint64_t end = m.dsn + m.data_len;
  if (end <= rcv_nxt_dsn_) return;  // duplicate of delivered data
  if (m.dsn < rcv_nxt_dsn_)
    throw ProtocolViolation("mapping overlaps already-delivered data");
  auto it = reorder_.lower_bound(m.dsn);
  if (it != reorder_.end() && it->first < end) {
    if (it->first != m.dsn || it->second != m.data_len)
      throw ProtocolViolation("inconsistent overlapping mappings");
    return;  // exact duplicate of a buffered mapping
  }
  if (it != reorder_.begin()) {
    auto prev = std::prev(it);
    if (prev->first + prev->second > m.dsn)
      throw ProtocolViolation("inconsistent overlapping mappings");
  }
  reorder_.emplace(m.dsn, m.data_len);
  while (!reorder_.empty() && reorder_.begin()->first == rcv_nxt_dsn_) {
    const auto [dsn, len] = *reorder_.begin();
    reorder_.erase(reorder_.begin());
    rcv_nxt_dsn_ += len;
    delivered_bytes_ += len;
    out.push_back(DataDelivered{dsn, len});
  }
  try_consume_peer_fin(out);
}

void Connection::patch_dss(Segment& seg) const {
  if (mode_ != ConnMode::Mptcp || seg.syn() || seg.rst()) return;
  for (auto& opt : seg.options) {
    if (auto* d = std::get_if<DssOpt>(&opt)) {
      d->data_ack = rcv_nxt_dsn_;
      return;
    }
  }
  DssOpt d;
  d.data_ack = rcv_nxt_dsn_;
  seg.options.push_back(d);
}

}  // namespace mptcp
