#include "subflow.hpp"

#include <algorithm>
#include <cstdlib>

#include "errors.hpp"

namespace mptcp {

const char* tcp_state_name(TcpState s) {
  switch (s) {
    case TcpState::Closed: return "CLOSED";
    case TcpState::Listen: return "LISTEN";
    case TcpState::SynSent: return "SYN_SENT";
    case TcpState::SynRcvd: return "SYN_RCVD";
    case TcpState::Established: return "ESTABLISHED";
    case TcpState::FinWait1: return "FIN_WAIT_1";
    case TcpState::FinWait2: return "FIN_WAIT_2";
    case TcpState::Closing: return "CLOSING";
    case TcpState::TimeWait: return "TIME_WAIT";
    case TcpState::CloseWait: return "CLOSE_WAIT";
    case TcpState::LastAck: return "LAST_ACK";
  }
  return "?";
}

Subflow::Subflow(int id, FourTuple tuple, SubflowConfig cfg)
    : id_(id), tuple_(tuple), cfg_(cfg), rto_(cfg.initial_rto) {
  if (cfg_.mss == 0) throw ConfigError("mss must be positive");
  cwnd_ = cfg_.initial_cwnd_segments * cfg_.mss;
  ssthresh_ = cfg_.initial_ssthresh;
  snd_una_ = snd_nxt_ = snd_data_end_ = cfg_.isn;
}

Effects Subflow::connect(TimeNs now, std::vector<MptcpOption> syn_opts) {
  if (state_ != TcpState::Closed)
    throw InvalidState("connect() on a subflow that is not CLOSED");
  handshake_opts_ = std::move(syn_opts);
  snd_una_ = cfg_.isn;
  snd_nxt_ = snd_data_end_ = cfg_.isn + 1;  // SYN occupies one unit
  syn_sent_at_ = now;
  Effects fx;
  set_state(TcpState::SynSent, fx);
  fx.push_back(SegmentOut{build_syn()});
  arm_rto(now, fx);
  return fx;
}

void Subflow::listen(std::vector<MptcpOption> synack_opts) {
  if (state_ != TcpState::Closed)
    throw InvalidState("listen() on a subflow that is not CLOSED");
  handshake_opts_ = std::move(synack_opts);
  state_ = TcpState::Listen;
}

Segment Subflow::build_syn() const {
  Segment s;
  s.tuple = tuple_;
  s.flags = kFlagSyn;
  s.ssn = cfg_.isn;
  s.options = handshake_opts_;
  return s;
}

Segment Subflow::build_synack() const {
  Segment s;
  s.tuple = tuple_;
  s.flags = kFlagSyn | kFlagAck;
  s.ssn = cfg_.isn;
  s.ack_ssn = rcv_nxt_;
  s.options = handshake_opts_;
  return s;
}

Segment Subflow::build_data_segment(const TxEntry& e) const {
  Segment s;
  s.tuple = tuple_;
  s.flags = kFlagAck;
  s.ssn = e.mapping.ssn;
  s.ack_ssn = rcv_nxt_;
  s.payload_len = e.mapping.data_len;
  if (cfg_.mptcp) {
    DssOpt d;
    d.dsn = e.mapping.dsn;
    d.ssn = e.mapping.ssn;
    d.data_len = e.mapping.data_len;
    s.options.push_back(d);
  }
  return s;
}

Segment Subflow::build_fin() const {
  Segment s;
  s.tuple = tuple_;
  s.flags = kFlagFin | kFlagAck;
  s.ssn = fin_ssn_;
  s.ack_ssn = rcv_nxt_;
  return s;
}

Segment Subflow::make_pure_ack() const {
  Segment s;
  s.tuple = tuple_;
  s.flags = kFlagAck;
  s.ssn = snd_nxt_;
  s.ack_ssn = rcv_nxt_;
  return s;
}

void Subflow::set_state(TcpState next, Effects& fx) {
  if (next == state_) return;
  fx.push_back(StateChanged{id_, state_, next});
  state_ = next;
}

void Subflow::emit_cwnd(Effects& fx) const {
  fx.push_back(CwndChanged{id_, cwnd_, ssthresh_});
}

void Subflow::arm_rto(TimeNs now, Effects& fx) {
  rto_armed_ = true;
  fx.push_back(TimerSet{TimerKind::Rto, id_, now + rto_, ++rto_gen_});
}

void Subflow::cancel_rto(Effects& fx) {
  if (!rto_armed_) return;
  rto_armed_ = false;
  ++rto_gen_;
  fx.push_back(TimerCancel{TimerKind::Rto, id_});
}

void Subflow::arm_time_wait(TimeNs now, Effects& fx) {
  fx.push_back(TimerSet{TimerKind::TimeWait, id_, now + cfg_.time_wait, ++time_wait_gen_});
}

void Subflow::close_now(Effects& fx) {
  cancel_rto(fx);
  ++time_wait_gen_;
  set_state(TcpState::Closed, fx);
  fx.push_back(SubflowClosed{id_});
}

uint32_t Subflow::send_window() const {
  if (state_ != TcpState::Established || fin_sent_) return 0;
  const uint32_t flight = snd_nxt_ - snd_una_;
  const uint32_t wnd = std::min(cwnd_, cfg_.peer_rwnd);
  return flight >= wnd ? 0 : wnd - flight;
}

uint32_t Subflow::retransmit_window() const {
  switch (state_) {
    case TcpState::Established:
    case TcpState::FinWait1:
    case TcpState::Closing:
    case TcpState::CloseWait:
    case TcpState::LastAck:
      break;
    default:
      return 0;
  }
  const uint32_t flight = snd_nxt_ - snd_una_;
  const uint32_t wnd = std::min(cwnd_, cfg_.peer_rwnd);
  return flight >= wnd ? 0 : wnd - flight;
}

uint64_t Subflow::synthesized_dsn(uint32_t ssn) const {
  // Plain-TCP mode: the byte stream itself is the data stream.
  return static_cast<uint64_t>(ssn - irs_ - 1);
}

void Subflow::take_rtt_sample(TimeNs sample) {
  if (sample < 0) throw InternalError("negative rtt sample");
  if (!have_rtt_) {
    srtt_ = sample;
    rttvar_ = sample / 2;
    have_rtt_ = true;
  } else {
    const TimeNs err = sample - srtt_;
    rttvar_ += (std::llabs(err) - rttvar_) / 4;
    srtt_ += err / 8;
  }
  rto_ = std::clamp(srtt_ + 4 * rttvar_, cfg_.min_rto, cfg_.max_rto);
}

Effects Subflow::on_segment(const Segment& seg, TimeNs now) {
  Effects fx;
  if (seg.rst()) {
    if (state_ == TcpState::Closed || state_ == TcpState::Listen) return fx;
    close_now(fx);
    return fx;
  }
  switch (state_) {
    case TcpState::Closed:
      return fx;  // demux normally RSTs these before they reach a subflow
    case TcpState::Listen:
      return handle_listen(seg, now);
    case TcpState::SynSent:
      return handle_syn_sent(seg, now);
    default:
      break;
  }

  if (state_ == TcpState::SynRcvd) {
    if (seg.syn() && !seg.ack()) {
      // Duplicate SYN: our SYN-ACK was lost.
      fx.push_back(SegmentOut{build_synack()});
      return fx;
    }
    if (seg.ack() && seg.ack_ssn == snd_nxt_) {
      snd_una_ = seg.ack_ssn;
      if (!syn_retransmitted_) take_rtt_sample(now - syn_sent_at_);
      cancel_rto(fx);
      set_state(TcpState::Established, fx);
      emit_cwnd(fx);
      fx.push_back(SubflowEstablished{id_});
      // The handshake-completing ACK may itself carry data; fall through.
    } else {
      return fx;
    }
  } else if (seg.syn()) {
    // Retransmitted SYN-ACK after our final ACK got lost: just re-ACK.
    fx.push_back(SegmentOut{make_pure_ack()});
    return fx;
  }

  if (seg.ack()) append(fx, on_ack(seg, now));
  if (state_ == TcpState::Closed) return fx;  // LAST_ACK completion
  if (seg.payload_len > 0) append(fx, on_data(seg, now));
  if (seg.fin()) append(fx, on_fin(seg, now));
  return fx;
}

Effects Subflow::handle_listen(const Segment& seg, TimeNs now) {
  Effects fx;
  if (!seg.syn() || seg.ack()) return fx;
  irs_ = seg.ssn;
  rcv_nxt_ = irs_ + 1;
  snd_una_ = cfg_.isn;
  snd_nxt_ = snd_data_end_ = cfg_.isn + 1;
  syn_sent_at_ = now;
  set_state(TcpState::SynRcvd, fx);
  fx.push_back(SegmentOut{build_synack()});
  arm_rto(now, fx);
  return fx;
}

Effects Subflow::handle_syn_sent(const Segment& seg, TimeNs now) {
  Effects fx;
  if (seg.syn() && seg.ack()) {
    if (seg.ack_ssn != snd_nxt_) return fx;  // acks something we never sent
    snd_una_ = seg.ack_ssn;
    irs_ = seg.ssn;
    rcv_nxt_ = irs_ + 1;
    if (!syn_retransmitted_) take_rtt_sample(now - syn_sent_at_);
    cancel_rto(fx);
    set_state(TcpState::Established, fx);
    emit_cwnd(fx);
    fx.push_back(SubflowEstablished{id_});
    fx.push_back(SegmentOut{make_pure_ack()});
    return fx;
  }
  if (seg.syn()) {
    // Simultaneous open.
    irs_ = seg.ssn;
    rcv_nxt_ = irs_ + 1;
    set_state(TcpState::SynRcvd, fx);
    fx.push_back(SegmentOut{build_synack()});
    arm_rto(now, fx);
    return fx;
  }
  return fx;
}

Effects Subflow::enter_fast_recovery(TimeNs now) {
  Effects fx;
  ++halvings_;
  const uint32_t flight = snd_nxt_ - snd_una_;
  ssthresh_ = std::max(flight / 2, 2 * cfg_.mss);
  recover_ = snd_nxt_;
  in_fast_recovery_ = true;
  append(fx, retransmit_front(now));
  cwnd_ = ssthresh_ + cfg_.dupack_threshold * cfg_.mss;
  emit_cwnd(fx);
  return fx;
}

Effects Subflow::retransmit_front(TimeNs now) {
  Effects fx;
  for (auto& e : retx_queue_) {
    if (e.mapping.ssn != snd_una_) continue;
    e.last_sent = now;
    e.retransmitted = true;
    ++retransmissions_;
    fx.push_back(SegmentOut{build_data_segment(e)});
    arm_rto(now, fx);
    return fx;
  }
  if (fin_sent_ && snd_una_ == fin_ssn_) {
    fx.push_back(SegmentOut{build_fin()});
    arm_rto(now, fx);
    return fx;
  }
  throw InternalError("retransmit requested but snd_una maps to no segment");
}

Effects Subflow::on_ack(const Segment& seg, TimeNs now) {
  Effects fx;
  const uint32_t ack = seg.ack_ssn;
  if (seq_lt(snd_data_end_, ack)) return fx;  // beyond anything we sent
  if (seq_lt(ack, snd_una_)) return fx;       // old

  if (ack == snd_una_) {
    const bool pure = seg.payload_len == 0 && !seg.syn() && !seg.fin();
    const bool outstanding = snd_una_ != snd_data_end_;
    if (!pure || !outstanding) return fx;
    if (in_fast_recovery_) {
      cwnd_ += cfg_.mss;  // inflate per extra dup
      emit_cwnd(fx);
    } else if (++dup_ack_count_ == cfg_.dupack_threshold) {
      append(fx, enter_fast_recovery(now));
    }
    return fx;
  }

  // The ACK advances. Release covered segments and sample RTT (Karn).
  uint32_t data_acked = 0;
  std::optional<TimeNs> sample;
  while (!retx_queue_.empty()) {
    const TxEntry& e = retx_queue_.front();
    const uint32_t end = e.mapping.ssn + e.mapping.data_len;
    if (!seq_leq(end, ack)) break;
    data_acked += e.mapping.data_len;
    if (!e.retransmitted) sample = now - e.last_sent;
    retx_queue_.pop_front();
  }
  const TimeNs rto_before = rto_;
  if (sample) take_rtt_sample(*sample);
  snd_una_ = ack;
  if (seq_lt(snd_nxt_, snd_una_)) snd_nxt_ = snd_una_;

  if (in_fast_recovery_) {
    if (seq_leq(recover_, ack)) {
      // Full ACK (covers the recovery point): deflate and leave recovery.
      cwnd_ = ssthresh_;
      in_fast_recovery_ = false;
      dup_ack_count_ = 0;
      emit_cwnd(fx);
    } else {
      // Partial ACK: retransmit the next hole, deflate, stay in recovery.
      append(fx, retransmit_front(now));
      const uint64_t kept = cwnd_ > data_acked ? cwnd_ - data_acked : 0;
      cwnd_ = static_cast<uint32_t>(std::max<uint64_t>(kept + cfg_.mss, cfg_.mss));
      emit_cwnd(fx);
    }
  } else if (data_acked > 0) {
    dup_ack_count_ = 0;
    if (cwnd_ < ssthresh_) {
      cwnd_ += cfg_.mss;
    } else {
      const uint64_t mss = cfg_.mss;
      cwnd_ += static_cast<uint32_t>(std::max<uint64_t>(1, mss * mss / cwnd_));
    }
    emit_cwnd(fx);
  } else {
    dup_ack_count_ = 0;
  }
  if (rto_ != rto_before) fx.push_back(RtoChanged{id_, rto_});

  if (fin_sent_ && seq_leq(fin_ssn_ + 1, ack)) {
    switch (state_) {
      case TcpState::FinWait1:
        set_state(TcpState::FinWait2, fx);
        break;
      case TcpState::Closing:
        arm_time_wait(now, fx);
        set_state(TcpState::TimeWait, fx);
        break;
      case TcpState::LastAck:
        close_now(fx);
        return fx;
      default:
        break;
    }
  }

  if (snd_una_ == snd_data_end_) {
    cancel_rto(fx);
  } else {
    arm_rto(now, fx);  // restart for the remaining outstanding data
  }
  return fx;
}

Effects Subflow::on_data(const Segment& seg, TimeNs now) {
  (void)now;
  Effects fx;
  switch (state_) {
    case TcpState::Established:
    case TcpState::FinWait1:
    case TcpState::FinWait2:
      break;
    default:
      // Stream already finished by the peer; a late retransmission. Re-ACK.
      fx.push_back(SegmentOut{make_pure_ack()});
      return fx;
  }
  const uint32_t pos = seg.ssn;
  const uint32_t len = seg.payload_len;
  const uint32_t end = pos + len;
  if (seq_leq(end, rcv_nxt_) || seq_lt(pos, rcv_nxt_)) {
    fx.push_back(SegmentOut{make_pure_ack()});  // stale or overlapping copy
    return fx;
  }
  if (end - rcv_nxt_ > cfg_.peer_rwnd) {
    fx.push_back(SegmentOut{make_pure_ack()});  // outside our receive window
    return fx;
  }

  uint64_t dsn = 0;
  if (cfg_.mptcp) {
    const DssOpt* d = seg.dss();
    if (!d || d->data_len != len || d->ssn != pos)
      throw ProtocolViolation("data segment lacks a consistent DSS mapping");
    dsn = d->dsn;
  } else {
    dsn = synthesized_dsn(pos);
  }

  if (pos == rcv_nxt_) {
    rcv_nxt_ = end;
    fx.push_back(MappingDelivered{{dsn, pos, static_cast<uint16_t>(len), id_}});
    while (!ooo_.empty() && ooo_.begin()->first == rcv_nxt_) {
      const auto [ssn0, e] = *ooo_.begin();
      ooo_.erase(ooo_.begin());
      rcv_nxt_ = ssn0 + e.len;
      fx.push_back(MappingDelivered{{e.dsn, ssn0, static_cast<uint16_t>(e.len), id_}});
    }
  } else {
    ooo_[pos] = RxEntry{len, dsn};  // gap: hold and dup-ACK
  }
  fx.push_back(SegmentOut{make_pure_ack()});
  return fx;
}

Effects Subflow::on_fin(const Segment& seg, TimeNs now) {
  Effects fx;
  if (state_ == TcpState::Listen || state_ == TcpState::Closed) return fx;
  const uint32_t fin_pos = seg.ssn + seg.payload_len;
  if (seq_lt(fin_pos, rcv_nxt_) || seq_lt(rcv_nxt_, fin_pos)) {
    // Already consumed, or data before it is still missing: (re-)ACK as-is.
    fx.push_back(SegmentOut{make_pure_ack()});
    return fx;
  }
  rcv_nxt_ += 1;
  switch (state_) {
    case TcpState::Established:
      set_state(TcpState::CloseWait, fx);
      break;
    case TcpState::FinWait1:
      set_state(TcpState::Closing, fx);
      break;
    case TcpState::FinWait2:
      arm_time_wait(now, fx);
      set_state(TcpState::TimeWait, fx);
      break;
    default:
      break;
  }
  fx.push_back(SegmentOut{make_pure_ack()});
  return fx;
}

Effects Subflow::transmit(const DssMapping& mapping, TimeNs now) {
  if (state_ != TcpState::Established)
    throw InvalidState("transmit on a subflow that is not ESTABLISHED");
  if (fin_sent_) throw InvalidState("transmit after close");
  if (mapping.data_len == 0 || mapping.data_len > cfg_.mss)
    throw InternalError("mapping length must be in (0, mss]");
  if (mapping.data_len > send_window()) throw WindowExceeded("mapping exceeds send window");
  if (mapping.ssn != snd_nxt_ || snd_nxt_ != snd_data_end_)
    throw InternalError("fresh data must be appended at the send tail");

  retx_queue_.push_back(TxEntry{mapping, now, false});
  snd_nxt_ += mapping.data_len;
  snd_data_end_ = snd_nxt_;
  bytes_sent_ += mapping.data_len;
  Effects fx;
  fx.push_back(SegmentOut{build_data_segment(retx_queue_.back())});
  if (!rto_armed_) arm_rto(now, fx);
  return fx;
}

uint32_t Subflow::next_rewind_len() const {
  if (!has_rewind_data()) throw InvalidState("no rewind data pending");
  if (fin_sent_ && snd_nxt_ == fin_ssn_) return 0;  // FIN occupies no window
  for (const auto& e : retx_queue_)
    if (e.mapping.ssn == snd_nxt_) return e.mapping.data_len;
  throw InternalError("rewound snd_nxt maps to no queued segment");
}

Effects Subflow::resend_next(TimeNs now) {
  if (!has_rewind_data()) throw InvalidState("no rewind data pending");
  Effects fx;
  if (fin_sent_ && snd_nxt_ == fin_ssn_) {
    snd_nxt_ = fin_ssn_ + 1;
    fx.push_back(SegmentOut{build_fin()});
    arm_rto(now, fx);
    return fx;
  }
  for (auto& e : retx_queue_) {
    if (e.mapping.ssn != snd_nxt_) continue;
    e.last_sent = now;
    e.retransmitted = true;
    ++retransmissions_;
    snd_nxt_ += e.mapping.data_len;
    fx.push_back(SegmentOut{build_data_segment(e)});
    arm_rto(now, fx);
    return fx;
  }
  throw InternalError("rewound snd_nxt maps to no queued segment");
}

Effects Subflow::start_close(TimeNs now) {
  if (fin_sent_) return {};
  if (state_ != TcpState::Established && state_ != TcpState::CloseWait)
    throw InvalidState("close on a subflow that is neither ESTABLISHED nor CLOSE_WAIT");
  Effects fx;
  fin_sent_ = true;
  fin_ssn_ = snd_data_end_;
  snd_data_end_ += 1;  // FIN consumes one sequence unit
  set_state(state_ == TcpState::Established ? TcpState::FinWait1 : TcpState::LastAck, fx);
  if (snd_nxt_ == fin_ssn_) {
    snd_nxt_ = fin_ssn_ + 1;
    fx.push_back(SegmentOut{build_fin()});
    arm_rto(now, fx);
  }
  // else: an RTO rewind is in progress; resend_next emits the FIN in order.
  return fx;
}

Effects Subflow::on_timer(TimerKind kind, uint64_t generation, TimeNs now) {
  Effects fx;
  if (kind == TimerKind::TimeWait) {
    if (generation != time_wait_gen_ || state_ != TcpState::TimeWait) return fx;
    close_now(fx);
    return fx;
  }
  if (kind != TimerKind::Rto) throw InternalError("unexpected timer kind for subflow");
  if (generation != rto_gen_ || !rto_armed_) return fx;  // stale firing
  rto_armed_ = false;

  if (state_ == TcpState::SynSent) {
    syn_retransmitted_ = true;
    fx.push_back(SegmentOut{build_syn()});
  } else if (state_ == TcpState::SynRcvd) {
    syn_retransmitted_ = true;
    fx.push_back(SegmentOut{build_synack()});
  } else {
    if (snd_una_ == snd_data_end_)
      throw InternalError("RTO fired with no outstanding data");
    ++timeouts_;
    const uint32_t flight = snd_nxt_ - snd_una_;
    ssthresh_ = std::max(flight / 2, 2 * cfg_.mss);
    cwnd_ = cfg_.mss;
    in_fast_recovery_ = false;
    dup_ack_count_ = 0;
    snd_nxt_ = snd_una_;  // rewind: everything outstanding is resent in order
    emit_cwnd(fx);
    append(fx, resend_next(now));
  }
  rto_ = std::min(rto_ * 2, cfg_.max_rto);
  fx.push_back(RtoChanged{id_, rto_});
  arm_rto(now, fx);
  return fx;
}

}  // namespace mptcp
