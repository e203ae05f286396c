#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "effects.hpp"
#include "sim_time.hpp"
#include "wire.hpp"

namespace mptcp {

// Modular 32-bit sequence comparisons (valid while spans stay < 2^31).
inline bool seq_lt(uint32_t a, uint32_t b) {
  return static_cast<int32_t>(a - b) < 0;
}
inline bool seq_leq(uint32_t a, uint32_t b) {
  return static_cast<int32_t>(a - b) <= 0;
}

struct SubflowConfig {
  uint32_t mss = kDefaultMss;
  uint32_t initial_cwnd_segments = 1;
  uint32_t initial_ssthresh = 64 * 1024;
  uint32_t dupack_threshold = 3;
  uint32_t peer_rwnd = 512 * 1024;  // static advertised window model
  uint32_t isn = 0;
  TimeNs initial_rto = kSecond;
  TimeNs min_rto = 200 * kMillisecond;
  TimeNs max_rto = 60 * kSecond;
  TimeNs time_wait = 2 * kSecond;
  bool mptcp = true;  // false: plain TCP, no options on the wire
};

// One TCP subflow: handshake, NewReno congestion control, loss recovery and
// teardown, written sans-IO. Every entry point returns the effects the caller
// must act on; the subflow itself never touches links, clocks or timers.
class Subflow {
 public:
  Subflow(int id, FourTuple tuple, SubflowConfig cfg);

  // Active open. `syn_opts` ride on the SYN (MP_CAPABLE request / MP_JOIN).
  Effects connect(TimeNs now, std::vector<MptcpOption> syn_opts);
  // Passive open. `synack_opts` ride on the SYN-ACK (MP_CAPABLE with token).
  void listen(std::vector<MptcpOption> synack_opts);

  Effects on_segment(const Segment& seg, TimeNs now);
  Effects on_timer(TimerKind kind, uint64_t generation, TimeNs now);

  // Sends one fresh mapping worth of data. Requires ESTABLISHED and
  // mapping.data_len <= send_window(); the mapping's ssn must equal snd_nxt.
  Effects transmit(const DssMapping& mapping, TimeNs now);

  // After an RTO rewind snd_nxt points below the highest byte ever sent and
  // previously sent mappings must be resent verbatim before any fresh data.
  bool has_rewind_data() const { return seq_lt(snd_nxt_, snd_data_end_); }
  uint32_t next_rewind_len() const;
  Effects resend_next(TimeNs now);

  // App-level close: emits our FIN once all of our sent data may still be in
  // flight (FIN is sequenced after it). Valid in ESTABLISHED or CLOSE_WAIT.
  Effects start_close(TimeNs now);

  // Pure ACK carrying current snd_nxt/rcv_nxt; consumes no sequence space.
  // The connection layer uses it for DATA-ACK / DATA-FIN / ADD-ADDR frames.
  Segment make_pure_ack() const;

  int id() const { return id_; }
  const FourTuple& tuple() const { return tuple_; }
  TcpState state() const { return state_; }
  bool established() const { return state_ == TcpState::Established; }
  uint32_t send_window() const;
  // Window for rewind resends: unlike send_window it stays open after our
  // FIN is queued and during teardown states (retransmissions must finish).
  uint32_t retransmit_window() const;
  uint32_t cwnd() const { return cwnd_; }
  uint32_t ssthresh() const { return ssthresh_; }
  uint32_t snd_una() const { return snd_una_; }
  uint32_t snd_nxt() const { return snd_nxt_; }
  uint32_t rcv_nxt() const { return rcv_nxt_; }
  TimeNs rto() const { return rto_; }
  TimeNs srtt() const { return srtt_; }
  uint32_t dup_ack_count() const { return dup_ack_count_; }
  bool in_fast_recovery() const { return in_fast_recovery_; }
  uint64_t retransmissions() const { return retransmissions_; }
  uint64_t timeouts() const { return timeouts_; }
  uint64_t halvings() const { return halvings_; }
  uint64_t bytes_sent() const { return bytes_sent_; }
  const SubflowConfig& config() const { return cfg_; }

 private:
  struct TxEntry {
    DssMapping mapping;   // ssn inside is absolute subflow sequence
    TimeNs last_sent = 0;
    bool retransmitted = false;
  };
  struct RxEntry {
    uint32_t len = 0;
    uint64_t dsn = 0;
  };
  struct SeqLess {
    bool operator()(uint32_t a, uint32_t b) const { return seq_lt(a, b); }
  };

  Effects handle_listen(const Segment& seg, TimeNs now);
  Effects handle_syn_sent(const Segment& seg, TimeNs now);
  Effects on_ack(const Segment& seg, TimeNs now);
  Effects on_data(const Segment& seg, TimeNs now);
  Effects on_fin(const Segment& seg, TimeNs now);
  Effects enter_fast_recovery(TimeNs now);
  Effects retransmit_front(TimeNs now);  // resend the entry at snd_una
  Segment build_syn() const;
  Segment build_synack() const;
  Segment build_data_segment(const TxEntry& e) const;
  Segment build_fin() const;
  void take_rtt_sample(TimeNs sample);
  void set_state(TcpState next, Effects& fx);
  void arm_rto(TimeNs now, Effects& fx);
  void cancel_rto(Effects& fx);
  void arm_time_wait(TimeNs now, Effects& fx);
  void emit_cwnd(Effects& fx) const;
  void deliver_in_order(const Segment& seg, Effects& fx);
  uint64_t synthesized_dsn(uint32_t ssn) const;
  void close_now(Effects& fx);

  int id_;
  FourTuple tuple_;
  SubflowConfig cfg_;
  TcpState state_ = TcpState::Closed;

  // Send side. snd_data_end_ is the end of everything ever handed to
  // transmit() (plus SYN/FIN units); snd_nxt_ can rewind below it after RTO.
  uint32_t snd_una_ = 0;
  uint32_t snd_nxt_ = 0;
  uint32_t snd_data_end_ = 0;
  uint32_t cwnd_ = 0;
  uint32_t ssthresh_ = 0;
  uint32_t dup_ack_count_ = 0;
  uint32_t recover_ = 0;
  bool in_fast_recovery_ = false;
  std::deque<TxEntry> retx_queue_;
  bool fin_sent_ = false;
  uint32_t fin_ssn_ = 0;

  // Receive side.
  uint32_t irs_ = 0;  // peer's ISN
  uint32_t rcv_nxt_ = 0;
  std::map<uint32_t, RxEntry, SeqLess> ooo_;

  // RTT estimation (RFC 6298 shape, integer nanoseconds).
  bool have_rtt_ = false;
  TimeNs srtt_ = 0;
  TimeNs rttvar_ = 0;
  TimeNs rto_;
  TimeNs syn_sent_at_ = 0;
  bool syn_retransmitted_ = false;

  // Timer bookkeeping: generation counters invalidate stale engine events.
  uint64_t rto_gen_ = 0;
  bool rto_armed_ = false;
  uint64_t time_wait_gen_ = 0;

  std::vector<MptcpOption> handshake_opts_;  // SYN (client) or SYN-ACK (server)

  uint64_t retransmissions_ = 0;
  uint64_t timeouts_ = 0;
  uint64_t halvings_ = 0;
  uint64_t bytes_sent_ = 0;
};

}  // namespace mptcp
