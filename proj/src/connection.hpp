#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "effects.hpp"
#include "subflow.hpp"
#include "wire.hpp"

namespace mptcp {

enum class ConnMode { Mptcp, Tcp };
// Listener connections hold a LISTEN-role config template; accepted SYNs
// fork Acceptor children from them.
enum class ConnRole { Initiator, Acceptor, Listener };

const char* conn_mode_name(ConnMode m);
const char* conn_role_name(ConnRole r);

struct ConnectionConfig {
  ConnMode mode = ConnMode::Mptcp;
  SubflowConfig sf;
  uint32_t max_subflows = 8;
  TimeNs datafin_rtx = kSecond;
  std::vector<uint32_t> local_addrs;     // index i advertises addr_id i+1
  std::function<uint16_t()> alloc_port;  // ephemeral ports for join subflows
};

// Connection-level MPTCP control block: owns the subflows, assigns DSN
// mappings round-robin, reorders arriving mappings back into the data
// stream, manages ADD-ADDR/MP-JOIN path setup and the DATA-FIN teardown.
// Sans-IO like Subflow: every entry point returns effects for the host.
class Connection {
 public:
  Connection(ConnRole role, ConnectionConfig cfg);

  // Initiator: open the master subflow. tuple.src must be local_addrs[0].
  Effects connect(const FourTuple& master_tuple, TimeNs now);

  // Acceptor: adopt a master SYN that a listener forked. In mptcp mode
  // `token` is the freshly allocated local token, echoed on the SYN-ACK.
  Effects accept_master(const Segment& syn, std::optional<Token> token, TimeNs now);

  // Acceptor: adopt an MP_JOIN SYN that the demux routed here by token.
  Effects accept_join(const Segment& syn, TimeNs now);

  // A segment for subflow `idx` (resolved by the endpoint table).
  Effects on_segment(size_t idx, const Segment& seg, TimeNs now);

  Effects on_timer(TimerKind kind, int subflow_id, uint64_t generation, TimeNs now);

  // Application surface.
  Effects send(uint64_t bytes, TimeNs now);  // throws ConnectionClosing after close()
  Effects start_bulk(TimeNs now);            // unbounded source until close()
  Effects close(TimeNs now);                 // idempotent; DATA-FIN after queued data

  ConnRole role() const { return role_; }
  ConnMode mode() const { return mode_; }
  const ConnectionConfig& config() const { return cfg_; }
  std::optional<Token> token() const { return token_; }
  uint32_t trace_token() const { return token_ ? token_->value : 0; }
  void set_token(Token t) { token_ = t; }
  const std::vector<std::unique_ptr<Subflow>>& subflows() const { return subflows_; }
  uint64_t delivered_bytes() const { return delivered_bytes_; }
  uint64_t queued_bytes() const { return snd_end_dsn_; }
  uint64_t rcv_nxt_dsn() const { return rcv_nxt_dsn_; }
  bool close_requested() const { return close_requested_; }
  bool deallocated() const { return dealloc_emitted_; }
  bool data_fin_acked() const { return datafin_acked_; }
  bool peer_data_fin_received() const { return peer_fin_rcvd_; }
  size_t reorder_buffer_size() const { return reorder_.size(); }

 private:
  Effects finish(Effects out, TimeNs now);
  Effects pump(TimeNs now);
  void maybe_send_closing_fin(Effects& out, TimeNs now);
  void maybe_close_subflows(Effects& out, TimeNs now);
  void check_dealloc(Effects& out);
  Effects postprocess(size_t idx, Effects&& sfx, TimeNs now);
  void on_established(size_t idx, Effects& out, TimeNs now);
  void on_add_addr(const AddAddrOpt& aa, Effects& out, TimeNs now);
  void record_remote_addr(uint8_t addr_id, uint32_t addr);
  void try_initiate_join(uint32_t remote_addr, Effects& out, TimeNs now);
  void on_data_ack(uint64_t ack);
  void note_peer_data_fin(uint64_t dsn);
  void try_consume_peer_fin(Effects& out);
  void on_mapping(const DssMapping& m, Effects& out);
  void patch_dss(Segment& seg) const;
  Segment build_data_fin(const Subflow& sf) const;
  Subflow* first_established() const;
  uint64_t remaining_bytes() const;
  Subflow& make_subflow(const FourTuple& tuple);

  ConnRole role_;
  ConnectionConfig cfg_;
  ConnMode mode_;
  std::optional<Token> token_;
  std::vector<std::unique_ptr<Subflow>> subflows_;
  uint16_t master_remote_port_ = 0;

  // Send side (64-bit data sequence space; no wrap handling needed).
  uint64_t snd_end_dsn_ = 0;        // total bytes queued by the app
  uint64_t next_unmapped_dsn_ = 0;  // scheduler progress
  uint64_t snd_dsn_acked_ = 0;      // peer's cumulative data-ack
  bool bulk_ = false;
  size_t cursor_ = 0;  // round-robin scheduler position, persistent

  // Receive side.
  uint64_t rcv_nxt_dsn_ = 0;
  uint64_t delivered_bytes_ = 0;
  std::map<uint64_t, uint32_t> reorder_;  // dsn -> len, gaps only

  // Teardown.
  bool close_requested_ = false;
  bool datafin_sent_ = false;
  bool datafin_acked_ = false;
  uint64_t fin_dsn_ = 0;
  uint64_t datafin_gen_ = 0;
  std::optional<uint64_t> peer_fin_dsn_;
  bool peer_fin_rcvd_ = false;
  bool dealloc_emitted_ = false;

  std::map<uint8_t, uint32_t> remote_addrs_;  // addr_id -> address
};

}  // namespace mptcp
