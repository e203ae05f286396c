#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "sim_time.hpp"
#include "wire.hpp"

namespace mptcp {

enum class TcpState {
  Closed,
  Listen,
  SynSent,
  SynRcvd,
  Established,
  FinWait1,
  FinWait2,
  Closing,
  TimeWait,
  CloseWait,
  LastAck,
};

const char* tcp_state_name(TcpState s);

// One contiguous run of connection-level bytes carried on one subflow.
// Immutable once assigned: a (subflow_id, ssn) range maps to one DSN range
// forever.
struct DssMapping {
  uint64_t dsn = 0;
  uint32_t ssn = 0;
  uint16_t data_len = 0;
  int subflow_id = 0;
  auto operator<=>(const DssMapping&) const = default;
};

enum class TimerKind : uint8_t {
  Rto,         // per-subflow retransmission timer
  TimeWait,    // per-subflow TIME_WAIT expiry
  DataFinRtx,  // connection-level DATA-FIN resend
};

// Effects are what the protocol state machines hand back to their host
// instead of doing I/O themselves. The node glue turns them into link
// transmissions, engine timers and trace records.
struct SegmentOut {
  Segment seg;
};
struct TimerSet {
  TimerKind kind;
  int subflow_id;  // -1 for connection-scoped timers
  TimeNs deadline;
  uint64_t generation;  // stale firings are ignored by comparing generations
};
struct TimerCancel {
  TimerKind kind;
  int subflow_id;
};
struct StateChanged {
  int subflow_id;
  TcpState from;
  TcpState to;
};
struct CwndChanged {
  int subflow_id;
  uint32_t cwnd;
  uint32_t ssthresh;
};
// The retransmission timer value changed (fresh sample or timeout backoff).
struct RtoChanged {
  int subflow_id;
  TimeNs rto;
};
// Subflow -> connection: an in-SSN-order payload run with its DSN mapping.
struct MappingDelivered {
  DssMapping mapping;
};
struct SubflowClosed {
  int subflow_id;
};
struct SubflowEstablished {
  int subflow_id;
};
// Connection -> application: rcv_nxt_dsn advanced over [dsn, dsn+len).
struct DataDelivered {
  uint64_t dsn;
  uint32_t len;
};
struct PeerDataFin {};
struct ConnectionDeallocated {};

using Effect = std::variant<SegmentOut, TimerSet, TimerCancel, StateChanged, CwndChanged,
                            RtoChanged, MappingDelivered, SubflowClosed, SubflowEstablished,
                            DataDelivered, PeerDataFin, ConnectionDeallocated>;

using Effects = std::vector<Effect>;

inline void append(Effects& dst, Effects&& src) {
  for (auto& e : src) dst.emplace_back(std::move(e));
}

}  // namespace mptcp
