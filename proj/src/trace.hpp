#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "effects.hpp"
#include "sim_time.hpp"

namespace mptcp {

enum class Metric { Cwnd, Ssthresh, State, Rto, DeliveredBytes, Drop };

const char* metric_name(Metric m);

// One trace row. `value` is metric-dependent: bytes for cwnd/ssthresh and
// delivered_bytes, a TcpState for state, nanoseconds for rto, and the
// per-direction data-segment ordinal for drop. delivered_bytes rows are
// connection-level and use subflow_id -1.
struct TraceRecord {
  TimeNs time = 0;
  uint32_t conn_token = 0;
  int subflow_id = 0;
  Metric metric = Metric::Cwnd;
  uint64_t value = 0;

  bool operator==(const TraceRecord&) const = default;
};

// Collects records in event order and suppresses no-op repeats for the
// level-style metrics (cwnd, ssthresh, rto).
class Tracer {
 public:
  void cwnd(TimeNs t, uint32_t token, int sf, uint32_t cwnd_bytes, uint32_t ssthresh_bytes);
  void state(TimeNs t, uint32_t token, int sf, TcpState to);
  void rto(TimeNs t, uint32_t token, int sf, TimeNs rto);
  void delivered(TimeNs t, uint32_t token, uint64_t total_bytes);
  void drop(TimeNs t, uint32_t token, int sf, uint64_t data_ordinal);

  const std::vector<TraceRecord>& records() const { return records_; }

 private:
  void push(TimeNs t, uint32_t token, int sf, Metric m, uint64_t v);
  std::vector<TraceRecord> records_;
  std::map<std::pair<uint32_t, int>, uint64_t> last_cwnd_, last_ssthresh_, last_rto_;
};

// CSV with header `time,conn_token,subflow_id,metric,value`; time in seconds
// with 9 decimal places, rto values likewise, states by name.
std::string write_trace_csv(const std::vector<TraceRecord>& records);

std::string render_record_value(const TraceRecord& r);

}  // namespace mptcp
