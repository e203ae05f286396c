#include "trace.hpp"

namespace mptcp {

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::Cwnd: return "cwnd";
    case Metric::Ssthresh: return "ssthresh";
    case Metric::State: return "state";
    case Metric::Rto: return "rto";
    case Metric::DeliveredBytes: return "delivered_bytes";
    case Metric::Drop: return "drop";
  }
  return "?";
}

void Tracer::push(TimeNs t, uint32_t token, int sf, Metric m, uint64_t v) {
  records_.push_back(TraceRecord{t, token, sf, m, v});
}

void Tracer::cwnd(TimeNs t, uint32_t token, int sf, uint32_t cwnd_bytes,
                  uint32_t ssthresh_bytes) {
  const auto key = std::make_pair(token, sf);
  if (auto it = last_cwnd_.find(key); it == last_cwnd_.end() || it->second != cwnd_bytes) {
    last_cwnd_[key] = cwnd_bytes;
    push(t, token, sf, Metric::Cwnd, cwnd_bytes);
  }
  if (auto it = last_ssthresh_.find(key);
      it == last_ssthresh_.end() || it->second != ssthresh_bytes) {
    last_ssthresh_[key] = ssthresh_bytes;
    push(t, token, sf, Metric::Ssthresh, ssthresh_bytes);
  }
}

void Tracer::state(TimeNs t, uint32_t token, int sf, TcpState to) {
  push(t, token, sf, Metric::State, static_cast<uint64_t>(to));
}

void Tracer::rto(TimeNs t, uint32_t token, int sf, TimeNs rto) {
  const auto key = std::make_pair(token, sf);
  const auto v = static_cast<uint64_t>(rto);
  if (auto it = last_rto_.find(key); it == last_rto_.end() || it->second != v) {
    last_rto_[key] = v;
    push(t, token, sf, Metric::Rto, v);
  }
}

void Tracer::delivered(TimeNs t, uint32_t token, uint64_t total_bytes) {
  push(t, token, -1, Metric::DeliveredBytes, total_bytes);
}

void Tracer::drop(TimeNs t, uint32_t token, int sf, uint64_t data_ordinal) {
  push(t, token, sf, Metric::Drop, data_ordinal);
}

std::string render_record_value(const TraceRecord& r) {
  switch (r.metric) {
    case Metric::State:
      return tcp_state_name(static_cast<TcpState>(r.value));
    case Metric::Rto:
      return format_time(static_cast<TimeNs>(r.value));
    default:
      return std::to_string(r.value);
  }
}

std::string write_trace_csv(const std::vector<TraceRecord>& records) {
  std::string out = "time,conn_token,subflow_id,metric,value\n";
  for (const TraceRecord& r : records) {
    out += format_time(r.time);
    out += ',';
    out += std::to_string(r.conn_token);
    out += ',';
    out += std::to_string(r.subflow_id);
    out += ',';
    out += metric_name(r.metric);
    out += ',';
    out += render_record_value(r);
    out += '\n';
  }
  return out;
}

}  // namespace mptcp
