#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "connection.hpp"
#include "netsim.hpp"
#include "trace.hpp"

namespace mptcp {

struct NodeSpec {
  std::string id;
  std::vector<uint32_t> addresses;
};

// Links bind each endpoint node's next unbound address, in declaration
// order. drop_script / loss_rate apply to data segments, per direction.
struct LinkSpec {
  std::string a, b;
  uint64_t bandwidth_bps = 1'000'000;
  double delay_s = 0.010;
  uint32_t queue_cap = 100;
  std::vector<uint64_t> drop_script;
  double loss_rate = 0.0;
};

// Bulk when bytes == 0: the source always has data and closes at
// start + duration. Byte-limited transfers close right after queueing.
struct TransferSpec {
  std::string src, dst;
  uint64_t bytes = 0;
  double duration_s = 0.0;
  double start_s = 0.0;
  uint16_t port = 0;                  // 0: auto-assigned 5000 + index
  std::optional<ConnMode> mode;       // per-transfer override
};

struct ScenarioConfig {
  std::string name = "custom";
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<TransferSpec> transfers;
  uint32_t mss = kDefaultMss;
  ConnMode mode = ConnMode::Mptcp;
  uint64_t seed = 1;
  double sim_duration_s = 30.0;
};

// Throws ConfigError with a field-level message on the first problem found.
void validate_scenario(const ScenarioConfig& cfg);

ScenarioConfig parse_scenario_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& cfg);

std::vector<std::string> builtin_scenario_names();
ScenarioConfig builtin_scenario(const std::string& name);  // ConfigError if unknown

struct TransferResult {
  size_t id = 0;
  std::string src, dst;
  uint64_t bytes_requested = 0;  // 0 for bulk
  uint64_t bytes_delivered = 0;
  bool completed = false;
  bool integrity_ok = true;
  TimeNs completion_time = -1;  // -1: never completed
};

struct SubflowResult {
  int id = 0;
  std::string tuple;
  std::string final_state;
  uint64_t bytes_sent = 0;
  uint64_t retransmissions = 0;
  uint64_t timeouts = 0;
  uint64_t halvings = 0;
};

struct ConnResult {
  std::string node;
  uint32_t token = 0;
  std::string role, mode;
  bool deallocated = false;
  std::vector<SubflowResult> subflows;
};

struct LinkResult {
  int id = 0;
  std::string a, b;
  LinkDirStats dir[2];
};

struct RunResult {
  ScenarioConfig cfg;
  std::vector<TraceRecord> trace;
  std::vector<TransferResult> transfers;
  std::vector<ConnResult> connections;
  std::vector<LinkResult> links;
};

// Optional instrumentation for tests; all hooks run inside the event loop.
struct RunObserver {
  std::function<void(const P2PLink&, int dir, const Segment&, SegmentFate, uint64_t,
                     TimeNs)>
      on_segment_fate;
  std::function<void(const std::string& node, uint32_t token, int subflow_id, TimeNs)>
      on_subflow_closed;
  std::function<void(const std::string& node, uint32_t token, TimeNs)> on_conn_deallocated;
  std::function<void(const std::string& node, const Segment&, TimeNs)> on_rst_sent;
};

RunResult run_scenario(const ScenarioConfig& cfg, const RunObserver* obs = nullptr);

std::string summary_json(const RunResult& result);

// Standalone gnuplot script plotting cwnd vs time, one series per
// (connection, subflow). Series come from `records` when given, otherwise
// from reading csv_path; if neither is available a generic script results.
std::string emit_plot_script(const std::string& csv_path,
                             const std::vector<TraceRecord>* records = nullptr);

}  // namespace mptcp
