#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "scenario.hpp"

using namespace mptcp;

namespace {

uint32_t addr(const char* s) { return *parse_addr(s); }

// Two nodes, one default link, one byte-limited transfer.
ScenarioConfig mini(uint64_t bytes = 10 * kDefaultMss) {
  ScenarioConfig cfg;
  cfg.name = "mini";
  cfg.nodes = {{"c", {addr("10.0.0.1")}}, {"s", {addr("10.0.0.2")}}};
  LinkSpec l;
  l.a = "c";
  l.b = "s";
  cfg.links = {l};
  TransferSpec t;
  t.src = "c";
  t.dst = "s";
  t.bytes = bytes;
  cfg.transfers = {t};
  cfg.sim_duration_s = 10.0;
  return cfg;
}

// Same, but two addresses and two links per node: a two-subflow path set.
ScenarioConfig mini2(uint64_t bytes = 10 * kDefaultMss) {
  ScenarioConfig cfg = mini(bytes);
  cfg.name = "mini2";
  cfg.nodes = {{"c", {addr("10.0.0.1"), addr("10.1.0.1")}},
               {"s", {addr("10.0.0.2"), addr("10.1.0.2")}}};
  cfg.links.push_back(cfg.links[0]);
  return cfg;
}

}  // namespace

TEST_CASE("trace CSV renders rows exactly") {
  const std::vector<TraceRecord> recs{
      {1'500'000'000, 42, 0, Metric::Cwnd, 536},
      {1'500'000'000, 42, 0, Metric::Ssthresh, 65536},
      {10'000'000, 42, 0, Metric::State,
       static_cast<uint64_t>(TcpState::Established)},
      {200'000'000, 42, 1, Metric::Rto, 200'000'000},
      {2'000'000'000, 42, -1, Metric::DeliveredBytes, 1072},
      {120'672'000, 42, 0, Metric::Drop, 17},
  };
  CHECK(write_trace_csv(recs) ==
        "time,conn_token,subflow_id,metric,value\n"
        "1.500000000,42,0,cwnd,536\n"
        "1.500000000,42,0,ssthresh,65536\n"
        "0.010000000,42,0,state,ESTABLISHED\n"
        "0.200000000,42,1,rto,0.200000000\n"
        "2.000000000,42,-1,delivered_bytes,1072\n"
        "0.120672000,42,0,drop,17\n");
}

TEST_CASE("the tracer suppresses level-metric repeats per (token, subflow)") {
  Tracer t;
  t.cwnd(0, 7, 0, 536, 65536);
  t.cwnd(1, 7, 0, 536, 65536);  // no-op repeat
  t.cwnd(2, 7, 0, 1072, 65536);
  t.cwnd(3, 8, 0, 536, 65536);  // other connection: fresh series
  t.rto(4, 7, 0, kSecond);
  t.rto(5, 7, 0, kSecond);  // no-op repeat
  REQUIRE(t.records().size() == 6);
  CHECK(t.records()[2].value == 1072);
  CHECK(t.records()[2].metric == Metric::Cwnd);
  CHECK(t.records()[3].conn_token == 8);
  CHECK(t.records()[5].metric == Metric::Rto);
}

TEST_CASE("identical seeds reproduce runs byte for byte") {
  const ScenarioConfig cfg = builtin_scenario("fig1c");
  const RunResult r1 = run_scenario(cfg);
  const RunResult r2 = run_scenario(cfg);
  CHECK(write_trace_csv(r1.trace) == write_trace_csv(r2.trace));
  CHECK(summary_json(r1) == summary_json(r2));

  ScenarioConfig other = cfg;
  other.seed = 2;
  const RunResult r3 = run_scenario(other);
  CHECK(write_trace_csv(r1.trace) != write_trace_csv(r3.trace));
}

TEST_CASE("validation pins field-level error messages") {
  SUBCASE("unknown transfer endpoint") {
    ScenarioConfig c = mini();
    c.transfers[0].src = "x";
    CHECK_THROWS_WITH_AS(validate_scenario(c), "transfers[0].src: unknown node 'x'",
                         ConfigError);
  }
  SUBCASE("links exhaust the per-node address budget") {
    ScenarioConfig c = mini();
    c.links.push_back(c.links[0]);
    CHECK_THROWS_WITH_AS(validate_scenario(c),
                         "links[1]: node 'c' has no unbound address left", ConfigError);
  }
  SUBCASE("bytes and duration are exclusive") {
    ScenarioConfig c = mini();
    c.transfers[0].duration_s = 1.0;
    CHECK_THROWS_WITH_AS(validate_scenario(c),
                         "transfers[0]: bytes and duration are mutually exclusive",
                         ConfigError);
  }
  SUBCASE("a transfer needs a size or a duration") {
    ScenarioConfig c = mini(0);
    CHECK_THROWS_WITH_AS(validate_scenario(c),
                         "transfers[0]: needs bytes or a positive duration", ConfigError);
  }
  SUBCASE("ports collide across explicit and defaulted values") {
    ScenarioConfig c = mini();
    c.transfers[0].port = 5001;
    c.transfers.push_back(c.transfers[0]);
    c.transfers[1].port = 0;  // defaults to 5000 + 1
    CHECK_THROWS_WITH_AS(validate_scenario(c), "transfers[1].port: port 5001 reused",
                         ConfigError);
  }
  SUBCASE("addresses are globally unique") {
    ScenarioConfig c = mini();
    c.nodes[1].addresses = {addr("10.0.0.1")};
    CHECK_THROWS_WITH_AS(validate_scenario(c),
                         "nodes[1].addresses: address reused: 10.0.0.1", ConfigError);
  }
  SUBCASE("start must precede the end of the simulation") {
    ScenarioConfig c = mini();
    c.transfers[0].start_s = 10.0;
    CHECK_THROWS_WITH_AS(validate_scenario(c),
                         "transfers[0].start: at or beyond sim_duration", ConfigError);
  }
  SUBCASE("link parameter ranges") {
    ScenarioConfig c = mini();
    c.links[0].queue_cap = 0;
    CHECK_THROWS_AS(validate_scenario(c), ConfigError);
    c = mini();
    c.links[0].bandwidth_bps = 0;
    CHECK_THROWS_AS(validate_scenario(c), ConfigError);
    c = mini();
    c.links[0].loss_rate = 1.0;
    CHECK_THROWS_AS(validate_scenario(c), ConfigError);
    c = mini();
    c.links[0].drop_script = {0};
    CHECK_THROWS_WITH_AS(validate_scenario(c),
                         "links[0].drop_script: ordinals are 1-based", ConfigError);
  }
  SUBCASE("assorted shape errors") {
    ScenarioConfig c = mini();
    c.mss = 63;
    CHECK_THROWS_AS(validate_scenario(c), ConfigError);
    c = mini();
    c.sim_duration_s = 0;
    CHECK_THROWS_AS(validate_scenario(c), ConfigError);
    c = mini();
    c.nodes.clear();
    CHECK_THROWS_AS(validate_scenario(c), ConfigError);
    c = mini();
    c.transfers.clear();
    CHECK_THROWS_AS(validate_scenario(c), ConfigError);
    c = mini();
    c.links[0].b = "c";
    CHECK_THROWS_WITH_AS(validate_scenario(c), "links[0]: link endpoints must differ",
                         ConfigError);
    c = mini();
    c.nodes[1].id = "c";
    CHECK_THROWS_AS(validate_scenario(c), ConfigError);
  }
}

TEST_CASE("JSON scenarios parse, reject unknown fields, and round-trip") {
  SUBCASE("syntactically broken input") {
    CHECK_THROWS_AS(parse_scenario_json("{"), ConfigError);
    CHECK_THROWS_AS(parse_scenario_json("[1,2]"), ConfigError);
  }
  SUBCASE("unknown keys are spelled out") {
    CHECK_THROWS_WITH_AS(parse_scenario_json(R"({"foo": 1})"),
                         "top level: unknown field 'foo'", ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_scenario_json(R"({"links": [{"a": "x", "b": "y", "speed": 1}]})"),
        "links[0]: unknown field 'speed'", ConfigError);
  }
  SUBCASE("mode accepts the single-path alias") {
    const std::string doc = R"({
      "name": "m", "mode": "single-path-tcp",
      "nodes": [{"id": "c", "addresses": ["10.0.0.1"]},
                {"id": "s", "addresses": ["10.0.0.2"]}],
      "links": [{"a": "c", "b": "s"}],
      "transfers": [{"src": "c", "dst": "s", "bytes": 5360}]
    })";
    CHECK(parse_scenario_json(doc).mode == ConnMode::Tcp);
  }
  SUBCASE("builtin scenarios survive a serialize/parse round trip") {
    const ScenarioConfig a = builtin_scenario("fig1b");
    const ScenarioConfig b = parse_scenario_json(scenario_to_json(a));
    CHECK(b.name == a.name);
    CHECK(b.mss == a.mss);
    CHECK(b.mode == a.mode);
    CHECK(b.seed == a.seed);
    CHECK(b.sim_duration_s == a.sim_duration_s);
    REQUIRE(b.nodes.size() == 2);
    CHECK(b.nodes[0].addresses == a.nodes[0].addresses);
    CHECK(b.links.size() == 2);
    REQUIRE(b.transfers.size() == 1);
    CHECK(b.transfers[0].duration_s == a.transfers[0].duration_s);
  }
}

TEST_CASE("builtin scenarios have the advertised shapes") {
  CHECK(builtin_scenario_names() == std::vector<std::string>{"fig1a", "fig1b", "fig1c"});
  CHECK_THROWS_AS(builtin_scenario("fig9z"), ConfigError);

  const ScenarioConfig a = builtin_scenario("fig1a");
  CHECK(a.nodes.size() == 2);
  CHECK(a.links.size() == 1);
  CHECK(a.transfers[0].bytes == 0);
  CHECK(a.transfers[0].duration_s == 25.0);

  const ScenarioConfig b = builtin_scenario("fig1b");
  CHECK(b.nodes[0].addresses.size() == 2);
  CHECK(b.nodes[1].addresses.size() == 2);
  CHECK(b.links.size() == 2);
  CHECK(b.sim_duration_s == 35.0);

  const ScenarioConfig c = builtin_scenario("fig1c");
  CHECK(c.links[0].drop_script == std::vector<uint64_t>{17, 19});
  CHECK(c.transfers[0].bytes == 120ull * 536);
}

TEST_CASE("a byte-limited transfer completes with verified payload") {
  const RunResult r = run_scenario(mini());
  REQUIRE(r.transfers.size() == 1);
  CHECK(r.transfers[0].completed);
  CHECK(r.transfers[0].integrity_ok);
  CHECK(r.transfers[0].bytes_delivered == 10 * kDefaultMss);
  CHECK(r.transfers[0].completion_time > 0);

  REQUIRE(r.connections.size() == 2);
  for (const ConnResult& c : r.connections) {
    CHECK(c.token != 0);
    CHECK(c.deallocated);
    REQUIRE(c.subflows.size() == 1);
    CHECK(c.subflows[0].final_state == "CLOSED");
  }
  CHECK(r.connections[0].token == r.connections[1].token);

  REQUIRE(r.links.size() == 1);
  for (int dir = 0; dir < 2; ++dir) {
    const LinkDirStats& st = r.links[0].dir[dir];
    CHECK(st.submitted == st.delivered + st.dropped());
    CHECK(st.dropped() == 0);
  }

  bool saw_delivered = false;
  for (const TraceRecord& rec : r.trace)
    if (rec.metric == Metric::DeliveredBytes) {
      saw_delivered = true;
      CHECK(rec.subflow_id == -1);
    }
  CHECK(saw_delivered);
}

TEST_CASE("per-transfer mode overrides let tcp and mptcp coexist") {
  ScenarioConfig cfg = mini();
  TransferSpec t2 = cfg.transfers[0];
  t2.mode = ConnMode::Tcp;
  cfg.transfers.push_back(t2);
  const RunResult r = run_scenario(cfg);

  REQUIRE(r.transfers.size() == 2);
  CHECK(r.transfers[0].completed);
  CHECK(r.transfers[1].completed);
  CHECK(r.transfers[0].integrity_ok);
  CHECK(r.transfers[1].integrity_ok);

  int mptcp_conns = 0, tcp_conns = 0;
  for (const ConnResult& c : r.connections) {
    if (c.mode == std::string("mptcp")) {
      ++mptcp_conns;
      CHECK(c.token != 0);
    } else {
      ++tcp_conns;
      CHECK(c.token == 0);
    }
  }
  CHECK(mptcp_conns == 2);
  CHECK(tcp_conns == 2);
}

TEST_CASE("a two-link node pair raises a join and splits the load") {
  const RunResult r = run_scenario(mini2(40 * kDefaultMss));
  CHECK(r.transfers[0].completed);
  CHECK(r.transfers[0].integrity_ok);
  for (const ConnResult& c : r.connections) {
    REQUIRE(c.subflows.size() == 2);
    if (c.role == std::string("initiator")) {
      CHECK(c.subflows[0].bytes_sent > 0);
      CHECK(c.subflows[1].bytes_sent > 0);
    }
  }

  const std::string script = emit_plot_script("mini2.trace.csv", &r.trace);
  CHECK(script.find("column(3) == 0") != std::string::npos);
  CHECK(script.find("column(3) == 1") != std::string::npos);
  CHECK(script.find("csv = \"mini2.trace.csv\"") != std::string::npos);
}

TEST_CASE("plot scripts degrade to a generic filter without series info") {
  const std::string script = emit_plot_script("/definitely/not/there.csv", nullptr);
  CHECK(script.find("strcol(4) eq \"cwnd\"") != std::string::npos);
  CHECK(script.find("with steps") != std::string::npos);
}

TEST_CASE("plot scripts can recover series by scanning a CSV") {
  const char* path = "plot_scan_tmp.csv";
  {
    std::ofstream out(path);
    out << "time,conn_token,subflow_id,metric,value\n"
           "0.010000000,9,0,cwnd,536\n"
           "0.020000000,9,1,cwnd,536\n"
           "0.030000000,9,0,state,ESTABLISHED\n";
  }
  const std::string script = emit_plot_script(path, nullptr);
  std::remove(path);
  CHECK(script.find("column(3) == 0") != std::string::npos);
  CHECK(script.find("column(3) == 1") != std::string::npos);
  CHECK(script.find("column(3) == 2") == std::string::npos);
}

TEST_CASE("summary JSON carries the run's headline numbers") {
  const RunResult r = run_scenario(mini());
  const std::string s = summary_json(r);
  CHECK(s.find("\"scenario\": \"mini\"") != std::string::npos);
  CHECK(s.find("\"mode\": \"mptcp\"") != std::string::npos);
  CHECK(s.find("\"completed\": true") != std::string::npos);
  CHECK(s.find("\"integrity_ok\": true") != std::string::npos);
  CHECK(s.find("\"links\"") != std::string::npos);
  CHECK(s.find("\"subflows\"") != std::string::npos);
}
