#include "scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace mptcp {

using nlohmann::json;

namespace {

std::optional<ConnMode> parse_mode(const std::string& s) {
  if (s == "mptcp") return ConnMode::Mptcp;
  if (s == "tcp" || s == "single-path-tcp") return ConnMode::Tcp;
  return std::nullopt;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key))
      throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

}  // namespace

void validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.name.empty()) throw ConfigError("name: must not be empty");
  if (cfg.mss < 64 || cfg.mss > 9000) throw ConfigError("mss: must be in [64, 9000]");
  if (cfg.sim_duration_s <= 0) throw ConfigError("sim_duration: must be positive");
  if (cfg.nodes.empty()) throw ConfigError("nodes: at least one node required");

  std::map<std::string, size_t> addr_count;
  std::set<uint32_t> all_addrs;
  for (size_t i = 0; i < cfg.nodes.size(); ++i) {
    const NodeSpec& n = cfg.nodes[i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (n.id.empty()) throw ConfigError(where + ".id: must not be empty");
    if (addr_count.count(n.id)) throw ConfigError(where + ".id: duplicate node id '" + n.id + "'");
    if (n.addresses.empty()) throw ConfigError(where + ".addresses: at least one required");
    for (uint32_t a : n.addresses)
      if (!all_addrs.insert(a).second)
        throw ConfigError(where + ".addresses: address reused: " + format_addr(a));
    addr_count[n.id] = n.addresses.size();
  }

  std::map<std::string, size_t> used_addrs;
  for (size_t i = 0; i < cfg.links.size(); ++i) {
    const LinkSpec& l = cfg.links[i];
    const std::string where = "links[" + std::to_string(i) + "]";
    for (const std::string* end : {&l.a, &l.b}) {
      if (!addr_count.count(*end))
        throw ConfigError(where + ": unknown node '" + *end + "'");
    }
    if (l.a == l.b) throw ConfigError(where + ": link endpoints must differ");
    if (l.bandwidth_bps == 0) throw ConfigError(where + ".bandwidth: must be positive");
    if (l.delay_s < 0) throw ConfigError(where + ".delay: must be non-negative");
    if (l.queue_cap == 0) throw ConfigError(where + ".queue_cap: must be positive");
    if (l.loss_rate < 0 || l.loss_rate >= 1)
      throw ConfigError(where + ".loss_rate: must be in [0, 1)");
    for (uint64_t o : l.drop_script)
      if (o == 0) throw ConfigError(where + ".drop_script: ordinals are 1-based");
    for (const std::string& end : {l.a, l.b}) {
      if (++used_addrs[end] > addr_count[end])
        throw ConfigError(where + ": node '" + end + "' has no unbound address left");
    }
  }

  if (cfg.transfers.empty()) throw ConfigError("transfers: at least one transfer required");
  std::set<uint16_t> ports;
  for (size_t i = 0; i < cfg.transfers.size(); ++i) {
    const TransferSpec& t = cfg.transfers[i];
    const std::string where = "transfers[" + std::to_string(i) + "]";
    if (!addr_count.count(t.src)) throw ConfigError(where + ".src: unknown node '" + t.src + "'");
    if (!addr_count.count(t.dst)) throw ConfigError(where + ".dst: unknown node '" + t.dst + "'");
    if (t.src == t.dst) throw ConfigError(where + ": src and dst must differ");
    if (t.bytes == 0 && t.duration_s <= 0)
      throw ConfigError(where + ": needs bytes or a positive duration");
    if (t.bytes > 0 && t.duration_s > 0)
      throw ConfigError(where + ": bytes and duration are mutually exclusive");
    if (t.start_s < 0) throw ConfigError(where + ".start: must be non-negative");
    if (t.start_s >= cfg.sim_duration_s)
      throw ConfigError(where + ".start: at or beyond sim_duration");
    const uint16_t port = t.port ? t.port : static_cast<uint16_t>(5000 + i);
    if (!ports.insert(port).second)
      throw ConfigError(where + ".port: port " + std::to_string(port) + " reused");
  }
}

ScenarioConfig parse_scenario_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("top level: expected an object");
  reject_unknown_keys(j, {"name", "nodes", "links", "transfers", "mss", "mode", "seed",
                          "sim_duration"},
                      "top level");
  ScenarioConfig cfg;
  try {
    cfg.name = j.value("name", std::string("custom"));
    cfg.mss = j.value("mss", kDefaultMss);
    cfg.seed = j.value("seed", uint64_t{1});
    cfg.sim_duration_s = j.value("sim_duration", 30.0);
    if (j.contains("mode")) {
      const auto m = parse_mode(j.at("mode").get<std::string>());
      if (!m) throw ConfigError("mode: expected 'mptcp' or 'tcp'");
      cfg.mode = *m;
    }
    for (size_t i = 0; i < j.value("nodes", json::array()).size(); ++i) {
      const json& jn = j["nodes"][i];
      const std::string where = "nodes[" + std::to_string(i) + "]";
      reject_unknown_keys(jn, {"id", "addresses"}, where);
      NodeSpec n;
      n.id = jn.at("id").get<std::string>();
      for (const json& ja : jn.at("addresses")) {
        const auto addr = parse_addr(ja.get<std::string>());
        if (!addr)
          throw ConfigError(where + ".addresses: bad address '" + ja.get<std::string>() + "'");
        n.addresses.push_back(*addr);
      }
      cfg.nodes.push_back(std::move(n));
    }
    for (size_t i = 0; i < j.value("links", json::array()).size(); ++i) {
      const json& jl = j["links"][i];
      const std::string where = "links[" + std::to_string(i) + "]";
      reject_unknown_keys(jl, {"a", "b", "bandwidth", "delay", "queue_cap", "drop_script",
                               "loss_rate"},
                          where);
      LinkSpec l;
      l.a = jl.at("a").get<std::string>();
      l.b = jl.at("b").get<std::string>();
      l.bandwidth_bps = jl.value("bandwidth", uint64_t{1'000'000});
      l.delay_s = jl.value("delay", 0.010);
      l.queue_cap = jl.value("queue_cap", 100u);
      l.loss_rate = jl.value("loss_rate", 0.0);
      if (jl.contains("drop_script"))
        l.drop_script = jl["drop_script"].get<std::vector<uint64_t>>();
      cfg.links.push_back(std::move(l));
    }
    for (size_t i = 0; i < j.value("transfers", json::array()).size(); ++i) {
      const json& jt = j["transfers"][i];
      const std::string where = "transfers[" + std::to_string(i) + "]";
      reject_unknown_keys(jt, {"src", "dst", "bytes", "duration", "start", "port", "mode"},
                          where);
      TransferSpec t;
      t.src = jt.at("src").get<std::string>();
      t.dst = jt.at("dst").get<std::string>();
      t.bytes = jt.value("bytes", uint64_t{0});
      t.duration_s = jt.value("duration", 0.0);
      t.start_s = jt.value("start", 0.0);
      t.port = jt.value("port", uint16_t{0});
      if (jt.contains("mode")) {
        const auto m = parse_mode(jt.at("mode").get<std::string>());
        if (!m) throw ConfigError(where + ".mode: expected 'mptcp' or 'tcp'");
        t.mode = m;
      }
      cfg.transfers.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid scenario JSON: ") + e.what());
  }
  validate_scenario(cfg);
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["mss"] = cfg.mss;
  j["mode"] = conn_mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  j["sim_duration"] = cfg.sim_duration_s;
  j["nodes"] = json::array();
  for (const NodeSpec& n : cfg.nodes) {
    json jn{{"id", n.id}, {"addresses", json::array()}};
    for (uint32_t a : n.addresses) jn["addresses"].push_back(format_addr(a));
    j["nodes"].push_back(std::move(jn));
  }
  j["links"] = json::array();
  for (const LinkSpec& l : cfg.links) {
    json jl{{"a", l.a},
            {"b", l.b},
            {"bandwidth", l.bandwidth_bps},
            {"delay", l.delay_s},
            {"queue_cap", l.queue_cap}};
    if (!l.drop_script.empty()) jl["drop_script"] = l.drop_script;
    if (l.loss_rate > 0) jl["loss_rate"] = l.loss_rate;
    j["links"].push_back(std::move(jl));
  }
  j["transfers"] = json::array();
  for (const TransferSpec& t : cfg.transfers) {
    json jt{{"src", t.src}, {"dst", t.dst}, {"start", t.start_s}};
    if (t.bytes) jt["bytes"] = t.bytes;
    if (t.duration_s > 0) jt["duration"] = t.duration_s;
    if (t.port) jt["port"] = t.port;
    if (t.mode) jt["mode"] = conn_mode_name(*t.mode);
    j["transfers"].push_back(std::move(jt));
  }
  return j.dump(2) + "\n";
}

std::vector<std::string> builtin_scenario_names() { return {"fig1a", "fig1b", "fig1c"}; }

ScenarioConfig builtin_scenario(const std::string& name) {
  const auto addr = [](const char* s) { return *parse_addr(s); };
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "fig1a") {
    // One subflow over one default link; bulk transfer, closed at 25 s.
    cfg.nodes = {{"client", {addr("10.1.0.1")}}, {"server", {addr("10.1.0.2")}}};
    LinkSpec l;
    l.a = "client";
    l.b = "server";
    cfg.links = {l};
    TransferSpec t;
    t.src = "client";
    t.dst = "server";
    t.duration_s = 25.0;
    cfg.transfers = {t};
    cfg.sim_duration_s = 30.0;
  } else if (name == "fig1b") {
    // Two subflows via two disjoint point-to-point links.
    cfg.nodes = {{"client", {addr("10.1.0.1"), addr("10.2.0.1")}},
                 {"server", {addr("10.1.0.2"), addr("10.2.0.2")}}};
    LinkSpec l;
    l.a = "client";
    l.b = "server";
    cfg.links = {l, l};
    TransferSpec t;
    t.src = "client";
    t.dst = "server";
    t.duration_s = 32.0;
    cfg.transfers = {t};
    cfg.sim_duration_s = 35.0;
  } else if (name == "fig1c") {
    // 120 × MSS bytes with two scripted drops inside one congestion window.
    cfg.nodes = {{"client", {addr("10.1.0.1")}}, {"server", {addr("10.1.0.2")}}};
    LinkSpec l;
    l.a = "client";
    l.b = "server";
    l.drop_script = {17, 19};
    cfg.links = {l};
    TransferSpec t;
    t.src = "client";
    t.dst = "server";
    t.bytes = 120ull * kDefaultMss;  // 64320
    cfg.transfers = {t};
    cfg.sim_duration_s = 5.0;
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  validate_scenario(cfg);
  return cfg;
}

namespace {

struct TransferState {
  TransferResult result;
  uint64_t next_dsn = 0;  // in-order delivery cursor on the receiver
};

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const RunObserver* obs) {
  validate_scenario(cfg);

  Engine eng;
  Tracer tracer;
  const TimeNs end_time = seconds_to_ns(cfg.sim_duration_s);

  std::map<std::string, std::unique_ptr<Node>> nodes;
  for (size_t i = 0; i < cfg.nodes.size(); ++i) {
    const NodeSpec& n = cfg.nodes[i];
    nodes.emplace(n.id, std::make_unique<Node>(n.id, n.addresses, eng, tracer,
                                               mix_seed(cfg.seed, 1000 + i)));
  }

  if (obs) {
    for (auto& [id, n] : nodes) {
      NodeObserver node_obs;
      if (obs->on_subflow_closed)
        node_obs.on_subflow_closed = [obs, id](uint32_t token, int sf, TimeNs t) {
          obs->on_subflow_closed(id, token, sf, t);
        };
      if (obs->on_conn_deallocated)
        node_obs.on_conn_deallocated = [obs, id](uint32_t token, TimeNs t) {
          obs->on_conn_deallocated(id, token, t);
        };
      if (obs->on_rst_sent)
        node_obs.on_rst_sent = [obs, id](const Segment& seg, TimeNs t) {
          obs->on_rst_sent(id, seg, t);
        };
      n->set_observer(node_obs);
    }
  }

  // Links bind each node's next unbound address in declaration order.
  std::vector<std::unique_ptr<P2PLink>> links;
  std::map<std::string, size_t> next_addr;
  struct LinkEnds {
    Node* n[2];
  };
  std::vector<LinkEnds> link_ends;
  for (size_t i = 0; i < cfg.links.size(); ++i) {
    const LinkSpec& ls = cfg.links[i];
    LinkConfig lc;
    lc.bandwidth_bps = ls.bandwidth_bps;
    lc.delay = seconds_to_ns(ls.delay_s);
    lc.queue_cap = ls.queue_cap;
    lc.drop_script[0] = ls.drop_script;
    lc.drop_script[1] = ls.drop_script;
    lc.loss_rate[0] = lc.loss_rate[1] = ls.loss_rate;
    links.push_back(
        std::make_unique<P2PLink>(static_cast<int>(i), eng, lc, mix_seed(cfg.seed, 2000 + i)));
    Node* na = nodes.at(ls.a).get();
    Node* nb = nodes.at(ls.b).get();
    links.back()->attach(na, nb);
    na->add_link(links.back().get(), na->addrs().at(next_addr[ls.a]++));
    nb->add_link(links.back().get(), nb->addrs().at(next_addr[ls.b]++));
    link_ends.push_back({{na, nb}});

    links.back()->set_fate_hook([&eng, &tracer, &link_ends, obs](
                                    const P2PLink& l, int dir, const Segment& seg,
                                    SegmentFate fate, uint64_t ordinal) {
      if (obs && obs->on_segment_fate)
        obs->on_segment_fate(l, dir, seg, fate, ordinal, eng.now());
      switch (fate) {
        case SegmentFate::DroppedScript:
        case SegmentFate::DroppedOverflow:
        case SegmentFate::DroppedRandom:
        case SegmentFate::DroppedLinkDown:
          if (ordinal > 0) {  // data segments only; attribute to the sender
            auto [conn, idx] = link_ends[l.id()].n[dir]->resolve(seg.tuple);
            if (conn) tracer.drop(eng.now(), conn->trace_token(), static_cast<int>(idx), ordinal);
          }
          break;
        default:
          break;
      }
    });
  }

  // Transfers: one listener per transfer on the destination, one client
  // connection on the source. Results are tracked via the app hooks.
  std::vector<TransferState> transfers(cfg.transfers.size());
  std::vector<Connection*> client_conns(cfg.transfers.size(), nullptr);
  for (size_t i = 0; i < cfg.transfers.size(); ++i) {
    const TransferSpec& ts = cfg.transfers[i];
    TransferState& st = transfers[i];
    st.result.id = i;
    st.result.src = ts.src;
    st.result.dst = ts.dst;
    st.result.bytes_requested = ts.bytes;

    const ConnMode mode = ts.mode.value_or(cfg.mode);
    const uint16_t port = ts.port ? ts.port : static_cast<uint16_t>(5000 + i);
    Node* src = nodes.at(ts.src).get();
    Node* dst = nodes.at(ts.dst).get();

    ConnectionConfig cc;
    cc.mode = mode;
    cc.sf.mss = cfg.mss;

    AppHooks server_hooks;
    server_hooks.close_on_eof = true;
    server_hooks.on_data = [&st, &eng](Connection&, uint64_t dsn, uint32_t len, TimeNs now) {
      if (dsn != st.next_dsn || len == 0) st.result.integrity_ok = false;
      // Reconstruct the chunk per the wire rule and check it continues the
      // expected d-mod-256 stream pattern at this position.
      for (uint32_t k = 0; k < len; ++k)
        if (payload_byte(dsn + k) != static_cast<uint8_t>((st.result.bytes_delivered + k) & 0xff))
          st.result.integrity_ok = false;
      st.next_dsn = dsn + len;
      st.result.bytes_delivered += len;
      if (st.result.bytes_requested > 0 &&
          st.result.bytes_delivered >= st.result.bytes_requested &&
          st.result.completion_time < 0) {
        st.result.completed = true;
        st.result.completion_time = now;
      }
      (void)eng;
    };
    server_hooks.on_eof = [&st](Connection&, TimeNs now) {
      if (st.result.completion_time < 0) {
        st.result.completed = true;  // bulk transfers complete at end-of-stream
        st.result.completion_time = now;
      }
    };
    dst->listen(port, cc, server_hooks);

    const uint32_t dst_addr = dst->addrs().at(0);
    eng.schedule_at(seconds_to_ns(ts.start_s), [src, dst_addr, port, cc, ts, i, &client_conns] {
      Connection* c = src->open_connection(dst_addr, port, cc, AppHooks{});
      client_conns[i] = c;
      if (ts.bytes > 0) {
        src->app_send(c, ts.bytes);
        src->app_close(c);
      } else {
        src->app_bulk(c);
      }
    });
    if (ts.bytes == 0) {
      eng.schedule_at(seconds_to_ns(ts.start_s + ts.duration_s), [src, i, &client_conns] {
        if (client_conns[i]) src->app_close(client_conns[i]);
      });
    }
  }

  eng.run_until(end_time);

  RunResult result;
  result.cfg = cfg;
  result.trace = tracer.records();
  for (TransferState& st : transfers) result.transfers.push_back(st.result);
  for (const auto& [name, node] : nodes) {
    for (const auto& conn : node->connections()) {
      if (conn->role() == ConnRole::Listener) continue;
      ConnResult cr;
      cr.node = name;
      cr.token = conn->trace_token();
      cr.role = conn_role_name(conn->role());
      cr.mode = conn_mode_name(conn->mode());
      cr.deallocated = conn->deallocated();
      for (const auto& sf : conn->subflows()) {
        SubflowResult sr;
        sr.id = sf->id();
        sr.tuple = format_tuple(sf->tuple());
        sr.final_state = tcp_state_name(sf->state());
        sr.bytes_sent = sf->bytes_sent();
        sr.retransmissions = sf->retransmissions();
        sr.timeouts = sf->timeouts();
        sr.halvings = sf->halvings();
        cr.subflows.push_back(std::move(sr));
      }
      result.connections.push_back(std::move(cr));
    }
  }
  for (size_t i = 0; i < links.size(); ++i) {
    LinkResult lr;
    lr.id = static_cast<int>(i);
    lr.a = cfg.links[i].a;
    lr.b = cfg.links[i].b;
    lr.dir[0] = links[i]->stats(0);
    lr.dir[1] = links[i]->stats(1);
    result.links.push_back(lr);
  }
  return result;
}

std::string summary_json(const RunResult& result) {
  json j;
  j["scenario"] = result.cfg.name;
  j["mode"] = conn_mode_name(result.cfg.mode);
  j["mss"] = result.cfg.mss;
  j["seed"] = result.cfg.seed;
  j["sim_duration"] = result.cfg.sim_duration_s;
  j["trace_records"] = result.trace.size();

  j["transfers"] = json::array();
  for (const TransferResult& t : result.transfers) {
    json jt;
    jt["id"] = t.id;
    jt["src"] = t.src;
    jt["dst"] = t.dst;
    if (t.bytes_requested > 0)
      jt["bytes_requested"] = t.bytes_requested;
    else
      jt["bulk"] = true;
    jt["bytes_delivered"] = t.bytes_delivered;
    jt["completed"] = t.completed;
    jt["integrity_ok"] = t.integrity_ok;
    if (t.completion_time >= 0)
      jt["completion_time"] = ns_to_seconds(t.completion_time);
    else
      jt["completion_time"] = nullptr;
    j["transfers"].push_back(std::move(jt));
  }

  uint64_t total_delivered = 0, total_retx = 0, total_timeouts = 0, total_halvings = 0;
  for (const TransferResult& t : result.transfers) total_delivered += t.bytes_delivered;

  j["connections"] = json::array();
  for (const ConnResult& c : result.connections) {
    json jc;
    jc["node"] = c.node;
    jc["token"] = c.token;
    jc["role"] = c.role;
    jc["mode"] = c.mode;
    jc["deallocated"] = c.deallocated;
    jc["subflows"] = json::array();
    for (const SubflowResult& s : c.subflows) {
      jc["subflows"].push_back(json{{"id", s.id},
                                    {"tuple", s.tuple},
                                    {"final_state", s.final_state},
                                    {"bytes_sent", s.bytes_sent},
                                    {"retransmissions", s.retransmissions},
                                    {"timeouts", s.timeouts},
                                    {"halvings", s.halvings}});
      total_retx += s.retransmissions;
      total_timeouts += s.timeouts;
      total_halvings += s.halvings;
    }
    j["connections"].push_back(std::move(jc));
  }

  j["links"] = json::array();
  for (const LinkResult& l : result.links) {
    json jl;
    jl["id"] = l.id;
    jl["a"] = l.a;
    jl["b"] = l.b;
    jl["directions"] = json::array();
    for (int d = 0; d < 2; ++d) {
      jl["directions"].push_back(json{{"submitted", l.dir[d].submitted},
                                      {"data_segments", l.dir[d].data_segments},
                                      {"delivered", l.dir[d].delivered},
                                      {"dropped_script", l.dir[d].dropped_script},
                                      {"dropped_overflow", l.dir[d].dropped_overflow},
                                      {"dropped_random", l.dir[d].dropped_random},
                                      {"dropped_down", l.dir[d].dropped_down}});
    }
    j["links"].push_back(std::move(jl));
  }

  j["totals"] = json{{"bytes_delivered", total_delivered},
                     {"retransmissions", total_retx},
                     {"timeouts", total_timeouts},
                     {"halvings", total_halvings}};
  return j.dump(2) + "\n";
}

std::string emit_plot_script(const std::string& csv_path,
                             const std::vector<TraceRecord>* records) {
  // Collect the (token, subflow) series that actually carry cwnd samples.
  std::vector<std::pair<uint32_t, int>> series;
  const auto add_series = [&series](uint32_t token, int sf) {
    const auto key = std::make_pair(token, sf);
    if (std::find(series.begin(), series.end(), key) == series.end()) series.push_back(key);
  };
  if (records) {
    for (const TraceRecord& r : *records)
      if (r.metric == Metric::Cwnd) add_series(r.conn_token, r.subflow_id);
  } else if (std::ifstream in{csv_path}; in) {
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string time_s, token_s, sf_s, metric_s;
      if (!std::getline(row, time_s, ',') || !std::getline(row, token_s, ',') ||
          !std::getline(row, sf_s, ',') || !std::getline(row, metric_s, ','))
        continue;
      if (metric_s == "cwnd")
        add_series(static_cast<uint32_t>(std::stoull(token_s)), std::stoi(sf_s));
    }
  }

  std::string out;
  out += "#!/usr/bin/env gnuplot\n";
  out += "# cwnd evolution per subflow; run: gnuplot -persist <this file>\n";
  out += "csv = \"" + csv_path + "\"\n";
  out += "set datafile separator \",\"\n";
  out += "set xlabel \"time (s)\"\n";
  out += "set ylabel \"cwnd (bytes)\"\n";
  out += "set grid\n";
  out += "set key top left\n";
  if (series.empty()) {
    out += "plot csv using 1:(strcol(4) eq \"cwnd\" ? column(5) : 1/0) "
           "with steps title \"cwnd\"\n";
    return out;
  }
  out += "plot \\\n";
  for (size_t i = 0; i < series.size(); ++i) {
    const auto [token, sf] = series[i];
    out += "  csv using 1:(strcol(4) eq \"cwnd\" && strcol(2) eq \"" + std::to_string(token) +
           "\" && column(3) == " + std::to_string(sf) + " ? column(5) : 1/0) with steps title \"" +
           "conn " + std::to_string(token) + " subflow " + std::to_string(sf) + "\"";
    out += i + 1 < series.size() ? ", \\\n" : "\n";
  }
  return out;
}

}  // namespace mptcp
