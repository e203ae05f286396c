#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <vector>

#include "errors.hpp"
#include "subflow.hpp"

using namespace mptcp;

namespace {

const FourTuple kTuple{0x0a010001, 49152, 0x0a010002, 5000};
constexpr uint32_t kMss = 536;

template <typename T>
std::vector<T> pick(const Effects& fx) {
  std::vector<T> out;
  for (const auto& e : fx)
    if (auto* v = std::get_if<T>(&e)) out.push_back(*v);
  return out;
}

std::vector<Segment> segments_out(const Effects& fx) {
  std::vector<Segment> out;
  for (const auto& s : pick<SegmentOut>(fx)) out.push_back(s.seg);
  return out;
}

std::optional<TimerSet> last_timer(const Effects& fx, TimerKind kind) {
  std::optional<TimerSet> out;
  for (const auto& t : pick<TimerSet>(fx))
    if (t.kind == kind) out = t;
  return out;
}

Segment server_ack(uint32_t ack_ssn, uint16_t payload = 0) {
  Segment s;
  s.tuple = kTuple.reversed();
  s.flags = kFlagAck;
  s.ssn = 1;
  s.ack_ssn = ack_ssn;
  s.payload_len = payload;
  return s;
}

Segment server_synack(uint32_t server_isn = 0) {
  Segment s;
  s.tuple = kTuple.reversed();
  s.flags = kFlagSyn | kFlagAck;
  s.ssn = server_isn;
  s.ack_ssn = 1;
  return s;
}

// Client subflow established at t = 10 ms with a 10 ms handshake RTT.
Subflow make_established(SubflowConfig cfg = {}) {
  cfg.mptcp = false;  // plain segments keep congestion oracles uncluttered
  Subflow sf(0, kTuple, cfg);
  sf.connect(0, {});
  sf.on_segment(server_synack(), 10 * kMillisecond);
  REQUIRE(sf.state() == TcpState::Established);
  return sf;
}

// Appends `count` fresh MSS-sized mappings at the send tail.
void send_mss(Subflow& sf, int count, TimeNs now) {
  for (int i = 0; i < count; ++i) {
    const uint32_t ssn = sf.snd_nxt();
    sf.transmit(DssMapping{ssn - 1, ssn, kMss, 0}, now);
  }
}

}  // namespace

TEST_CASE("connect emits a SYN consuming SSN 0 and arms the handshake timer") {
  SubflowConfig cfg;
  Subflow sf(0, kTuple, cfg);
  const Effects fx = sf.connect(0, {MpCapableOpt{}});

  CHECK(sf.state() == TcpState::SynSent);
  CHECK(sf.snd_nxt() == 1);

  const auto segs = segments_out(fx);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].syn());
  CHECK(!segs[0].ack());
  CHECK(segs[0].ssn == 0);
  REQUIRE(segs[0].mp_capable() != nullptr);
  CHECK(!segs[0].mp_capable()->token.has_value());  // token only on SYN-ACK

  const auto timer = last_timer(fx, TimerKind::Rto);
  REQUIRE(timer.has_value());
  CHECK(timer->deadline == kSecond);  // initial rto 1 s

  CHECK_THROWS_AS(sf.connect(0, {}), InvalidState);
}

TEST_CASE("join SYN carries the connection token") {
  Subflow sf(1, kTuple, SubflowConfig{});
  const Effects fx = sf.connect(0, {MpJoinOpt{Token{7}, 2}});
  const auto segs = segments_out(fx);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].ssn == 0);
  REQUIRE(segs[0].mp_join() != nullptr);
  CHECK(segs[0].mp_join()->token.value == 7);
  CHECK(segs[0].mp_join()->addr_id == 2);
}

TEST_CASE("SYN-ACK completes the handshake and samples the RTT") {
  Subflow sf(0, kTuple, SubflowConfig{});
  sf.connect(0, {});
  const Effects fx = sf.on_segment(server_synack(), 10 * kMillisecond);

  CHECK(sf.state() == TcpState::Established);
  CHECK(sf.snd_una() == 1);
  CHECK(sf.rcv_nxt() == 1);
  CHECK(!pick<SubflowEstablished>(fx).empty());
  const auto cw = pick<CwndChanged>(fx);
  REQUIRE(!cw.empty());
  CHECK(cw.back().cwnd == kMss);
  CHECK(cw.back().ssthresh == 64 * 1024);

  const auto segs = segments_out(fx);
  REQUIRE(segs.size() == 1);  // the completing pure ACK
  CHECK(segs[0].ack());
  CHECK(!segs[0].syn());
  CHECK(segs[0].ack_ssn == 1);

  // RFC 6298 first sample: srtt = R, rttvar = R/2, rto = 3R clamped to 200 ms.
  CHECK(sf.srtt() == 10 * kMillisecond);
  CHECK(sf.rto() == 200 * kMillisecond);
}

TEST_CASE("Karn at the handshake: no sample after a retransmitted SYN") {
  Subflow sf(0, kTuple, SubflowConfig{});
  const Effects c = sf.connect(0, {});
  const auto timer = last_timer(c, TimerKind::Rto);
  const Effects t = sf.on_timer(TimerKind::Rto, timer->generation, kSecond);
  REQUIRE(segments_out(t).size() == 1);  // SYN again
  CHECK(segments_out(t)[0].syn());

  sf.on_segment(server_synack(), kSecond + 10 * kMillisecond);
  CHECK(sf.state() == TcpState::Established);
  CHECK(sf.srtt() == 0);  // never sampled
  CHECK(sf.rto() == 2 * kSecond);  // only the backoff doubling applied
}

TEST_CASE("slow start adds one MSS per new ACK") {
  Subflow sf = make_established();
  send_mss(sf, 1, 20 * kMillisecond);
  const Effects fx = sf.on_segment(server_ack(1 + kMss), 30 * kMillisecond);
  CHECK(sf.cwnd() == 2 * kMss);  // 536 -> 1072, spec example
  const auto cw = pick<CwndChanged>(fx);
  REQUIRE(cw.size() == 1);
  CHECK(cw[0].cwnd == 1072);
}

TEST_CASE("congestion avoidance grows cwnd by MSS*MSS/cwnd per ACK") {
  SubflowConfig cfg;
  cfg.initial_ssthresh = 2 * kMss;
  Subflow sf = make_established(cfg);
  TimeNs now = 20 * kMillisecond;
  send_mss(sf, 1, now);
  sf.on_segment(server_ack(1 + kMss), now += kMillisecond);
  CHECK(sf.cwnd() == 1072);  // slow start step reaches ssthresh

  send_mss(sf, 2, now);
  sf.on_segment(server_ack(1 + 2 * kMss), now += kMillisecond);
  CHECK(sf.cwnd() == 1072 + 268);  // 536*536/1072 = 268
  sf.on_segment(server_ack(1 + 3 * kMss), now += kMillisecond);
  CHECK(sf.cwnd() == 1340 + 214);  // 536*536/1340 = 214
}

TEST_CASE("third duplicate ACK triggers the hand-traced fast retransmit") {
  SubflowConfig cfg;
  cfg.initial_cwnd_segments = 8;
  Subflow sf = make_established(cfg);
  TimeNs now = 20 * kMillisecond;
  send_mss(sf, 8, now);  // flight = 8 MSS, ssn 1..4289
  CHECK(sf.snd_nxt() == 1 + 8 * kMss);

  CHECK(sf.on_segment(server_ack(1), now += kMillisecond).empty());
  CHECK(sf.on_segment(server_ack(1), now += kMillisecond).empty());
  CHECK(sf.dup_ack_count() == 2);
  CHECK(sf.cwnd() == 8 * kMss);

  const Effects fx = sf.on_segment(server_ack(1), now += kMillisecond);
  CHECK(sf.in_fast_recovery());
  CHECK(sf.ssthresh() == 2144);  // max(flight/2, 2 MSS) = 4 MSS
  CHECK(sf.cwnd() == 3752);      // ssthresh + 3 MSS
  CHECK(sf.halvings() == 1);
  CHECK(sf.retransmissions() == 1);
  const auto segs = segments_out(fx);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].ssn == 1);  // snd_una retransmitted
  CHECK(segs[0].payload_len == kMss);

  // Additional duplicates inflate cwnd by one MSS each.
  sf.on_segment(server_ack(1), now += kMillisecond);
  CHECK(sf.cwnd() == 3752 + 536);
}

TEST_CASE("partial ACK retransmits the next hole and keeps recovery open") {
  SubflowConfig cfg;
  cfg.initial_cwnd_segments = 8;
  Subflow sf = make_established(cfg);
  TimeNs now = 20 * kMillisecond;
  send_mss(sf, 8, now);  // segments at ssn 1, 537, 1073, ..., 3753

  for (int i = 0; i < 3; ++i) sf.on_segment(server_ack(1), now += kMillisecond);
  REQUIRE(sf.in_fast_recovery());
  const uint32_t cwnd_at_entry = sf.cwnd();  // 3752

  // Losses at ssn 1 and 1073: after the retransmit of 1 arrives, the
  // receiver holds [1,1073) and acks 1073 — a partial ACK.
  const Effects fx = sf.on_segment(server_ack(1073), now += kMillisecond);
  CHECK(sf.in_fast_recovery());
  CHECK(sf.snd_una() == 1073);
  const auto segs = segments_out(fx);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].ssn == 1073);  // exactly one retransmission, the next hole
  CHECK(sf.retransmissions() == 2);
  CHECK(sf.halvings() == 1);  // ssthresh reduced once per episode
  // Deflation: cwnd - acked(1072) + MSS.
  CHECK(sf.cwnd() == cwnd_at_entry - 1072 + kMss);

  // The hole retransmission arrives: ack covers the recovery point.
  const Effects done = sf.on_segment(server_ack(1 + 8 * kMss), now += kMillisecond);
  CHECK(!sf.in_fast_recovery());
  CHECK(sf.cwnd() == sf.ssthresh());  // full ACK: cwnd = ssthresh
  CHECK(sf.dup_ack_count() == 0);
  CHECK(segments_out(done).empty());  // nothing left to retransmit
  CHECK(sf.halvings() == 1);
}

TEST_CASE("send_window follows the min(cwnd, rwnd) minus flight rule") {
  SubflowConfig cfg;
  cfg.initial_cwnd_segments = 4;
  Subflow sf = make_established(cfg);
  CHECK(sf.send_window() == 4 * kMss);
  send_mss(sf, 1, 20 * kMillisecond);
  CHECK(sf.send_window() == 3 * kMss);  // 1608, spec example
  send_mss(sf, 3, 20 * kMillisecond);
  CHECK(sf.send_window() == 0);

  SubflowConfig tight;
  tight.initial_cwnd_segments = 4;
  tight.peer_rwnd = 536;
  Subflow sf2 = make_established(tight);
  CHECK(sf2.send_window() == 536);  // clamped by the peer window
}

TEST_CASE("transmit stamps the DSS mapping onto the outgoing segment") {
  SubflowConfig cfg;
  cfg.initial_cwnd_segments = 4;
  cfg.mptcp = true;
  Subflow sf(0, kTuple, cfg);
  sf.connect(0, {MpCapableOpt{}});
  sf.on_segment(server_synack(), 10 * kMillisecond);

  Effects fx = sf.transmit(DssMapping{0, 1, kMss, 0}, 20 * kMillisecond);
  auto segs = segments_out(fx);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].ssn == 1);  // ISN 0, SYN consumed one unit
  REQUIRE(segs[0].dss() != nullptr);
  CHECK(segs[0].dss()->dsn == 0);
  CHECK(segs[0].dss()->ssn == 1);
  CHECK(segs[0].dss()->data_len == kMss);

  fx = sf.transmit(DssMapping{536, 537, kMss, 0}, 20 * kMillisecond);
  segs = segments_out(fx);
  CHECK(segs[0].ssn == 537);
  CHECK(segs[0].dss()->dsn == 536);

  sf.transmit(DssMapping{1072, 1073, kMss, 0}, 20 * kMillisecond);
  sf.transmit(DssMapping{1608, 1609, kMss, 0}, 20 * kMillisecond);
  CHECK(sf.send_window() == 0);  // cwnd exhausted
  CHECK_THROWS_AS(sf.transmit(DssMapping{2144, 2145, kMss, 0}, 21 * kMillisecond),
                  WindowExceeded);

  Subflow idle(1, kTuple, cfg);
  CHECK_THROWS_AS(idle.transmit(DssMapping{0, 0, kMss, 1}, 0), InvalidState);
}

TEST_CASE("timeout collapses cwnd, rewinds, and resends in order") {
  SubflowConfig cfg;
  cfg.initial_cwnd_segments = 10;
  Subflow sf = make_established(cfg);
  TimeNs now = 20 * kMillisecond;
  Effects armed;  // only the first transmit arms the timer
  for (int i = 0; i < 10; ++i) {
    const uint32_t ssn = sf.snd_nxt();
    Effects fx2 = sf.transmit(DssMapping{ssn - 1, ssn, kMss, 0}, now);
    if (i == 0) armed = std::move(fx2);
  }
  const auto timer = last_timer(armed, TimerKind::Rto);
  REQUIRE(timer.has_value());

  const Effects fx = sf.on_timer(TimerKind::Rto, timer->generation, timer->deadline);
  CHECK(sf.timeouts() == 1);
  CHECK(sf.ssthresh() == 5 * kMss);  // max(flight/2, 2 MSS), spec example
  CHECK(sf.cwnd() == kMss);
  CHECK(!sf.in_fast_recovery());
  CHECK(sf.snd_nxt() == 1 + kMss);  // rewound to snd_una, first segment resent
  const auto segs = segments_out(fx);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].ssn == 1);
  CHECK(sf.has_rewind_data());
  CHECK(sf.next_rewind_len() == kMss);

  // Go-back-N: the remaining nine mappings resend verbatim, in order.
  for (int i = 0; i < 9; ++i) {
    const auto again = segments_out(sf.resend_next(timer->deadline + i));
    REQUIRE(again.size() == 1);
    CHECK(again[0].ssn == 1 + (i + 1) * kMss);
  }
  CHECK(!sf.has_rewind_data());
  CHECK(sf.retransmissions() == 10);
}

TEST_CASE("consecutive timeouts back off the RTO 1 s, 2 s, 4 s") {
  SubflowConfig cfg;
  cfg.min_rto = kSecond;  // estimator clamps to 1 s, the spec's initial value
  Subflow sf = make_established(cfg);
  CHECK(sf.rto() == kSecond);
  TimeNs now = 20 * kMillisecond;
  Effects armed;
  {
    const uint32_t ssn = sf.snd_nxt();
    armed = sf.transmit(DssMapping{ssn - 1, ssn, kMss, 0}, now);
  }
  auto timer = last_timer(armed, TimerKind::Rto);
  Effects fx = sf.on_timer(TimerKind::Rto, timer->generation, timer->deadline);
  CHECK(sf.rto() == 2 * kSecond);
  auto rto_fx = pick<RtoChanged>(fx);
  REQUIRE(!rto_fx.empty());
  CHECK(rto_fx.back().rto == 2 * kSecond);

  timer = last_timer(fx, TimerKind::Rto);
  fx = sf.on_timer(TimerKind::Rto, timer->generation, timer->deadline);
  CHECK(sf.rto() == 4 * kSecond);

  // The cap: repeated timeouts never push the RTO beyond 60 s.
  for (int i = 0; i < 8; ++i) {
    timer = last_timer(fx, TimerKind::Rto);
    fx = sf.on_timer(TimerKind::Rto, timer->generation, timer->deadline);
  }
  CHECK(sf.rto() == 60 * kSecond);
}

TEST_CASE("stale timer generations are ignored") {
  Subflow sf = make_established();
  send_mss(sf, 1, 20 * kMillisecond);
  const Effects fx = sf.on_segment(server_ack(1 + kMss), 30 * kMillisecond);
  (void)fx;  // the ack cancelled the timer by bumping the generation
  CHECK(sf.on_timer(TimerKind::Rto, 1, kSecond).empty());
  CHECK(sf.timeouts() == 0);
}

TEST_CASE("Karn: a retransmitted segment never updates the estimator") {
  Subflow sf = make_established();
  const TimeNs srtt0 = sf.srtt();
  TimeNs now = 20 * kMillisecond;
  Effects armed;
  {
    const uint32_t ssn = sf.snd_nxt();
    armed = sf.transmit(DssMapping{ssn - 1, ssn, kMss, 0}, now);
  }
  const auto timer = last_timer(armed, TimerKind::Rto);
  sf.on_timer(TimerKind::Rto, timer->generation, timer->deadline);
  // The ack for the retransmitted copy arrives much later.
  sf.on_segment(server_ack(1 + kMss), timer->deadline + 5 * kSecond);
  CHECK(sf.srtt() == srtt0);
  CHECK(sf.snd_una() == 1 + kMss);
}

TEST_CASE("sequence arithmetic survives a 32-bit ISN wraparound") {
  const uint32_t isn = 0xffffffffu - 999;  // 2^32 - 1000
  SubflowConfig cfg;
  cfg.isn = isn;
  cfg.initial_cwnd_segments = 8;
  cfg.mptcp = false;
  Subflow sf(0, kTuple, cfg);
  sf.connect(0, {});
  Segment synack = server_synack();
  synack.ack_ssn = isn + 1;
  sf.on_segment(synack, 10 * kMillisecond);
  REQUIRE(sf.state() == TcpState::Established);

  TimeNs now = 20 * kMillisecond;
  send_mss(sf, 5, now);  // 2680 bytes cross the wrap point
  CHECK(sf.snd_nxt() == isn + 1 + 5 * kMss);  // wraps modulo 2^32
  CHECK(sf.snd_nxt() == 1681u);

  for (int i = 1; i <= 5; ++i) {
    sf.on_segment(server_ack(isn + 1 + i * kMss), now += kMillisecond);
    CHECK(sf.snd_una() == isn + 1 + i * kMss);
  }
  CHECK(sf.cwnd() == (8 + 5) * kMss);  // five slow-start increments
  CHECK(sf.send_window() == 13 * kMss);

  // Receiver side across the wrap: the peer keeps its own wrapped ISN.
  SubflowConfig srv;
  srv.isn = 0;
  srv.mptcp = false;
  Subflow server(0, kTuple.reversed(), srv);
  server.listen({});
  Segment syn;
  syn.tuple = kTuple;
  syn.flags = kFlagSyn;
  syn.ssn = isn;
  server.on_segment(syn, 0);
  Segment complete;
  complete.tuple = kTuple;
  complete.flags = kFlagAck;
  complete.ssn = isn + 1;
  complete.ack_ssn = 1;
  server.on_segment(complete, kMillisecond);
  REQUIRE(server.state() == TcpState::Established);
  uint64_t delivered = 0;
  for (int i = 0; i < 5; ++i) {
    Segment data;
    data.tuple = kTuple;
    data.flags = kFlagAck;
    data.ssn = isn + 1 + i * kMss;
    data.ack_ssn = 1;
    data.payload_len = kMss;
    const auto fx = server.on_segment(data, 2 * kMillisecond);
    for (const auto& m : pick<MappingDelivered>(fx)) {
      CHECK(m.mapping.dsn == delivered);  // synthesized dsn ignores the wrap
      delivered += m.mapping.data_len;
    }
  }
  CHECK(delivered == 5 * kMss);
}

TEST_CASE("out-of-order data is held and released in sequence exactly once") {
  Subflow sf = make_established();
  Segment second;
  second.tuple = kTuple.reversed();
  second.flags = kFlagAck;
  second.ssn = 1 + kMss;
  second.ack_ssn = 1;
  second.payload_len = kMss;
  Effects fx = sf.on_segment(second, 20 * kMillisecond);
  CHECK(pick<MappingDelivered>(fx).empty());  // gap: stashed
  CHECK(sf.rcv_nxt() == 1);
  auto acks = segments_out(fx);
  REQUIRE(acks.size() == 1);
  CHECK(acks[0].ack_ssn == 1);  // duplicate ACK pointing at the hole

  Segment first = second;
  first.ssn = 1;
  fx = sf.on_segment(first, 21 * kMillisecond);
  const auto delivered = pick<MappingDelivered>(fx);
  REQUIRE(delivered.size() == 2);
  CHECK(delivered[0].mapping.ssn == 1);
  CHECK(delivered[1].mapping.ssn == 1 + kMss);
  CHECK(sf.rcv_nxt() == 1 + 2 * kMss);

  // A late duplicate is re-ACKed but never re-delivered.
  fx = sf.on_segment(first, 22 * kMillisecond);
  CHECK(pick<MappingDelivered>(fx).empty());
  acks = segments_out(fx);
  REQUIRE(acks.size() == 1);
  CHECK(acks[0].ack_ssn == 1 + 2 * kMss);
}

TEST_CASE("data beyond the receive window is dropped with a re-ACK") {
  SubflowConfig cfg;
  cfg.peer_rwnd = 1072;
  Subflow sf = make_established(cfg);
  Segment far;
  far.tuple = kTuple.reversed();
  far.flags = kFlagAck;
  far.ssn = 1 + 3 * kMss;
  far.ack_ssn = 1;
  far.payload_len = kMss;
  const Effects fx = sf.on_segment(far, 20 * kMillisecond);
  CHECK(pick<MappingDelivered>(fx).empty());
  CHECK(sf.rcv_nxt() == 1);
  CHECK(segments_out(fx).size() == 1);
}

TEST_CASE("active close walks FIN_WAIT_1 -> FIN_WAIT_2 -> TIME_WAIT -> CLOSED") {
  Subflow sf = make_established();
  TimeNs now = 20 * kMillisecond;
  Effects fx = sf.start_close(now);
  CHECK(sf.state() == TcpState::FinWait1);
  auto segs = segments_out(fx);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].fin());
  CHECK(segs[0].ssn == 1);

  sf.on_segment(server_ack(2), now += kMillisecond);  // FIN acked
  CHECK(sf.state() == TcpState::FinWait2);

  Segment peer_fin;
  peer_fin.tuple = kTuple.reversed();
  peer_fin.flags = kFlagFin | kFlagAck;
  peer_fin.ssn = 1;
  peer_fin.ack_ssn = 2;
  fx = sf.on_segment(peer_fin, now += kMillisecond);
  CHECK(sf.state() == TcpState::TimeWait);
  const auto tw = last_timer(fx, TimerKind::TimeWait);
  REQUIRE(tw.has_value());
  CHECK(tw->deadline == now + 2 * kSecond);

  fx = sf.on_timer(TimerKind::TimeWait, tw->generation, tw->deadline);
  CHECK(sf.state() == TcpState::Closed);
  CHECK(!pick<SubflowClosed>(fx).empty());
}

TEST_CASE("simultaneous close goes through CLOSING") {
  Subflow sf = make_established();
  TimeNs now = 20 * kMillisecond;
  sf.start_close(now);
  Segment peer_fin;
  peer_fin.tuple = kTuple.reversed();
  peer_fin.flags = kFlagFin | kFlagAck;
  peer_fin.ssn = 1;
  peer_fin.ack_ssn = 1;  // has not seen our FIN yet
  sf.on_segment(peer_fin, now += kMillisecond);
  CHECK(sf.state() == TcpState::Closing);
  sf.on_segment(server_ack(2), now += kMillisecond);
  CHECK(sf.state() == TcpState::TimeWait);
}

TEST_CASE("passive close: CLOSE_WAIT then LAST_ACK then CLOSED") {
  Subflow sf = make_established();
  TimeNs now = 20 * kMillisecond;
  Segment peer_fin;
  peer_fin.tuple = kTuple.reversed();
  peer_fin.flags = kFlagFin | kFlagAck;
  peer_fin.ssn = 1;
  peer_fin.ack_ssn = 1;
  Effects fx = sf.on_segment(peer_fin, now);
  CHECK(sf.state() == TcpState::CloseWait);
  CHECK(pick<SubflowClosed>(fx).empty());  // not closed yet, spec example
  CHECK(sf.rcv_nxt() == 2);

  fx = sf.start_close(now += kMillisecond);
  CHECK(sf.state() == TcpState::LastAck);
  REQUIRE(segments_out(fx).size() == 1);
  CHECK(segments_out(fx)[0].fin());

  fx = sf.on_segment(server_ack(2), now += kMillisecond);
  CHECK(sf.state() == TcpState::Closed);
  CHECK(pick<SubflowClosed>(fx).size() == 1);
}

TEST_CASE("RST tears the subflow down immediately") {
  Subflow sf = make_established();
  Segment rst;
  rst.tuple = kTuple.reversed();
  rst.flags = kFlagRst;
  rst.ssn = 1;
  const Effects fx = sf.on_segment(rst, 20 * kMillisecond);
  CHECK(sf.state() == TcpState::Closed);
  CHECK(pick<SubflowClosed>(fx).size() == 1);
  CHECK(segments_out(fx).empty());  // a RST is never answered
}

TEST_CASE("cwnd and ssthresh never fall below their floors") {
  SubflowConfig cfg;
  cfg.initial_cwnd_segments = 2;
  Subflow sf = make_established(cfg);
  TimeNs now = 20 * kMillisecond;
  Effects armed;
  {
    const uint32_t ssn = sf.snd_nxt();
    armed = sf.transmit(DssMapping{ssn - 1, ssn, kMss, 0}, now);
  }
  const auto timer = last_timer(armed, TimerKind::Rto);
  // Flight is one MSS, so flight/2 < 2 MSS and the floor applies.
  sf.on_timer(TimerKind::Rto, timer->generation, timer->deadline);
  CHECK(sf.ssthresh() == 2 * kMss);
  CHECK(sf.cwnd() == kMss);
}
