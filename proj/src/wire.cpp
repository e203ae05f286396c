#include "wire.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace mptcp {
namespace {

enum OptKind : uint8_t {
  kOptMpCapable = 1,
  kOptMpJoin = 2,
  kOptAddAddr = 3,
  kOptDss = 4,
};

// Fixed body widths keep the encoding length a pure function of which option
// variants are present.
constexpr uint8_t kLenMpCapable = 5;  // has_token u8 + token u32
constexpr uint8_t kLenMpJoin = 5;     // token u32 + addr_id u8
constexpr uint8_t kLenAddAddr = 5;    // addr_id u8 + addr u32
constexpr uint8_t kLenDss = 23;       // flags u8 + dsn u64 + ssn u32 + len u16 + ack u64

constexpr uint8_t kDssFlagFin = 0x1;
constexpr uint8_t kDssFlagAck = 0x2;

void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  bool need(size_t n) const { return buf.size() - pos >= n; }
  uint8_t u8() { return buf[pos++]; }
  uint16_t u16() {
    uint16_t v = static_cast<uint16_t>(buf[pos] << 8 | buf[pos + 1]);
    pos += 2;
    return v;
  }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | buf[pos++];
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | buf[pos++];
    return v;
  }
};

std::optional<Segment> fail(std::string* error, const char* why) {
  if (error) *error = why;
  return std::nullopt;
}

}  // namespace

const DssOpt* Segment::dss() const {
  for (const auto& o : options)
    if (auto* d = std::get_if<DssOpt>(&o)) return d;
  return nullptr;
}

const MpCapableOpt* Segment::mp_capable() const {
  for (const auto& o : options)
    if (auto* c = std::get_if<MpCapableOpt>(&o)) return c;
  return nullptr;
}

const MpJoinOpt* Segment::mp_join() const {
  for (const auto& o : options)
    if (auto* j = std::get_if<MpJoinOpt>(&o)) return j;
  return nullptr;
}

const AddAddrOpt* Segment::add_addr() const {
  for (const auto& o : options)
    if (auto* a = std::get_if<AddAddrOpt>(&o)) return a;
  return nullptr;
}

size_t encoded_size(const Segment& seg) {
  size_t n = kSegmentHeaderSize;
  for (const auto& o : seg.options) {
    switch (o.index()) {
      case 0: n += 2 + kLenMpCapable; break;
      case 1: n += 2 + kLenMpJoin; break;
      case 2: n += 2 + kLenAddAddr; break;
      case 3: n += 2 + kLenDss; break;
    }
  }
  return n;
}

std::vector<uint8_t> encode_segment(const Segment& seg) {
  std::vector<uint8_t> out;
  out.reserve(encoded_size(seg));
  put_u32(out, seg.tuple.src_addr);
  put_u16(out, seg.tuple.src_port);
  put_u32(out, seg.tuple.dst_addr);
  put_u16(out, seg.tuple.dst_port);
  put_u8(out, seg.flags);
  put_u32(out, seg.ssn);
  put_u32(out, seg.ack_ssn);
  put_u16(out, seg.payload_len);
  for (const auto& o : seg.options) {
    if (auto* c = std::get_if<MpCapableOpt>(&o)) {
      put_u8(out, kOptMpCapable);
      put_u8(out, kLenMpCapable);
      put_u8(out, c->token ? 1 : 0);
      put_u32(out, c->token ? c->token->value : 0);
    } else if (auto* j = std::get_if<MpJoinOpt>(&o)) {
      put_u8(out, kOptMpJoin);
      put_u8(out, kLenMpJoin);
      put_u32(out, j->token.value);
      put_u8(out, j->addr_id);
    } else if (auto* a = std::get_if<AddAddrOpt>(&o)) {
      put_u8(out, kOptAddAddr);
      put_u8(out, kLenAddAddr);
      put_u8(out, a->addr_id);
      put_u32(out, a->addr);
    } else if (auto* d = std::get_if<DssOpt>(&o)) {
      put_u8(out, kOptDss);
      put_u8(out, kLenDss);
      put_u8(out, static_cast<uint8_t>((d->data_fin ? kDssFlagFin : 0) |
                                       (d->data_ack ? kDssFlagAck : 0)));
      put_u64(out, d->dsn);
      put_u32(out, d->ssn);
      put_u16(out, d->data_len);
      put_u64(out, d->data_ack ? *d->data_ack : 0);
    }
  }
  return out;
}

std::optional<Segment> decode_segment(const std::vector<uint8_t>& bytes, std::string* error) {
  Reader r{bytes};
  if (!r.need(kSegmentHeaderSize)) return fail(error, "truncated header");
  Segment seg;
  seg.tuple.src_addr = r.u32();
  seg.tuple.src_port = r.u16();
  seg.tuple.dst_addr = r.u32();
  seg.tuple.dst_port = r.u16();
  seg.flags = r.u8();
  seg.ssn = r.u32();
  seg.ack_ssn = r.u32();
  seg.payload_len = r.u16();
  if (seg.flags & ~kAllFlags) return fail(error, "unknown flag bits");
  if (!seg.ack() && seg.ack_ssn != 0) return fail(error, "ack_ssn set without ACK");

  bool seen[5] = {};
  while (r.pos < bytes.size()) {
    if (!r.need(2)) return fail(error, "truncated option header");
    uint8_t kind = r.u8();
    uint8_t len = r.u8();
    if (kind < kOptMpCapable || kind > kOptDss) return fail(error, "unknown option kind");
    if (seen[kind]) return fail(error, "duplicate option kind");
    seen[kind] = true;
    if (!r.need(len)) return fail(error, "option length beyond buffer");
    switch (kind) {
      case kOptMpCapable: {
        if (len != kLenMpCapable) return fail(error, "bad MP_CAPABLE length");
        uint8_t has_token = r.u8();
        uint32_t tok = r.u32();
        if (has_token > 1) return fail(error, "bad MP_CAPABLE token flag");
        if (!has_token && tok != 0) return fail(error, "non-canonical MP_CAPABLE padding");
        MpCapableOpt c;
        if (has_token) c.token = Token{tok};
        seg.options.emplace_back(c);
        break;
      }
      case kOptMpJoin: {
        if (len != kLenMpJoin) return fail(error, "bad MP_JOIN length");
        MpJoinOpt j;
        j.token = Token{r.u32()};
        j.addr_id = r.u8();
        seg.options.emplace_back(j);
        break;
      }
      case kOptAddAddr: {
        if (len != kLenAddAddr) return fail(error, "bad ADD_ADDR length");
        AddAddrOpt a;
        a.addr_id = r.u8();
        a.addr = r.u32();
        seg.options.emplace_back(a);
        break;
      }
      case kOptDss: {
        if (len != kLenDss) return fail(error, "bad DSS length");
        uint8_t dflags = r.u8();
        if (dflags & ~(kDssFlagFin | kDssFlagAck)) return fail(error, "unknown DSS flag bits");
        DssOpt d;
        d.dsn = r.u64();
        d.ssn = r.u32();
        d.data_len = r.u16();
        uint64_t ack = r.u64();
        d.data_fin = dflags & kDssFlagFin;
        if (dflags & kDssFlagAck)
          d.data_ack = ack;
        else if (ack != 0)
          return fail(error, "non-canonical DSS padding");
        seg.options.emplace_back(d);
        break;
      }
    }
  }
  return seg;
}

bool segment_valid(const Segment& seg, uint32_t mss, std::string* why) {
  auto no = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (seg.flags & ~kAllFlags) return no("unknown flag bits");
  if (seg.payload_len > mss) return no("payload exceeds MSS");
  if (!seg.ack() && seg.ack_ssn != 0) return no("ack_ssn set without ACK");
  bool seen[4] = {};
  for (const auto& o : seg.options) {
    if (seen[o.index()]) return no("duplicate option variant");
    seen[o.index()] = true;
    if (auto* d = std::get_if<DssOpt>(&o))
      if (d->data_len > 0 && d->data_len > mss) return no("DSS data_len exceeds MSS");
  }
  return true;
}

Segment rst_for(const Segment& seg) {
  Segment r;
  r.tuple = seg.tuple.reversed();
  if (seg.ack()) {
    r.flags = kFlagRst;
    r.ssn = seg.ack_ssn;
  } else {
    r.flags = kFlagRst | kFlagAck;
    r.ack_ssn = seg.ssn + seg.sequence_span();
  }
  return r;
}

std::string format_addr(uint32_t addr) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", addr >> 24 & 0xff, addr >> 16 & 0xff,
                addr >> 8 & 0xff, addr & 0xff);
  return buf;
}

std::optional<uint32_t> parse_addr(const std::string& dotted) {
  std::array<uint32_t, 4> parts{};
  const char* p = dotted.c_str();
  const char* end = p + dotted.size();
  for (int i = 0; i < 4; ++i) {
    auto [next, ec] = std::from_chars(p, end, parts[i]);
    if (ec != std::errc{} || parts[i] > 255) return std::nullopt;
    p = next;
    if (i < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return parts[0] << 24 | parts[1] << 16 | parts[2] << 8 | parts[3];
}

std::string format_tuple(const FourTuple& t) {
  return format_addr(t.src_addr) + ":" + std::to_string(t.src_port) + ">" +
         format_addr(t.dst_addr) + ":" + std::to_string(t.dst_port);
}

}  // namespace mptcp
