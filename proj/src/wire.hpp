#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mptcp {

inline constexpr uint32_t kDefaultMss = 536;

// Payload bytes are modeled by length only; the byte at connection-level
// data sequence number d has the deterministic value d mod 256, letting
// receivers verify end-to-end integrity without carrying buffers.
inline constexpr uint8_t payload_byte(uint64_t dsn) { return static_cast<uint8_t>(dsn & 0xff); }

// TCP flag bits carried by a simulated segment.
inline constexpr uint8_t kFlagSyn = 0x1;
inline constexpr uint8_t kFlagAck = 0x2;
inline constexpr uint8_t kFlagFin = 0x4;
inline constexpr uint8_t kFlagRst = 0x8;
inline constexpr uint8_t kAllFlags = kFlagSyn | kFlagAck | kFlagFin | kFlagRst;

struct FourTuple {
  uint32_t src_addr = 0;
  uint16_t src_port = 0;
  uint32_t dst_addr = 0;
  uint16_t dst_port = 0;

  FourTuple reversed() const { return {dst_addr, dst_port, src_addr, src_port}; }
  auto operator<=>(const FourTuple&) const = default;
};

struct Token {
  uint32_t value = 0;
  auto operator<=>(const Token&) const = default;
};

// MP-CAPABLE: the token is present only on the SYN-ACK (listener-assigned).
struct MpCapableOpt {
  std::optional<Token> token;
  auto operator<=>(const MpCapableOpt&) const = default;
};

struct MpJoinOpt {
  Token token;
  uint8_t addr_id = 0;
  auto operator<=>(const MpJoinOpt&) const = default;
};

struct AddAddrOpt {
  uint8_t addr_id = 0;
  uint32_t addr = 0;
  auto operator<=>(const AddAddrOpt&) const = default;
};

// Data Sequence Signal. data_fin with data_len == 0 is a pure DATA-FIN: it
// consumes one DSN and no payload.
struct DssOpt {
  uint64_t dsn = 0;
  uint32_t ssn = 0;
  uint16_t data_len = 0;
  std::optional<uint64_t> data_ack;
  bool data_fin = false;
  auto operator<=>(const DssOpt&) const = default;
};

using MptcpOption = std::variant<MpCapableOpt, MpJoinOpt, AddAddrOpt, DssOpt>;

// Payload bytes are modelled by length only; the byte at DSN d has value
// d mod 256, which lets receivers verify integrity without carrying buffers.
struct Segment {
  FourTuple tuple;
  uint8_t flags = 0;
  uint32_t ssn = 0;      // subflow sequence number of first payload byte
  uint32_t ack_ssn = 0;  // valid iff ACK set
  uint16_t payload_len = 0;
  std::vector<MptcpOption> options;

  bool syn() const { return flags & kFlagSyn; }
  bool ack() const { return flags & kFlagAck; }
  bool fin() const { return flags & kFlagFin; }
  bool rst() const { return flags & kFlagRst; }

  // Units of subflow sequence space consumed: payload plus one each for SYN/FIN.
  uint32_t sequence_span() const {
    return payload_len + (syn() ? 1u : 0u) + (fin() ? 1u : 0u);
  }

  const DssOpt* dss() const;
  const MpCapableOpt* mp_capable() const;
  const MpJoinOpt* mp_join() const;
  const AddAddrOpt* add_addr() const;

  bool operator==(const Segment&) const = default;
};

// Canonical binary encoding: fixed-width big-endian fields in declaration
// order, then options as (kind, len, body) with fixed per-kind body widths.
// This is the artifact's own format, used for golden fixtures and dumps.
inline constexpr size_t kSegmentHeaderSize = 23;

std::vector<uint8_t> encode_segment(const Segment& seg);

// Returns the encoded size without encoding; depends only on the option
// variants present.
size_t encoded_size(const Segment& seg);

// Inverse of encode_segment on its image. On malformed input (truncation,
// unknown option kind, length mismatch, duplicate kinds, non-canonical
// padding) returns nullopt and, when given, fills *error.
std::optional<Segment> decode_segment(const std::vector<uint8_t>& bytes,
                                      std::string* error = nullptr);

// Checks the Segment invariants against an MSS (payload bound, ack_ssn
// validity, one option per variant).
bool segment_valid(const Segment& seg, uint32_t mss, std::string* why = nullptr);

// RST in reply to an unexpected segment, addressed back at its sender.
Segment rst_for(const Segment& seg);

std::string format_addr(uint32_t addr);
std::optional<uint32_t> parse_addr(const std::string& dotted);
std::string format_tuple(const FourTuple& t);

}  // namespace mptcp
