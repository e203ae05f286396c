#pragma once

#include <stdexcept>

namespace mptcp {

// Bad scenario/config input; maps to CLI exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A peer (or crafted test input) broke the protocol contract.
struct ProtocolViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller-contract violations; simulator bugs map to CLI exit code 2.
struct InvalidState : std::logic_error {
  using std::logic_error::logic_error;
};

struct WindowExceeded : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConnectionClosing : std::logic_error {
  using std::logic_error::logic_error;
};

struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace mptcp
