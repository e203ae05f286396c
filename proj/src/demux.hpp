#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>

#include "wire.hpp"

namespace mptcp {

class Connection;

// What dispatch() decided about an inbound segment. Pure data: the node
// executes it (delivering, forking a child, or emitting the RST).
struct RoutingDecision {
  enum class Kind {
    ToSubflow,   // conn + subflow_idx
    JoinByToken, // conn (accept_join)
    ForkListener,// listener conn (fork an acceptor child)
    Rst,
    Drop,        // never RST a RST
  };
  Kind kind;
  Connection* conn = nullptr;
  size_t subflow_idx = 0;
};

// Per-node endpoint registry: four-tuple and token lookup plus listener
// ports. Token 0 is reserved to mean "no token" in traces and is never
// allocated.
class EndpointTable {
 public:
  explicit EndpointTable(std::function<uint32_t()> token_rng);

  // Draws from the rng until the token is free, inserts it, returns it.
  Token allocate_token(Connection* owner);
  // Registers a token assigned elsewhere (initiator learning from SYN-ACK).
  void learn_token(Token t, Connection* owner);
  void bind_tuple(const FourTuple& local_tuple, Connection* conn, size_t subflow_idx);
  bool tuple_bound(const FourTuple& local_tuple) const;
  void add_listener(uint32_t local_addr, uint16_t port, Connection* listener);

  // Routing decision for an inbound segment. Priority: four-tuple match,
  // MP_JOIN SYN by token, SYN to a listener, RST everything else.
  RoutingDecision dispatch(const Segment& seg) const;

  // Removes the token entry and every tuple of the owning connection.
  void deallocate(Token t);
  // Same teardown for tokenless (plain TCP) connections.
  void remove_tuples(Connection* conn);

  Connection* find_token(Token t) const;
  // (nullptr, 0) when the tuple is unbound.
  std::pair<Connection*, size_t> find_tuple(const FourTuple& local_tuple) const;
  size_t token_count() const { return by_token_.size(); }
  size_t tuple_count() const { return by_tuple_.size(); }

 private:
  std::function<uint32_t()> token_rng_;
  std::map<uint32_t, Connection*> by_token_;
  std::map<FourTuple, std::pair<Connection*, size_t>> by_tuple_;
  std::map<std::pair<uint32_t, uint16_t>, Connection*> listeners_;
};

}  // namespace mptcp
