#include "demux.hpp"

#include "errors.hpp"

namespace mptcp {

EndpointTable::EndpointTable(std::function<uint32_t()> token_rng)
    : token_rng_(std::move(token_rng)) {
  if (!token_rng_) throw InternalError("endpoint table needs a token source");
}

Token EndpointTable::allocate_token(Connection* owner) {
  // 32-bit space, redraw on collision; bounded only to surface broken rngs.
  for (int tries = 0; tries < 1024; ++tries) {
    const uint32_t v = token_rng_();
    if (v == 0) continue;  // 0 is reserved for "no token"
    const auto [it, inserted] = by_token_.emplace(v, owner);
    if (inserted) return Token{v};
  }
  throw InternalError("token rng failed to produce a fresh token");
}

void EndpointTable::learn_token(Token t, Connection* owner) {
  if (t.value == 0) throw InternalError("token 0 is reserved");
  const auto [it, inserted] = by_token_.emplace(t.value, owner);
  if (!inserted && it->second != owner)
    throw InternalError("token already registered to another connection");
}

void EndpointTable::bind_tuple(const FourTuple& local_tuple, Connection* conn,
                               size_t subflow_idx) {
  const auto [it, inserted] = by_tuple_.emplace(local_tuple, std::make_pair(conn, subflow_idx));
  if (!inserted) throw InternalError("four-tuple bound twice");
}

bool EndpointTable::tuple_bound(const FourTuple& local_tuple) const {
  return by_tuple_.count(local_tuple) > 0;
}

void EndpointTable::add_listener(uint32_t local_addr, uint16_t port, Connection* listener) {
  const auto [it, inserted] = listeners_.emplace(std::make_pair(local_addr, port), listener);
  if (!inserted) throw InternalError("listener port bound twice");
}

RoutingDecision EndpointTable::dispatch(const Segment& seg) const {
  // Table keys are in local form (src = this node); an inbound segment's
  // tuple is the peer's view, so reverse it.
  const FourTuple local = seg.tuple.reversed();
  if (auto it = by_tuple_.find(local); it != by_tuple_.end())
    return {RoutingDecision::Kind::ToSubflow, it->second.first, it->second.second};
  if (seg.syn() && !seg.ack()) {
    if (const MpJoinOpt* mj = seg.mp_join()) {
      if (auto it = by_token_.find(mj->token.value); it != by_token_.end())
        return {RoutingDecision::Kind::JoinByToken, it->second};
      return {RoutingDecision::Kind::Rst};  // stale or forged join
    }
    if (auto it = listeners_.find({local.src_addr, local.src_port}); it != listeners_.end())
      return {RoutingDecision::Kind::ForkListener, it->second};
    if (auto it = listeners_.find({0u, local.src_port}); it != listeners_.end())
      return {RoutingDecision::Kind::ForkListener, it->second};
    return {RoutingDecision::Kind::Rst};
  }
  if (seg.rst()) return {RoutingDecision::Kind::Drop};
  return {RoutingDecision::Kind::Rst};
}

void EndpointTable::deallocate(Token t) {
  auto it = by_token_.find(t.value);
  if (it == by_token_.end()) throw InternalError("deallocating an unknown token");
  Connection* conn = it->second;
  by_token_.erase(it);
  remove_tuples(conn);
}

void EndpointTable::remove_tuples(Connection* conn) {
  for (auto it = by_tuple_.begin(); it != by_tuple_.end();) {
    if (it->second.first == conn)
      it = by_tuple_.erase(it);
    else
      ++it;
  }
}

Connection* EndpointTable::find_token(Token t) const {
  auto it = by_token_.find(t.value);
  return it == by_token_.end() ? nullptr : it->second;
}

std::pair<Connection*, size_t> EndpointTable::find_tuple(const FourTuple& local_tuple) const {
  auto it = by_tuple_.find(local_tuple);
  return it == by_tuple_.end() ? std::make_pair(nullptr, size_t{0}) : it->second;
}

}  // namespace mptcp
