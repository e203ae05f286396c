#include "sim_time.hpp"

#include <cstdio>

namespace mptcp {

std::string format_time(TimeNs t) {
  char buf[32];
  bool neg = t < 0;
  if (neg) t = -t;
  std::snprintf(buf, sizeof buf, "%s%lld.%09lld", neg ? "-" : "",
                static_cast<long long>(t / kSecond), static_cast<long long>(t % kSecond));
  return buf;
}

}  // namespace mptcp
