#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace dcm {

// Shortest decimal string that parses back to the same double. Keeps CSV
// round-trips exact and rerun outputs byte-identical.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace dcm
