#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace isobench::detail {

// Shortest round-trip decimal form; identical bits always print identically.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace isobench::detail
