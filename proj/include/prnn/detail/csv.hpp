#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <system_error>

namespace prnn::detail {

// Shortest round-trip decimal form. Keeps report files byte-stable across
// identical runs and lossless to reparse.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad numeric field: '" + s + "'");
  return v;
}

}  // namespace prnn::detail
