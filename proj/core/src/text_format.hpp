#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace parfilter::text {

// Shortest decimal string that round-trips the double (to_chars default).
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[40];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace parfilter::text
