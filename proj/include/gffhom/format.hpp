#pragma once

#include <cstdio>
#include <string>

namespace gffhom {

/// Shortest-ish round-trippable text for CSV output (%.*g).
inline std::string format_number(double v, int digits = 12) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace gffhom
