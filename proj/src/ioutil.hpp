#pragma once

#include <cstdio>
#include <string>

namespace mdk {

// Round-trip-exact double formatting for CSV output.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace mdk
