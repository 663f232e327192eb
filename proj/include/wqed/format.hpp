#pragma once

#include <cstdio>
#include <string>

namespace wqed {

// Fixed 12-decimal formatting used for every file output.
inline std::string fmt_fixed(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", x == 0 ? 0.0 : x);
  return buf;
}

inline std::string fmt_sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", x);
  return buf;
}

}  // namespace wqed
