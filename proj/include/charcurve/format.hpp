#pragma once

#include <cstdio>
#include <string>

namespace charcurve {

// printf("%.*f"); "C" locale formatting for reports.
inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace charcurve
