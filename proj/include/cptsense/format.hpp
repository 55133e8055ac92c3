#pragma once

#include <cstdio>
#include <string>

namespace cptsense {

/// Doubles in CSV output are printed with %.17g so files are byte-identical
/// across repeated runs and values round-trip exactly through text.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace cptsense
