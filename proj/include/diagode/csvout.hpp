#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace diagode {

// Numbers are serialized with 17 significant digits so emitted tables are
// bit-faithful and reproducible.
inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

}  // namespace diagode
