#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace lprop {

/// Format a real with a fixed number of significant digits ('.' decimal
/// point, no locale). All CSV and report output funnels through here so
/// that identical runs produce byte-identical files.
inline std::string format_real(double v, int significant = 12) {
  if (significant < 1) significant = 1;
  if (significant > 17) significant = 17;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant, v);
  return std::string(buf);
}

inline std::string format_point(const std::vector<double>& p, int significant = 12,
                                const std::string& sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += sep;
    out += format_real(p[i], significant);
  }
  return out;
}

}  // namespace lprop
