#pragma once

// Gauges by name: `power:p=<p>`, `log1p`, `table:<path>`, `section6`.

#include <string>

#include "bmo/counterexamples.hpp"
#include "bmo/error.hpp"
#include "bmo/gauge.hpp"

namespace bmo {

inline OscillationGauge parse_gauge(const std::string& spec) {
  if (spec == "log1p") return gauge_log();
  if (spec == "section6") return section6_gauge();
  if (spec.rfind("power:p=", 0) == 0) {
    const std::string value = spec.substr(8);
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == value.size() && used > 0, ErrorKind::Parse, "bad exponent in gauge spec '" + spec + "'");
    return gauge_power(p);
  }
  if (spec.rfind("table:", 0) == 0) {
    require(spec.size() > 6, ErrorKind::Parse, "table gauge needs a path");
    return load_table_gauge(spec.substr(6));
  }
  fail(ErrorKind::Parse, "unknown gauge spec '" + spec + "' (expected power:p=<p>, log1p, table:<path> or section6)");
}

}  // namespace bmo
