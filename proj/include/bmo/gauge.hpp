#pragma once

// Oscillation gauges h: [0, inf) -> [0, inf) with declared analytic
// properties, optional derivative evaluators and the audits that check the
// declarations against sampled values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bmo/error.hpp"
#include "bmo/random.hpp"

namespace bmo {

enum class GaugeFlag : unsigned {
  VanishesAtZero = 1u << 0,
  Increasing = 1u << 1,
  Concave = 1u << 2,
  ThirdDerivativePositive = 1u << 3,
  TendsToInfinity = 1u << 4,
  Continuous = 1u << 5,
};

class GaugeFlags {
 public:
  constexpr GaugeFlags() = default;
  constexpr GaugeFlags(std::initializer_list<GaugeFlag> flags) {
    for (GaugeFlag f : flags) bits_ |= static_cast<unsigned>(f);
  }
  static constexpr GaugeFlags all() {
    return {GaugeFlag::VanishesAtZero, GaugeFlag::Increasing, GaugeFlag::Concave,
            GaugeFlag::ThirdDerivativePositive, GaugeFlag::TendsToInfinity, GaugeFlag::Continuous};
  }
  constexpr bool has(GaugeFlag f) const { return (bits_ & static_cast<unsigned>(f)) != 0; }
  constexpr void set(GaugeFlag f, bool on = true) {
    if (on) bits_ |= static_cast<unsigned>(f);
    else bits_ &= ~static_cast<unsigned>(f);
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr unsigned bits() const { return bits_; }

 private:
  unsigned bits_ = 0;
};

inline const char* flag_name(GaugeFlag f) {
  switch (f) {
    case GaugeFlag::VanishesAtZero: return "vanishes_at_zero";
    case GaugeFlag::Increasing: return "increasing";
    case GaugeFlag::Concave: return "concave";
    case GaugeFlag::ThirdDerivativePositive: return "third_derivative_positive";
    case GaugeFlag::TendsToInfinity: return "tends_to_infinity";
    case GaugeFlag::Continuous: return "continuous";
  }
  return "?";
}

using ScalarFn = std::function<double(double)>;

struct OscillationGauge {
  std::string name;
  ScalarFn eval;
  ScalarFn d1, d2, d3;  // optional
  ScalarFn inverse;     // optional closed form, used only for cross-checks
  GaugeFlags flags;

  double operator()(double t) const { return eval(t); }
  bool has(GaugeFlag f) const { return flags.has(f); }
  bool has_derivatives() const { return d1 && d2 && d3; }
};

inline void require_flags(const OscillationGauge& h, std::initializer_list<GaugeFlag> needed, const char* who) {
  for (GaugeFlag f : needed) {
    require(h.has(f), ErrorKind::FlagMissing,
            std::string(who) + " needs gauge '" + h.name + "' to be flagged " + flag_name(f));
  }
}

/// h(t) = t^p, 0 < p <= 1.
inline OscillationGauge gauge_power(double p) {
  require(p > 0.0 && p <= 1.0, ErrorKind::OutOfRange, "power gauge needs 0 < p <= 1");
  OscillationGauge g;
  std::ostringstream name;
  name << "power:p=" << p;
  g.name = name.str();
  if (p == 1.0) {
    g.eval = [](double t) { return t; };
    g.d1 = [](double) { return 1.0; };
    g.d2 = [](double) { return 0.0; };
    g.d3 = [](double) { return 0.0; };
    g.inverse = [](double y) { return y; };
  } else if (p == 0.5) {
    g.eval = [](double t) { return std::sqrt(t); };
    g.d1 = [](double t) { return 0.5 / std::sqrt(t); };
    g.d2 = [](double t) { return -0.25 / (t * std::sqrt(t)); };
    g.d3 = [](double t) { return 0.375 / (t * t * std::sqrt(t)); };
    g.inverse = [](double y) { return y * y; };
  } else {
    g.eval = [p](double t) { return std::pow(t, p); };
    g.d1 = [p](double t) { return p * std::pow(t, p - 1.0); };
    g.d2 = [p](double t) { return p * (p - 1.0) * std::pow(t, p - 2.0); };
    g.d3 = [p](double t) { return p * (p - 1.0) * (p - 2.0) * std::pow(t, p - 3.0); };
    g.inverse = [p](double y) { return std::pow(y, 1.0 / p); };
  }
  g.flags = GaugeFlags::all();
  if (p == 1.0) g.flags.set(GaugeFlag::ThirdDerivativePositive, false);
  return g;
}

/// h(t) = log(1 + t).
inline OscillationGauge gauge_log() {
  OscillationGauge g;
  g.name = "log1p";
  g.eval = [](double t) { return std::log1p(t); };
  g.d1 = [](double t) { return 1.0 / (1.0 + t); };
  g.d2 = [](double t) { return -1.0 / ((1.0 + t) * (1.0 + t)); };
  g.d3 = [](double t) { return 2.0 / ((1.0 + t) * (1.0 + t) * (1.0 + t)); };
  g.inverse = [](double y) { return std::expm1(y); };
  g.flags = GaugeFlags::all();
  return g;
}

/// Piecewise-linear gauge through (t_i, h_i), t_0 = 0, extended past the last
/// knot with the last slope. Flags are read off the data; no derivatives.
inline OscillationGauge gauge_table(std::vector<std::pair<double, double>> points, std::string name = "table") {
  require(points.size() >= 2, ErrorKind::Parse, "table gauge needs at least two points");
  require(points.front().first == 0.0, ErrorKind::Parse, "table gauge must start at t = 0");
  bool increasing = true, concave = true;
  double prev_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [t, v] = points[i];
    require(std::isfinite(t) && std::isfinite(v) && v >= 0.0, ErrorKind::Parse,
            "table gauge values must be finite and non-negative");
    if (i == 0) continue;
    require(t > points[i - 1].first, ErrorKind::Parse, "table gauge abscissae must be strictly increasing");
    const double slope = (v - points[i - 1].second) / (t - points[i - 1].first);
    if (slope <= 0.0) increasing = false;
    if (slope > prev_slope) concave = false;
    prev_slope = slope;
  }
  auto data = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(points));
  OscillationGauge g;
  g.name = std::move(name);
  g.eval = [data](double t) {
    const auto& p = *data;
    auto it = std::upper_bound(p.begin(), p.end(), t, [](double x, const auto& q) { return x < q.first; });
    std::size_t hi = static_cast<std::size_t>(it - p.begin());
    if (hi == 0) return p.front().second;
    if (hi == p.size()) hi = p.size() - 1;
    const auto [t0, v0] = p[hi - 1];
    const auto [t1, v1] = p[hi];
    return std::max(0.0, v0 + (v1 - v0) * (t - t0) / (t1 - t0));
  };
  g.flags.set(GaugeFlag::Continuous);
  g.flags.set(GaugeFlag::VanishesAtZero, data->front().second == 0.0);
  g.flags.set(GaugeFlag::Increasing, increasing);
  g.flags.set(GaugeFlag::Concave, concave && increasing);
  g.flags.set(GaugeFlag::TendsToInfinity, increasing);
  return g;
}

inline OscillationGauge load_table_gauge(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Parse, "cannot open gauge table " + path);
  std::vector<std::pair<double, double>> points;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double t = 0, v = 0;
    if (!(ss >> t)) continue;
    std::string extra;
    if (!(ss >> v) || (ss >> extra))
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected two columns");
    points.emplace_back(t, v);
  }
  return gauge_table(std::move(points), "table:" + path);
}

/// h + c. Keeps derivatives; h(0) = 0 is lost for c != 0.
inline OscillationGauge shifted(const OscillationGauge& h, double c) {
  OscillationGauge g = h;
  std::ostringstream name;
  name << h.name << "+" << c;
  g.name = name.str();
  g.eval = [e = h.eval, c](double t) { return e(t) + c; };
  g.inverse = nullptr;
  if (c != 0.0) g.flags.set(GaugeFlag::VanishesAtZero, false);
  return g;
}

/// The unique t with h(t) = y, by bracketing bisection (relative tolerance
/// 1e-12). Returns +inf when y exceeds every value h reaches.
inline double gauge_inverse(const OscillationGauge& h, double y) {
  require(h.has(GaugeFlag::Increasing), ErrorKind::NonIncreasingGauge,
          "gauge '" + h.name + "' is not flagged increasing");
  require(y >= 0.0, ErrorKind::Domain, "inverse needs y >= 0");
  if (y == 0.0) return 0.0;
  double hi = 1.0;
  if (h(hi) < y) {
    while (h(hi) < y) {
      hi *= 2.0;
      if (hi > 1e300) return std::numeric_limits<double>::infinity();
    }
  } else {
    while (hi > 1e-300 && h(hi * 0.5) >= y) hi *= 0.5;
  }
  double lo = hi * 0.5;
  if (h(lo) >= y) lo = 0.0;
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (h(mid) < y) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct TriangleAudit {
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_s = 0, worst_t = 0;
  long samples = 0;
};

/// Checks h(|s+t|) <= h(|s|) + h(|t|) on random pairs in [-1e6, 1e6]^2; half
/// of the pairs are drawn log-uniformly in magnitude so small arguments are
/// exercised as well.
inline TriangleAudit triangle_inequality_audit(const OscillationGauge& h, long samples, std::uint64_t seed = 0) {
  require_flags(h, {GaugeFlag::Increasing, GaugeFlag::Concave, GaugeFlag::VanishesAtZero},
                "triangle_inequality_audit");
  auto rng = keyed_engine({seed, name_key("triangle")});
  TriangleAudit out;
  out.samples = samples;
  for (long i = 0; i < samples; ++i) {
    double s, t;
    if (i % 2 == 0) {
      s = uniform(rng, -1e6, 1e6);
      t = uniform(rng, -1e6, 1e6);
    } else {
      s = std::pow(10.0, uniform(rng, -6, 6)) * (uniform01(rng) < 0.5 ? -1 : 1);
      t = std::pow(10.0, uniform(rng, -6, 6)) * (uniform01(rng) < 0.5 ? -1 : 1);
    }
    const double margin = h(std::fabs(s)) + h(std::fabs(t)) - h(std::fabs(s + t));
    if (margin < out.worst_margin) {
      out.worst_margin = margin;
      out.worst_s = s;
      out.worst_t = t;
    }
  }
  return out;
}

/// 10^4-point log-spaced grid on [1e-6, 1e6] used by the flag audits.
inline std::vector<double> audit_grid(std::size_t count = 10000, double lo = 1e-6, double hi = 1e6) {
  std::vector<double> grid(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  return grid;
}

struct FlagAudit {
  bool nonnegative = true;
  bool vanishes_at_zero = true;
  bool increasing = true;
  bool concave = true;
  bool third_derivative_positive = true;
  double worst_concavity = 0;  // most negative midpoint slack seen
  double worst_third = 0;      // most negative third difference seen

  /// True when every flag the gauge declares passed.
  bool consistent_with(const GaugeFlags& f) const {
    return nonnegative && (!f.has(GaugeFlag::VanishesAtZero) || vanishes_at_zero) &&
           (!f.has(GaugeFlag::Increasing) || increasing) && (!f.has(GaugeFlag::Concave) || concave) &&
           (!f.has(GaugeFlag::ThirdDerivativePositive) || third_derivative_positive);
  }
};

/// Sampling audit of the analytic flags: monotonicity on the log grid,
/// midpoint concavity on 10^4 random pairs, and the sign of the forward
/// third difference on the log grid.
inline FlagAudit audit_flags(const OscillationGauge& h, std::uint64_t seed = 0) {
  FlagAudit out;
  const auto grid = audit_grid();
  out.vanishes_at_zero = std::fabs(h(0.0)) <= 1e-15;
  double prev = h(0.0);
  if (prev < 0) out.nonnegative = false;
  for (double t : grid) {
    const double v = h(t);
    if (!(v >= 0.0)) out.nonnegative = false;
    if (v < prev) out.increasing = false;
    prev = v;
  }
  auto rng = keyed_engine({seed, name_key("concavity")});
  for (int i = 0; i < 10000; ++i) {
    const double a = std::pow(10.0, uniform(rng, -6, 6));
    const double b = std::pow(10.0, uniform(rng, -6, 6));
    const double fa = h(a), fb = h(b), fm = h(0.5 * (a + b));
    const double slack = fm - 0.5 * (fa + fb);
    const double scale = 1e-12 * std::max({1.0, std::fabs(fa), std::fabs(fb)});
    out.worst_concavity = std::min(out.worst_concavity, slack);
    if (slack < -scale) out.concave = false;
  }
  for (double t : grid) {
    const double d = std::max(1e-3, 1e-2 * t);
    const double third = h(t + 3 * d) - 3 * h(t + 2 * d) + 3 * h(t + d) - h(t);
    out.worst_third = std::min(out.worst_third, third);
    if (third < -1e-9) out.third_derivative_positive = false;
  }
  return out;
}

struct DerivativeAudit {
  double worst_d1 = 0, worst_d2 = 0, worst_d3 = 0;  // worst relative mismatch
  bool passed(double tol = 1e-5) const { return worst_d1 <= tol && worst_d2 <= tol && worst_d3 <= tol; }
};

/// Compares supplied derivatives with centered differences of the next lower
/// order (step max(1e-6, 1e-6 t)) on a log-spaced sample of [1e-3, 1e3].
inline DerivativeAudit audit_derivatives(const OscillationGauge& h) {
  require(h.has_derivatives(), ErrorKind::Precondition, "gauge '" + h.name + "' has no derivatives");
  DerivativeAudit out;
  auto rel = [](double exact, double approx) {
    const double scale = std::max(std::fabs(exact), std::fabs(approx));
    if (scale < 1e-300) return 0.0;
    return std::fabs(exact - approx) / scale;
  };
  for (double t : audit_grid(200, 1e-3, 1e3)) {
    const double d = std::max(1e-6, 1e-6 * t);
    out.worst_d1 = std::max(out.worst_d1, rel(h.d1(t), (h(t + d) - h(t - d)) / (2 * d)));
    out.worst_d2 = std::max(out.worst_d2, rel(h.d2(t), (h.d1(t + d) - h.d1(t - d)) / (2 * d)));
    const double d3fd = (h.d2(t + d) - h.d2(t - d)) / (2 * d);
    // A derivative that is identically zero has a finite difference that is
    // pure rounding noise.
    if (!(h.d3(t) == 0.0 && std::fabs(d3fd) < 1e-9)) out.worst_d3 = std::max(out.worst_d3, rel(h.d3(t), d3fd));
  }
  return out;
}

}  // namespace bmo
