#pragma once

// Rising-sun decomposition of a one-dimensional step function: disjoint
// intervals on which the mean equals lambda, with phi <= lambda off their union.

#include <algorithm>
#include <cmath>
#include <vector>

#include "bmo/dyadic.hpp"
#include "bmo/error.hpp"

namespace bmo {

struct Interval {
  double a = 0.0, b = 0.0;
  double length() const { return b - a; }
};

/// values[i] on [breaks[i], breaks[i+1]).
struct StepFunction1D {
  std::vector<double> breaks;
  std::vector<double> values;

  double lo() const { return breaks.front(); }
  double hi() const { return breaks.back(); }

  /// Integral of g(value) over [a, b].
  template <class Fn>
  double integral(double a, double b, Fn&& g) const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double lo = std::max(a, breaks[i]), hi = std::min(b, breaks[i + 1]);
      if (hi > lo) s += (hi - lo) * g(values[i]);
    }
    return s;
  }
  double integral(double a, double b) const {
    return integral(a, b, [](double v) { return v; });
  }
  double mean(double a, double b) const { return integral(a, b) / (b - a); }
};

/// phi restricted to [a, b] as a step function with breaks at leaf boundaries.
inline StepFunction1D restrict(const DyadicSimpleFunction& phi, double a, double b) {
  require(phi.dim() == 1, ErrorKind::DimensionMismatch, "restrict needs n = 1");
  require(0.0 <= a && a < b && b <= 1.0, ErrorKind::Domain, "restrict needs 0 <= a < b <= 1");
  StepFunction1D f;
  const double count = std::ldexp(1.0, phi.depth());
  auto j = static_cast<std::size_t>(std::min(count - 1.0, std::floor(a * count)));
  f.breaks.push_back(a);
  while (true) {
    const double right = std::min(b, static_cast<double>(j + 1) / count);
    if (right > f.breaks.back()) {
      f.values.push_back(phi.leaf(j));
      f.breaks.push_back(right);
    }
    if (right >= b || j + 1 >= phi.size()) break;
    ++j;
  }
  f.breaks.back() = b;
  return f;
}

/// Disjoint intervals L_k in [lo, hi] with mean(L_k) = lambda and f <= lambda
/// off their union, read off the running minimum of F(x) = int_lo^x (f - lambda).
/// Requires mean(f) <= lambda.
inline std::vector<Interval> rising_sun(const StepFunction1D& f, double lambda) {
  require(f.values.size() + 1 == f.breaks.size() && !f.values.empty(), ErrorKind::Domain,
          "malformed step function");
  const double mean = f.mean(f.lo(), f.hi());
  require(mean <= lambda + 1e-12 * std::max(1.0, std::fabs(lambda)), ErrorKind::Precondition,
          "rising sun needs the mean over the whole interval to be <= lambda");

  const std::size_t pieces = f.values.size();
  std::vector<double> F(pieces + 1, 0.0);
  for (std::size_t i = 0; i < pieces; ++i) F[i + 1] = F[i] + (f.values[i] - lambda) * (f.breaks[i + 1] - f.breaks[i]);

  std::vector<Interval> out;
  double run_min = 0.0;
  bool open = false;
  double start = f.lo();
  for (std::size_t i = 0; i < pieces; ++i) {
    const double slope = f.values[i] - lambda;
    if (!open) {
      // F sits at its running minimum at the left end of this piece.
      if (slope > 0.0) {
        open = true;
        start = f.breaks[i];
        run_min = F[i];
      } else {
        run_min = F[i + 1];
      }
      continue;
    }
    if (slope < 0.0 && F[i + 1] <= run_min) {
      // F returns to the level it left: the component closes inside this piece.
      double end = f.breaks[i] + (run_min - F[i]) / slope;
      end = std::clamp(end, f.breaks[i], f.breaks[i + 1]);
      out.push_back({start, end});
      open = false;
      run_min = F[i + 1];
    }
  }
  if (open) {
    // The last component never came back down. Replace it and anything
    // after the first point where F reaches F(hi) with one interval. F(lo) = 0
    // >= F(hi), so that point exists; the slack absorbs rounding in F.
    double scale = 0.0;
    for (std::size_t i = 0; i < pieces; ++i) scale += std::fabs(f.values[i] - lambda) * (f.breaks[i + 1] - f.breaks[i]);
    const double level = F[pieces], slack = 1e-13 * scale;
    double cut = f.lo();
    if (F[0] > level + slack) {
      for (std::size_t i = 0; i < pieces; ++i) {
        if (F[i + 1] <= level + slack) {
          const double slope = f.values[i] - lambda;
          cut = slope < 0.0 ? std::clamp(f.breaks[i] + (level - F[i]) / slope, f.breaks[i], f.breaks[i + 1]) : f.breaks[i + 1];
          break;
        }
      }
    }
    while (!out.empty() && out.back().a >= cut) out.pop_back();
    if (!out.empty()) cut = std::max(cut, out.back().b);
    out.push_back({cut, f.hi()});
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const Interval& L) { return L.b <= L.a; }), out.end());
  return out;
}

inline std::vector<Interval> rising_sun(const DyadicSimpleFunction& phi, double lambda) {
  return rising_sun(restrict(phi, 0.0, 1.0), lambda);
}

}  // namespace bmo
