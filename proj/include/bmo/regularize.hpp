#pragma once

// Converts a gauge f >= 3 into the series sum_{m>=3} (1 - exp(-t / t_m)),
// a smooth gauge below f that is increasing, concave and has a positive
// third derivative. Thresholds t_m come from a dense scan of f.

#include <cmath>
#include <limits>
#include <vector>

#include "bmo/error.hpp"
#include "bmo/gauge.hpp"
#include "bmo/parallel.hpp"

namespace bmo {

struct RegularizerOptions {
  std::size_t scan_points = 100000;
  double scan_decades = 8.0;  // geometric grid covers [horizon * 10^-decades, horizon]
  int bisection_steps = 60;
  unsigned jobs = 1;
};

class RegularizedGauge {
 public:
  RegularizedGauge() = default;

  /// t_m for m = 0..term_count().
  double threshold(int m) const { return thresholds_.at(static_cast<std::size_t>(m)); }
  /// Raw scan result sup{t <= horizon : f(t) < m}, before the doubling rule.
  double scanned_threshold(int m) const { return scanned_.at(static_cast<std::size_t>(m)); }
  /// True when f stays >= m on the tail of the scan, so the threshold was located.
  bool bracketed(int m) const { return bracketed_.at(static_cast<std::size_t>(m)); }
  int term_count() const { return term_count_; }
  double tail_bound() const { return tail_bound_; }
  double horizon() const { return horizon_; }
  const OscillationGauge& base() const { return base_; }
  const std::vector<double>& scan_grid() const { return grid_; }
  const std::vector<double>& scan_values() const { return values_; }

  double operator()(double t) const {
    double s = 0;
    for (int m = 3; m <= term_count_; ++m) s += -std::expm1(-t / thresholds_[m]);
    return s;
  }
  double d1(double t) const { return term_sum(t, 1); }
  double d2(double t) const { return term_sum(t, 2); }
  double d3(double t) const { return term_sum(t, 3); }

  /// The partial sum as a gauge with closed-form derivatives.
  OscillationGauge as_gauge() const {
    OscillationGauge g;
    g.name = "regularized(" + base_.name + ")";
    auto self = std::make_shared<const RegularizedGauge>(*this);
    g.eval = [self](double t) { return (*self)(t); };
    g.d1 = [self](double t) { return self->d1(t); };
    g.d2 = [self](double t) { return self->d2(t); };
    g.d3 = [self](double t) { return self->d3(t); };
    g.flags = {GaugeFlag::VanishesAtZero, GaugeFlag::Increasing, GaugeFlag::Concave,
               GaugeFlag::ThirdDerivativePositive, GaugeFlag::Continuous};
    return g;
  }

 private:
  friend RegularizedGauge regularize(const OscillationGauge&, double, double, const RegularizerOptions&);

  // Each term 1 - e^{-t/t_m} has j-th derivative (-1)^{j+1} e^{-t/t_m} / t_m^j.
  double term_sum(double t, int order) const {
    double s = 0;
    for (int m = 3; m <= term_count_; ++m) {
      const double tm = thresholds_[m];
      s += std::exp(-t / tm) / std::pow(tm, order);
    }
    return order % 2 == 1 ? s : -s;
  }

  OscillationGauge base_;
  double horizon_ = 0;
  int term_count_ = 0;
  double tail_bound_ = 0;
  std::vector<double> thresholds_, scanned_;
  std::vector<bool> bracketed_;
  std::vector<double> grid_, values_;
};

/// Builds the regularized gauge for f on [0, horizon]. The term count M is
/// the smallest M >= 3 with horizon / t_M <= eps, which bounds the dropped
/// tail sum_{m>M} t / t_m for every t <= horizon.
inline RegularizedGauge regularize(const OscillationGauge& f, double horizon, double eps,
                                   const RegularizerOptions& opt = {}) {
  require(horizon >= 8.0, ErrorKind::HorizonTooSmall,
          "horizon must reach t_3 >= 8 for the scan to constrain any term");
  require(eps > 0.0 && eps < 1.0, ErrorKind::OutOfRange, "eps must lie in (0, 1)");
  require(opt.scan_points >= 2, ErrorKind::OutOfRange, "scan needs at least two points");

  RegularizedGauge out;
  out.base_ = f;
  out.horizon_ = horizon;

  // t = 0 followed by a geometric grid ending exactly at the horizon.
  const std::size_t count = opt.scan_points;
  out.grid_.resize(count + 1);
  out.grid_[0] = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = static_cast<double>(count - 1 - i) / static_cast<double>(count - 1);
    out.grid_[i + 1] = horizon * std::pow(10.0, -opt.scan_decades * frac);
  }
  out.grid_.back() = horizon;
  out.values_.resize(out.grid_.size());
  parallel_for(out.grid_.size(), opt.jobs, [&](std::size_t i) { out.values_[i] = f(out.grid_[i]); });
  for (std::size_t i = 0; i < out.values_.size(); ++i) {
    require(out.values_[i] >= 3.0, ErrorKind::Precondition,
            "f must be >= 3 on [0, horizon]; apply the +3 shift first (f(" + std::to_string(out.grid_[i]) +
                ") = " + std::to_string(out.values_[i]) + ")");
  }

  auto locate = [&](int m, bool& bracketed) {
    // Last grid point where f < m.
    std::size_t last = out.grid_.size();
    for (std::size_t i = out.grid_.size(); i-- > 0;) {
      if (out.values_[i] < m) {
        last = i;
        break;
      }
    }
    if (last == out.grid_.size()) {
      bracketed = true;
      return 0.0;
    }
    if (last + 1 == out.grid_.size()) {
      // f < m at the horizon itself: the true threshold lies beyond it.
      bracketed = false;
      return std::nextafter(horizon, std::numeric_limits<double>::infinity());
    }
    bracketed = true;
    double lo = out.grid_[last], hi = out.grid_[last + 1];
    for (int s = 0; s < opt.bisection_steps; ++s) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (f(mid) < m) lo = mid;
      else hi = mid;
    }
    return hi;
  };

  out.thresholds_.push_back(1.0);
  out.scanned_.push_back(0.0);
  out.bracketed_.push_back(true);
  for (int m = 1;; ++m) {
    bool bracketed = true;
    const double thr = locate(m, bracketed);
    out.scanned_.push_back(thr);
    out.bracketed_.push_back(bracketed);
    out.thresholds_.push_back(std::max(2.0 * out.thresholds_[m - 1], thr));
    if (m >= 3 && horizon / out.thresholds_[m] <= eps) {
      out.term_count_ = m;
      out.tail_bound_ = horizon / out.thresholds_[m];
      break;
    }
    require(m < 1100, ErrorKind::OutOfRange, "term count diverged");
  }
  return out;
}

}  // namespace bmo
