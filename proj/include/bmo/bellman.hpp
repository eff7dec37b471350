#pragma once

// The parabolic strip Omega_t, the locally convex minorant G_t of the Bellman
// function and the numerical checks built around it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <vector>

#include "bmo/dyadic.hpp"
#include "bmo/error.hpp"
#include "bmo/functionals.hpp"
#include "bmo/gauge.hpp"
#include "bmo/parallel.hpp"
#include "bmo/quadrature.hpp"
#include "bmo/random.hpp"

namespace bmo {

struct BellmanPoint {
  double x1 = 0.0;
  double x2 = 0.0;
};

inline double omega_tolerance(double x2) { return 1e-12 * std::max(1.0, std::fabs(x2)); }

/// x1^2 <= x2 <= x1^2 + t^2, each side with slack 1e-12 max(1, |x2|).
inline bool omega_contains(double x1, double x2, double t) {
  const double tol = omega_tolerance(x2);
  const double floor = x1 * x1;
  return x2 >= floor - tol && x2 <= floor + t * t + tol;
}

/// Solution of t m'(u) + m(u) = h'(u), m(2t) = h(2t) / 2t on [2t, inf).
/// Values at nodes 2t + i t/8 are cached and extended on demand; between
/// nodes the integrating-factor formula is evaluated by adaptive quadrature.
/// Copies share the cache, which is safe for concurrent readers.
class SlopeFunction {
 public:
  SlopeFunction(OscillationGauge h, double t, double tolerance = 1e-9) : state_(std::make_shared<State>()) {
    require(t > 0.0, ErrorKind::Domain, "slope function needs t > 0");
    state_->h = std::move(h);
    state_->t = t;
    state_->tolerance = tolerance;
    state_->spacing = t / 8.0;
    state_->finite_differences = !state_->h.d1;
    state_->nodes.push_back(state_->h(2.0 * t) / (2.0 * t));
  }

  double t() const { return state_->t; }
  double tolerance() const { return state_->tolerance; }
  const OscillationGauge& gauge() const { return state_->h; }
  /// True when h carries no derivative and h' comes from centered differences.
  bool used_finite_differences() const { return state_->finite_differences; }

  double h_prime(double s) const {
    const auto& h = state_->h;
    if (h.d1) return h.d1(s);
    const double step = std::max(1e-6, 1e-6 * s);
    return (h(s + step) - h(s - step)) / (2.0 * step);
  }

  double operator()(double u) const {
    const double t = state_->t, start = 2.0 * t;
    require(u >= start * (1.0 - 1e-12), ErrorKind::Domain, "slope function is only evaluated at u >= 2t");
    u = std::max(u, start);
    const auto i = static_cast<std::size_t>(std::floor((u - start) / state_->spacing));
    const double node_u = start + static_cast<double>(i) * state_->spacing;
    const double node_m = node(i);
    if (u == node_u) return node_m;
    return std::exp(-(u - node_u) / t) * node_m + forcing(node_u, u);
  }

 private:
  struct State {
    OscillationGauge h;
    double t = 1.0, tolerance = 1e-9, spacing = 0.125;
    bool finite_differences = false;
    mutable std::shared_mutex mutex;
    std::vector<double> nodes;
  };

  // (1/t) int_a^b e^{(s-b)/t} h'(s) ds
  double forcing(double a, double b) const {
    const double t = state_->t;
    auto integrand = [&](double s) { return std::exp((s - b) / t) * h_prime(s); };
    return integrate(integrand, a, b, state_->tolerance * t) / t;
  }

  double node(std::size_t i) const {
    {
      std::shared_lock lock(state_->mutex);
      if (i < state_->nodes.size()) return state_->nodes[i];
    }
    require(i < (std::size_t{1} << 22), ErrorKind::OutOfRange, "slope function evaluated too far from 2t");
    std::unique_lock lock(state_->mutex);
    auto& nodes = state_->nodes;
    const double t = state_->t, start = 2.0 * t, decay = std::exp(-state_->spacing / t);
    while (nodes.size() <= i) {
      const std::size_t j = nodes.size() - 1;
      const double a = start + static_cast<double>(j) * state_->spacing;
      const double b = start + static_cast<double>(j + 1) * state_->spacing;
      nodes.push_back(decay * nodes[j] + forcing(a, b));
    }
    return nodes[i];
  }

  std::shared_ptr<State> state_;
};

/// G_t: three branches on x1 >= 0, extended evenly to x1 < 0.
class SubSolution {
 public:
  SubSolution(OscillationGauge h, double t, double tolerance = 1e-9)
      : h_(h), t_(t), h2t_(h(2.0 * t)), slope_(std::move(h), t, tolerance) {}

  double t() const { return t_; }
  const OscillationGauge& gauge() const { return h_; }
  const SlopeFunction& slope() const { return slope_; }
  bool finite_difference_warning() const { return slope_.used_finite_differences(); }

  /// 1: x2 < 2t x1; 2: x1 <= t, x2 >= 2t x1; 3: x1 >= t, x2 >= 2t x1 (x1 reflected).
  int branch(double x1, double x2) const {
    x1 = std::fabs(x1);
    if (x1 == 0.0) return 2;
    if (x2 < 2.0 * t_ * x1) return 1;
    return x1 <= t_ ? 2 : 3;
  }

  /// The formula of branch b at (|x1|, x2), without a domain check.
  double branch_value(int b, double x1, double x2) const {
    x1 = std::fabs(x1);
    switch (b) {
      case 1:
        if (x1 < 1e-14) return 0.0;
        return (x1 * x1 / x2) * h_(x2 / x1);
      case 2:
        return x2 / (4.0 * t_ * t_) * h2t_;
      case 3: {
        const double u = std::max(2.0 * t_, x1 + t_ - std::sqrt(std::max(0.0, t_ * t_ - x2 + x1 * x1)));
        return h_(u) + (x1 - u) * slope_(u);
      }
    }
    fail(ErrorKind::OutOfRange, "branch must be 1, 2 or 3");
  }

  double operator()(double x1, double x2) const {
    require(omega_contains(x1, x2, t_), ErrorKind::Domain, "point outside Omega_t");
    x1 = std::fabs(x1);
    x2 = std::clamp(x2, x1 * x1, x1 * x1 + t_ * t_);
    if (x2 == 0.0) return 0.0;
    return branch_value(branch(x1, x2), x1, x2);
  }
  double operator()(const BellmanPoint& x) const { return (*this)(x.x1, x.x2); }

 private:
  OscillationGauge h_;
  double t_;
  double h2t_;
  SlopeFunction slope_;
};

/// One-off evaluation of G_t; build a SubSolution for repeated calls.
inline double g_eval(double x1, double x2, double t, const OscillationGauge& h) {
  require(omega_contains(x1, x2, t), ErrorKind::Domain, "point outside Omega_t");
  return SubSolution(h, t)(x1, x2);
}

/// m(u) for u >= 2t.
inline double slope_m(double u, const SlopeFunction& m) { return m(u); }

/// 2^{-(n+2)} h(2^{(n+2)/2} t).
inline double lower_bound_A(double t, const OscillationGauge& h, int n) {
  require(t >= 0.0, ErrorKind::Domain, "t must be >= 0");
  check_dimension(n);
  return std::ldexp(h(std::pow(2.0, (n + 2) / 2.0) * t), -(n + 2));
}

struct SeamReport {
  double lower_seam = 0.0;   // branch 1 vs 2 on x2 = 2t x1, 0 < x1 <= t
  double upper_seam = 0.0;   // branch 1 vs 3 on x2 = 2t x1, t <= x1 <= 2t
  double reflection = 0.0;   // G(x1, x2) vs G(-x1, x2)
  double worst() const { return std::max({lower_seam, upper_seam, reflection}); }
};

inline SeamReport seam_continuity_check(const SubSolution& G, int samples) {
  require(samples >= 2, ErrorKind::OutOfRange, "need at least two seam samples");
  const double t = G.t();
  SeamReport out;
  for (int i = 0; i < samples; ++i) {
    const double a = t * (i + 1) / samples;
    out.lower_seam = std::max(out.lower_seam, std::fabs(G.branch_value(1, a, 2 * t * a) - G.branch_value(2, a, 2 * t * a)));
    const double b = t + t * i / (samples - 1);
    out.upper_seam = std::max(out.upper_seam, std::fabs(G.branch_value(1, b, 2 * t * b) - G.branch_value(3, b, 2 * t * b)));
    const double c = 4.0 * t * (i + 1) / samples - 2.0 * t;
    const double x2 = c * c + t * t * (i % 7) / 6.0;
    out.reflection = std::max(out.reflection, std::fabs(G(c, x2) - G(-c, x2)));
  }
  return out;
}

inline SeamReport seam_continuity_check(double t, const OscillationGauge& h, int samples) {
  return seam_continuity_check(SubSolution(h, t), samples);
}

/// Every one of `points` evenly spaced points of [U, V], endpoints included, lies in Omega_t.
inline bool segment_in_omega(const BellmanPoint& U, const BellmanPoint& V, double t, int points = 1024) {
  for (int i = 0; i <= points + 1; ++i) {
    const double s = static_cast<double>(i) / (points + 1);
    if (!omega_contains(U.x1 + s * (V.x1 - U.x1), U.x2 + s * (V.x2 - U.x2), t)) return false;
  }
  return true;
}

/// U, V above the parabola with midpoint in Omega_t: is [U, V] inside Omega_{sqrt(2) t}?
inline bool segment_domain_check(const BellmanPoint& U, const BellmanPoint& V, double t) {
  require(U.x2 >= U.x1 * U.x1 - omega_tolerance(U.x2) && V.x2 >= V.x1 * V.x1 - omega_tolerance(V.x2),
          ErrorKind::Precondition, "segment endpoints must lie above the parabola x2 = x1^2");
  require(omega_contains(0.5 * (U.x1 + V.x1), 0.5 * (U.x2 + V.x2), t), ErrorKind::Precondition,
          "segment midpoint must lie in Omega_t");
  return segment_in_omega(U, V, std::sqrt(2.0) * t);
}

/// A pair above the parabola with midpoint M in Omega_t. Every such pair
/// arises for some d1, w: d1^2 <= M2 - M1^2 and d2 = 2 M1 d1 + w (M2 - M1^2 - d1^2).
inline std::pair<BellmanPoint, BellmanPoint> sample_admissible_pair(std::mt19937_64& rng, double t, double reach) {
  const double m1 = uniform(rng, -reach, reach);
  const double m2 = m1 * m1 + uniform01(rng) * t * t;
  const double r = std::sqrt(m2 - m1 * m1);
  const double d1 = r * uniform(rng, -1.0, 1.0);
  const double w = uniform(rng, -1.0, 1.0);
  const double d2 = 2.0 * m1 * d1 + w * (m2 - m1 * m1 - d1 * d1);
  return {{m1 - d1, m2 - d2}, {m1 + d1, m2 + d2}};
}

struct DomainFuzzReport {
  long trials = 0;
  long failures = 0;
  long precondition_rejects = 0;
};

/// Random admissible (U, V, t) triples through segment_domain_check.
inline DomainFuzzReport segment_domain_fuzz(long trials, std::uint64_t seed, unsigned jobs = 1) {
  std::vector<char> ok(static_cast<std::size_t>(trials), 1), rejected(static_cast<std::size_t>(trials), 0);
  parallel_for(static_cast<std::size_t>(trials), jobs, [&](std::size_t i) {
    auto rng = keyed_engine({seed, name_key("segment-domain"), i});
    const double t = std::exp(uniform(rng, std::log(0.1), std::log(10.0)));
    const auto [U, V] = sample_admissible_pair(rng, t, 5.0 * t);
    try {
      ok[i] = segment_domain_check(U, V, t);
    } catch (const Error&) {
      rejected[i] = 1;
    }
  });
  DomainFuzzReport out;
  out.trials = trials;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    out.failures += ok[i] ? 0 : 1;
    out.precondition_rejects += rejected[i];
  }
  return out;
}

struct ConvexityReport {
  double worst_margin = std::numeric_limits<double>::infinity();
  BellmanPoint worst_u, worst_v;
  long trials = 0;
};

/// Draws a segment inside Omega_t around x1 in [-4t, 4t]: generic directions
/// at several length scales, vertical segments, and chords of lines tangent
/// to the upper boundary.
inline std::pair<BellmanPoint, BellmanPoint> sample_convex_segment(std::mt19937_64& rng, double t, int kind) {
  for (int attempt = 0;; ++attempt) {
    const double shrink = std::ldexp(1.0, -attempt / 8);
    const double scale = t * std::pow(10.0, -uniform(rng, 0.0, 3.0)) * shrink;
    const double m1 = uniform(rng, -4.0 * t, 4.0 * t);
    double s = uniform01(rng);
    if (kind == 3) s = s * s * s * s;  // hug the lower boundary
    BellmanPoint mid{m1, m1 * m1 + s * t * t};
    double d1 = 0.0, d2 = 0.0;
    switch (kind) {
      case 1:
        d2 = 0.5 * scale * t;
        break;
      case 2: {
        // Tangent to x2 = x1^2 + t^2 at x1 = m1; below the curve, above the
        // parabola while |x1 - m1| <= t.
        mid = {m1, m1 * m1 + t * t};
        const double half = std::min(scale, t) * uniform01(rng);
        d1 = half;
        d2 = 2.0 * m1 * half;
        break;
      }
      default: {
        const double theta = uniform(rng, 0.0, 6.283185307179586);
        d1 = 0.5 * scale * std::cos(theta);
        d2 = 0.5 * scale * std::sin(theta) * (2.0 * std::fabs(m1) + t);
        break;
      }
    }
    const BellmanPoint U{mid.x1 - d1, mid.x2 - d2}, V{mid.x1 + d1, mid.x2 + d2};
    if (segment_in_omega(U, V, t)) return {U, V};
    require(attempt < 4096, ErrorKind::OutOfRange, "could not sample a segment inside Omega_t");
  }
}

/// Worst (G(U) + G(V)) / 2 - G((U + V) / 2) over random segments inside Omega_t.
inline ConvexityReport local_convexity_fuzz(const SubSolution& G, long trials, std::uint64_t seed, unsigned jobs = 1) {
  const double t = G.t();
  std::vector<double> margins(static_cast<std::size_t>(trials));
  std::vector<std::pair<BellmanPoint, BellmanPoint>> segments(static_cast<std::size_t>(trials));
  parallel_for(static_cast<std::size_t>(trials), jobs, [&](std::size_t i) {
    auto rng = keyed_engine({seed, name_key("convexity"), i});
    const auto [U, V] = sample_convex_segment(rng, t, static_cast<int>(i % 4));
    const double mid = G(0.5 * (U.x1 + V.x1), 0.5 * (U.x2 + V.x2));
    margins[i] = 0.5 * (G(U) + G(V)) - mid;
    segments[i] = {U, V};
  });
  ConvexityReport out;
  out.trials = trials;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    if (margins[i] < out.worst_margin) {
      out.worst_margin = margins[i];
      out.worst_u = segments[i].first;
      out.worst_v = segments[i].second;
    }
  }
  return out;
}

inline ConvexityReport local_convexity_fuzz(double t, const OscillationGauge& h, long trials, std::uint64_t seed,
                                            unsigned jobs = 1) {
  return local_convexity_fuzz(SubSolution(h, t), trials, seed, jobs);
}

/// Worst |G_t(x1, x1^2) - h(|x1|)| over `points` values of x1 in [-10t, 10t].
inline double boundary_condition_check(const SubSolution& G, int points) {
  const double t = G.t();
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x1 = -10.0 * t + 20.0 * t * (i + 0.5) / points;
    worst = std::max(worst, std::fabs(G(x1, x1 * x1) - G.gauge()(std::fabs(x1))));
  }
  return worst;
}

/// Worst |t m'(u) + m(u) - h'(u)| over `checkpoints` values of u in [2t, 20t],
/// with m' from a five-point difference of the computed m.
inline double ode_residual_check(const SlopeFunction& m, int checkpoints) {
  const double t = m.t();
  const double step = 1e-3 * t;
  double worst = 0.0;
  for (int i = 0; i < checkpoints; ++i) {
    const double u = 2.0 * t + 2.0 * step + (18.0 * t - 4.0 * step) * i / std::max(1, checkpoints - 1);
    const double derivative = (-m(u + 2 * step) + 8 * m(u + step) - 8 * m(u - step) + m(u - 2 * step)) / (12 * step);
    worst = std::max(worst, std::fabs(t * derivative + m(u) - m.h_prime(u)));
  }
  return worst;
}

/// Sum_{J in D_k} 2^{-nk} G(<phi>_J, <phi^2>_J) - G(<phi>_Q, <phi^2>_Q) with
/// G = G_{2^{n/2} t}.
inline double bellman_induction_check(const DyadicSimpleFunction& phi, double t, const OscillationGauge& h, int k) {
  require(k >= 0 && k <= phi.depth(), ErrorKind::DepthMismatch, "induction depth must lie in [0, depth]");
  const double norm = bmo_dyadic(phi).value;
  require(norm <= t * (1.0 + 1e-12), ErrorKind::NormExceedsT, "||phi||_BMO^d exceeds t");
  const int n = phi.dim();
  const SubSolution G(h, std::pow(2.0, n / 2.0) * t);
  const MomentPyramid pyramid(phi);
  auto at = [&](int level, std::size_t flat) {
    const double x1 = pyramid.mean(level, flat);
    const double x2 = std::max(pyramid.square(level, flat), x1 * x1);
    return G(x1, x2);
  };
  std::vector<double> terms(pyramid.count(k));
  for (std::size_t flat = 0; flat < terms.size(); ++flat) terms[flat] = at(k, flat);
  const double rhs = std::ldexp(detail::pairwise_sum(terms), -n * k);
  return rhs - at(0, 0);
}

}  // namespace bmo
