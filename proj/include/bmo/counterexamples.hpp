#pragma once

// Two constructions around the limit condition h(t) -> infinity: a gauge
// without it for which K_h still controls BMO with the bound sqrt(10 M), and a
// Haar series with bounded K^d but unbounded dyadic variance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bmo/dyadic.hpp"
#include "bmo/error.hpp"
#include "bmo/functionals.hpp"
#include "bmo/gauge.hpp"
#include "bmo/parallel.hpp"
#include "bmo/random.hpp"
#include "bmo/rising_sun.hpp"

namespace bmo {

/// h(t) = t^2 on [0, 5/4] and wherever the distance from t to the nearest
/// integer is >= 1/4; linear dips to h(k) = 0 at every integer k >= 2.
/// Not monotone and not tending to infinity, so no flags are declared.
inline OscillationGauge section6_gauge() {
  OscillationGauge g;
  g.name = "section6";
  g.eval = [](double t) {
    if (t <= 1.25) return t * t;
    const double j = std::nearbyint(t);
    const double d = t - j;
    if (std::fabs(d) >= 0.25) return t * t;
    // Linear from (j - 1/4, (j - 1/4)^2) down to (j, 0) and back up to (j + 1/4, (j + 1/4)^2).
    return d < 0.0 ? 4.0 * (-d) * (j - 0.25) * (j - 0.25) : 4.0 * d * (j + 0.25) * (j + 0.25);
  };
  return g;
}

struct Sqrt10MReport {
  double M = 0.0;
  double k_grid = 0.0;       // K_h over the grid, < M
  double norm = 0.0;         // grid BMO norm after endpoint refinement
  double margin = 0.0;       // sqrt(10 M) - norm
  // Intermediate quantities on the grid interval J where the grid norm is attained.
  Interval J;
  int sign = 1;              // +1: psi = phi - <phi>_J, -1: its negative
  double a_plus_measure = 0.0;
  std::vector<Interval> rising;
  double outside_mass = 0.0;  // M - (1/|J|) int_{J \ A} h(|psi|)
  double cover_mass = 0.0;    // M sum |L_k| - int_{A+} (psi - 1/2)^2
  double half_shift = 0.0;    // int_{A+} (psi - 1/2)^2 - (1/4) int_{A+} psi^2
  double uncovered = 0.0;     // -|A+ \ union L_k|
  double fractional = 0.25;   // 1/4 - sup over A+ of the distance from psi to the nearest integer
};

struct Sqrt10MOptions {
  int g = -1;  // grid exponent; default depth + 3 capped at the grid cap
  unsigned jobs = 1;
};

namespace detail {

inline bool differs_from_square(const OscillationGauge& h, double v) {
  const double a = std::fabs(v);
  return std::fabs(h(a) - a * a) > 1e-12 * std::max(1.0, a * a);
}

inline int default_counterexample_grid(const DyadicSimpleFunction& phi) {
  return std::min(grid_cap(1), phi.depth() + 3);
}

}  // namespace detail

/// sqrt(10 M) - ||phi||_BMO for a step function with K_h(phi) < M on the
/// grid, together with the intermediate quantities of the argument.
inline Sqrt10MReport verify_sqrt10M(const DyadicSimpleFunction& phi, double M, const OscillationGauge& h,
                                    const Sqrt10MOptions& opt = {}) {
  require(phi.dim() == 1, ErrorKind::DimensionMismatch, "the sqrt(10 M) check is one-dimensional");
  const int g = opt.g >= 0 ? opt.g : detail::default_counterexample_grid(phi);
  GridOptions grid;
  grid.jobs = opt.jobs;
  Sqrt10MReport out;
  out.M = M;
  out.k_grid = k_h_grid(phi, h, g, grid).value;
  require(out.k_grid < M, ErrorKind::Precondition, "K_h on the grid must be < M");
  const OscillationReport norm = bmo_grid(phi, g, grid);
  out.norm = norm.refined_value;
  out.margin = std::sqrt(10.0 * M) - out.norm;

  out.J = {norm.window->lo(0), norm.window->hi(0)};
  const double length = out.J.length();
  StepFunction1D psi = restrict(phi, out.J.a, out.J.b);
  const double mean = window_mean(phi, Box::interval(out.J.a, out.J.b));
  for (double& v : psi.values) v -= mean;

  auto measure_where = [&](auto&& pred) {
    return psi.integral(out.J.a, out.J.b, [&](double v) { return pred(v) ? 1.0 : 0.0; });
  };
  auto in_a = [&](double v) { return detail::differs_from_square(h, v); };
  const double outside =
      psi.integral(out.J.a, out.J.b, [&](double v) { return in_a(v) ? 0.0 : h(std::fabs(v)); });
  out.outside_mass = M - outside / length;

  // Work on the side that carries more of int_A psi^2.
  const double plus = psi.integral(out.J.a, out.J.b, [&](double v) { return in_a(v) && v > 1.0 ? v * v : 0.0; });
  const double minus = psi.integral(out.J.a, out.J.b, [&](double v) { return in_a(v) && v < -1.0 ? v * v : 0.0; });
  if (minus > plus) {
    out.sign = -1;
    for (double& v : psi.values) v = -v;
  }
  auto in_a_plus = [&](double v) { return v > 1.0 && in_a(v); };
  out.a_plus_measure = measure_where(in_a_plus);
  out.rising = rising_sun(psi, 0.5);
  double cover = 0.0;
  for (const auto& L : out.rising) cover += L.length();
  const double shifted_sq = psi.integral(out.J.a, out.J.b, [&](double v) { return in_a_plus(v) ? (v - 0.5) * (v - 0.5) : 0.0; });
  const double plain_sq = psi.integral(out.J.a, out.J.b, [&](double v) { return in_a_plus(v) ? v * v : 0.0; });
  out.cover_mass = M * cover - shifted_sq;
  out.half_shift = shifted_sq - 0.25 * plain_sq;

  double covered = 0.0;
  for (const auto& L : out.rising)
    covered += psi.integral(L.a, L.b, [&](double v) { return in_a_plus(v) ? 1.0 : 0.0; });
  out.uncovered = -std::max(0.0, out.a_plus_measure - covered);

  double worst = 0.0;
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    const double v = psi.values[i];
    if (psi.breaks[i + 1] > psi.breaks[i] && in_a_plus(v)) worst = std::max(worst, std::fabs(v - std::nearbyint(v)));
  }
  out.fractional = 0.25 - worst;
  return out;
}

/// A random step function of depth `depth`: a constant, a ramp and a few
/// scaled Haar atoms on random dyadic intervals.
inline DyadicSimpleFunction random_mixture(std::mt19937_64& rng, int depth, double amplitude) {
  const std::size_t N = std::size_t{1} << depth;
  std::vector<double> v(N, uniform(rng, -amplitude, amplitude));
  const double slope = uniform(rng, -amplitude, amplitude);
  for (std::size_t i = 0; i < N; ++i) v[i] += slope * ((static_cast<double>(i) + 0.5) / N - 0.5);
  const int atoms = uniform_int(rng, 1, 4);
  for (int a = 0; a < atoms && depth > 0; ++a) {
    const int level = uniform_int(rng, 0, depth - 1);
    const std::size_t width = N >> level;
    const std::size_t start = uniform_index(rng, std::size_t{1} << level) * width;
    const double c = uniform(rng, -amplitude, amplitude);
    for (std::size_t i = 0; i < width; ++i) v[start + i] += i < width / 2 ? -c : c;
  }
  return DyadicSimpleFunction(1, depth, std::move(v));
}

struct AnnealingResult {
  double best_ratio = 0.0;  // sup of ||phi||^2 / K_h seen
  DyadicSimpleFunction witness;
  long steps = 0;
};

/// ||phi||^2_BMO / K_h on the grid, 0 for constants.
inline double bmo_to_k_ratio(const DyadicSimpleFunction& phi, const OscillationGauge& h, int g) {
  const double norm = bmo_grid(phi, g).refined_value;
  if (norm == 0.0) return 0.0;
  const double k = k_h_grid(phi, h, g).refined_value;
  return k > 0.0 ? norm * norm / k : std::numeric_limits<double>::infinity();
}

/// Simulated annealing of the leaf values (in [-bound, bound]) to maximize
/// ||phi||^2 / K_h. A falsification attempt: the best ratio is only reported.
inline AnnealingResult adversarial_annealing(const OscillationGauge& h, int depth, int g, long steps, double bound,
                                             std::uint64_t seed) {
  require(depth >= 1 && depth <= 8, ErrorKind::Cap, "annealing depth must lie in [1, 8]");
  auto rng = keyed_engine({seed, name_key("annealing")});
  const std::size_t N = std::size_t{1} << depth;
  std::vector<double> v(N);
  for (double& x : v) x = uniform(rng, -bound, bound);
  AnnealingResult out;
  auto score = [&](const std::vector<double>& w) {
    return bmo_to_k_ratio(DyadicSimpleFunction(1, depth, w), h, g);
  };
  double current = score(v);
  out.best_ratio = current;
  out.witness = DyadicSimpleFunction(1, depth, v);
  const double t0 = 1.0, t1 = 1e-3;
  for (long s = 0; s < steps; ++s) {
    const double temperature = t0 * std::pow(t1 / t0, static_cast<double>(s) / std::max<long>(1, steps - 1));
    std::vector<double> w = v;
    const auto i = uniform_index(rng, N);
    const double spread = bound * (0.02 + 0.3 * temperature);
    w[i] = std::clamp(w[i] + spread * normal(rng), -bound, bound);
    const double candidate = score(w);
    const bool accept = candidate >= current ||
                        uniform01(rng) < std::exp((std::log(candidate + 1e-300) - std::log(current + 1e-300)) / temperature);
    if (accept) {
      v.swap(w);
      current = candidate;
      if (current > out.best_ratio) {
        out.best_ratio = current;
        out.witness = DyadicSimpleFunction(1, depth, v);
      }
    }
    ++out.steps;
  }
  return out;
}

struct HaarSeriesSpec {
  std::vector<double> thresholds;  // t_j
  std::vector<int> orders;         // n_j with 2^{n_j} <= t_j^2 <= 2^{n_j + 1}
  int term_count = 0;
  double M = 0.0;
  int depth = 0;
};

/// floor(log2 x) adjusted so that 2^n <= x <= 2^{n+1} holds in floating point.
inline int haar_order(double t) {
  const double sq = t * t;
  int n = static_cast<int>(std::floor(std::log2(sq)));
  while (std::ldexp(1.0, n) > sq) --n;
  while (std::ldexp(1.0, n + 1) < sq) ++n;
  return n;
}

/// Picks t_j as the first of 10^4 equally spaced points of the block
/// [2^k, 2^{k+1}) (k = 1, 2, ...) with h(t) < M, and returns the partial sum
/// of t_j h_{n_j} over the first J_max blocks that have one.
inline DyadicSimpleFunction haar_partial_sum(const HaarSeriesSpec& spec, int terms, int depth = -1);

inline std::pair<HaarSeriesSpec, DyadicSimpleFunction> haar_series_build(const OscillationGauge& h, double M,
                                                                         int J_max, double scan_horizon) {
  require(J_max >= 1, ErrorKind::OutOfRange, "need at least one term");
  HaarSeriesSpec spec;
  spec.M = M;
  constexpr int kPointsPerBlock = 10000;
  for (int k = 1; static_cast<int>(spec.thresholds.size()) < J_max && std::ldexp(1.0, k) < scan_horizon; ++k) {
    const double lo = std::ldexp(1.0, k);
    for (int i = 0; i < kPointsPerBlock; ++i) {
      const double t = lo + lo * i / kPointsPerBlock;
      if (t >= scan_horizon) break;
      if (h(t) < M) {
        spec.thresholds.push_back(t);
        spec.orders.push_back(haar_order(t));
        break;
      }
    }
  }
  require(static_cast<int>(spec.thresholds.size()) == J_max, ErrorKind::NotEnoughLowPoints,
          "found " + std::to_string(spec.thresholds.size()) + " points with h < M below the horizon, need " +
              std::to_string(J_max));
  spec.term_count = J_max;
  spec.depth = *std::max_element(spec.orders.begin(), spec.orders.end()) + 1;
  check_caps(1, spec.depth);
  DyadicSimpleFunction phi = haar_partial_sum(spec, J_max, spec.depth);
  return {std::move(spec), std::move(phi)};
}

/// Partial sum of the first `terms` atoms at the given depth; depth -1 picks
/// the coarsest depth that represents it, max n_j + 1 over those terms.
inline DyadicSimpleFunction haar_partial_sum(const HaarSeriesSpec& spec, int terms, int depth) {
  require(terms >= 0 && terms <= static_cast<int>(spec.orders.size()), ErrorKind::OutOfRange,
          "partial sum term count out of range");
  if (depth < 0) {
    depth = 0;
    for (int j = 0; j < terms; ++j) depth = std::max(depth, spec.orders[j] + 1);
  }
  check_caps(1, depth);
  std::vector<double> leaves(std::size_t{1} << depth, 0.0);
  for (int j = 0; j < terms; ++j) {
    const int k = spec.orders[j];
    require(depth >= k + 1, ErrorKind::DepthTooSmall, "partial sum depth too small for its atoms");
    // The atom of order k is -1 then +1 on the halves of (2^-k, 2^-k+1).
    const std::size_t begin = std::size_t{1} << (depth - k), half = begin / 2;
    for (std::size_t i = begin; i < begin + half; ++i) leaves[i] -= spec.thresholds[j];
    for (std::size_t i = begin + half; i < 2 * begin; ++i) leaves[i] += spec.thresholds[j];
  }
  return DyadicSimpleFunction(1, depth, std::move(leaves));
}

struct VarianceRow {
  int terms = 0;
  double variance = 0.0;
  double k_d = 0.0;
  double l1 = 0.0;        // int |phi_J|
  double l1_bound = 0.0;  // sum_{j <= J} 2^{(n_j + 1)/2 - n_j}
};

struct HaarAudit {
  double k_d = 0.0;
  double bound = 0.0;                 // max(h(0), M)
  long intervals = 0;
  long nonconstant = 0;
  double worst_mean = 0.0;            // max |<phi>_J| over non-constant J
  long value_set_violations = 0;      // leaves with |phi| outside {0} U {t_j}
  std::vector<VarianceRow> table;
};

/// Exhaustive audit over all dyadic intervals of the series' depth.
inline HaarAudit haar_series_audit(const HaarSeriesSpec& spec, const DyadicSimpleFunction& phi,
                                   const OscillationGauge& h, unsigned jobs = 1) {
  HaarAudit out;
  out.bound = std::max(h(0.0), spec.M);
  const int m = phi.depth();
  // Per-interval min and max, bottom-up.
  std::vector<double> lo(phi.leaves().begin(), phi.leaves().end()), hi = lo;
  const MomentPyramid pyramid(phi);
  for (int k = m; k >= 0; --k) {
    if (k < m) {
      std::vector<double> nlo(lo.size() / 2), nhi(hi.size() / 2);
      for (std::size_t i = 0; i < nlo.size(); ++i) {
        nlo[i] = std::min(lo[2 * i], lo[2 * i + 1]);
        nhi[i] = std::max(hi[2 * i], hi[2 * i + 1]);
      }
      lo.swap(nlo);
      hi.swap(nhi);
    }
    for (std::size_t i = 0; i < lo.size(); ++i) {
      ++out.intervals;
      if (lo[i] < hi[i]) {
        ++out.nonconstant;
        out.worst_mean = std::max(out.worst_mean, std::fabs(pyramid.mean(k, i)));
      }
    }
  }
  for (double v : phi.leaves()) {
    const double a = std::fabs(v);
    if (a == 0.0) continue;
    if (std::find(spec.thresholds.begin(), spec.thresholds.end(), a) == spec.thresholds.end()) ++out.value_set_violations;
  }
  out.k_d = k_h_dyadic(phi, h, false, jobs).value;

  double l1_bound = 0.0;
  for (int J = 1; J <= spec.term_count; ++J) {
    // K^d does not depend on the mesh a step function is written at.
    const DyadicSimpleFunction partial = J == spec.term_count ? phi : haar_partial_sum(spec, J);
    const DyadicCube Q = DyadicCube::unit(1);
    VarianceRow row;
    row.terms = J;
    const double mean = average(partial, Q);
    row.variance = second_moment(partial, Q) - mean * mean;
    row.k_d = J == spec.term_count ? out.k_d : k_h_dyadic(partial, h, false, jobs).value;
    row.l1 = average(partial.map([](double v) { return std::fabs(v); }), Q);
    const int nj = spec.orders[J - 1];
    l1_bound += std::pow(2.0, (nj + 1) / 2.0 - nj);
    row.l1_bound = l1_bound;
    out.table.push_back(row);
  }
  return out;
}

}  // namespace bmo
