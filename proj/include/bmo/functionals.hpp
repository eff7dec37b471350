#pragma once

// Oscillation functionals: BMO^d and K^d over dyadic subcubes, and grid lower
// approximations of the continuous suprema over axis-aligned subcubes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <tuple>
#include <vector>

#include "bmo/dyadic.hpp"
#include "bmo/error.hpp"
#include "bmo/gauge.hpp"
#include "bmo/parallel.hpp"

namespace bmo {

/// Finest endpoint grid 2^-g accepted by the grid scans.
inline int grid_cap(int n) {
  switch (n) {
    case 1: return 12;
    case 2: return 6;
    case 3: return 4;
  }
  fail(ErrorKind::DimensionMismatch, "dimension must be 1, 2 or 3");
}

/// A cube with corners on the 2^-g grid: lower corner and side, in grid units.
struct GridWindow {
  int n = 1;
  int g = 0;
  Index3 lower{};
  std::uint32_t size = 1;

  double lo(int axis) const { return std::ldexp(static_cast<double>(lower[axis]), -g); }
  double hi(int axis) const { return std::ldexp(static_cast<double>(lower[axis] + size), -g); }
  double side() const { return std::ldexp(static_cast<double>(size), -g); }
};

/// An axis-aligned box inside [0,1]^n with arbitrary real corners.
struct Box {
  int n = 1;
  std::array<double, 3> lo{}, hi{};

  static Box interval(double a, double b) {
    Box box;
    box.lo[0] = a;
    box.hi[0] = b;
    return box;
  }
  static Box of(const GridWindow& w) {
    Box box;
    box.n = w.n;
    for (int a = 0; a < w.n; ++a) {
      box.lo[a] = w.lo(a);
      box.hi[a] = w.hi(a);
    }
    return box;
  }
  static Box of(const DyadicCube& J) {
    Box box;
    box.n = J.n;
    for (int a = 0; a < J.n; ++a) {
      box.lo[a] = J.lower(a);
      box.hi[a] = J.lower(a) + J.side();
    }
    return box;
  }
  double volume() const {
    double v = 1.0;
    for (int a = 0; a < n; ++a) v *= hi[a] - lo[a];
    return v;
  }
};

struct CubeRow {
  DyadicCube cube;
  double mean = 0.0;
  double variance = 0.0;
  double k_h_local = std::numeric_limits<double>::quiet_NaN();  // NaN when not computed
};

/// A supremum together with the cube or window attaining it. Ties go to the
/// largest cube (smallest depth), then to the smallest flat index.
struct OscillationReport {
  double value = 0.0;
  std::optional<DyadicCube> cube;
  std::optional<GridWindow> window;
  // Grid scans in n = 1 only: sup after moving the endpoints off the grid.
  // Always >= value and still a lower bound for the continuous supremum.
  double refined_value = 0.0;
  double refined_lo = 0.0, refined_hi = 1.0;
  std::vector<CubeRow> per_cube;
};

struct GridOptions {
  bool refine = true;
  int refine_max_depth = 12;  // n = 1 endpoint refinement is quadratic in the leaf count
  unsigned jobs = 1;
};

namespace detail {

inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

// Leaves of depth m overlapping [a, b] along one axis, with overlap lengths.
inline std::vector<std::pair<std::uint32_t, double>> axis_overlaps(double a, double b, int depth) {
  std::vector<std::pair<std::uint32_t, double>> out;
  const double count = std::ldexp(1.0, depth);
  const double step = 1.0 / count;
  auto first = static_cast<std::int64_t>(std::floor(a * count));
  auto last = static_cast<std::int64_t>(std::ceil(b * count)) - 1;
  first = std::clamp<std::int64_t>(first, 0, static_cast<std::int64_t>(count) - 1);
  last = std::clamp<std::int64_t>(last, first, static_cast<std::int64_t>(count) - 1);
  for (std::int64_t j = first; j <= last; ++j) {
    const double lo = std::max(a, static_cast<double>(j) * step);
    const double hi = std::min(b, static_cast<double>(j + 1) * step);
    if (hi > lo) out.emplace_back(static_cast<std::uint32_t>(j), hi - lo);
  }
  return out;
}

// Calls fn(weight, value) for every leaf meeting the box, weight = overlap volume.
template <class Fn>
void for_each_overlap(const DyadicSimpleFunction& phi, const Box& box, Fn&& fn) {
  const int n = phi.dim();
  const int m = phi.depth();
  if (n == 1) {
    const auto leaves = phi.leaves();
    const double count = std::ldexp(1.0, m);
    const double step = 1.0 / count;
    const double a = box.lo[0], b = box.hi[0];
    auto first = static_cast<std::int64_t>(std::floor(a * count));
    auto last = static_cast<std::int64_t>(std::ceil(b * count)) - 1;
    first = std::clamp<std::int64_t>(first, 0, static_cast<std::int64_t>(count) - 1);
    last = std::clamp<std::int64_t>(last, first, static_cast<std::int64_t>(count) - 1);
    for (std::int64_t j = first; j <= last; ++j) {
      const double lo = std::max(a, static_cast<double>(j) * step);
      const double hi = std::min(b, static_cast<double>(j + 1) * step);
      if (hi > lo) fn(hi - lo, leaves[static_cast<std::size_t>(j)]);
    }
    return;
  }
  std::array<std::vector<std::pair<std::uint32_t, double>>, 3> axes;
  for (int a = 0; a < n; ++a) axes[a] = axis_overlaps(box.lo[a], box.hi[a], m);
  for (int a = n; a < 3; ++a) axes[a] = {{0u, 1.0}};
  const auto leaves = phi.leaves();
  for (const auto& [i2, w2] : axes[2])
    for (const auto& [i1, w1] : axes[1])
      for (const auto& [i0, w0] : axes[0]) {
        const std::size_t flat = i0 + (static_cast<std::size_t>(i1) << m) + (static_cast<std::size_t>(i2) << (2 * m));
        fn(w0 * w1 * w2, leaves[flat]);
      }
}

}  // namespace detail

/// <phi>_B over a box.
inline double window_mean(const DyadicSimpleFunction& phi, const Box& box) {
  require(box.n == phi.dim(), ErrorKind::DimensionMismatch, "box and function dimensions differ");
  bool first = true;
  double shift = 0.0, sum = 0.0, weight = 0.0;
  detail::for_each_overlap(phi, box, [&](double w, double v) {
    if (first) {
      shift = v;
      first = false;
    }
    sum += w * (v - shift);
    weight += w;
  });
  return weight > 0.0 ? shift + sum / weight : shift;
}

/// <phi^2>_B - <phi>_B^2, by a centered second pass.
inline double window_variance(const DyadicSimpleFunction& phi, const Box& box) {
  const double mean = window_mean(phi, box);
  double sum = 0.0, weight = 0.0;
  detail::for_each_overlap(phi, box, [&](double w, double v) {
    sum += w * (v - mean) * (v - mean);
    weight += w;
  });
  return weight > 0.0 ? sum / weight : 0.0;
}

/// <h(|phi - <phi>_B|)>_B.
inline double window_k_h(const DyadicSimpleFunction& phi, const OscillationGauge& h, const Box& box) {
  const double mean = window_mean(phi, box);
  double sum = 0.0, weight = 0.0;
  detail::for_each_overlap(phi, box, [&](double w, double v) {
    sum += w * h(std::fabs(v - mean));
    weight += w;
  });
  return weight > 0.0 ? sum / weight : h(0.0);
}

/// sup over dyadic J of sqrt(<phi^2>_J - <phi>_J^2), one bottom-up pass.
inline OscillationReport bmo_dyadic(const DyadicSimpleFunction& phi, bool rows = false) {
  const MomentPyramid pyramid(phi);
  OscillationReport report;
  double best = -1.0;
  for (int k = 0; k <= phi.depth(); ++k) {
    for (std::size_t flat = 0; flat < pyramid.count(k); ++flat) {
      const double var = pyramid.variance(k, flat);
      if (var > best) {
        best = var;
        report.cube = DyadicCube::from_flat(phi.dim(), k, flat);
      }
      if (rows) report.per_cube.push_back({DyadicCube::from_flat(phi.dim(), k, flat), pyramid.mean(k, flat), var});
    }
  }
  report.value = std::sqrt(best);
  report.refined_value = report.value;
  return report;
}

/// sup over dyadic J of <h(|phi - <phi>_J|)>_J. Each cube sums its leaves by
/// pairwise reduction; cubes of one level are split across `jobs` workers.
inline OscillationReport k_h_dyadic(const DyadicSimpleFunction& phi, const OscillationGauge& h, bool rows = false,
                                    unsigned jobs = 1) {
  const MomentPyramid pyramid(phi);
  const int n = phi.dim(), m = phi.depth();
  OscillationReport report;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= m; ++k) {
    const std::size_t cubes = pyramid.count(k);
    const int shift = m - k;
    const std::size_t per_axis = std::size_t{1} << shift;
    const std::size_t per_cube = std::size_t{1} << (n * shift);
    std::vector<double> local(cubes);
    // Chunk cubes so each worker reuses one scratch buffer.
    const std::size_t chunk = std::max<std::size_t>(1, (std::size_t{1} << 16) / per_cube);
    const std::size_t chunks = (cubes + chunk - 1) / chunk;
    parallel_for(chunks, jobs, [&](std::size_t c) {
      std::vector<double> buf(per_cube);
      for (std::size_t flat = c * chunk; flat < std::min(cubes, (c + 1) * chunk); ++flat) {
        const DyadicCube J = DyadicCube::from_flat(n, k, flat);
        const double mean = pyramid.mean(k, flat);
        std::size_t pos = 0;
        const std::size_t r2 = n > 2 ? per_axis : 1, r1 = n > 1 ? per_axis : 1;
        const auto leaves = phi.leaves();
        for (std::size_t a2 = 0; a2 < r2; ++a2)
          for (std::size_t a1 = 0; a1 < r1; ++a1) {
            // One contiguous run of leaves along the first axis.
            std::size_t row = J.index[0] * per_axis;
            if (n > 1) row += (J.index[1] * per_axis + a1) << m;
            if (n > 2) row += (J.index[2] * per_axis + a2) << (2 * m);
            for (std::size_t a0 = 0; a0 < per_axis; ++a0) buf[pos++] = h(std::fabs(leaves[row + a0] - mean));
          }
        local[flat] = detail::pairwise_sum(buf) / static_cast<double>(per_cube);
      }
    });
    for (std::size_t flat = 0; flat < cubes; ++flat) {
      if (local[flat] > best) {
        best = local[flat];
        report.cube = DyadicCube::from_flat(n, k, flat);
      }
      if (rows)
        report.per_cube.push_back(
            {DyadicCube::from_flat(n, k, flat), pyramid.mean(k, flat), pyramid.variance(k, flat), local[flat]});
    }
  }
  report.value = best;
  report.refined_value = best;
  return report;
}

/// CSV rows `depth,index,mean,variance,k_h_local`.
inline void write_per_cube_csv(std::ostream& os, const OscillationReport& report) {
  const auto old = os.precision(17);
  os << "depth,index,mean,variance,k_h_local\n";
  for (const auto& row : report.per_cube) {
    os << row.cube.depth << ',' << row.cube.label() << ',' << row.mean << ',' << row.variance << ',';
    if (!std::isnan(row.k_h_local)) os << row.k_h_local;
    os << '\n';
  }
  os.precision(old);
}

namespace detail {

inline void check_grid(const DyadicSimpleFunction& phi, int g) {
  require(g >= 0, ErrorKind::OutOfRange, "grid exponent must be >= 0");
  require(g <= grid_cap(phi.dim()), ErrorKind::Cap,
          "grid 2^-" + std::to_string(g) + " exceeds the cap 2^-" + std::to_string(grid_cap(phi.dim())) +
              " for n = " + std::to_string(phi.dim()));
}

// Visits every grid window, largest first, then by lower corner with the
// first axis fastest. Buckets of equal size can be visited concurrently.
template <class Fn>
void for_each_window_of_size(int n, int g, std::uint32_t size, Fn&& fn) {
  const std::uint32_t positions = (1u << g) - size + 1;
  GridWindow w;
  w.n = n;
  w.g = g;
  w.size = size;
  const std::uint32_t r2 = n > 2 ? positions : 1, r1 = n > 1 ? positions : 1;
  for (std::uint32_t i2 = 0; i2 < r2; ++i2)
    for (std::uint32_t i1 = 0; i1 < r1; ++i1)
      for (std::uint32_t i0 = 0; i0 < positions; ++i0) {
        w.lower = {i0, i1, i2};
        fn(w);
      }
}

struct BucketBest {
  double value = -std::numeric_limits<double>::infinity();
  GridWindow window;
  bool found = false;
};

template <class Score>
GridWindow best_window(int n, int g, unsigned jobs, Score&& score) {
  const std::uint32_t sizes = 1u << g;
  std::vector<BucketBest> buckets(sizes);
  parallel_for(sizes, jobs, [&](std::size_t b) {
    const auto size = static_cast<std::uint32_t>(sizes - b);  // largest first
    BucketBest& best = buckets[b];
    for_each_window_of_size(n, g, size, [&](const GridWindow& w) {
      const double v = score(w);
      if (!best.found || v > best.value) {
        best.value = v;
        best.window = w;
        best.found = true;
      }
    });
  });
  BucketBest out = buckets[0];
  for (std::size_t b = 1; b < buckets.size(); ++b)
    if (buckets[b].value > out.value) out = buckets[b];
  return out.window;
}

// Shifted prefix sums of phi and phi^2 on the 2^-r mesh, r >= depth.
class PrefixMoments {
 public:
  PrefixMoments(const DyadicSimpleFunction& phi, int r) : n_(phi.dim()), r_(r), side_((std::size_t{1} << r) + 1) {
    const int shift = r - phi.depth();
    shift_ = phi.leaf(0);
    std::size_t total = 1;
    for (int a = 0; a < n_; ++a) total *= side_;
    s1_.assign(total, 0.0L);
    s2_.assign(total, 0.0L);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::array<std::size_t, 3> c{};
      std::size_t rest = flat;
      bool edge = false;
      for (int a = 0; a < n_; ++a) {
        c[a] = rest % side_;
        rest /= side_;
        if (c[a] == 0) edge = true;
      }
      if (edge) continue;
      Index3 leaf{};
      for (int a = 0; a < n_; ++a) leaf[a] = static_cast<std::uint32_t>((c[a] - 1) >> shift);
      const long double v = phi.at(leaf) - shift_;
      s1_[flat] = v;
      s2_[flat] = v * v;
    }
    // Running sums along each axis in turn.
    std::size_t stride = 1;
    for (int a = 0; a < n_; ++a) {
      for (std::size_t flat = 0; flat < total; ++flat) {
        if ((flat / stride) % side_ == 0) continue;
        s1_[flat] += s1_[flat - stride];
        s2_[flat] += s2_[flat - stride];
      }
      stride *= side_;
    }
  }

  // Variance over a window given in 2^-g units, g <= r.
  double variance(const GridWindow& w) const {
    const int up = r_ - w.g;
    std::array<std::size_t, 3> lo{}, hi{};
    for (int a = 0; a < n_; ++a) {
      lo[a] = static_cast<std::size_t>(w.lower[a]) << up;
      hi[a] = static_cast<std::size_t>(w.lower[a] + w.size) << up;
    }
    long double a1 = 0, a2 = 0;
    for (unsigned corner = 0; corner < (1u << n_); ++corner) {
      std::size_t flat = 0, stride = 1;
      int sign = 1;
      for (int a = 0; a < n_; ++a) {
        const bool upper = (corner >> a) & 1u;
        flat += (upper ? hi[a] : lo[a]) * stride;
        if (!upper) sign = -sign;
        stride *= side_;
      }
      a1 += sign * s1_[flat];
      a2 += sign * s2_[flat];
    }
    long double count = 1;
    for (int a = 0; a < n_; ++a) count *= static_cast<long double>(hi[a] - lo[a]);
    const long double mean = a1 / count;
    return static_cast<double>(std::max(0.0L, a2 / count - mean * mean));
  }

 private:
  int n_, r_;
  std::size_t side_;
  double shift_ = 0.0;
  std::vector<long double> s1_, s2_;
};

// Maximizes a function of one variable on [lo, hi] by golden-section search.
template <class Fn>
std::pair<double, double> golden_max(Fn&& f, double lo, double hi, int iterations = 60) {
  constexpr double kInv = 0.6180339887498949;
  double x1 = hi - kInv * (hi - lo), x2 = lo + kInv * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iterations && hi - lo > 1e-15 * std::max(1.0, std::fabs(hi)); ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInv * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInv * (hi - lo);
      f1 = f(x1);
    }
  }
  return f1 >= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

// Variance of a 1-D step function over [a, b] from leaf prefix sums.
class IntervalMoments {
 public:
  explicit IntervalMoments(const DyadicSimpleFunction& phi) : count_(phi.size()), leaves_(phi.leaves()) {
    shift_ = leaves_[0];
    p1_.assign(count_ + 1, 0.0L);
    p2_.assign(count_ + 1, 0.0L);
    for (std::size_t j = 0; j < count_; ++j) {
      const long double v = leaves_[j] - shift_;
      p1_[j + 1] = p1_[j] + v;
      p2_[j + 1] = p2_[j] + v * v;
    }
  }
  double variance(double a, double b) const {
    if (b <= a) return 0.0;
    const long double m1 = (integral(b, 1) - integral(a, 1)) / (b - a);
    const long double m2 = (integral(b, 2) - integral(a, 2)) / (b - a);
    return static_cast<double>(std::max(0.0L, m2 - m1 * m1));
  }
  std::size_t count() const { return count_; }

  // Best length x in [0, room] of a run of value v joined to a segment
  // [lo, hi] (disjoint from it). With R_k = int (phi - v)^k over the segment,
  // the variance is R2 y - R1^2 y^2 in y = 1 / (R0 + x), maximal at
  // R0 + x = 2 R1^2 / R2.
  double best_extension(double v, double lo, double hi, double room) const {
    const long double r0 = hi - lo;
    if (r0 <= 0) return room;
    const long double dv = static_cast<long double>(v) - shift_;
    const long double s1 = integral(hi, 1) - integral(lo, 1);
    const long double s2 = integral(hi, 2) - integral(lo, 2);
    const long double r1 = s1 - dv * r0;
    const long double r2 = s2 - 2 * dv * s1 + dv * dv * r0;
    if (r2 <= 0) return 0.0;
    const long double x = 2 * r1 * r1 / r2 - r0;
    return static_cast<double>(std::clamp<long double>(x, 0, room));
  }

 private:
  // Integral of (phi - shift)^power over [0, x].
  long double integral(double x, int power) const {
    const long double pos = static_cast<long double>(x) * count_;
    auto j = static_cast<std::size_t>(std::clamp<long double>(std::floor(pos), 0, count_ - 1));
    const long double v = leaves_[j] - shift_;
    const long double part = pos - j;
    const auto& p = power == 1 ? p1_ : p2_;
    return (p[j] + part * (power == 1 ? v : v * v)) / count_;
  }
  std::size_t count_;
  std::span<const double> leaves_;
  double shift_;
  std::vector<long double> p1_, p2_;
};

// Endpoint refinement of the 1-D variance supremum: coordinate ascent inside
// every box [i, i+1] x [j, j+1] of leaf cells, each line maximum in closed form.
inline std::tuple<double, double, double> refine_bmo_1d(const DyadicSimpleFunction& phi) {
  const IntervalMoments mom(phi);
  const std::size_t N = mom.count();
  const double step = 1.0 / static_cast<double>(N);
  double best = -1.0, best_a = 0.0, best_b = 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      const double a_lo = i * step, a_hi = (i + 1) * step;
      const double b_lo = j * step, b_hi = (j + 1) * step;
      double a = a_lo, b = b_hi;
      double v = mom.variance(a, b);
      for (int sweep = 0; sweep < 50; ++sweep) {
        // Left endpoint: run of leaf i of length a_hi - a joined to [a_hi, b].
        const double na = a_hi - mom.best_extension(phi.leaf(i), a_hi, b, a_hi - a_lo);
        // Right endpoint: run of leaf j of length b - b_lo joined to [na, b_lo].
        const double nb = b_lo + mom.best_extension(phi.leaf(j), na, b_lo, b_hi - b_lo);
        const double nv = mom.variance(na, nb);
        if (nv < v || (na == a && nb == b)) break;
        const bool stalled = nv <= v * (1.0 + 1e-15);
        v = nv;
        a = na;
        b = nb;
        if (stalled) break;
      }
      if (v > best) {
        best = v;
        best_a = a;
        best_b = b;
      }
    }
  }
  return {std::max(0.0, best), best_a, best_b};
}

}  // namespace detail

/// sup of sqrt(variance) over all cubes with corners on the 2^-g grid. A lower
/// bound for the continuous BMO norm. In n = 1 `refined_value` additionally
/// lets the endpoints leave the grid.
inline OscillationReport bmo_grid(const DyadicSimpleFunction& phi, int g, const GridOptions& opt = {}) {
  detail::check_grid(phi, g);
  const int r = std::max(g, phi.depth());
  const detail::PrefixMoments prefix(phi, r);
  OscillationReport report;
  const GridWindow w = detail::best_window(phi.dim(), g, opt.jobs, [&](const GridWindow& x) { return prefix.variance(x); });
  report.window = w;
  report.value = std::sqrt(window_variance(phi, Box::of(w)));
  report.refined_value = report.value;
  report.refined_lo = w.lo(0);
  report.refined_hi = w.hi(0);
  if (phi.dim() == 1 && opt.refine && phi.depth() <= opt.refine_max_depth && phi.depth() > 0) {
    const auto [var, a, b] = detail::refine_bmo_1d(phi);
    const double refined = std::sqrt(window_variance(phi, Box::interval(a, b)));
    if (refined > report.refined_value) {
      report.refined_value = refined;
      report.refined_lo = a;
      report.refined_hi = b;
    }
  }
  return report;
}

/// sup of <h(|phi - <phi>_W|)>_W over grid windows W. In n = 1
/// `refined_value` adds a local search of both endpoints around the best
/// grid window.
inline OscillationReport k_h_grid(const DyadicSimpleFunction& phi, const OscillationGauge& h, int g,
                                  const GridOptions& opt = {}) {
  detail::check_grid(phi, g);
  OscillationReport report;
  const GridWindow w =
      detail::best_window(phi.dim(), g, opt.jobs, [&](const GridWindow& x) { return window_k_h(phi, h, Box::of(x)); });
  report.window = w;
  report.value = window_k_h(phi, h, Box::of(w));
  report.refined_value = report.value;
  report.refined_lo = w.lo(0);
  report.refined_hi = w.hi(0);
  if (phi.dim() == 1 && opt.refine) {
    const double cell = std::ldexp(1.0, -g);
    double a = w.lo(0), b = w.hi(0), v = report.value;
    for (int sweep = 0; sweep < 3; ++sweep) {
      const auto [na, va] = detail::golden_max([&](double x) { return window_k_h(phi, h, Box::interval(x, b)); },
                                               std::max(0.0, a - cell), std::min(b, a + cell));
      if (va > v && na < b) {
        v = va;
        a = na;
      }
      const auto [nb, vb] = detail::golden_max([&](double x) { return window_k_h(phi, h, Box::interval(a, x)); },
                                               std::max(a, b - cell), std::min(1.0, b + cell));
      if (vb > v && nb > a) {
        v = vb;
        b = nb;
      }
    }
    report.refined_value = v;
    report.refined_lo = a;
    report.refined_hi = b;
  }
  return report;
}

/// Visits every grid window of [0,1]^n at resolution 2^-g.
template <class Fn>
void for_each_grid_window(int n, int g, Fn&& fn) {
  for (std::uint32_t size = 1u << g; size >= 1; --size) detail::for_each_window_of_size(n, g, size, fn);
}

struct TruncationMargins {
  double k_phi = 0.0;      // K^d(phi)
  double k_truncated = 0.0;  // K^d(phi_m)
  double bmo_gap = 0.0;    // ||phi - phi_m||_BMO^d
  double doubling = 0.0;   // 2 K^d(phi) - K^d(phi_m)
  double additive = 0.0;   // K^d(phi) + h(gap) - K^d(phi_m)
};

/// Both truncation bounds for K^d as signed margins.
inline TruncationMargins truncation_gap_check(const DyadicSimpleFunction& phi, const OscillationGauge& h, int m) {
  require_flags(h, {GaugeFlag::VanishesAtZero, GaugeFlag::Increasing, GaugeFlag::Concave}, "truncation_gap_check");
  require(m >= 0, ErrorKind::OutOfRange, "truncation order must be >= 0");
  const DyadicSimpleFunction trunc = truncate(phi, m);
  TruncationMargins out;
  out.k_phi = k_h_dyadic(phi, h).value;
  out.k_truncated = k_h_dyadic(trunc, h).value;
  out.bmo_gap = bmo_dyadic(phi - trunc).value;
  out.doubling = 2.0 * out.k_phi - out.k_truncated;
  out.additive = out.k_phi + h(out.bmo_gap) - out.k_truncated;
  return out;
}

/// h(||f - g||_BMO^d) - |K^d(f) - K^d(g)|.
inline double k_lipschitz_margin(const DyadicSimpleFunction& f, const DyadicSimpleFunction& g,
                                 const OscillationGauge& h) {
  const double gap = bmo_dyadic(f - g).value;
  return h(gap) - std::fabs(k_h_dyadic(f, h).value - k_h_dyadic(g, h).value);
}

/// ||phi||_BMO^d - h^{-1}(K^d(phi)).
inline double elementary_left_margin(const DyadicSimpleFunction& phi, const OscillationGauge& h) {
  return bmo_dyadic(phi).value - gauge_inverse(h, k_h_dyadic(phi, h).value);
}

/// K^d(phi) - 2^{-(n+2)} h(2^{(n+2)/2} ||phi||_BMO^d).
inline double dyadic_lower_margin(const DyadicSimpleFunction& phi, const OscillationGauge& h) {
  const int n = phi.dim();
  const double norm = bmo_dyadic(phi).value;
  return k_h_dyadic(phi, h).value - std::ldexp(h(std::pow(2.0, (n + 2) / 2.0) * norm), -(n + 2));
}

struct SharpBoundResult {
  double margin = std::numeric_limits<double>::infinity();
  GridWindow worst;
  double norm = 0.0;
  std::size_t windows = 0;
};

/// n = 1: min over grid intervals J of
/// <h(|phi - <phi>_J|)>_J - var_J(phi) h(2 s) / (4 s^2), s = `norm`.
inline SharpBoundResult sharp_bound_check(const DyadicSimpleFunction& phi, const OscillationGauge& h, int g,
                                          double norm) {
  require(phi.dim() == 1, ErrorKind::DimensionMismatch, "sharp bound check is one-dimensional");
  detail::check_grid(phi, g);
  SharpBoundResult out;
  out.norm = norm;
  const double factor = norm > 0.0 ? h(2.0 * norm) / (4.0 * norm * norm) : 0.0;
  for_each_grid_window(1, g, [&](const GridWindow& w) {
    const Box box = Box::of(w);
    const double margin = window_k_h(phi, h, box) - factor * window_variance(phi, box);
    ++out.windows;
    if (margin < out.margin) {
      out.margin = margin;
      out.worst = w;
    }
  });
  return out;
}

}  // namespace bmo
