#pragma once

// Randomized upper estimates of the dyadic Bellman function
// B(x1, x2) = inf <h(|phi|)> over depth-m step functions on [0,1] with
// <phi> = x1, <phi^2> = x2 and ||phi||_BMO^d <= t.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bmo/bellman.hpp"
#include "bmo/dyadic.hpp"
#include "bmo/error.hpp"
#include "bmo/functionals.hpp"
#include "bmo/gauge.hpp"
#include "bmo/parallel.hpp"
#include "bmo/random.hpp"

namespace bmo {

inline constexpr int kOracleMaxDepth = 4;

struct OracleResult {
  double value = std::numeric_limits<double>::infinity();
  DyadicSimpleFunction witness;
  long evaluations = 0;
  int starts = 0;
  std::string best_start;  // "constant", "two-leaf", "eight-leaf" or "random-<i>"
};

namespace detail {

// Squared dyadic BMO norm of at most 16 leaves.
inline double small_bmo_squared(const std::vector<double>& v) {
  std::array<double, 16> s1{}, s2{};
  std::size_t count = v.size();
  for (std::size_t i = 0; i < count; ++i) {
    s1[i] = v[i];
    s2[i] = v[i] * v[i];
  }
  double best = 0.0;
  double width = 1.0;
  while (count > 1) {
    count /= 2;
    width *= 2.0;
    for (std::size_t i = 0; i < count; ++i) {
      s1[i] = s1[2 * i] + s1[2 * i + 1];
      s2[i] = s2[2 * i] + s2[2 * i + 1];
      const double mean = s1[i] / width;
      best = std::max(best, s2[i] / width - mean * mean);
    }
  }
  return best;
}

inline double mean_h_abs(const std::vector<double>& v, const OscillationGauge& h) {
  std::vector<double> terms(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) terms[i] = h(std::fabs(v[i]));
  return pairwise_sum(terms) / static_cast<double>(v.size());
}

// Rescales v to mean x1 and mean square x1^2 + r^2; false if v is constant.
inline bool project_moments(std::vector<double>& v, double x1, double r) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double rms = std::sqrt(ss / n);
  if (!(rms > 0.0)) {
    std::fill(v.begin(), v.end(), x1);
    return r == 0.0;
  }
  for (double& x : v) x = x1 + r * (x - mean) / rms;
  return true;
}

// Moves three leaves along the circle that keeps their sum and sum of squares.
inline void rotate_triple(std::vector<double>& v, std::size_t i, std::size_t j, std::size_t k, double angle) {
  const double s = (v[i] + v[j] + v[k]) / 3.0;
  const double d0 = v[i] - s, d1 = v[j] - s, d2 = v[k] - s;
  const double p = (d0 - d1) / std::sqrt(2.0), q = (d0 + d1 - 2.0 * d2) / std::sqrt(6.0);
  const double c = std::cos(angle), sn = std::sin(angle);
  const double np = c * p - sn * q, nq = sn * p + c * q;
  v[i] = s + np / std::sqrt(2.0) + nq / std::sqrt(6.0);
  v[j] = s - np / std::sqrt(2.0) + nq / std::sqrt(6.0);
  v[k] = s - 2.0 * nq / std::sqrt(6.0);
}

struct StartOutcome {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> witness;
  long evaluations = 0;
};

}  // namespace detail

/// Multi-start local search for the Bellman infimum at (x1, x2) over depth-m
/// step functions (n = 1, m <= 4). Moments are kept by projection and
/// moment-preserving moves; the norm bound is a penalty during search and a
/// strict filter on acceptance, so the returned value is attained by a
/// feasible witness and bounds the infimum from above.
inline OracleResult bellman_oracle(double x1, double x2, double t, const OscillationGauge& h, int depth, long budget,
                                   std::uint64_t seed, unsigned jobs = 1) {
  require(t > 0.0, ErrorKind::Domain, "oracle needs t > 0");
  require(omega_contains(x1, x2, t), ErrorKind::Domain, "oracle point lies outside Omega_t");
  require(depth >= 0 && depth <= kOracleMaxDepth, ErrorKind::Cap, "oracle depth must lie in [0, 4]");
  require(budget > 0, ErrorKind::OutOfRange, "oracle budget must be positive");
  const std::size_t N = std::size_t{1} << depth;
  const double r = std::sqrt(std::max(0.0, x2 - x1 * x1));
  const double limit = t * t * (1.0 + 2e-12);

  auto feasible = [&](const std::vector<double>& v) {
    double mean = 0.0, sq = 0.0;
    for (double x : v) {
      mean += x;
      sq += x * x;
    }
    mean /= static_cast<double>(v.size());
    sq /= static_cast<double>(v.size());
    return std::fabs(mean - x1) <= 1e-9 * std::max(1.0, std::fabs(x1)) &&
           std::fabs(sq - x2) <= 1e-9 * std::max(1.0, x2) && detail::small_bmo_squared(v) <= limit;
  };

  std::vector<std::pair<std::string, std::vector<double>>> starts;
  if (r == 0.0) starts.push_back({"constant", std::vector<double>(N, x1)});
  if (depth >= 1) {
    std::vector<double> v(N);
    for (std::size_t i = 0; i < N; ++i) v[i] = i < N / 2 ? x1 - r : x1 + r;
    starts.push_back({"two-leaf", v});
  }
  if (depth >= 3) {
    const std::size_t block = N / 8;
    std::vector<double> v(N, x1);
    for (std::size_t i = 0; i < block; ++i) {
      v[i] = x1 - 2.0 * r;
      v[N - 1 - i] = x1 + 2.0 * r;
    }
    starts.push_back({"eight-leaf", v});
  }
  const int random_starts = depth >= 2 ? 13 : 0;
  for (int s = 0; s < random_starts; ++s) starts.push_back({"random-" + std::to_string(s), {}});

  const long per_start = std::max<long>(1, budget / static_cast<long>(starts.size()));
  const double penalty = 100.0 * std::max(1.0, h(std::fabs(x1) + 4.0 * r + t)) / (t * t);
  std::vector<detail::StartOutcome> outcomes(starts.size());

  parallel_for(starts.size(), jobs, [&](std::size_t s) {
    auto rng = keyed_engine({seed, name_key("oracle"), s});
    std::vector<double> v = starts[s].second;
    if (v.empty()) {
      v.resize(N);
      for (double& x : v) x = normal(rng);
      detail::project_moments(v, x1, r);
    }
    detail::StartOutcome& out = outcomes[s];
    auto objective = [&](const std::vector<double>& w) {
      ++out.evaluations;
      return detail::mean_h_abs(w, h) + penalty * std::max(0.0, detail::small_bmo_squared(w) - t * t);
    };
    auto record = [&](const std::vector<double>& w) {
      if (!feasible(w)) return;
      const double value = detail::mean_h_abs(w, h);
      if (value < out.value) {
        out.value = value;
        out.witness = w;
      }
    };
    record(v);
    double current = objective(v);
    double spread = 3.14159265358979323846;
    std::vector<double> trial;
    long step = 0;
    while (out.evaluations < per_start && N >= 2) {
      trial = v;
      const bool swap = N < 3 || uniform01(rng) < 0.2;
      if (swap) {
        const auto i = uniform_index(rng, N), j = uniform_index(rng, N);
        std::swap(trial[i], trial[j]);
      } else {
        const auto i = uniform_index(rng, N);
        auto j = uniform_index(rng, N - 1);
        if (j >= i) ++j;
        // Third index uniform over the rest.
        std::size_t k = uniform_index(rng, N - 2);
        if (k >= std::min(i, j)) ++k;
        if (k >= std::max(i, j)) ++k;
        detail::rotate_triple(trial, i, j, k, uniform(rng, -spread, spread));
      }
      if (++step % 1024 == 0) detail::project_moments(trial, x1, r);
      const double value = objective(trial);
      if (value <= current) {
        v.swap(trial);
        current = value;
        record(v);
        spread = std::min(3.14159265358979323846, spread * 1.5);
      } else {
        spread = std::max(1e-9, spread * 0.97);
        if (spread <= 1e-9) spread = 3.14159265358979323846;
      }
    }
    record(v);
  });

  OracleResult result;
  result.starts = static_cast<int>(starts.size());
  for (std::size_t s = 0; s < outcomes.size(); ++s) {
    result.evaluations += outcomes[s].evaluations;
    if (outcomes[s].value < result.value) {
      result.value = outcomes[s].value;
      result.witness = DyadicSimpleFunction(1, depth, outcomes[s].witness);
      result.best_start = starts[s].first;
    }
  }
  require(std::isfinite(result.value), ErrorKind::InfeasibleStart, "oracle found no feasible step function");
  return result;
}

}  // namespace bmo
