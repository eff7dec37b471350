#pragma once

// Verification suites and the four scenario kinds behind bmotool. Every
// check is a signed margin reduced (min) over trials in trial order, and
// every trial draws from its own keyed stream, so margins do not depend on
// the worker count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bmo/bmo.hpp"
#include "config.hpp"

namespace bmo::cli {

namespace fs = std::filesystem;

inline const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> suites = {"theorem-chain", "bellman-geometry", "truncation-lemmas",
                                                  "regularizer", "counterexamples"};
  return suites;
}

/// Minimum that lets a NaN through, so a broken trial fails its check.
inline double min_margin(const std::vector<double>& margins) {
  double out = std::numeric_limits<double>::infinity();
  for (double m : margins) {
    if (std::isnan(m)) return m;
    out = std::min(out, m);
  }
  return out;
}

inline std::string tag(const std::string& check, const std::vector<std::string>& parts) {
  std::string out = check + "[";
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ";" : "") + parts[i];
  return out + "]";
}

inline std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

/// A random dyadic-simple function: Haar and ramp mixtures (n = 1), Gaussian,
/// sparse or sign-valued leaves, at a log-uniform scale in [0.1, 10].
inline DyadicSimpleFunction random_step_function(std::mt19937_64& rng, int n, int depth) {
  const double scale = std::exp(uniform(rng, std::log(0.1), std::log(10.0)));
  if (n == 1 && depth > 0 && uniform01(rng) < 0.5) return random_mixture(rng, depth, scale);
  std::vector<double> v(std::size_t{1} << (n * depth));
  const int kind = uniform_int(rng, 0, 2);
  for (double& x : v) {
    switch (kind) {
      case 0: x = scale * normal(rng); break;
      case 1: x = uniform01(rng) < 0.15 ? scale * normal(rng) : 0.0; break;
      default: x = uniform01(rng) < 0.5 ? -scale : scale; break;
    }
  }
  return DyadicSimpleFunction(n, depth, std::move(v));
}

inline bool theorem_admissible(const OscillationGauge& h) {
  return h.has(GaugeFlag::VanishesAtZero) && h.has(GaugeFlag::Increasing) && h.has(GaugeFlag::Concave);
}

inline int default_max_depth(int n) { return n == 1 ? 8 : n == 2 ? 4 : 2; }

inline int max_depth_for(const ConfigFile& f, const std::string& section, int n) {
  const std::string key = "max_depth_" + std::to_string(n);
  const long d = f.get_long(section, key, default_max_depth(n));
  if (d < 1 || d > depth_cap(n)) f.error(f.line_of(section, key), key + " must lie in [1, " + std::to_string(depth_cap(n)) + "]");
  return static_cast<int>(d);
}

inline long positive(const ConfigFile& f, const std::string& section, const std::string& key, long fallback) {
  const long v = f.get_long(section, key, fallback);
  if (v < 1) f.error(f.line_of(section, key), key + " must be >= 1");
  return v;
}

inline std::vector<int> dims_of(const ScenarioConfig& cfg, const std::string& section) {
  std::vector<int> out;
  for (double d : cfg.file.get_doubles(section, "dims", {static_cast<double>(cfg.n)})) {
    if (d != 1 && d != 2 && d != 3) cfg.file.error(cfg.file.line_of(section, "dims"), "dims must be 1, 2 or 3");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

inline std::vector<OscillationGauge> gauges_of(const ScenarioConfig& cfg, const std::string& section) {
  std::vector<OscillationGauge> out;
  for (const auto& spec : cfg.file.get_list(section, "gauges", {cfg.gauge})) out.push_back(parse_gauge(spec));
  return out;
}

// theorem-chain: elementary left bound, the dyadic lower bound, the sharp
// per-interval bound in n = 1, the Lipschitz bound for K^d and grid monotonicity.
inline void suite_theorem_chain(const ScenarioConfig& cfg, Report& report) {
  const std::string S = "theorem-chain";
  const auto& f = cfg.file;
  const std::uint64_t seed = cfg.require_seed();
  const long trials = positive(f, S, "trials", 1000);
  const int min_grid = static_cast<int>(f.get_long(S, "min_grid", 5));
  const double tol = f.get_double(S, "tolerance", 1e-9);
  for (const auto& h : gauges_of(cfg, S)) {
    if (!theorem_admissible(h)) {
      report.warn("theorem-chain skipped for gauge " + h.name + ": it is not flagged vanishing, increasing and concave");
      continue;
    }
    for (int n : dims_of(cfg, S)) {
      const int max_depth = max_depth_for(f, S, n);
      const std::size_t T = static_cast<std::size_t>(trials);
      std::vector<double> left(T), lower(T), sharp(T, std::numeric_limits<double>::infinity()), lip(T),
          monotone(T, std::numeric_limits<double>::infinity());
      parallel_for(T, cfg.jobs, [&](std::size_t i) {
        auto rng = keyed_engine({seed, name_key("theorem-chain"), name_key(h.name.c_str()), std::uint64_t(n), i});
        const int depth = uniform_int(rng, 1, max_depth);
        const DyadicSimpleFunction phi = random_step_function(rng, n, depth);
        left[i] = elementary_left_margin(phi, h);
        lower[i] = dyadic_lower_margin(phi, h);
        DyadicSimpleFunction other = random_step_function(rng, n, depth);
        const double mix = uniform01(rng);
        std::vector<double> w(phi.size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = phi.leaf(j) + mix * other.leaf(j);
        lip[i] = k_lipschitz_margin(phi, DyadicSimpleFunction(n, depth, std::move(w)), h);
        if (n == 1) {
          const int g = std::min(grid_cap(1), std::max(depth, min_grid));
          const double norm = bmo_grid(phi, g).refined_value;
          sharp[i] = sharp_bound_check(phi, h, g, norm).margin;
          if (depth <= 6) {
            GridOptions plain;
            plain.refine = false;
            monotone[i] = bmo_grid(phi, depth + 1, plain).value - bmo_grid(phi, depth, plain).value;
            monotone[i] = std::min(monotone[i],
                                   k_h_grid(phi, h, depth + 1, plain).value - k_h_grid(phi, h, depth, plain).value);
          }
        }
      });
      const std::vector<std::string> key = {h.name, "n=" + std::to_string(n)};
      report.add(S, tag("elementary-left", key), min_margin(left), tol);
      report.add(S, tag("dyadic-lower", key), min_margin(lower), tol);
      report.add(S, tag("k-lipschitz", key), min_margin(lip), tol);
      if (n == 1) {
        report.add(S, tag("sharp-bound", key), min_margin(sharp), tol);
        report.add(S, tag("grid-monotone", key), min_margin(monotone), tol);
      }
    }
  }
}

// bellman-geometry: the sub-solution G_t on Omega_t.
inline void suite_bellman_geometry(const ScenarioConfig& cfg, Report& report) {
  const std::string S = "bellman-geometry";
  const auto& f = cfg.file;
  const std::uint64_t seed = cfg.require_seed();
  const auto ts = f.get_doubles(S, "t", {0.5, 1.0, 2.0});
  for (double t : ts)
    if (!(t > 0.0)) f.error(f.line_of(S, "t"), "t values must be > 0");
  const int boundary_points = static_cast<int>(positive(f, S, "boundary_points", 1000));
  const int seam_samples = static_cast<int>(std::max(2L, positive(f, S, "seam_samples", 1000)));
  const long convexity_trials = positive(f, S, "convexity_trials", 10000);
  const long domain_trials = positive(f, S, "domain_trials", 100000);
  const int ode_checkpoints = static_cast<int>(positive(f, S, "ode_checkpoints", 1000));
  const long induction_trials = positive(f, S, "induction_trials", 200);
  const double boundary_tol = f.get_double(S, "boundary_tolerance", 1e-9);
  const double closing_tol = f.get_double(S, "closing_tolerance", 1e-10);
  const double seam_tol = f.get_double(S, "seam_tolerance", 1e-6);
  const double convexity_tol = f.get_double(S, "convexity_tolerance", 1e-8);
  const double ode_tol = f.get_double(S, "ode_tolerance", 1e-7);
  const double induction_tol = f.get_double(S, "induction_tolerance", 1e-9);
  const auto dims = dims_of(cfg, S);

  for (const auto& h : gauges_of(cfg, S)) {
    if (!theorem_admissible(h))
      report.warn("bellman-geometry: gauge " + h.name + " is not flagged vanishing, increasing and concave; G_t need not be locally convex");
    for (double t : ts) {
      const SubSolution G(h, t);
      if (G.finite_difference_warning())
        report.warn("bellman-geometry: gauge " + h.name + " has no derivative; h' taken by finite differences (fd-warning)");
      const std::vector<std::string> key = {h.name, "t=" + num(t)};
      report.add(S, tag("boundary", key), -boundary_condition_check(G, boundary_points), boundary_tol);
      for (int n : dims) {
        const double gap = std::fabs(lower_bound_A(t, h, n) - g_eval(0.0, t * t, std::pow(2.0, n / 2.0) * t, h));
        report.add(S, tag("closing-formula", {h.name, "t=" + num(t), "n=" + std::to_string(n)}), -gap, closing_tol);
      }
      const SeamReport seams = seam_continuity_check(G, seam_samples);
      report.add(S, tag("seams", key), -std::max(seams.lower_seam, seams.upper_seam), seam_tol);
      report.add(S, tag("even-symmetry", key), -seams.reflection, 0.0);

      // Branch 2: G is linear in x2 with slope h(2t) / 4t^2 > 0 at fixed x1 <= t.
      double rise_min = std::numeric_limits<double>::infinity(), linear = 0.0;
      const double slope = h(2.0 * t) / (4.0 * t * t);
      for (int i = 0; i <= 16; ++i) {
        const double x1 = t * i / 16.0;
        const double lo = std::max(2.0 * t * x1, x1 * x1), hi = x1 * x1 + t * t;
        for (int j = 0; j < 16 && hi > lo; ++j) {
          const double a = lo + (hi - lo) * j / 16.0, b = lo + (hi - lo) * (j + 1) / 16.0;
          const double rise = G(x1, b) - G(x1, a);
          rise_min = std::min(rise_min, rise);
          linear = std::max(linear, std::fabs(rise - slope * (b - a)));
        }
      }
      report.add(S, tag("branch2-increasing", key), rise_min, 0.0);
      report.add(S, tag("branch2-linear", key), -linear, 1e-12 * std::max(1.0, h(2.0 * t)));

      const ConvexityReport conv = local_convexity_fuzz(G, convexity_trials, seed ^ name_key(h.name.c_str()), cfg.jobs);
      report.add(S, tag("convexity", key), conv.worst_margin, convexity_tol);

      if (G.finite_difference_warning()) {
        report.warn("bellman-geometry: ODE residual skipped for gauge " + h.name + " (no derivative)");
      } else {
        report.add(S, tag("ode-residual", key), -ode_residual_check(G.slope(), ode_checkpoints), ode_tol);
      }

      for (int n : dims) {
        const std::size_t T = static_cast<std::size_t>(induction_trials);
        std::vector<double> margins(T);
        parallel_for(T, cfg.jobs, [&](std::size_t i) {
          auto rng = keyed_engine({seed, name_key("induction"), name_key(h.name.c_str()), std::uint64_t(n),
                                   static_cast<std::uint64_t>(std::llround(t * 1e6)), i});
          const int depth = uniform_int(rng, 1, std::min(default_max_depth(n), depth_cap(n)));
          DyadicSimpleFunction phi = random_step_function(rng, n, depth);
          const double norm = bmo_dyadic(phi).value;
          if (norm > 0.0) phi = phi.map([&](double v) { return v * t * (1.0 - 1e-13) / norm; });
          margins[i] = bellman_induction_check(phi, t, h, uniform_int(rng, 0, depth));
        });
        report.add(S, tag("induction", {h.name, "t=" + num(t), "n=" + std::to_string(n)}), min_margin(margins),
                   induction_tol);
      }
    }
  }
  const DomainFuzzReport domain = segment_domain_fuzz(domain_trials, seed, cfg.jobs);
  report.add(S, "segment-domain", -static_cast<double>(domain.failures + domain.precondition_rejects), 0.0);
}

// truncation-lemmas: K^d(phi_m) <= 2 K^d(phi) and <= K^d(phi) + h(||phi - phi_m||).
inline void suite_truncation(const ScenarioConfig& cfg, Report& report) {
  const std::string S = "truncation-lemmas";
  const auto& f = cfg.file;
  const std::uint64_t seed = cfg.require_seed();
  const long trials = positive(f, S, "trials", 1000);
  const double tol = f.get_double(S, "tolerance", 1e-10);
  for (const auto& h : gauges_of(cfg, S)) {
    if (!theorem_admissible(h)) {
      report.warn("truncation-lemmas skipped for gauge " + h.name + ": it is not flagged vanishing, increasing and concave");
      continue;
    }
    for (int n : dims_of(cfg, S)) {
      const int max_depth = max_depth_for(f, S, n);
      const std::size_t T = static_cast<std::size_t>(trials);
      std::vector<double> doubling(T), additive(T);
      parallel_for(T, cfg.jobs, [&](std::size_t i) {
        auto rng = keyed_engine({seed, name_key("truncation"), name_key(h.name.c_str()), std::uint64_t(n), i});
        const int depth = uniform_int(rng, 1, max_depth);
        const DyadicSimpleFunction phi = random_step_function(rng, n, depth);
        const TruncationMargins m = truncation_gap_check(phi, h, uniform_int(rng, 0, depth));
        doubling[i] = m.doubling;
        additive[i] = m.additive;
      });
      const std::vector<std::string> key = {h.name, "n=" + std::to_string(n)};
      report.add(S, tag("truncation-doubling", key), min_margin(doubling), tol);
      report.add(S, tag("truncation-additive", key), min_margin(additive), tol);
    }
  }
}

// regularizer: f = h + shift against its smooth minorant.
inline void suite_regularizer(const ScenarioConfig& cfg, Report& report) {
  const std::string S = "regularizer";
  const auto& f = cfg.file;
  const OscillationGauge h = parse_gauge(f.get_string(S, "gauge", cfg.gauge));
  const double shift = f.get_double(S, "shift", 3.0);
  RegularizerOptions opt;
  opt.scan_points = static_cast<std::size_t>(positive(f, S, "scan_points", 100000));
  opt.jobs = cfg.jobs;
  const double tol = f.get_double(S, "tolerance", 1e-9);
  const OscillationGauge base = shifted(h, shift);
  const RegularizedGauge reg = regularize(base, f.get_double(S, "horizon", 1000.0), f.get_double(S, "eps", 1e-3), opt);

  double below = std::numeric_limits<double>::infinity(), d1 = below, d2 = below, d3 = below;
  const auto& grid = reg.scan_grid();
  const auto& values = reg.scan_values();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    below = std::min(below, values[i] - reg(grid[i]));
    d1 = std::min(d1, reg.d1(grid[i]));
    d2 = std::min(d2, -reg.d2(grid[i]));
    d3 = std::min(d3, reg.d3(grid[i]));
  }
  double growth = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= reg.term_count(); ++m) growth = std::min(growth, reg.threshold(m) - std::ldexp(1.0, m));
  std::string open;
  for (int m = 1; m <= reg.term_count(); ++m)
    if (!reg.bracketed(m)) open += (open.empty() ? "" : " ") + std::to_string(m);
  if (!open.empty())
    report.warn("regularizer: f stays below m up to the horizon for m in {" + open + "}; those thresholds sit at the horizon");
  const std::vector<std::string> key = {h.name + "+" + num(shift)};
  report.add(S, tag("below-f", key), below, tol);
  report.add(S, tag("d1-positive", key), d1, 0.0);
  report.add(S, tag("d2-negative", key), d2, 0.0);
  report.add(S, tag("d3-positive", key), d3, 0.0);
  report.add(S, tag("threshold-growth", key), growth, 0.0);
  report.notes.push_back("regularizer: " + std::to_string(reg.term_count()) + " terms, tail bound " + num(reg.tail_bound()));
}

// counterexamples: the sqrt(10 M) bound, annealing, and the Haar series.
// With `artifacts` set, tables and witnesses are written there.
inline void suite_counterexamples(const ScenarioConfig& cfg, Report& report, const fs::path* artifacts = nullptr) {
  const std::string S = "counterexamples";
  const auto& f = cfg.file;
  const std::uint64_t seed = cfg.require_seed();
  const OscillationGauge h = parse_gauge(f.get_string(S, "gauge", "section6"));
  const long trials = positive(f, S, "trials", 1000);
  const int max_depth = static_cast<int>(positive(f, S, "max_depth", 5));
  if (max_depth > grid_cap(1) - 1) f.error(f.line_of(S, "max_depth"), "max_depth must be <= " + std::to_string(grid_cap(1) - 1));

  // sqrt(10 M): M just above K_h on the grid, the tightest admissible choice.
  struct Row {
    int depth = 0;
    double M = 0.0, norm = 0.0, margin = 0.0, fractional = 0.0, outside = 0.0, cover = 0.0, half = 0.0, uncovered = 0.0;
  };
  const std::size_t T = static_cast<std::size_t>(trials);
  std::vector<Row> rows(T);
  parallel_for(T, cfg.jobs, [&](std::size_t i) {
    auto rng = keyed_engine({seed, name_key("sqrt10M"), i});
    const int depth = uniform_int(rng, 1, max_depth);
    const DyadicSimpleFunction phi = random_mixture(rng, depth, std::exp(uniform(rng, std::log(0.25), std::log(8.0))));
    Sqrt10MOptions opt;
    opt.g = std::min(grid_cap(1), depth + 3);
    const double k = k_h_grid(phi, h, opt.g).value;
    const double M = k * (1.0 + 1e-9) + 1e-12;
    const Sqrt10MReport r = verify_sqrt10M(phi, M, h, opt);
    rows[i] = {depth, M, r.norm, r.margin, r.fractional, r.outside_mass, r.cover_mass, r.half_shift, r.uncovered};
  });
  auto column = [&](double Row::*field) {
    std::vector<double> v(T);
    for (std::size_t i = 0; i < T; ++i) v[i] = rows[i].*field;
    return min_margin(v);
  };
  report.add(S, tag("sqrt10M", {h.name}), column(&Row::margin), 0.0);
  report.add(S, tag("fractional-part", {h.name}), column(&Row::fractional), 0.0);
  report.add(S, tag("outside-A", {h.name}), column(&Row::outside), 1e-12);
  report.add(S, tag("rising-sun-cover", {h.name}), column(&Row::cover), 1e-9);
  report.add(S, tag("half-shift", {h.name}), column(&Row::half), 1e-9);
  report.add(S, tag("a-plus-covered", {h.name}), column(&Row::uncovered), 1e-12);
  if (artifacts) {
    std::ofstream os(*artifacts / "sqrt10m.csv");
    os << "trial,depth,M,norm,margin,fractional\n" << std::setprecision(17);
    for (std::size_t i = 0; i < T; ++i)
      os << i << ',' << rows[i].depth << ',' << rows[i].M << ',' << rows[i].norm << ',' << rows[i].margin << ','
         << rows[i].fractional << '\n';
    report.artifacts.push_back("sqrt10m.csv");
  }

  // Adversarial annealing of ||phi||^2 / K_h.
  const long steps = positive(f, S, "annealing_steps", 100000);
  const int a_depth = static_cast<int>(positive(f, S, "annealing_depth", 3));
  const int a_grid = static_cast<int>(f.get_long(S, "annealing_grid", std::min(grid_cap(1), a_depth + 3)));
  const AnnealingResult ann = adversarial_annealing(h, a_depth, a_grid, steps, f.get_double(S, "annealing_bound", 16.0), seed);
  report.add(S, tag("annealing-ratio", {h.name}), 10.0 - ann.best_ratio, 0.0);
  report.notes.push_back("annealing: best ratio ||phi||^2 / K_h = " + num(ann.best_ratio) + " after " +
                         std::to_string(ann.steps) + " steps");
  if (artifacts) {
    std::ofstream os(*artifacts / "annealing_witness.dsf");
    write_dsf(os, ann.witness);
    report.artifacts.push_back("annealing_witness.dsf");
  }

  // Haar series against a gauge with h(2^j) = 0.
  const int terms = static_cast<int>(positive(f, S, "haar_terms", 10));
  const double haar_M = f.get_double(S, "haar_M", 1.0);
  const auto [spec, phi] = haar_series_build(h, haar_M, terms, f.get_double(S, "haar_horizon", 4096.0));
  const HaarAudit audit = haar_series_audit(spec, phi, h, cfg.jobs);
  const std::vector<std::string> key = {h.name, "J=" + std::to_string(terms)};
  report.add(S, tag("haar-kd-bounded", key), audit.bound + 1e-12 - audit.k_d, 0.0);
  report.add(S, tag("haar-mean-zero", key), -audit.worst_mean, 1e-12);
  report.add(S, tag("haar-value-set", key), -static_cast<double>(audit.value_set_violations), 0.0);
  double variance = std::numeric_limits<double>::infinity(), bracket = variance, l1 = variance, l1_growth = variance;
  for (std::size_t j = 0; j < audit.table.size(); ++j) {
    const auto& row = audit.table[j];
    variance = std::min(variance, row.variance - row.terms);
    bracket = std::min(bracket, 2.0 * row.terms - row.variance);
    l1 = std::min(l1, row.l1_bound - row.l1);
    if (j > 0) l1_growth = std::min(l1_growth, row.l1 - audit.table[j - 1].l1);
  }
  report.add(S, tag("haar-variance-growth", key), variance, 1e-9);
  report.add(S, tag("haar-variance-bracket", key), bracket, 1e-9);
  report.add(S, tag("haar-l1-bounded", key), l1, 1e-12);
  if (audit.table.size() > 1) report.add(S, tag("haar-l1-increasing", key), l1_growth, 0.0);
  report.notes.push_back("haar series: depth " + std::to_string(spec.depth) + ", " + std::to_string(audit.intervals) +
                         " dyadic intervals, " + std::to_string(audit.nonconstant) + " non-constant, K^d = " + num(audit.k_d));

  if (artifacts) {
    std::ofstream os(*artifacts / "variance.csv");
    os << "terms,variance,k_d\n" << std::setprecision(17);
    for (const auto& row : audit.table) os << row.terms << ',' << row.variance << ',' << row.k_d << '\n';
    report.artifacts.push_back("variance.csv");

    // Per-interval audit rows for the coarse levels.
    const int rows_depth = std::min(spec.depth, static_cast<int>(f.get_long(S, "audit_rows_depth", 8)));
    const MomentPyramid pyramid(phi);
    std::ofstream audit_os(*artifacts / "haar_audit.csv");
    audit_os << "depth,index,mean,variance,k_h_local,nonconstant\n" << std::setprecision(17);
    for (int level = 0; level <= rows_depth; ++level) {
      const std::size_t width = phi.size() >> level;
      for (std::size_t idx = 0; idx < pyramid.count(level); ++idx) {
        const double mean = pyramid.mean(level, idx);
        double lo = phi.leaf(idx * width), hi = lo, local = 0.0;
        for (std::size_t j = idx * width; j < (idx + 1) * width; ++j) {
          lo = std::min(lo, phi.leaf(j));
          hi = std::max(hi, phi.leaf(j));
          local += h(std::fabs(phi.leaf(j) - mean));
        }
        audit_os << level << ',' << idx << ',' << mean << ',' << pyramid.variance(level, idx) << ','
                 << local / static_cast<double>(width) << ',' << (lo < hi ? 1 : 0) << '\n';
      }
    }
    report.artifacts.push_back("haar_audit.csv");
  }
}

namespace detail {

inline fs::path prepare_out(const ScenarioConfig& cfg) {
  fs::path out(cfg.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  require(!ec, ErrorKind::Config, "cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

inline void finish(Report& report, const fs::path& out, bool margins,
                   std::chrono::steady_clock::time_point start) {
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (margins) {
    std::ofstream os(out / "margins.csv");
    write_margins_csv(os, report);
    report.artifacts.push_back("margins.csv");
  }
  report.artifacts.push_back("report.txt");
  std::ofstream os(out / "report.txt");
  write_report_txt(os, report);
}

}  // namespace detail

/// Runs the selected suites; writes report.txt and margins.csv.
inline Report run_verify(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  require(!cfg.suites.empty(), ErrorKind::Config, "no suites selected");
  for (const auto& s : cfg.suites)
    if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
      cfg.file.error(cfg.file.line_of("scenario", "suites"), "unknown suite '" + s + "'");
  const fs::path out = detail::prepare_out(cfg);
  Report report;
  report.kind = "verify";
  report.echo = echo_of(cfg);
  // Suites run in canonical order whatever order the config lists them in.
  for (const auto& s : known_suites()) {
    if (std::find(cfg.suites.begin(), cfg.suites.end(), s) == cfg.suites.end()) continue;
    if (s == "theorem-chain") suite_theorem_chain(cfg, report);
    if (s == "bellman-geometry") suite_bellman_geometry(cfg, report);
    if (s == "truncation-lemmas") suite_truncation(cfg, report);
    if (s == "regularizer") suite_regularizer(cfg, report);
    if (s == "counterexamples") suite_counterexamples(cfg, report);
  }
  detail::finish(report, out, true, start);
  return report;
}

/// Heat-map colour for v in [0, 1].
inline std::string heat_colour(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 * std::min(1.0, 2.0 * v)));
  const int g = static_cast<int>(std::lround(255 * (1.0 - std::fabs(2.0 * v - 1.0))));
  const int b = static_cast<int>(std::lround(255 * std::min(1.0, 2.0 * (1.0 - v))));
  std::ostringstream os;
  os << '#' << std::hex << std::setfill('0') << std::setw(2) << r << std::setw(2) << g << std::setw(2) << b;
  return os.str();
}

/// G_t on the grid x1 = -X + 2X i / R, x2 = x1^2 + (j / R) t^2: surface.csv,
/// surface.svg (x1 across, height above the parabola up) and report.txt.
inline Report run_surface(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::string S = "surface";
  const auto& f = cfg.file;
  const double t = f.get_double(S, "t", 1.0);
  if (!(t > 0.0)) f.error(f.line_of(S, "t"), "t must be > 0");
  const long R = f.get_long(S, "resolution", 200);
  if (R < 1) f.error(f.line_of(S, "resolution"), "resolution must be >= 1");
  if (R > 4000) f.error(f.line_of(S, "resolution"), "resolution must be <= 4000");
  const double X = f.get_double(S, "x1_max", 3.0 * t);
  if (!(X > 0.0)) f.error(f.line_of(S, "x1_max"), "x1_max must be > 0");
  const OscillationGauge h = parse_gauge(cfg.gauge);
  const SubSolution G(h, t);
  const fs::path out = detail::prepare_out(cfg);

  std::vector<double> values(static_cast<std::size_t>((R + 1) * (R + 1)));
  std::vector<int> branches(values.size());
  parallel_for(static_cast<std::size_t>(R + 1), cfg.jobs, [&](std::size_t i) {
    const double x1 = -X + 2.0 * X * static_cast<double>(i) / R;
    for (long j = 0; j <= R; ++j) {
      const double x2 = x1 * x1 + (static_cast<double>(j) / R) * t * t;
      values[i * (R + 1) + j] = G(x1, x2);
      branches[i * (R + 1) + j] = G.branch(x1, x2);
    }
  });
  {
    std::ofstream os(out / "surface.csv");
    os << "x1,x2,t,branch,G\n" << std::setprecision(17);
    for (long i = 0; i <= R; ++i) {
      const double x1 = -X + 2.0 * X * static_cast<double>(i) / R;
      for (long j = 0; j <= R; ++j) {
        const double x2 = x1 * x1 + (static_cast<double>(j) / R) * t * t;
        os << x1 << ',' << x2 << ',' << t << ',' << branches[i * (R + 1) + j] << ',' << values[i * (R + 1) + j] << '\n';
      }
    }
  }
  {
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    const double cell = 600.0 / static_cast<double>(R + 1);
    std::ofstream os(out / "surface.svg");
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"660\" viewBox=\"0 0 640 660\">\n";
    os << "<title>G_t for " << h.name << ", t = " << t << "</title>\n";
    for (long i = 0; i <= R; ++i)
      for (long j = 0; j <= R; ++j) {
        const double v = hi > lo ? (values[i * (R + 1) + j] - lo) / (hi - lo) : 0.0;
        os << "<rect x=\"" << 20 + cell * i << "\" y=\"" << 20 + cell * (R - j) << "\" width=\"" << cell * 1.02
           << "\" height=\"" << cell * 1.02 << "\" fill=\"" << heat_colour(v) << "\"/>\n";
      }
    os << "<text x=\"20\" y=\"645\" font-size=\"12\">x1 from " << -X << " to " << X
       << "; height above x2 = x1^2 from 0 to t^2; G from " << lo << " to " << hi << "</text>\n";
    os << "</svg>\n";
  }
  Report report;
  report.kind = "surface";
  report.echo = echo_of(cfg);
  report.artifacts = {"surface.csv", "surface.svg"};
  report.add(S, tag("upper-corner", {h.name, "t=" + num(t)}), -std::fabs(G(0.0, t * t) - h(2.0 * t) / 4.0), 1e-12);
  if (G.finite_difference_warning()) report.warn("gauge " + h.name + " has no derivative; h' taken by finite differences (fd-warning)");
  detail::finish(report, out, false, start);
  return report;
}

struct OraclePoint {
  double x1 = 0.0, x2 = 0.0, t = 1.0;
};

inline std::vector<OraclePoint> oracle_points(const ConfigFile& f) {
  std::vector<OraclePoint> out;
  const std::string text = f.get_string("oracle", "points", "0 1 1");
  for (const auto& item : split(text, ';')) {
    std::istringstream is(item);
    OraclePoint p;
    std::string extra;
    if (!(is >> p.x1 >> p.x2 >> p.t) || (is >> extra))
      f.error(f.line_of("oracle", "points"), "points must be 'x1 x2 t' triples separated by ';'");
    out.push_back(p);
  }
  if (out.empty()) f.error(f.line_of("oracle", "points"), "no oracle points");
  return out;
}

/// Oracle sandwich rows x1,x2,t,lower_bound,oracle_value,closed_form_upper plus one
/// witness file per point. The lower bound is G_{sqrt(2) t}(x); the upper
/// column is h(2t) / 4 at x = (0, t^2) and empty elsewhere.
inline Report run_oracle(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::string S = "oracle";
  const auto& f = cfg.file;
  require(cfg.n == 1, ErrorKind::Cap, "the oracle runs in n = 1 only");
  const std::uint64_t seed = cfg.require_seed();
  const long depth = f.get_long(S, "depth", 3);
  if (depth < 0 || depth > kOracleMaxDepth) fail(ErrorKind::Cap, "oracle depth must lie in [0, 4]");
  const long budget = positive(f, S, "budget", 1000000);
  const OscillationGauge h = parse_gauge(cfg.gauge);
  const auto points = oracle_points(f);
  const fs::path out = detail::prepare_out(cfg);
  Report report;
  report.kind = "oracle";
  report.echo = echo_of(cfg);
  std::ofstream csv(out / "oracle.csv");
  csv << "x1,x2,t,lower_bound,oracle_value,closed_form_upper\n" << std::setprecision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    OracleResult r;
    double lower = 0.0;
    try {
      lower = g_eval(p.x1, p.x2, std::sqrt(2.0) * p.t, h);
      r = bellman_oracle(p.x1, p.x2, p.t, h, static_cast<int>(depth), budget, seed + i, cfg.jobs);
    } catch (const Error& e) {
      fail(e.kind(), "oracle point " + std::to_string(i + 1) + " (x1 = " + num(p.x1) + ", x2 = " + num(p.x2) +
                         ", t = " + num(p.t) + "): " + e.what());
    }
    const bool corner = p.x1 == 0.0 && p.x2 == p.t * p.t;
    const double upper = h(2.0 * p.t) / 4.0;
    csv << p.x1 << ',' << p.x2 << ',' << p.t << ',' << lower << ',' << r.value << ',';
    if (corner) csv << upper;
    csv << '\n';
    const std::string name = "witness_" + std::to_string(i + 1) + ".dsf";
    std::ofstream w(out / name);
    write_dsf(w, r.witness);
    report.artifacts.push_back(name);
    const std::vector<std::string> key = {h.name, num(p.x1), num(p.x2), "t=" + num(p.t)};
    report.add(S, tag("sandwich-lower", key), r.value - lower, 1e-6);
    if (corner) report.add(S, tag("sandwich-upper", key), upper - r.value, 1e-9);
    report.notes.push_back("point " + std::to_string(i + 1) + ": oracle " + num(r.value) + " from start " + r.best_start +
                           " (" + std::to_string(r.evaluations) + " evaluations)");
  }
  report.artifacts.insert(report.artifacts.begin(), "oracle.csv");
  detail::finish(report, out, true, start);
  return report;
}

/// The counterexample constructions with their tables and witnesses.
inline Report run_counterexample(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path out = detail::prepare_out(cfg);
  Report report;
  report.kind = "counterexample";
  report.echo = echo_of(cfg);
  suite_counterexamples(cfg, report, &out);
  detail::finish(report, out, true, start);
  return report;
}

inline Report run_scenario(const ScenarioConfig& cfg) {
  if (cfg.kind == "verify") return run_verify(cfg);
  if (cfg.kind == "surface") return run_surface(cfg);
  if (cfg.kind == "oracle") return run_oracle(cfg);
  if (cfg.kind == "counterexample") return run_counterexample(cfg);
  fail(ErrorKind::Config, "unknown scenario kind '" + cfg.kind + "'");
}

}  // namespace bmo::cli
