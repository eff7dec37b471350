#include "bmo/bellman.hpp"
#include "bmo/random.hpp"
#include "catch_amalgamated.hpp"

using namespace bmo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

void expect_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL("no error raised");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

}  // namespace

TEST_CASE("parabolic strip membership", "[bellman]") {
  CHECK(omega_contains(0.0, 0.0, 1.0));
  CHECK(omega_contains(1.0, 2.0, 1.0));
  CHECK(omega_contains(-1.0, 1.5, 1.0));
  CHECK_FALSE(omega_contains(1.0, 0.99, 1.0));
  CHECK_FALSE(omega_contains(1.0, 2.0000001, 1.0));
  CHECK(omega_contains(1e3, 1e6 - 1e-7, 1.0));  // slack scales with |x2|
  CHECK(omega_tolerance(0.5) == 1e-12);
}

TEST_CASE("slope function", "[bellman]") {
  const auto sqrt_gauge = gauge_power(0.5);
  const SlopeFunction m(sqrt_gauge, 1.0);
  CHECK_THAT(m(2.0), WithinRel(std::sqrt(2.0) / 2.0, 1e-15));
  // Integrating factor evaluated in extended precision, and a separate RK4 run.
  CHECK_THAT(slope_m(3.0, m), WithinAbs(0.457747016596113625, 1e-10));
  const SlopeFunction m_log(gauge_log(), 2.0);
  CHECK_THAT(m_log(7.0), WithinAbs(0.204774267865131524, 1e-10));
  const SlopeFunction m_id(gauge_power(1.0), 0.7);
  for (double u : {1.4, 2.0, 9.3, 40.0}) CHECK_THAT(m_id(u), WithinAbs(1.0, 1e-12));
  CHECK(ode_residual_check(m, 50) <= 1e-7);
  CHECK(ode_residual_check(m_log, 50) <= 1e-7);
  expect_kind(ErrorKind::Domain, [&] { m(1.5); });
  expect_kind(ErrorKind::Domain, [&] { SlopeFunction(sqrt_gauge, 0.0); });
}

TEST_CASE("sub-solution values", "[bellman]") {
  const auto h = gauge_power(0.5);
  const SubSolution G(h, 1.0);
  CHECK(G(0.0, 0.0) == 0.0);
  CHECK_THAT(G(0.0, 1.0), WithinAbs(0.353553390593273762, 1e-15));  // h(2t)/4
  CHECK(G.branch(1.0, 1.5) == 1);
  CHECK_THAT(G(1.0, 1.5), WithinAbs(0.816496580927726033, 1e-15));
  CHECK(G.branch(1.5, 3.25) == 3);
  CHECK_THAT(G(1.5, 3.25), WithinAbs(1.02150276108706270, 1e-10));
  CHECK_THAT(G(1.2, 2.42), WithinAbs(0.845064795754404858, 1e-10));
  CHECK(G(-1.5, 3.25) == G(1.5, 3.25));
  CHECK(G.branch(0.5, 1.2) == 2);
  CHECK_THAT(g_eval(1.5, 3.25, 1.0, h), WithinAbs(G(1.5, 3.25), 1e-15));
  for (double x1 : {-7.0, -0.3, 0.0, 0.9, 2.5, 11.0}) CHECK_THAT(G(x1, x1 * x1), WithinAbs(h(std::fabs(x1)), 1e-12));
  CHECK(boundary_condition_check(G, 400) <= 1e-9);
}

TEST_CASE("sub-solution domain errors", "[bellman]") {
  const auto h = gauge_power(0.5);
  expect_kind(ErrorKind::Domain, [&] { g_eval(2.0, 1.0, 1.0, h); });
  expect_kind(ErrorKind::Domain, [&] { g_eval(0.0, 1.5, 1.0, h); });
  expect_kind(ErrorKind::Domain, [&] { lower_bound_A(-1.0, h, 1); });
  expect_kind(ErrorKind::Cap, [&] { lower_bound_A(1.0, h, 4); });
}

TEST_CASE("lower bound A", "[bellman]") {
  const auto h = gauge_power(0.5);
  CHECK_THAT(lower_bound_A(1.0, h, 1), WithinAbs(0.210224103813428636, 1e-15));
  // G_t(0, t^2) = h(2t)/4 dominates A for n = 1.
  CHECK(SubSolution(h, 1.0)(0.0, 1.0) >= lower_bound_A(1.0, h, 1));
  CHECK(lower_bound_A(0.0, h, 3) == 0.0);
}

TEST_CASE("seams and reflection", "[bellman]") {
  for (const auto& h : {gauge_power(0.5), gauge_log(), gauge_power(0.9)})
    for (double t : {0.25, 1.0, 3.0}) CHECK(seam_continuity_check(t, h, 200).worst() <= 1e-9 * std::max(1.0, h(4 * t)));
}

TEST_CASE("local convexity", "[bellman]") {
  for (const auto& h : {gauge_power(0.5), gauge_log()}) {
    for (double t : {0.5, 2.0}) {
      const SubSolution G(h, t);
      const auto rep = local_convexity_fuzz(G, 4000, 17, 2);
      CHECK(rep.trials == 4000);
      CHECK(rep.worst_margin >= -1e-9);
      CHECK(local_convexity_fuzz(G, 500, 17, 1).worst_margin == local_convexity_fuzz(G, 500, 17, 3).worst_margin);
    }
  }
}

TEST_CASE("segments with midpoint in the strip stay in the wider strip", "[bellman]") {
  const auto rep = segment_domain_fuzz(20000, 5, 2);
  CHECK(rep.failures == 0);
  CHECK(rep.precondition_rejects == 0);
  CHECK(segment_domain_check({-1.0, 1.0}, {1.0, 1.0}, 1.0));
  expect_kind(ErrorKind::Precondition, [] { segment_domain_check({0.0, -1.0}, {0.0, 1.0}, 1.0); });
  expect_kind(ErrorKind::Precondition, [] { segment_domain_check({0.0, 0.0}, {0.0, 8.0}, 1.0); });
}

TEST_CASE("one-step induction", "[bellman]") {
  const auto h = gauge_power(0.5);
  const DyadicSimpleFunction haar_step(1, 1, {-1, 1});
  CHECK(bellman_induction_check(haar_step, 1.0, h, 1) >= -1e-12);
  CHECK(bellman_induction_check(haar_step, 1.0, h, 0) == 0.0);
  expect_kind(ErrorKind::NormExceedsT, [&] { bellman_induction_check(haar_step, 0.5, h, 1); });
  expect_kind(ErrorKind::DepthMismatch, [&] { bellman_induction_check(haar_step, 1.0, h, 2); });

  for (int n = 1; n <= 3; ++n) {
    auto rng = keyed_engine({31, std::uint64_t(n)});
    const int depth = n == 1 ? 6 : n == 2 ? 3 : 2;
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> v(std::size_t{1} << (n * depth));
      for (double& x : v) x = normal(rng);
      DyadicSimpleFunction phi(n, depth, v);
      const double t = 0.5 + trial * 0.3;
      phi = (t * (1.0 - 1e-13) / bmo_dyadic(phi).value) * phi;
      for (int k = 1; k <= depth; ++k) CHECK(bellman_induction_check(phi, t, h, k) >= -1e-9);
    }
  }
}

TEST_CASE("table gauges fall back to finite differences", "[bellman]") {
  const auto table = gauge_table({{0, 0}, {1, 1}, {4, 2}, {9, 3}, {16, 4}});
  const SubSolution G(table, 1.0);
  CHECK(G.finite_difference_warning());
  CHECK_FALSE(SubSolution(gauge_log(), 1.0).finite_difference_warning());
  CHECK(std::isfinite(G(2.5, 6.5)));
}
