#include <cstdio>
#include <fstream>

#include "bmo/counterexamples.hpp"
#include "bmo/gauge.hpp"
#include "bmo/gauge_spec.hpp"
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

TEST_CASE("power gauge", "[gauges]") {
  const auto h = gauge_power(0.5);
  CHECK(h(4.0) == 2.0);
  CHECK(h.inverse(2.0) == 4.0);
  CHECK(h.has(GaugeFlag::ThirdDerivativePositive));
  const auto id = gauge_power(1.0);
  CHECK(id(3.5) == 3.5);
  CHECK_FALSE(id.has(GaugeFlag::ThirdDerivativePositive));
  CHECK(id.has(GaugeFlag::Concave));
  expect_kind(ErrorKind::OutOfRange, [] { gauge_power(0.0); });
  expect_kind(ErrorKind::OutOfRange, [] { gauge_power(1.5); });
}

TEST_CASE("log gauge", "[gauges]") {
  const auto h = gauge_log();
  CHECK(h(0.0) == 0.0);
  CHECK_THAT(h(std::exp(1.0) - 1.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(h.inverse(0.75), WithinRel(std::expm1(0.75), 1e-15));
}

TEST_CASE("inverse by bisection", "[gauges]") {
  CHECK_THAT(gauge_inverse(gauge_power(0.5), 3.0), WithinRel(9.0, 1e-12));
  CHECK(gauge_inverse(gauge_power(0.5), 0.0) == 0.0);
  CHECK_THAT(gauge_inverse(gauge_log(), 4.0), WithinRel(53.598150033144236, 1e-12));
  for (const auto& h : {gauge_power(0.5), gauge_power(1.0 / 3.0), gauge_power(0.9), gauge_log()}) {
    for (double t : audit_grid(200, 1e-6, 1e6)) CHECK_THAT(gauge_inverse(h, h(t)), WithinRel(t, 1e-10));
  }
  // Tables extend linearly past the last knot.
  const auto table = gauge_table({{0, 0}, {1, 1}, {2, 1.5}}, "flat");
  CHECK_THAT(gauge_inverse(table, 2.0), WithinRel(3.0, 1e-12));
  expect_kind(ErrorKind::NonIncreasingGauge, [] { gauge_inverse(section6_gauge(), 1.0); });
}

TEST_CASE("triangle inequality audit", "[gauges]") {
  const auto h = gauge_power(0.5);
  CHECK(h(25.0) <= h(9.0) + h(16.0));
  CHECK(gauge_log()(0.0) <= 2.0 * std::log(2.0));
  for (const auto& g : {gauge_power(0.5), gauge_power(0.25), gauge_log(), gauge_power(1.0)}) {
    const auto audit = triangle_inequality_audit(g, 100000, 3);
    CHECK(audit.samples == 100000);
    CHECK(audit.worst_margin >= -1e-12 * std::max(1.0, g(2e6)));
  }
  expect_kind(ErrorKind::FlagMissing, [] { triangle_inequality_audit(section6_gauge(), 10); });
}

TEST_CASE("flag audits agree with declared flags", "[gauges]") {
  for (const auto& g : {gauge_power(0.5), gauge_power(1.0 / 3.0), gauge_log()}) {
    const auto audit = audit_flags(g);
    CHECK(audit.consistent_with(g.flags));
    CHECK(audit.increasing);
    CHECK(audit.concave);
    CHECK(audit.third_derivative_positive);
  }
  const auto s6 = audit_flags(section6_gauge());
  CHECK_FALSE(s6.increasing);
  CHECK(s6.nonnegative);
}

TEST_CASE("derivative audit", "[gauges]") {
  for (const auto& g : {gauge_power(0.5), gauge_power(0.7), gauge_log(), gauge_power(1.0)})
    CHECK(audit_derivatives(g).passed());
  auto broken = gauge_log();
  broken.d2 = [](double t) { return 1.0 / ((1.0 + t) * (1.0 + t)); };
  CHECK_FALSE(audit_derivatives(broken).passed());
}

TEST_CASE("table gauges", "[gauges]") {
  const std::string path = "test_gauges_table.txt";
  {
    std::ofstream os(path);
    os << "# t h\n0 0\n1 1\n3 2\n7 3\n";
  }
  const auto h = load_table_gauge(path);
  CHECK(h(0.5) == 0.5);
  CHECK(h(2.0) == 1.5);
  CHECK(h(11.0) == 4.0);
  CHECK(h.has(GaugeFlag::Concave));
  CHECK(h.has(GaugeFlag::Increasing));
  CHECK_FALSE(h.has_derivatives());
  CHECK(parse_gauge("table:" + path)(2.0) == 1.5);
  std::remove(path.c_str());
  expect_kind(ErrorKind::Parse, [] { gauge_table({{0, 0}, {0, 1}}); });
  expect_kind(ErrorKind::Parse, [] { gauge_table({{1, 0}, {2, 1}}); });
  expect_kind(ErrorKind::Parse, [] { load_table_gauge("no/such/file.txt"); });
  const auto convex = gauge_table({{0, 0}, {1, 1}, {2, 3}});
  CHECK_FALSE(convex.has(GaugeFlag::Concave));
}

TEST_CASE("gauge specs", "[gauges]") {
  CHECK(parse_gauge("power:p=0.5")(9.0) == 3.0);
  CHECK(parse_gauge("log1p").name == "log1p");
  CHECK(parse_gauge("section6")(2.0) == 0.0);
  expect_kind(ErrorKind::Parse, [] { parse_gauge("power:p=abc"); });
  expect_kind(ErrorKind::Parse, [] { parse_gauge("cosh"); });
  expect_kind(ErrorKind::OutOfRange, [] { parse_gauge("power:p=2"); });
}

TEST_CASE("shifted gauge", "[gauges]") {
  const auto f = shifted(gauge_power(0.5), 3.0);
  CHECK(f(4.0) == 5.0);
  CHECK_FALSE(f.has(GaugeFlag::VanishesAtZero));
  CHECK(f.d1(4.0) == gauge_power(0.5).d1(4.0));
}
