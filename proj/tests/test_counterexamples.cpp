#include "bmo/counterexamples.hpp"
#include "catch_amalgamated.hpp"

using namespace bmo;
using Catch::Matchers::WithinAbs;

namespace {

void expect_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL("no error raised");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

// Non-constant dyadic intervals counted leaf by leaf.
long brute_nonconstant(const DyadicSimpleFunction& phi) {
  long count = 0;
  for (int k = 0; k <= phi.depth(); ++k) {
    const std::size_t width = std::size_t{1} << (phi.depth() - k);
    for (std::size_t i = 0; i < (std::size_t{1} << k); ++i) {
      bool varies = false;
      for (std::size_t j = i * width; j < (i + 1) * width; ++j) varies = varies || phi.leaf(j) != phi.leaf(i * width);
      count += varies ? 1 : 0;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("the non-monotone gauge", "[counterexamples]") {
  const auto h = section6_gauge();
  CHECK(h(0.5) == 0.25);
  CHECK(h(1.25) == 1.5625);
  CHECK(h(1.5) == 2.25);
  CHECK(h(2.0) == 0.0);
  CHECK_THAT(h(2.1), WithinAbs(0.4 * 2.25 * 2.25, 1e-12));
  CHECK_THAT(h(1.875), WithinAbs(0.5 * 1.75 * 1.75, 1e-12));
  for (int k = 2; k <= 200; ++k) CHECK(h(k) == 0.0);
  CHECK(h.flags.empty());
}

TEST_CASE("sqrt(10 M) bound", "[counterexamples]") {
  const auto h = section6_gauge();
  const auto flat = verify_sqrt10M(DyadicSimpleFunction::constant(1, 3, 7.0), 0.4, h);
  CHECK(flat.norm == 0.0);
  CHECK(flat.margin == 2.0);
  CHECK(flat.rising.empty());

  const DyadicSimpleFunction step(1, 1, {-2, 2});
  const double k = k_h_grid(step, h, 4).value;
  const auto rep = verify_sqrt10M(step, k * (1 + 1e-9) + 1e-12, h);
  CHECK(rep.margin > 0.0);
  CHECK(rep.outside_mass >= -1e-12);
  CHECK(rep.cover_mass >= -1e-9);
  CHECK(rep.half_shift >= -1e-9);
  CHECK(rep.uncovered >= -1e-12);
  CHECK(rep.fractional >= 0.0);
  CHECK(rep.J.a < rep.J.b);

  expect_kind(ErrorKind::Precondition, [&] { verify_sqrt10M(step, k * 0.5, h); });
  expect_kind(ErrorKind::DimensionMismatch, [&] { verify_sqrt10M(DyadicSimpleFunction::constant(2, 1, 0.0), 1.0, h); });
}

TEST_CASE("Haar series with thresholds at the integers", "[counterexamples]") {
  const auto h = section6_gauge();
  const auto [spec, phi] = haar_series_build(h, 1.0, 10, 1e7);
  REQUIRE(spec.thresholds.size() == 10);
  for (int j = 0; j < 10; ++j) {
    CHECK(spec.thresholds[j] == std::ldexp(1.0, j + 1));
    CHECK(spec.orders[j] == 2 * (j + 1));
  }
  CHECK(spec.depth == 21);
  CHECK(phi.depth() == 21);
  CHECK(haar_partial_sum(spec, 10) == phi.refined(21));
  CHECK(haar_partial_sum(spec, 0).depth() == 0);
  CHECK(haar_partial_sum(spec, 2).depth() == 5);
  expect_kind(ErrorKind::DepthTooSmall, [&] { haar_partial_sum(spec, 3, 5); });
  expect_kind(ErrorKind::OutOfRange, [&] { haar_partial_sum(spec, 11); });
}

TEST_CASE("Haar series audit", "[counterexamples]") {
  const auto h = section6_gauge();
  const auto [spec, phi] = haar_series_build(h, 1.0, 4, 1e7);
  const auto audit = haar_series_audit(spec, phi, h, 2);
  CHECK(audit.k_d <= audit.bound);
  CHECK(audit.k_d == 0.0);
  CHECK(audit.bound == 1.0);
  CHECK(audit.intervals == (2L << phi.depth()) - 1);
  CHECK(audit.nonconstant == brute_nonconstant(phi));
  CHECK(audit.worst_mean == 0.0);
  CHECK(audit.value_set_violations == 0);
  REQUIRE(audit.table.size() == 4);
  for (const auto& row : audit.table) {
    // Atoms are orthogonal: t_j^2 2^{-n_j} = 1 each.
    CHECK_THAT(row.variance, WithinAbs(row.terms, 1e-12));
    CHECK(row.l1 <= row.l1_bound + 1e-12);
  }
}

TEST_CASE("Haar series errors", "[counterexamples]") {
  expect_kind(ErrorKind::NotEnoughLowPoints, [] { haar_series_build(gauge_power(0.5), 1.0, 3, 1e6); });
  expect_kind(ErrorKind::OutOfRange, [] { haar_series_build(section6_gauge(), 1.0, 0, 1e6); });
  expect_kind(ErrorKind::Cap, [] { haar_series_build(section6_gauge(), 1.0, 11, 1e7); });
  CHECK(haar_order(2.0) == 2);
  CHECK(haar_order(std::sqrt(8.0)) == 3);
  CHECK(haar_order(3.0) == 3);
}

TEST_CASE("adversarial annealing", "[counterexamples]") {
  const auto h = section6_gauge();
  const auto a = adversarial_annealing(h, 3, 6, 200, 16.0, 3);
  const auto b = adversarial_annealing(h, 3, 6, 200, 16.0, 3);
  CHECK(a.steps == 200);
  CHECK(a.best_ratio == b.best_ratio);
  CHECK(a.witness == b.witness);
  CHECK(a.best_ratio <= 10.0);
  CHECK_THAT(bmo_to_k_ratio(a.witness, h, 6), WithinAbs(a.best_ratio, 1e-12 * a.best_ratio));
  CHECK(bmo_to_k_ratio(DyadicSimpleFunction::constant(1, 2, 3.0), h, 4) == 0.0);
  expect_kind(ErrorKind::Cap, [&] { adversarial_annealing(h, 9, 6, 1, 1.0, 1); });
}
