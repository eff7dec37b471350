#include <sstream>

#include "bmo/dyadic.hpp"
#include "bmo/random.hpp"
#include "catch_amalgamated.hpp"

using namespace bmo;
using Catch::Matchers::WithinAbs;

namespace {

DyadicSimpleFunction witness() { return DyadicSimpleFunction(1, 3, {-2, 0, 0, 0, 0, 0, 0, 2}); }
DyadicSimpleFunction haar_step() { return DyadicSimpleFunction(1, 1, {-1, 1}); }

// Plain mean of the leaves under J, written without the pairwise tree.
double naive_mean(const DyadicSimpleFunction& phi, const DyadicCube& J, int power) {
  const int shift = phi.depth() - J.depth;
  double sum = 0.0;
  long count = 0;
  for (std::size_t flat = 0; flat < phi.size(); ++flat) {
    const DyadicCube leaf = DyadicCube::from_flat(phi.dim(), phi.depth(), flat);
    bool inside = true;
    for (int a = 0; a < phi.dim(); ++a) inside = inside && (leaf.index[a] >> shift) == J.index[a];
    if (!inside) continue;
    sum += power == 1 ? phi.leaf(flat) : phi.leaf(flat) * phi.leaf(flat);
    ++count;
  }
  return sum / count;
}

void expect_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL("no error raised");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

}  // namespace

TEST_CASE("cube geometry", "[dyadic]") {
  const DyadicCube J(2, 3, {5, 2, 0});
  CHECK(J.measure() == std::ldexp(1.0, -6));
  CHECK(J.side() == 0.125);
  CHECK(J.lower(0) == 0.625);
  CHECK(J.flat_index() == 5 + 8 * 2);
  CHECK(DyadicCube::from_flat(2, 3, J.flat_index()) == J);
  double total = 0.0;
  for (const auto& c : J.children()) {
    CHECK(J.contains(c));
    total += c.measure();
  }
  CHECK(total == J.measure());
  CHECK_FALSE(J.contains(DyadicCube(2, 3, {4, 2, 0})));
  expect_kind(ErrorKind::OutOfRange, [] { DyadicCube(1, 2, {4, 0, 0}); });
  expect_kind(ErrorKind::Cap, [] { DyadicCube(4, 1, {}); });
}

TEST_CASE("function construction enforces caps and leaf counts", "[dyadic]") {
  expect_kind(ErrorKind::Parse, [] { DyadicSimpleFunction(1, 2, {1, 2, 3}); });
  expect_kind(ErrorKind::Parse, [] { DyadicSimpleFunction(1, 1, {1, std::nan("")}); });
  expect_kind(ErrorKind::Cap, [] { DyadicSimpleFunction::constant(1, 22, 0.0); });
  expect_kind(ErrorKind::Cap, [] { DyadicSimpleFunction::constant(2, 11, 0.0); });
  expect_kind(ErrorKind::Cap, [] { DyadicSimpleFunction::constant(3, 7, 0.0); });
  CHECK(DyadicSimpleFunction::constant(3, 2, 1.5).size() == 64);
}

TEST_CASE("average examples", "[dyadic]") {
  CHECK(average(haar_step(), DyadicCube::unit(1)) == 0.0);
  const auto c = DyadicSimpleFunction::constant(2, 3, -0.7);
  CHECK(average(c, DyadicCube(2, 2, {1, 3, 0})) == -0.7);
  CHECK(average(witness(), DyadicCube(1, 2, {0, 0, 0})) == -1.0);
  expect_kind(ErrorKind::DepthMismatch, [] { average(haar_step(), DyadicCube(1, 2, {})); });
  expect_kind(ErrorKind::DimensionMismatch, [] { average(haar_step(), DyadicCube::unit(2)); });
}

TEST_CASE("second moment examples", "[dyadic]") {
  CHECK(second_moment(haar_step(), DyadicCube::unit(1)) == 1.0);
  CHECK(second_moment(DyadicSimpleFunction::constant(1, 4, 3.0), DyadicCube(1, 2, {2, 0, 0})) == 9.0);
  CHECK(second_moment(witness(), DyadicCube::unit(1)) == 1.0);
}

TEST_CASE("pyramid and average agree with the plain leaf mean", "[dyadic]") {
  for (int n = 1; n <= 3; ++n) {
    auto rng = keyed_engine({42, std::uint64_t(n)});
    const int depth = n == 3 ? 2 : 3;
    std::vector<double> v(std::size_t{1} << (n * depth));
    for (double& x : v) x = normal(rng);
    const DyadicSimpleFunction phi(n, depth, v);
    const MomentPyramid pyramid(phi);
    for (int k = 0; k <= depth; ++k) {
      double partition = 0.0;
      for (std::size_t flat = 0; flat < pyramid.count(k); ++flat) {
        const DyadicCube J = DyadicCube::from_flat(n, k, flat);
        CHECK(pyramid.mean(k, flat) == average(phi, J));
        CHECK(pyramid.square(k, flat) == second_moment(phi, J));
        CHECK_THAT(average(phi, J), WithinAbs(naive_mean(phi, J, 1), 1e-12));
        CHECK_THAT(second_moment(phi, J), WithinAbs(naive_mean(phi, J, 2), 1e-12));
        partition += std::ldexp(pyramid.mean(k, flat), -n * k);
      }
      CHECK_THAT(partition, WithinAbs(average(phi, DyadicCube::unit(n)), 1e-12));
    }
  }
}

TEST_CASE("sibling order does not change averages", "[dyadic]") {
  const DyadicSimpleFunction a(1, 2, {0.1, 0.7, 1e16, -1e16});
  const DyadicSimpleFunction b(1, 2, {0.7, 0.1, -1e16, 1e16});
  CHECK(average(a, DyadicCube::unit(1)) == average(b, DyadicCube::unit(1)));
}

TEST_CASE("truncation", "[dyadic]") {
  const auto phi = witness();
  const auto t0 = truncate(phi, 0);
  CHECK(t0.depth() == 0);
  CHECK(t0.leaf(0) == average(phi, DyadicCube::unit(1)));
  CHECK(truncate(phi, 3) == phi);
  CHECK(truncate(phi, 7) == phi);
  CHECK(truncate(phi, 2) == DyadicSimpleFunction(1, 2, {-1, 0, 0, 1}));

  // Averages up to depth m survive, variances do not grow.
  auto rng = keyed_engine({7});
  std::vector<double> v(64);
  for (double& x : v) x = normal(rng);
  const DyadicSimpleFunction psi(2, 3, v);
  const auto psi1 = truncate(psi, 1);
  const MomentPyramid full(psi), cut(psi1);
  for (int k = 0; k <= 1; ++k)
    for (std::size_t f = 0; f < full.count(k); ++f) {
      CHECK_THAT(cut.mean(k, f), WithinAbs(full.mean(k, f), 1e-14));
      CHECK(cut.variance(k, f) <= full.variance(k, f) + 1e-14);
    }
  expect_kind(ErrorKind::OutOfRange, [&] { truncate(phi, -1); });
}

TEST_CASE("clamp", "[dyadic]") {
  CHECK(clamp(haar_step(), 1.0) == haar_step());
  CHECK(clamp(DyadicSimpleFunction(1, 2, {-2, 0, 0, 2}), 1.0) == DyadicSimpleFunction(1, 2, {-1, 0, 0, 1}));
  CHECK(clamp(witness(), 0.0) == DyadicSimpleFunction::constant(1, 3, 0.0));
  const auto once = clamp(witness(), 1.5);
  CHECK(clamp(once, 1.5) == once);
  const MomentPyramid p(once);
  for (int k = 0; k <= 3; ++k)
    for (std::size_t f = 0; f < p.count(k); ++f) CHECK(std::fabs(p.mean(k, f)) <= 1.5);
  expect_kind(ErrorKind::NegativeBound, [] { clamp(haar_step(), -1.0); });
}

TEST_CASE("Haar functions", "[dyadic]") {
  CHECK(haar(1) == DyadicSimpleFunction(1, 2, {0, 0, -1, 1}));
  for (int k = 1; k <= 6; ++k) {
    const auto h = haar(k, 8);
    CHECK(average(h, DyadicCube::unit(1)) == 0.0);
    CHECK(average(h.map([](double v) { return std::fabs(v); }), DyadicCube::unit(1)) == std::ldexp(1.0, -k));
  }
  expect_kind(ErrorKind::DepthTooSmall, [] { haar(3, 3); });
  expect_kind(ErrorKind::OutOfRange, [] { haar(0, 3); });
}

TEST_CASE("refinement and arithmetic", "[dyadic]") {
  const auto phi = haar_step();
  const auto fine = phi.refined(3);
  CHECK(fine == DyadicSimpleFunction(1, 3, {-1, -1, -1, -1, 1, 1, 1, 1}));
  const auto diff = witness() - phi;
  CHECK(diff.depth() == 3);
  CHECK(diff.leaf(0) == -1.0);
  CHECK(diff.leaf(7) == 1.0);
  CHECK((2.0 * phi).leaf(1) == 2.0);
  const DyadicSimpleFunction sq(2, 1, {1, 2, 3, 4});
  const auto sq2 = sq.refined(2);
  CHECK(sq2.at({3, 0, 0}) == 2.0);
  CHECK(sq2.at({0, 3, 0}) == 3.0);
  CHECK(sq2.at({2, 2, 0}) == 4.0);
}

TEST_CASE("DSF round trip and rejection", "[dyadic]") {
  const DyadicSimpleFunction phi(2, 1, {0.1, -1e-300, 3.25, 1e17});
  CHECK(parse_dsf(to_dsf(phi)) == phi);
  CHECK(parse_dsf(to_dsf(witness())) == witness());
  expect_kind(ErrorKind::Parse, [] { parse_dsf("1\n2\n1 2 3\n"); });
  expect_kind(ErrorKind::Parse, [] { parse_dsf("1\n1\n1 2 3\n"); });
  expect_kind(ErrorKind::Parse, [] { parse_dsf("1\n1\n1 inf\n"); });
  expect_kind(ErrorKind::Parse, [] { parse_dsf("1\n1\n1 x\n"); });
  expect_kind(ErrorKind::Parse, [] { parse_dsf(""); });
}
