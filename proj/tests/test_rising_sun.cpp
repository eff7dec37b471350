#include "bmo/random.hpp"
#include "bmo/rising_sun.hpp"
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

// Checks both postconditions by splitting [0, 1] at every leaf boundary and
// interval endpoint; returns the covered mass.
double verify(const DyadicSimpleFunction& phi, double lambda, const std::vector<Interval>& parts) {
  const auto f = restrict(phi, 0.0, 1.0);
  std::vector<double> cuts = f.breaks;
  double mass = 0.0, prev = 0.0;
  for (const auto& L : parts) {
    CHECK(L.a >= prev);
    CHECK(L.a < L.b);
    CHECK_THAT(f.mean(L.a, L.b), WithinAbs(lambda, 1e-12));
    cuts.push_back(L.a);
    cuts.push_back(L.b);
    mass += L.length();
    prev = L.b;
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    if (cuts[i + 1] <= cuts[i]) continue;
    const bool covered = std::any_of(parts.begin(), parts.end(), [&](const Interval& L) { return L.a <= mid && mid < L.b; });
    if (!covered) CHECK(f.mean(cuts[i], cuts[i + 1]) <= lambda + 1e-12);
  }
  CHECK(mass <= 1.0 + 1e-15);
  return mass;
}

}  // namespace

TEST_CASE("one block of mass 0.4", "[rising_sun]") {
  const DyadicSimpleFunction phi(1, 2, {1, -1.0 / 3, -1.0 / 3, -1.0 / 3});
  const auto parts = rising_sun(phi, 0.5);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].a == 0.0);
  CHECK_THAT(parts[0].b, WithinAbs(0.4, 1e-15));
  verify(phi, 0.5, parts);
}

TEST_CASE("Haar step at level one half", "[rising_sun]") {
  // Every subinterval of [1/2, 1] has mean 1, so the block reaches into the
  // negative half: (-(1/2 - a) + 1/2) / (1 - a) = 1/2 gives a = 1/3.
  const DyadicSimpleFunction phi(1, 1, {-1, 1});
  const auto parts = rising_sun(phi, 0.5);
  REQUIRE(parts.size() == 1);
  CHECK_THAT(parts[0].a, WithinAbs(1.0 / 3.0, 1e-15));
  CHECK(parts[0].b == 1.0);
  verify(phi, 0.5, parts);
}

TEST_CASE("nothing above the level", "[rising_sun]") {
  CHECK(rising_sun(DyadicSimpleFunction(1, 2, {0.5, -1, 0.2, 0.5}), 0.5).empty());
  CHECK(rising_sun(DyadicSimpleFunction::constant(1, 3, 0.5), 0.5).empty());
}

TEST_CASE("rising sun errors", "[rising_sun]") {
  expect_kind(ErrorKind::Precondition, [] { rising_sun(DyadicSimpleFunction::constant(1, 1, 1.0), 0.5); });
  expect_kind(ErrorKind::DimensionMismatch, [] { rising_sun(DyadicSimpleFunction::constant(2, 1, 0.0), 0.5); });
  expect_kind(ErrorKind::Domain, [] { restrict(DyadicSimpleFunction::constant(1, 1, 0.0), 0.5, 0.5); });
}

TEST_CASE("random step functions satisfy both postconditions", "[rising_sun]") {
  auto rng = keyed_engine({2024});
  for (int trial = 0; trial < 300; ++trial) {
    const int depth = 1 + trial % 9;
    std::vector<double> v(std::size_t{1} << depth);
    for (double& x : v) x = normal(rng);
    const DyadicSimpleFunction phi(1, depth, v);
    const double mean = average(phi, DyadicCube::unit(1));
    const double lambda = mean + std::fabs(normal(rng));
    verify(phi, lambda, rising_sun(phi, lambda));
    verify(phi, mean, rising_sun(phi, mean));
  }
}

TEST_CASE("restriction keeps the leaf values", "[rising_sun]") {
  const DyadicSimpleFunction phi(1, 2, {1, 2, 3, 4});
  const auto f = restrict(phi, 0.3, 0.8);
  CHECK(f.breaks == std::vector<double>{0.3, 0.5, 0.75, 0.8});
  CHECK(f.values == std::vector<double>{2, 3, 4});
  CHECK_THAT(f.integral(0.3, 0.8), WithinAbs(0.4 + 0.75 + 0.2, 1e-15));
}
