#pragma once

#include <array>
#include <cmath>

namespace bmo {

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class Fn>
void gauss_kronrod_15(Fn& f, double a, double b, double& kronrod, double& error) {
  const double center = 0.5 * (a + b), half = 0.5 * (b - a);
  const double fc = f(center);
  double k = fc * kKronrodWeights[7];
  double g = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double sum = f(center - dx) + f(center + dx);
    k += kKronrodWeights[i] * sum;
    if (i % 2 == 1) g += kGaussWeights[i / 2] * sum;
  }
  kronrod = k * half;
  error = std::fabs((k - g) * half);
}

template <class Fn>
double adaptive(Fn& f, double a, double b, double tol, int depth) {
  double k = 0, err = 0;
  gauss_kronrod_15(f, a, b, k, err);
  if (err <= tol || depth >= 40 || b - a <= 1e-14 * std::fabs(a)) return k;
  const double mid = 0.5 * (a + b);
  return adaptive(f, a, mid, 0.5 * tol, depth + 1) + adaptive(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod 7/15 quadrature of f over [a, b] to absolute
/// tolerance tol. Subdivision is deterministic.
template <class Fn>
double integrate(Fn&& f, double a, double b, double tol = 1e-9) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, tol);
  return detail::adaptive(f, a, b, tol, 0);
}

}  // namespace bmo
