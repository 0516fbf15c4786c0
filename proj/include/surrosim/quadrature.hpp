#pragma once

#include <array>
#include <cmath>
#include <limits>

namespace surrosim::numeric {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

namespace detail {

// 15-point Kronrod nodes on [-1, 1] (non-negative half) with embedded 7-point Gauss.
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

template <class F>
QuadratureResult gk15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  QuadratureResult r;
  r.value = kronrod * half;
  r.error = std::abs((kronrod - gauss) * half);
  r.evaluations = 15;
  return r;
}

template <class F>
QuadratureResult adaptive(F& f, double a, double b, double abs_tol, double rel_tol, int depth) {
  QuadratureResult whole = gk15(f, a, b);
  if (!std::isfinite(whole.value)) {
    whole.value = std::isnan(whole.value) ? whole.value : std::numeric_limits<double>::infinity();
    return whole;
  }
  if (whole.error <= std::max(abs_tol, rel_tol * std::abs(whole.value)) ||
      (b - a) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a))) {
    return whole;
  }
  if (depth <= 0) {
    whole.converged = false;
    return whole;
  }
  const double mid = 0.5 * (a + b);
  QuadratureResult left = adaptive(f, a, mid, 0.5 * abs_tol, rel_tol, depth - 1);
  QuadratureResult right = adaptive(f, mid, b, 0.5 * abs_tol, rel_tol, depth - 1);
  QuadratureResult r;
  r.value = left.value + right.value;
  r.error = left.error + right.error;
  r.evaluations = whole.evaluations + left.evaluations + right.evaluations;
  r.converged = left.converged && right.converged;
  return r;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b]. A panel is
/// accepted when its Kronrod-Gauss difference is within
/// max(abs_tol, rel_tol * |value|). An integrand that overflows yields +inf.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double abs_tol = 1e-10, double rel_tol = 1e-8,
                           int max_depth = 40) {
  if (a == b) return {};
  if (b < a) {
    QuadratureResult r = integrate(f, b, a, abs_tol, rel_tol, max_depth);
    r.value = -r.value;
    return r;
  }
  return detail::adaptive(f, a, b, abs_tol, rel_tol, max_depth);
}

}  // namespace surrosim::numeric
