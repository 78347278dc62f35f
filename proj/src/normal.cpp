// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/normal.hpp"

#include <cmath>
#include <limits>

#include "censorfuse/errors.hpp"

namespace censorfuse::normal {

double pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double ccdf(double z) { return 0.5 * std::erfc(z * M_SQRT1_2); }

double interval(double a, double b) {
  if (b <= a) return 0.0;
  if (a > 0.0) return ccdf(a) - ccdf(b);
  return cdf(b) - cdf(a);
}

namespace {

// Acklam's coefficients.
constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                        1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                        6.680131188771972e+01,  -1.328068155288572e+01};
constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                        -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                        3.754408661907416e+00};

double acklam(double p) {
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log1p(-p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal::quantile: p must lie in (0,1)");
  }
  double x = acklam(p);
  // cdf(x) - p, evaluated in the tail that keeps it well conditioned; 1 - p is
  // exact for p >= 0.5.
  const double resid = (p < 0.5) ? cdf(x) - p : (1.0 - p) - ccdf(x);
  const double u = resid * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace censorfuse::normal
