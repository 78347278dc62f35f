// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace censorfuse::normal {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double pdf(double z);
double cdf(double z);

/// Upper tail 1 - cdf(z), accurate for large z.
double ccdf(double z);

/// Standard normal quantile. Rational approximation followed by one Halley
/// step; relative accuracy ~1e-15 on (1e-300, 1 - 1e-16).
double quantile(double p);

/// P(a < Z <= b) without cancellation in either tail.
double interval(double a, double b);

}  // namespace censorfuse::normal
