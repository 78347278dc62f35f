// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include <Eigen/Dense>

// Rectangle probabilities for standardized multivariate normal and Student-t
// laws. Bivariate cases use Genz's BVNU (Drezner-Wesolowsky with Gauss-Legendre
// quadrature) and Dunnett's integer-dof series; trivariate normal integrates
// the bivariate conditional over the first coordinate; higher dimensions use
// separation of variables with a shifted Halton sequence.
namespace censorfuse::elliptical {

/// P(X > h, Y > k) for a standard bivariate normal with correlation r.
double bvn_upper(double h, double k, double r);

/// P(X < h, Y < k).
inline double bvn_cdf(double h, double k, double r) { return bvn_upper(-h, -k, r); }

/// Univariate Student-t CDF for integer nu >= 1.
double t_cdf(double t, int nu);
double t_log_pdf(double t, double nu);
/// Student-t quantile (any nu > 0).
double t_quantile(double p, double nu);

/// P(X < h, Y < k) for a standard bivariate t with integer nu and correlation r.
double bvt_cdf(double h, double k, double r, int nu);

/// P(lo < X < hi) for X ~ N(0, corr), corr a correlation matrix. Infinite
/// limits are allowed.
double mvn_rect(std::span<const double> lo, std::span<const double> hi, const Eigen::MatrixXd& corr);

/// P(lo < X < hi) for X a standard multivariate t with integer nu.
double mvt_rect(std::span<const double> lo, std::span<const double> hi, const Eigen::MatrixXd& corr,
                int nu);

}  // namespace censorfuse::elliptical
