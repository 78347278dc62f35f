// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace censorfuse {

enum class Hypothesis { H0 = 0, H1 = 1 };

std::string_view to_string(Hypothesis h);

/// Equal-variance Gaussian observation model: N(mu0, sigma^2) under H0 and
/// N(mu1, sigma^2) under H1. Requires mu1 >= mu0 so the likelihood ratio is
/// nondecreasing (MLR).
class GaussianMarginal {
 public:
  GaussianMarginal(double mu0, double mu1, double sigma);

  double mu0() const { return mu0_; }
  double mu1() const { return mu1_; }
  double sigma() const { return sigma_; }
  double mean(Hypothesis h) const { return h == Hypothesis::H0 ? mu0_ : mu1_; }

  double pdf(double x, Hypothesis h) const;
  double log_pdf(double x, Hypothesis h) const;
  double cdf(double x, Hypothesis h) const;
  /// Upper tail 1 - cdf, computed without cancellation.
  double ccdf(double x, Hypothesis h) const;
  /// Throws DomainError unless 0 < p < 1.
  double inv_cdf(double p, Hypothesis h) const;

  double likelihood_ratio(double x) const;
  double log_likelihood_ratio(double x) const;

  /// P(a < X <= b | h) evaluated in the better-conditioned tail.
  double interval_mass(double a, double b, Hypothesis h) const;

  bool operator==(const GaussianMarginal&) const = default;

 private:
  double mu0_;
  double mu1_;
  double sigma_;
};

}  // namespace censorfuse
