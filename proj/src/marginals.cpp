// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/marginals.hpp"

#include <cmath>
#include <string>

#include "censorfuse/errors.hpp"
#include "censorfuse/normal.hpp"

namespace censorfuse {

std::string_view to_string(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

GaussianMarginal::GaussianMarginal(double mu0, double mu1, double sigma)
    : mu0_(mu0), mu1_(mu1), sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("GaussianMarginal: sigma must be positive and finite");
  }
  if (!std::isfinite(mu0) || !std::isfinite(mu1)) {
    throw ParameterError("GaussianMarginal: means must be finite");
  }
  if (mu1 < mu0) {
    throw ParameterError("GaussianMarginal: mu1 >= mu0 required for the MLR property");
  }
}

double GaussianMarginal::pdf(double x, Hypothesis h) const {
  return normal::pdf((x - mean(h)) / sigma_) / sigma_;
}

double GaussianMarginal::log_pdf(double x, Hypothesis h) const {
  const double z = (x - mean(h)) / sigma_;
  return -0.5 * z * z - std::log(sigma_) + std::log(normal::kInvSqrt2Pi);
}

double GaussianMarginal::cdf(double x, Hypothesis h) const {
  return normal::cdf((x - mean(h)) / sigma_);
}

double GaussianMarginal::ccdf(double x, Hypothesis h) const {
  return normal::ccdf((x - mean(h)) / sigma_);
}

double GaussianMarginal::inv_cdf(double p, Hypothesis h) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("GaussianMarginal::inv_cdf: p must lie in (0,1), got " + std::to_string(p));
  }
  return mean(h) + sigma_ * normal::quantile(p);
}

double GaussianMarginal::log_likelihood_ratio(double x) const {
  // log N(x; mu1) - log N(x; mu0) = (mu1 - mu0)(2x - mu0 - mu1) / (2 sigma^2)
  return (mu1_ - mu0_) * (2.0 * x - mu0_ - mu1_) / (2.0 * sigma_ * sigma_);
}

double GaussianMarginal::likelihood_ratio(double x) const {
  return std::exp(log_likelihood_ratio(x));
}

double GaussianMarginal::interval_mass(double a, double b, Hypothesis h) const {
  return normal::interval((a - mean(h)) / sigma_, (b - mean(h)) / sigma_);
}

}  // namespace censorfuse
