// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/censoring.hpp"

#include <cmath>
#include <string>

#include "censorfuse/errors.hpp"

namespace censorfuse {

CensoringScheme::CensoringScheme(double t1, double t2, double beta) : t1_(t1), t2_(t2), beta_(beta) {
  if (!std::isfinite(t1) || !std::isfinite(t2)) throw ParameterError("censoring limits must be finite");
  if (t1 > t2) throw ParameterError("censoring interval needs t1 <= t2");
  if (!(beta >= 0.0 && beta < 1.0)) throw ParameterError("censoring rate must lie in [0, 1)");
}

CensoringScheme CensoringScheme::from_rate(const GaussianMarginal& m, double t1, double beta) {
  return CensoringScheme(t1, solve_upper_limit(m, t1, beta), beta);
}

double solve_upper_limit(const GaussianMarginal& m, double t1, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw DomainError("censoring rate must lie in (0, 1), got " + std::to_string(beta));
  }
  const double p = m.cdf(t1, Hypothesis::H0) + beta;
  if (!(p < 1.0)) throw DomainError("censoring rate infeasible: F(t1|H0) + beta >= 1");
  return m.inv_cdf(p, Hypothesis::H0);
}

SensorMessage apply_censoring(const CensoringScheme& s, double x) {
  return s.censors(x) ? SensorMessage::censored() : SensorMessage::sent(x);
}

double no_send_mass(const CensoringScheme& s, const GaussianMarginal& m, Hypothesis h) {
  return m.cdf(s.t2(), h) - m.cdf(s.t1(), h);
}

double rho(const CensoringScheme& s, const GaussianMarginal& m) {
  const double m0 = no_send_mass(s, m, Hypothesis::H0);
  if (!(m0 > 0.0)) throw DomainError("rho: no-send interval has zero mass under H0");
  return no_send_mass(s, m, Hypothesis::H1) / m0;
}

}  // namespace censorfuse
