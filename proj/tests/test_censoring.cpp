// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <gtest/gtest.h>

#include "censorfuse/censoring.hpp"
#include "censorfuse/errors.hpp"
#include "censorfuse/normal.hpp"
#include "censorfuse/numerics.hpp"
#include "censorfuse/rng.hpp"

using namespace censorfuse;

namespace {
const GaussianMarginal kSensor(0.0, 0.5, 3.0);
}

TEST(SolveUpperLimit, ClosedForm) {
  const double t2 = solve_upper_limit(kSensor, 0.0, 0.35);
  EXPECT_NEAR(t2, 3.0 * normal::quantile(0.85), 1e-9);
  EXPECT_NEAR(t2, 3.109, 1e-3);
  const double mass = numerics::integrate_1d([](double x) { return kSensor.pdf(x, Hypothesis::H0); }, 0.0, t2, 64);
  EXPECT_NEAR(mass, 0.35, 1e-8);
}

TEST(SolveUpperLimit, MonotoneAndVanishing) {
  double prev = 0.0;
  for (double b : {1e-9, 0.05, 0.1, 0.2, 0.3, 0.45, 0.49}) {
    const double t2 = solve_upper_limit(kSensor, 0.0, b);
    EXPECT_GT(t2, prev);
    prev = t2;
  }
  EXPECT_NEAR(solve_upper_limit(kSensor, 0.0, 1e-9), 0.0, 1e-6);
}

TEST(SolveUpperLimit, Infeasible) {
  EXPECT_THROW(solve_upper_limit(kSensor, 0.0, 0.5), DomainError);
  EXPECT_THROW(solve_upper_limit(kSensor, 0.0, 0.0), DomainError);
  EXPECT_THROW(solve_upper_limit(kSensor, 0.0, 1.0), DomainError);
}

TEST(ApplyCensoring, ClosedInterval) {
  const CensoringScheme s(0.0, 3.109, 0.35);
  EXPECT_EQ(apply_censoring(s, 0.0).kind, SensorMessage::Kind::Censored);
  EXPECT_EQ(apply_censoring(s, 3.109).kind, SensorMessage::Kind::Censored);
  EXPECT_EQ(apply_censoring(s, 1.0).kind, SensorMessage::Kind::Censored);
  const auto m = apply_censoring(s, -0.2);
  EXPECT_EQ(m.kind, SensorMessage::Kind::Sent);
  EXPECT_EQ(m.value, -0.2);
}

TEST(ApplyCensoring, EmpiricalRate) {
  const auto s = CensoringScheme::from_rate(kSensor, 0.0, 0.35);
  Rng rng(3);
  const int n = 1000000;
  int censored = 0;
  for (int i = 0; i < n; ++i) {
    censored += s.censors(kSensor.inv_cdf(uniform_open(rng), Hypothesis::H0));
  }
  EXPECT_NEAR(double(censored) / n, 0.35, 3 * std::sqrt(0.35 * 0.65 / n));
}

TEST(NoSendMass, Values) {
  const auto s = CensoringScheme::from_rate(kSensor, 0.0, 0.35);
  EXPECT_NEAR(no_send_mass(s, kSensor, Hypothesis::H0), 0.35, 1e-12);
  const double h1 = normal::cdf((s.t2() - 0.5) / 3.0) - normal::cdf(-0.5 / 3.0);
  EXPECT_NEAR(no_send_mass(s, kSensor, Hypothesis::H1), h1, 1e-14);
  EXPECT_NEAR(rho(s, kSensor), h1 / 0.35, 1e-12);
  EXPECT_EQ(no_send_mass(CensoringScheme(1.0, 1.0, 0.0), kSensor, Hypothesis::H0), 0.0);
}

TEST(Rho, TranslationInvariant) {
  const CensoringScheme a(0.0, 2.0, kSensor.cdf(2.0, Hypothesis::H0) - 0.5);
  const GaussianMarginal shifted(1.5, 2.0, 3.0);
  const CensoringScheme b(1.5, 3.5, a.beta());
  EXPECT_NEAR(rho(a, kSensor), rho(b, shifted), 1e-13);
}

TEST(Rho, LrImageIsInterval) {
  // MLR: the likelihood ratio is monotone on the interval, so its image is [LR(t1), LR(t2)].
  const auto s = CensoringScheme::from_rate(kSensor, 0.0, 0.35);
  const double lo = kSensor.likelihood_ratio(s.t1()), hi = kSensor.likelihood_ratio(s.t2());
  for (double x = s.t1(); x <= s.t2(); x += 0.01) {
    const double lr = kSensor.likelihood_ratio(x);
    EXPECT_GE(lr, lo - 1e-15);
    EXPECT_LE(lr, hi + 1e-15);
  }
  EXPECT_GT(rho(s, kSensor), lo);
  EXPECT_LT(rho(s, kSensor), hi);
}
