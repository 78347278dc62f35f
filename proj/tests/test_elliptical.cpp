// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "censorfuse/elliptical.hpp"
#include "censorfuse/normal.hpp"
#include "censorfuse/numerics.hpp"
#include "censorfuse/rng.hpp"

using namespace censorfuse;
using namespace censorfuse::elliptical;

TEST(Bvn, OrthantProbabilities) {
  // P(X < 0, Y < 0) = 1/4 + asin(r) / (2 pi).
  for (double r : {-0.9, -0.3, 0.0, 0.5, 0.95}) {
    EXPECT_NEAR(bvn_cdf(0.0, 0.0, r), 0.25 + std::asin(r) / (2 * std::numbers::pi), 1e-15) << r;
  }
}

TEST(Bvn, IndependentFactorizes) {
  EXPECT_NEAR(bvn_cdf(0.7, -1.2, 0.0), normal::cdf(0.7) * normal::cdf(-1.2), 1e-15);
}

TEST(Bvn, MatchesConditionalQuadrature) {
  // P(X < h, Y < k) = integral of phi(x) Phi((k - r x) / sqrt(1 - r^2)) over x < h.
  for (double r : {-0.6, 0.25, 0.8}) {
    const double h = 0.4, k = -0.3;
    const double s = std::sqrt(1 - r * r);
    const double q = numerics::integrate_1d(
        [&](double x) { return normal::pdf(x) * normal::cdf((k - r * x) / s); }, -12.0, h, 200);
    EXPECT_NEAR(bvn_cdf(h, k, r), q, 1e-12) << r;
  }
}

TEST(StudentT, CdfMatchesBoost) {
  for (int nu : {1, 2, 3, 5, 8, 30}) {
    boost::math::students_t dist(nu);
    for (double t : {-6.0, -1.3, 0.0, 0.4, 2.5, 9.0}) {
      EXPECT_NEAR(t_cdf(t, nu), boost::math::cdf(dist, t), 1e-13) << nu << " " << t;
    }
  }
  EXPECT_NEAR(t_quantile(0.975, 5.0), 2.570581835636314, 1e-12);
}

TEST(StudentT, BivariateMatchesConditionalQuadrature) {
  // Conditional of a bivariate t: Y | X=x ~ t_{nu+1} with scale sqrt((nu + x^2)(1 - r^2) / (nu + 1)).
  const int nu = 5;
  for (double r : {-0.4, 0.3, 0.7}) {
    const double h = 0.6, k = 1.1;
    const double q = numerics::integrate_1d(
        [&](double x) {
          const double sc = std::sqrt((nu + x * x) * (1 - r * r) / (nu + 1));
          return std::exp(t_log_pdf(x, nu)) * t_cdf((k - r * x) / sc, nu + 1);
        },
        -200.0, h, 400);
    EXPECT_NEAR(bvt_cdf(h, k, r, nu), q, 1e-7) << r;
  }
}

TEST(MvnRect, TrivariateAgainstMonteCarlo) {
  Eigen::MatrixXd c(3, 3);
  c << 1, 0.3, 0.5, 0.3, 1, 0.2, 0.5, 0.2, 1;
  const std::vector<double> lo{-0.5, -1.0, -INFINITY}, hi{1.0, 0.8, 0.3};
  const double p = mvn_rect(lo, hi, c);
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  const Eigen::MatrixXd L = llt.matrixL();
  Rng rng(5);
  std::normal_distribution<double> n01;
  const int n = 400000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d z(n01(rng), n01(rng), n01(rng));
    const Eigen::Vector3d x = L * z;
    bool in = true;
    for (int d = 0; d < 3; ++d) in = in && x[d] > lo[d] && x[d] < hi[d];
    hits += in;
  }
  const double est = double(hits) / n;
  EXPECT_NEAR(p, est, 4 * std::sqrt(est * (1 - est) / n));
}

TEST(MvnRect, FourDimensionalIndependent) {
  const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(4, 4);
  const std::vector<double> lo{-1, -1, 0, -2}, hi{1, 0.5, 2, 0};
  double expect = 1.0;
  for (int d = 0; d < 4; ++d) expect *= normal::interval(lo[d], hi[d]);
  EXPECT_NEAR(mvn_rect(lo, hi, c), expect, 1e-4);
}

TEST(MvtRect, BivariateReducesToBvt) {
  Eigen::MatrixXd c(2, 2);
  c << 1, 0.45, 0.45, 1;
  const std::vector<double> lo{-INFINITY, -INFINITY}, hi{0.3, -0.2};
  EXPECT_NEAR(mvt_rect(lo, hi, c, 4), bvt_cdf(0.3, -0.2, 0.45, 4), 1e-10);
}
