// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "censorfuse/copulas.hpp"
#include "censorfuse/elliptical.hpp"
#include "censorfuse/errors.hpp"
#include "censorfuse/normal.hpp"
#include "censorfuse/numerics.hpp"
#include "censorfuse/rng.hpp"

using namespace censorfuse;

namespace {

std::vector<CopulaModel> bivariate_models() {
  Eigen::MatrixXd r(2, 2);
  r << 1, 0.4, 0.4, 1;
  return {CopulaModel::archimedean(CopulaFamily::Clayton, 2.0),
          CopulaModel::archimedean(CopulaFamily::Frank, 2.917),
          CopulaModel::archimedean(CopulaFamily::Frank, -3.0),
          CopulaModel::archimedean(CopulaFamily::Gumbel, 1.6),
          CopulaModel::gaussian(r),
          CopulaModel::student_t(r, 5),
          CopulaModel::product()};
}

std::vector<CopulaModel> trivariate_models() {
  return {CopulaModel::archimedean(CopulaFamily::Clayton, 1.2),
          CopulaModel::archimedean(CopulaFamily::Frank, 4.0),
          CopulaModel::archimedean(CopulaFamily::Gumbel, 1.8),
          CopulaModel::gaussian(CopulaModel::equicorrelation(3, 0.35)),
          CopulaModel::student_t(CopulaModel::equicorrelation(3, 0.35), 4)};
}

}  // namespace

TEST(CopulaCdf, ClosedForms) {
  const double u[] = {0.5, 0.5};
  EXPECT_NEAR(copula_cdf(CopulaModel::archimedean(CopulaFamily::Clayton, 2.0), u), 1.0 / std::sqrt(7.0), 1e-14);
  EXPECT_NEAR(copula_cdf(CopulaModel::archimedean(CopulaFamily::Clayton, 2.0), u), 0.37796, 1e-5);

  const double v[] = {0.3, 0.8};
  const double th = 2.5;
  const double frank = -std::log1p(std::expm1(-th * 0.3) * std::expm1(-th * 0.8) / std::expm1(-th)) / th;
  EXPECT_NEAR(copula_cdf(CopulaModel::archimedean(CopulaFamily::Frank, th), v), frank, 1e-14);

  const double g = 1.7;
  const double gumbel = std::exp(-std::pow(std::pow(-std::log(0.3), g) + std::pow(-std::log(0.8), g), 1 / g));
  EXPECT_NEAR(copula_cdf(CopulaModel::archimedean(CopulaFamily::Gumbel, g), v), gumbel, 1e-14);

  Eigen::MatrixXd r(2, 2);
  r << 1, -0.3, -0.3, 1;
  EXPECT_NEAR(copula_cdf(CopulaModel::gaussian(r), v),
              elliptical::bvn_cdf(normal::quantile(0.3), normal::quantile(0.8), -0.3), 1e-13);
  EXPECT_NEAR(copula_cdf(CopulaModel::product(), v), 0.24, 1e-15);
}

TEST(CopulaCdf, FrechetBoundsAndMargins) {
  for (const auto& m : bivariate_models()) {
    for (double a : {0.05, 0.4, 0.9}) {
      for (double b : {0.1, 0.55, 0.97}) {
        const double u[] = {a, b};
        const double c = copula_cdf(m, u);
        EXPECT_GE(c, std::max(a + b - 1.0, 0.0) - 1e-9) << m.describe();
        EXPECT_LE(c, std::min(a, b) + 1e-9) << m.describe();
      }
      const double edge[] = {a, 1.0};
      EXPECT_NEAR(copula_cdf(m, edge), a, 1e-7) << m.describe();
    }
  }
}

TEST(CopulaDensity, MatchesMixedFiniteDifference) {
  const double h = 1e-4;
  for (const auto& m : bivariate_models()) {
    for (auto [a, b] : {std::pair{0.3, 0.6}, std::pair{0.75, 0.2}, std::pair{0.5, 0.5}}) {
      auto C = [&](double x, double y) {
        const double u[] = {x, y};
        return copula_cdf(m, u);
      };
      const double fd = (C(a + h, b + h) - C(a + h, b - h) - C(a - h, b + h) + C(a - h, b - h)) / (4 * h * h);
      const double u[] = {a, b};
      EXPECT_NEAR(copula_density(m, u), fd, 2e-4 * std::max(1.0, fd)) << m.describe();
      EXPECT_NEAR(copula_log_density(m, u), std::log(copula_density(m, u)), 1e-10) << m.describe();
    }
  }
}

TEST(SliceMass, MixedSliceMatchesIntegratedDensity) {
  // Point in coordinate 0 and 2, range in coordinate 1: integrate the density over the range.
  for (const auto& m : trivariate_models()) {
    const double u0 = 0.35, u2 = 0.7, lo = 0.2, hi = 0.65;
    const Coordinate coords[] = {Coordinate::point(u0), Coordinate::range(lo, hi), Coordinate::point(u2)};
    const double q = numerics::integrate_1d(
        [&](double v) {
          const double u[] = {u0, v, u2};
          return copula_density(m, u);
        },
        lo, hi, 64);
    EXPECT_NEAR(slice_mass(m, coords), q, 1e-6 * std::max(1.0, q)) << m.describe();
  }
}

TEST(SliceMass, OnePointTwoRangesMatchesQuadrature) {
  for (const auto& m : trivariate_models()) {
    const double u0 = 0.6;
    const Coordinate coords[] = {Coordinate::point(u0), Coordinate::range(0.1, 0.5), Coordinate::range(0.3, 0.9)};
    numerics::Box box({{0.1, 0.5}, {0.3, 0.9}});
    const double q = numerics::integrate_box(
        [&](std::span<const double> x) {
          const double u[] = {u0, x[0], x[1]};
          return copula_density(m, u);
        },
        box, numerics::TensorGaussLegendre{40});
    EXPECT_NEAR(slice_mass(m, coords), q, 2e-5) << m.describe();
  }
}

TEST(SliceMass, AllRangesIsHVolume) {
  for (const auto& m : trivariate_models()) {
    const double lo[] = {0.1, 0.2, 0.05}, hi[] = {0.6, 0.9, 0.5};
    const Coordinate coords[] = {Coordinate::range(0.1, 0.6), Coordinate::range(0.2, 0.9),
                                 Coordinate::range(0.05, 0.5)};
    double incl = 0.0;
    for (int mask = 0; mask < 8; ++mask) {
      double u[3];
      int lows = 0;
      for (int d = 0; d < 3; ++d) {
        const bool low = (mask >> d) & 1;
        u[d] = low ? lo[d] : hi[d];
        lows += low;
      }
      incl += (lows % 2 ? -1.0 : 1.0) * copula_cdf(m, u);
    }
    EXPECT_NEAR(h_volume(m, lo, hi), incl, 1e-9) << m.describe();
    EXPECT_NEAR(slice_mass(m, coords), incl, 1e-9) << m.describe();
  }
}

TEST(SliceMass, ProductFactorizes) {
  const Coordinate coords[] = {Coordinate::point(0.3), Coordinate::range(0.2, 0.5), Coordinate::range(0.0, 0.25)};
  EXPECT_NEAR(slice_mass(CopulaModel::product(), coords), 0.3 * 0.25, 1e-15);
}

TEST(ConditionalCdf, MatchesFiniteDifference) {
  for (const auto& m : trivariate_models()) {
    const double rest[] = {0.4, 0.8};
    EXPECT_NEAR(conditional_cdf_wrt_first(m, 0.55, rest), conditional_cdf_wrt_first_fd(m, 0.55, rest), 1e-4)
        << m.describe();
  }
}

TEST(HVolume, RejectsInvertedBox) {
  const double lo[] = {0.5, 0.1}, hi[] = {0.4, 0.2};
  EXPECT_THROW(h_volume(CopulaModel::product(), lo, hi), DomainError);
}

TEST(HVolume, MatchesSamplingOnRandomBoxes) {
  Rng rng(42);
  for (const auto& m : trivariate_models()) {
    const int n = 40000;
    std::vector<std::vector<double>> s;
    for (int i = 0; i < n; ++i) s.push_back(copula_sample(m, 3, rng));
    int outside = 0;
    for (int b = 0; b < 50; ++b) {
      double lo[3], hi[3];
      for (int d = 0; d < 3; ++d) {
        const double x = uniform_open(rng), y = uniform_open(rng);
        lo[d] = std::min(x, y);
        hi[d] = std::max(x, y);
      }
      const double p = h_volume(m, lo, hi);
      int hits = 0;
      for (const auto& u : s) {
        bool in = true;
        for (int d = 0; d < 3; ++d) in = in && u[d] >= lo[d] && u[d] <= hi[d];
        hits += in;
      }
      const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
      if (std::abs(double(hits) / n - p) > 3 * se) ++outside;
      EXPECT_LT(std::abs(double(hits) / n - p), 4.5 * se + 1e-12) << m.describe();
    }
    EXPECT_LE(outside, 2) << m.describe();
  }
}

TEST(Sampling, UniformMarginsAndKendallTau) {
  Rng rng(7);
  for (const auto& m : bivariate_models()) {
    const int n = 20000;
    std::vector<double> x(n), y(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto u = copula_sample(m, 2, rng);
      x[i] = u[0];
      y[i] = u[1];
      mean += u[1];
    }
    EXPECT_NEAR(mean / n, 0.5, 4 * std::sqrt(1.0 / 12 / n)) << m.describe();
    EXPECT_NEAR(numerics::kendall_tau(x, y), param_to_tau(m), 0.02) << m.describe();
  }
}

TEST(Sampling, FrankTauPointThree) {
  Rng rng(11);
  const auto m = model_from_tau(CopulaFamily::Frank, 0.3);
  std::vector<double> x, y;
  for (int i = 0; i < 100000; ++i) {
    const auto u = copula_sample(m, 2, rng);
    x.push_back(u[0]);
    y.push_back(u[1]);
  }
  EXPECT_NEAR(numerics::kendall_tau(x, y), 0.3, 0.01);
}

TEST(Tau, RoundTripsAndKnownValues) {
  EXPECT_NEAR(tau_to_param(CopulaFamily::Clayton, 0.3), 2 * 0.3 / 0.7, 1e-12);
  EXPECT_NEAR(tau_to_param(CopulaFamily::Gumbel, 0.3), 1 / 0.7, 1e-12);
  EXPECT_NEAR(tau_to_param(CopulaFamily::Gaussian, 0.3), std::sin(0.15 * M_PI), 1e-12);
  EXPECT_NEAR(tau_to_param(CopulaFamily::Frank, 0.3), 2.9174, 1e-3);
  for (auto f : {CopulaFamily::Clayton, CopulaFamily::Frank, CopulaFamily::Gumbel}) {
    for (double tau : {0.001, 0.1, 0.3, 0.6, 0.85}) {
      EXPECT_NEAR(param_to_tau(CopulaModel::archimedean(f, tau_to_param(f, tau))), tau, 1e-8)
          << to_string(f) << " " << tau;
    }
  }
  EXPECT_NEAR(param_to_tau(CopulaModel::archimedean(CopulaFamily::Frank, tau_to_param(CopulaFamily::Frank, -0.4))),
              -0.4, 1e-8);
  EXPECT_THROW(tau_to_param(CopulaFamily::Gumbel, -0.2), DomainError);
}

TEST(CopulaModel, DimensionChecks) {
  EXPECT_THROW(CopulaModel::archimedean(CopulaFamily::Frank, -2.0).check_dimension(3), ParameterError);
  EXPECT_NO_THROW(CopulaModel::archimedean(CopulaFamily::Frank, -2.0).check_dimension(2));
  EXPECT_THROW(CopulaModel::gaussian(CopulaModel::equicorrelation(3, 0.2)).check_dimension(2), ParameterError);
  EXPECT_THROW(CopulaModel::archimedean(CopulaFamily::Gumbel, 0.5), ParameterError);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 1.2, 1.2, 1;
  EXPECT_THROW(CopulaModel::gaussian(bad), ParameterError);
}

TEST(Family, NamesRoundTrip) {
  for (auto f : {CopulaFamily::Gaussian, CopulaFamily::StudentT, CopulaFamily::Clayton, CopulaFamily::Frank,
                 CopulaFamily::Gumbel, CopulaFamily::Product}) {
    EXPECT_EQ(parse_family(to_string(f)), f);
  }
  EXPECT_THROW(parse_family("joe"), ParameterError);
}
