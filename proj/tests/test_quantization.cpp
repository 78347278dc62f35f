// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "censorfuse/censoring.hpp"
#include "censorfuse/errors.hpp"
#include "censorfuse/normal.hpp"
#include "censorfuse/numerics.hpp"
#include "censorfuse/quantization.hpp"

using namespace censorfuse;

namespace {

const GaussianMarginal kSensor(0.0, 0.5, 3.0);

CensoringScheme reference_scheme() { return CensoringScheme::from_rate(kSensor, 0.0, 0.35); }

numerics::GridDensity gaussian_grid(double sigma, double step) {
  numerics::GridDensity g;
  g.step = step;
  const long half = static_cast<long>(std::ceil(10 * sigma / step));
  g.origin = -half * step;
  for (long k = -half; k <= half; ++k) g.values.push_back(normal::pdf(k * step / sigma) / sigma);
  return g;
}

}  // namespace

TEST(Quantizer, LevelsAndIndices) {
  const auto s = reference_scheme();
  const QuantizerSpec spec(1.0, 15, 12, s);
  const auto lv = quantize(spec, s.t2() + 0.4);
  EXPECT_EQ(lv.index, 0);
  EXPECT_NEAR(lv.value, s.t2() + 0.5, 1e-15);
  const auto low = quantize(spec, -100.0);
  EXPECT_EQ(low.index, -15);
  EXPECT_NEAR(low.value, s.t1() - 15 * 1.0 + 0.5, 1e-15);
  const auto high = quantize(spec, 100.0);
  EXPECT_EQ(high.index, 11);
  EXPECT_NEAR(high.value, s.t2() + 12 - 0.5, 1e-12);
  EXPECT_EQ(quantize(spec, -0.3).index, -1);
  EXPECT_EQ(quantize(spec, -1.0).index, -1);  // lower cells are closed on the left
  EXPECT_EQ(quantize(spec, s.t2() + 1.0).index, 0);  // upper cells are closed on the right
  EXPECT_THROW(spec.index(1.0), DomainError);
}

TEST(Quantizer, PartitionsTile) {
  const auto s = reference_scheme();
  const QuantizerSpec spec(1.0, 6, 5, s);
  const auto first = partition(spec, -1);
  EXPECT_NEAR(first.lo, -1.0, 1e-15);
  EXPECT_NEAR(first.hi, 0.0, 1e-15);
  EXPECT_TRUE(std::isinf(partition(spec, -6).lo));
  EXPECT_TRUE(std::isinf(partition(spec, 4).hi));
  for (int i = -6; i < -1; ++i) EXPECT_NEAR(partition(spec, i).hi, partition(spec, i + 1).lo, 1e-15);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(partition(spec, i).hi, partition(spec, i + 1).lo, 1e-15);
  EXPECT_NEAR(partition(spec, 0).lo, s.t2(), 1e-15);
  // Every cell's level lies inside it.
  for (int i = -5; i < 4; ++i) {
    const auto c = partition(spec, i);
    EXPECT_GT(spec.level(i), c.lo);
    EXPECT_LT(spec.level(i), c.hi);
  }
}

TEST(Quantizer, CoveringKeepsSaturationSmall) {
  const auto s = reference_scheme();
  const auto spec = QuantizerSpec::covering(1.0, s, kSensor);
  for (auto h : {Hypothesis::H0, Hypothesis::H1}) EXPECT_LT(spec.saturation_mass(kSensor, h), 1e-5);
  double total = no_send_mass(s, kSensor, Hypothesis::H0);
  for (int i = -spec.lower_levels(); i < spec.upper_levels(); ++i) {
    const auto c = spec.partition(i);
    total += kSensor.interval_mass(c.lo, c.hi, Hypothesis::H0);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Quantizer, CompressedLevels) {
  const QuantizerSpec spec(0.5, 4, 4, CensoringScheme(0.0, 1.0, 0.1));
  EXPECT_NEAR(spec.compressed_level(-1), -0.25, 1e-15);
  EXPECT_NEAR(spec.compressed_level(0), 0.75, 1e-15);
  EXPECT_NEAR(spec.compressed_level(2), 1.75, 1e-15);
  // The compressed level is the compressor image of the level.
  for (int i : {-3, -1, 0, 3}) EXPECT_NEAR(compress(spec.scheme(), 0.5, spec.level(i)), spec.compressed_level(i), 1e-15);
}

TEST(Compressor, InverseAndContinuity) {
  const auto s = reference_scheme();
  for (double x : {-5.0, -0.1, 0.0, 1.0, s.t2(), s.t2() + 0.7, 12.0}) {
    EXPECT_NEAR(decompress(s, 1.0, compress(s, 1.0, x)), x, 1e-12);
  }
  EXPECT_NEAR(compress(s, 1.0, s.t2()), 1.0, 1e-15);
  EXPECT_NEAR(compress(s, 1.0, s.t2() + 1e-12), 1.0, 1e-11);
  EXPECT_THROW(compress(CensoringScheme(1.0, 1.0, 0.0), 1.0, 0.0), DomainError);
}

TEST(CompressedDensity, MassAndSpotValue) {
  const auto s = reference_scheme();
  const double q = 1.0;
  const auto fy = compressed_density(kSensor, s, q, Hypothesis::H0, default_grid_step(q));
  EXPECT_NEAR(fy.mass(), 1.0, 1e-4);
  // Inside [0, q]: f_Y(y) = (t2 / q) f_X(y t2 / q).
  EXPECT_NEAR(fy.at(0.5), s.t2() * kSensor.pdf(0.5 * s.t2(), Hypothesis::H0), 1e-4);
  EXPECT_NEAR(fy.at(-2.0), kSensor.pdf(-2.0, Hypothesis::H0), 1e-5);
  EXPECT_NEAR(fy.at(q + 1.5), kSensor.pdf(s.t2() + 1.5, Hypothesis::H0), 1e-5);
}

TEST(CompressedDensity, IdentityCompressor) {
  const double q = 0.5;
  const CensoringScheme s(0.0, q, kSensor.cdf(q, Hypothesis::H0) - 0.5);
  const auto fy = compressed_density(kSensor, s, q, Hypothesis::H1, default_grid_step(q));
  for (double y : {-4.0, 0.2, 0.5, 3.3}) EXPECT_NEAR(fy.at(y), kSensor.pdf(y, Hypothesis::H1), 2e-6);
}

TEST(Widrow, MomentAdditivity) {
  const auto s = reference_scheme();
  const double q = 1.0;
  const double step = default_grid_step(q);
  const auto fy = compressed_density(kSensor, s, q, Hypothesis::H1, step);
  const auto fw = uniform_kernel(q, step);
  EXPECT_NEAR(fw.mass(), 1.0, 1e-12);
  EXPECT_NEAR(fw.variance(), q * q / 12.0, 1e-4);
  const auto fyw = widrow_output_density(kSensor, s, q, Hypothesis::H1, step);
  EXPECT_NEAR(fyw.mean(), fy.mean(), 1e-10);
  EXPECT_NEAR(fyw.variance(), fy.variance() + q * q / 12.0, 0.01 * fyw.variance());
  const auto fz = numerics::grid_convolve(fyw, gaussian_kernel(1.0, step));
  EXPECT_NEAR(fz.mass(), 1.0, 1e-4);
  EXPECT_NEAR(fz.mean(), fy.mean(), 1e-10);
  EXPECT_NEAR(fz.variance(), fy.variance() + q * q / 12.0 + 1.0, 0.01 * fz.variance());
}

TEST(ZDensity, CdfConsistentWithPdf) {
  const auto s = reference_scheme();
  const auto z = quantized_z_density(kSensor, s, 1.0, NoiseSpec{1.0}, Hypothesis::H0);
  EXPECT_NEAR(z.cdf(-1e3), 0.0, 1e-15);
  EXPECT_NEAR(z.cdf(1e3), 1.0, 1e-4);
  const double a = -1.3, b = 2.2;
  const double q = numerics::integrate_1d([&](double x) { return z.pdf(x); }, a, b, 200);
  EXPECT_NEAR(z.cdf(b) - z.cdf(a), q, 1e-4);
  double prev = 0.0;
  for (double x = -20; x < 20; x += 0.37) {
    EXPECT_GE(z.cdf(x), prev);
    prev = z.cdf(x);
  }
}

TEST(CharacteristicFunction, GaussianMatchesClosedForm) {
  const double sigma = 3.0;
  const auto g = gaussian_grid(sigma, 0.01);
  std::vector<double> ups;
  for (double v = 0.0; v <= 3.0; v += 0.05) ups.push_back(v);
  const auto mag = characteristic_function(g, ups);
  EXPECT_NEAR(mag.front(), 1.0, 1e-9);
  for (std::size_t k = 0; k < ups.size(); ++k) EXPECT_NEAR(mag[k], gaussian_cf_magnitude(sigma, ups[k]), 1e-6);
  EXPECT_NEAR(gaussian_cf_magnitude(3.0, 2 * std::numbers::pi), std::exp(-std::pow(2 * std::numbers::pi, 2) * 4.5),
              1e-300);
}

TEST(CharacteristicFunction, UnderResolvedGridRejected) {
  const auto g = gaussian_grid(1.0, 0.1);
  const double v[] = {6.0};
  EXPECT_THROW(characteristic_function(g, v), ResolutionError);
}

TEST(CharacteristicFunction, IdentityCompressionIsBandLimited) {
  const double q = 0.5;
  const CensoringScheme s(0.0, q, kSensor.cdf(q, Hypothesis::H0) - 0.5);
  const auto fy = compressed_density(kSensor, s, q, Hypothesis::H0, default_grid_step(q));
  std::vector<double> ups;
  for (double v = 2 * std::numbers::pi; v <= 12.0; v += 0.25) ups.push_back(v);
  for (double m : characteristic_function(fy, ups)) EXPECT_LT(m, 0.02);
}

TEST(Kernels, UniformWidthMustMatchGrid) {
  EXPECT_THROW(uniform_kernel(1.0, 0.3), ResolutionError);
  const auto k = uniform_kernel(0.5, 0.01);
  EXPECT_NEAR(k.mean(), 0.0, 1e-15);
  const auto d = gaussian_kernel(0.0, 0.01);
  EXPECT_NEAR(d.mass(), 1.0, 1e-15);
}
