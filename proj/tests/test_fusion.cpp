// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "censorfuse/errors.hpp"
#include "censorfuse/fusion.hpp"
#include "censorfuse/numerics.hpp"
#include "censorfuse/rng.hpp"

using namespace censorfuse;

namespace {

const GaussianMarginal kSensor(0.0, 0.5, 3.0);
const GaussianMarginal kFc(0.0, 0.1, 3.0);

Network make_network(std::size_t n, double beta) {
  Network net{{}, kFc};
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = CensoringScheme::from_rate(kSensor, 0.0, beta);
    net.sensors.push_back({kSensor, s, QuantizerSpec::covering(1.0, s, kSensor)});
  }
  return net;
}

FusionWindow random_analog_window(const Network& net, std::size_t len, const CopulaModel& truth, Rng& rng) {
  FusionWindow w(len);
  for (auto& s : w) {
    const auto u = copula_sample(truth, net.size(), rng);
    for (std::size_t n = 0; n < net.size(); ++n) {
      s.messages.push_back(apply_censoring(net.sensors[n].scheme, kSensor.inv_cdf(clamp_unit(u[n]), Hypothesis::H1)));
    }
    s.x0 = kFc.inv_cdf(uniform_open(rng), Hypothesis::H1);
  }
  return w;
}

FusionWindow quantize_window(const FusionWindow& w, const Network& net, const std::vector<std::vector<double>>& raw) {
  FusionWindow out = w;
  for (std::size_t l = 0; l < w.size(); ++l) {
    for (std::size_t n = 0; n < net.size(); ++n) {
      if (w[l].messages[n].kind == SensorMessage::Kind::Sent) {
        const auto lv = quantize(*net.sensors[n].quantizer, raw[l][n]);
        out[l].messages[n] = SensorMessage::quantized(lv.index, lv.value);
      }
    }
  }
  return out;
}

const CopulaFamily kProductOnly[] = {CopulaFamily::Product};

}  // namespace

TEST(ZAnalog, InIntervalDensity) {
  const auto s = CensoringScheme::from_rate(kSensor, 0.0, 0.35);
  EXPECT_NEAR(z_density_analog(1.0, s, kSensor, Hypothesis::H0), 0.35 / s.t2(), 1e-12);
  EXPECT_NEAR(z_density_analog(1.0, s, kSensor, Hypothesis::H0), 0.1126, 1e-4);
  EXPECT_EQ(z_density_analog(-1.0, s, kSensor, Hypothesis::H1), kSensor.pdf(-1.0, Hypothesis::H1));
}

TEST(ZAnalog, CdfContinuousAndIntegratesDensity) {
  const auto s = CensoringScheme::from_rate(kSensor, 0.0, 0.35);
  for (auto h : {Hypothesis::H0, Hypothesis::H1}) {
    EXPECT_NEAR(z_cdf_analog(s.t1() - 1e-12, s, kSensor, h), z_cdf_analog(s.t1(), s, kSensor, h), 1e-11);
    EXPECT_NEAR(z_cdf_analog(s.t2() + 1e-12, s, kSensor, h), z_cdf_analog(s.t2(), s, kSensor, h), 1e-11);
    const double q = numerics::integrate_1d([&](double z) { return z_density_analog(z, s, kSensor, h); }, 0.5, 2.5);
    EXPECT_NEAR(z_cdf_analog(2.5, s, kSensor, h) - z_cdf_analog(0.5, s, kSensor, h), q, 1e-12);
  }
}

TEST(LikelihoodAnalog, ProductReducesToMarginals) {
  const auto net = make_network(2, 0.35);
  FusionSample s{{SensorMessage::sent(-1.2), SensorMessage::censored()}, 0.7};
  for (auto h : {Hypothesis::H0, Hypothesis::H1}) {
    const double expect = kFc.pdf(0.7, h) * kSensor.pdf(-1.2, h) * no_send_mass(net.sensors[1].scheme, kSensor, h);
    EXPECT_NEAR(likelihood_analog(s, CopulaModel::product(), net, h), expect, 1e-15);
  }
}

TEST(LikelihoodAnalog, MatchesMonteCarloIntegral) {
  const auto net = make_network(2, 0.35);
  const auto model = model_from_tau(CopulaFamily::Frank, 0.3, 3);
  FusionSample s{{SensorMessage::censored(), SensorMessage::sent(4.2)}, -0.8};
  const auto h = Hypothesis::H1;
  const double a = kSensor.cdf(0.0, h), b = kSensor.cdf(net.sensors[0].scheme.t2(), h);
  Rng rng(1);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u[] = {kFc.cdf(-0.8, h), a + (b - a) * uniform_open(rng), kSensor.cdf(4.2, h)};
    const double v = copula_density(model, u) * (b - a);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  const double scale = kFc.pdf(-0.8, h) * kSensor.pdf(4.2, h);
  EXPECT_NEAR(likelihood_analog(s, model, net, h) / scale, mean, 3 * se);
}

TEST(LikelihoodQuantized, MatchesMonteCarloIntegral) {
  const auto net = make_network(2, 0.35);
  const auto model = model_from_tau(CopulaFamily::Clayton, 0.4, 3);
  const auto& q = *net.sensors[1].quantizer;
  FusionSample s{{SensorMessage::censored(), SensorMessage::quantized(-2, q.level(-2))}, 1.3};
  const auto h = Hypothesis::H0;
  const auto cell = q.partition(-2);
  const double a1 = kSensor.cdf(0.0, h), b1 = kSensor.cdf(net.sensors[0].scheme.t2(), h);
  const double a2 = kSensor.cdf(cell.lo, h), b2 = kSensor.cdf(cell.hi, h);
  Rng rng(2);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u[] = {kFc.cdf(1.3, h), a1 + (b1 - a1) * uniform_open(rng), a2 + (b2 - a2) * uniform_open(rng)};
    const double v = copula_density(model, u) * (b1 - a1) * (b2 - a2);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(likelihood_quantized(s, model, net, h) / kFc.pdf(1.3, h), mean, 3 * se);
}

TEST(ReductionIdentity, ProductLibraryEqualsIndependenceStatistic) {
  Rng rng(99);
  for (std::size_t n : {2u, 3u}) {
    const auto net = make_network(n, 0.35);
    const auto truth = model_from_tau(CopulaFamily::Frank, 0.3, n);
    for (int rep = 0; rep < 10; ++rep) {
      const auto w = random_analog_window(net, 25, truth, rng);
      const double ia = independence_statistic(w, net);
      EXPECT_NEAR(glrt_analog(w, kProductOnly, net).statistic, ia, 1e-9);
      // Quantize the sent values (their raw values are exactly the sent message values).
      std::vector<std::vector<double>> raw(w.size());
      for (std::size_t l = 0; l < w.size(); ++l) {
        for (const auto& m : w[l].messages) raw[l].push_back(m.value);
      }
      const auto wq = quantize_window(w, net, raw);
      EXPECT_NEAR(glrt_quantized(wq, kProductOnly, net).statistic, independence_statistic(wq, net), 1e-9);
    }
  }
}

TEST(NoiseAnalog, ProductLibraryLeavesMarginalTerm) {
  Rng rng(5);
  const auto net = make_network(2, 0.35);
  const auto w = random_analog_window(net, 50, model_from_tau(CopulaFamily::Gumbel, 0.3, 2), rng);
  const auto z = substitute_analog_noise(w, net, rng);
  for (std::size_t l = 0; l < w.size(); ++l) {
    for (std::size_t n = 0; n < 2; ++n) {
      if (w[l].messages[n].is_censored()) {
        EXPECT_TRUE(net.sensors[n].scheme.censors(z[l].z[n]));
      } else {
        EXPECT_EQ(z[l].z[n], w[l].messages[n].value);
      }
    }
  }
  const auto r = glrt_noise_analog(z, kProductOnly, net);
  EXPECT_NEAR(r.statistic, r.marginal_term, 1e-12);
  // The marginal term is the independence statistic of the substituted data.
  EXPECT_NEAR(r.marginal_term, independence_statistic(w, net), 1e-9);
}

TEST(NoiseQuantized, SubstitutionWithoutNoise) {
  const auto net = make_network(2, 0.35);
  const auto& q = *net.sensors[0].quantizer;
  FusionSample s{{SensorMessage::censored(), SensorMessage::quantized(1, q.level(1))}, 0.0};
  Rng rng(1);
  const auto z = substitute_quantized_noise(s, net, NoiseSpec{0.0}, rng);
  EXPECT_NEAR(z.z[0], 0.5, 1e-15);
  EXPECT_NEAR(z.z[1], q.compressed_level(1), 1e-15);
}

TEST(NoiseQuantized, DensityIntegratesToOneAndStatisticIsFinite) {
  const auto net = make_network(2, 0.35);
  const QuantizedNoiseModel model(net, NoiseSpec{1.0});
  for (auto h : {Hypothesis::H0, Hypothesis::H1}) {
    const double m = numerics::integrate_1d([&](double z) { return z_density_quantized(z, model, 0, h); }, -25, 25, 400);
    EXPECT_NEAR(m, 1.0, 1e-4);
  }
  Rng rng(8);
  auto w = random_analog_window(net, 40, model_from_tau(CopulaFamily::Frank, 0.3, 2), rng);
  std::vector<std::vector<double>> raw(w.size());
  for (std::size_t l = 0; l < w.size(); ++l) {
    for (const auto& msg : w[l].messages) raw[l].push_back(msg.value);
  }
  const auto wq = quantize_window(w, net, raw);
  const auto z = substitute_quantized_noise(wq, net, model.noise(), rng);
  const CopulaFamily lib[] = {CopulaFamily::Gaussian, CopulaFamily::Frank};
  const auto r = glrt_noise_quantized(z, lib, net, model);
  EXPECT_TRUE(std::isfinite(r.statistic));
  EXPECT_EQ(r.floor_hits, 0u);
}

TEST(Glrt, QuadratureAgreesWithClosedForm) {
  Rng rng(12);
  const auto net = make_network(2, 0.35);
  const auto w = random_analog_window(net, 30, model_from_tau(CopulaFamily::Clayton, 0.3, 2), rng);
  const CopulaFamily lib[] = {CopulaFamily::Clayton, CopulaFamily::Gaussian};
  GlrtOptions closed, quad;
  quad.quad_nodes = 24;
  const auto a = glrt_analog(w, lib, net, closed);
  const auto b = glrt_analog(w, lib, net, quad);
  EXPECT_NEAR(a.statistic, b.statistic, 1e-4 * std::max(1.0, std::abs(a.statistic)));
}

TEST(Glrt, ProductH0LibraryIsHonoured) {
  Rng rng(4);
  const auto net = make_network(2, 0.35);
  const auto w = random_analog_window(net, 100, model_from_tau(CopulaFamily::Frank, 0.5, 2), rng);
  const CopulaFamily lib[] = {CopulaFamily::Gaussian, CopulaFamily::Frank};
  GlrtOptions o;
  o.library_h0 = {CopulaFamily::Product};
  const auto r = glrt_analog(w, lib, net, o);
  EXPECT_EQ(r.selected_h0.family(), CopulaFamily::Product);
  // Under independence only the censored ranges contribute, each by its width.
  double prod0 = 0.0, prod1 = 0.0;
  for (const auto& s : w) {
    for (const auto& c : analog_slice(s, net, Hypothesis::H0)) prod0 += std::log(c.hi - c.lo + (c.is_point() ? 1.0 : 0.0));
    for (const auto& c : analog_slice(s, net, Hypothesis::H1)) prod1 += std::log(c.hi - c.lo + (c.is_point() ? 1.0 : 0.0));
  }
  EXPECT_NEAR(r.copula_term_h0, prod0, 1e-9);
  EXPECT_GT(r.copula_term_h1, prod1);
}

TEST(Glrt, MessageKindMismatchRejected) {
  const auto net = make_network(2, 0.35);
  FusionWindow w{{{SensorMessage::quantized(0, 3.6), SensorMessage::censored()}, 0.0}};
  EXPECT_THROW(glrt_analog(w, kProductOnly, net), DomainError);
  FusionWindow v{{{SensorMessage::sent(5.0), SensorMessage::censored()}, 0.0}};
  EXPECT_THROW(glrt_quantized(v, kProductOnly, net), DomainError);
  FusionWindow short_w{{{SensorMessage::censored()}, 0.0}};
  EXPECT_THROW(independence_statistic(short_w, net), DomainError);
}
