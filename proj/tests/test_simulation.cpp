// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "censorfuse/errors.hpp"
#include "censorfuse/numerics.hpp"
#include "censorfuse/simulation.hpp"

using namespace censorfuse;

namespace {

ScenarioConfig small_config(std::size_t n = 2) {
  ScenarioConfig c;
  c.n_sensors = n;
  c.sensor_marginals.assign(n, GaussianMarginal(0.0, 0.5, 3.0));
  c.beta.assign(n, 0.35);
  c.t1.assign(n, 0.0);
  c.truth_h1 = model_from_tau(CopulaFamily::Frank, 0.3, n);
  c.library = {CopulaFamily::Gaussian, CopulaFamily::Frank};
  c.library_h0 = {CopulaFamily::Product};
  c.window = 20;
  c.trials = 100;
  c.seed = 123;
  return c;
}

}  // namespace

TEST(Calibration, MedianForHalf) {
  std::vector<double> s;
  for (int i = -500; i <= 500; ++i) s.push_back(i * 0.01);
  EXPECT_NEAR(calibrate_threshold(s, 0.5), 0.0, 1e-12);
}

TEST(Calibration, TooFewSamples) {
  std::vector<double> s(9, 1.0);
  EXPECT_THROW(calibrate_threshold(s, 0.1), CalibrationError);
  std::vector<double> ok(10, 1.0);
  EXPECT_NO_THROW(calibrate_threshold(ok, 0.1));
}

TEST(Calibration, HeldOutFalseAlarmRate) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n01;
  std::vector<double> train(10000), test(10000);
  for (auto& x : train) x = n01(rng);
  for (auto& x : test) x = n01(rng);
  const double pf = exceedance(test, calibrate_threshold(train, 0.1));
  EXPECT_GE(pf, 0.07);
  EXPECT_LE(pf, 0.13);
  // Conservative on the training sample itself.
  EXPECT_LE(exceedance(train, calibrate_threshold(train, 0.1)), 0.1);
}

TEST(Roc, ShapeAndEndpoints) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<double> h0(500), h1(500);
  for (auto& x : h0) x = n01(rng);
  for (auto& x : h1) x = n01(rng) + 1.0;
  const auto c = roc_from_statistics(h0, h1, Rule::IA);
  EXPECT_EQ(c.points.front().pf, 0.0);
  EXPECT_EQ(c.points.front().pd, 0.0);
  EXPECT_EQ(c.points.back().pf, 1.0);
  EXPECT_EQ(c.points.back().pd, 1.0);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i].pf, c.points[i - 1].pf);
    EXPECT_GE(c.points[i].pd, c.points[i - 1].pd);
  }
}

TEST(Roc, PerfectSeparationHugsCorner) {
  std::vector<double> h0{1, 2, 3}, h1{10, 11, 12};
  const auto c = roc_from_statistics(h0, h1, Rule::IA);
  bool corner = false;
  for (const auto& p : c.points) corner = corner || (p.pf == 0.0 && p.pd == 1.0);
  EXPECT_TRUE(corner);
}

TEST(Observations, IndependentUnderH0) {
  auto c = small_config(3);
  c.window = 20000;
  Rng rng(1);
  const auto obs = generate_observations(c, Hypothesis::H0, rng);
  std::vector<double> a, b, x0;
  std::size_t censored = 0;
  const auto net = c.network();
  for (std::size_t l = 0; l < c.window; ++l) {
    a.push_back(obs.x[l * 3]);
    b.push_back(obs.x[l * 3 + 2]);
    censored += net.sensors[1].scheme.censors(obs.x[l * 3 + 1]);
  }
  EXPECT_NEAR(numerics::kendall_tau(a, b), 0.0, 3 * std::sqrt(2.0 * (2 * 20000.0 + 5) / (9 * 20000.0 * 19999.0)));
  EXPECT_NEAR(double(censored) / c.window, 0.35, 3 * std::sqrt(0.35 * 0.65 / c.window));
}

TEST(Observations, DependentUnderH1AndFcIndependent) {
  auto c = small_config(2);
  c.window = 20000;
  Rng rng(2);
  const auto obs = generate_observations(c, Hypothesis::H1, rng);
  std::vector<double> a, b;
  double mean0 = 0.0;
  for (std::size_t l = 0; l < c.window; ++l) {
    a.push_back(obs.x[l * 2]);
    b.push_back(obs.x[l * 2 + 1]);
    mean0 += obs.x0[l];
  }
  EXPECT_NEAR(numerics::kendall_tau(a, b), 0.3, 0.015);
  EXPECT_NEAR(numerics::kendall_tau(a, obs.x0), 0.0, 0.015);
  EXPECT_NEAR(mean0 / c.window, 0.1, 4 * 3.0 / std::sqrt(20000.0));
}

TEST(Windows, QuantizedMessagesCarryLevels) {
  auto c = small_config(2);
  c.scenario = Scenario::QC;
  Rng rng(3);
  const auto w = generate_window(c, Hypothesis::H0, rng);
  ASSERT_EQ(w.size(), c.window);
  for (const auto& s : w) {
    for (const auto& m : s.messages) EXPECT_NE(m.kind, SensorMessage::Kind::Sent);
  }
}

TEST(RunTrials, IndependentOfJobCount) {
  const auto c = small_config(2);
  const Rule rules[] = {Rule::IA, Rule::NoiseAC, Rule::GlrtQC};
  const auto a = run_trials(c, rules, 1);
  const auto b = run_trials(c, rules, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.h0[k], b.h0[k]);
    EXPECT_EQ(a.h1[k], b.h1[k]);
  }
}

TEST(RunTrials, SeparableScenarioIsEasyForEveryRule) {
  auto c = small_config(2);
  c.sensor_marginals.assign(2, GaussianMarginal(0.0, 3.0, 1.0));
  c.fc = GaussianMarginal(0.0, 3.0, 1.0);
  c.q = 0.5;
  const auto ts = run_trials(c, kAllRules, 1);
  for (std::size_t k = 0; k < ts.rules.size(); ++k) {
    EXPECT_GT(pd_at_alpha(ts.h0[k], ts.h1[k], 0.1), 0.99) << to_string(ts.rules[k]);
  }
}

TEST(RunTrials, NoSignalIsChance) {
  auto c = small_config(2);
  c.sensor_marginals.assign(2, GaussianMarginal(0.0, 0.0, 3.0));
  c.fc = GaussianMarginal(0.0, 0.0, 3.0);
  c.truth_h1 = CopulaModel::product();
  c.trials = 1000;
  const Rule rules[] = {Rule::IA};
  const auto ts = run_trials(c, rules, 1);
  // Identical hypotheses: the statistic is exactly zero, so nothing exceeds the threshold.
  EXPECT_LE(pd_at_alpha(ts.h0[0], ts.h1[0], 0.1), 0.13);
}

TEST(Config, ValidationNamesField) {
  auto c = small_config(2);
  c.trials = 50;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("trials"), std::string::npos);
  }
  c = small_config(2);
  c.beta = {0.35, 0.5};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config(2);
  c.truth_h1 = model_from_tau(CopulaFamily::Gaussian, 0.3, 3);
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Rules, NamesRoundTrip) {
  for (Rule r : kAllRules) EXPECT_EQ(parse_rule(to_string(r)), r);
  try {
    parse_rule("glrt");
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("noise-qc"), std::string::npos);
  }
  EXPECT_EQ(rule_scenario(Rule::IA, Scenario::QC), Scenario::QC);
  EXPECT_EQ(rule_scenario(Rule::NoiseAC, Scenario::QC), Scenario::AC);
}

TEST(SweepBeta, OnePointPerRate) {
  auto c = small_config(2);
  const double betas[] = {0.1, 0.3};
  const auto s = sweep_beta(c, Rule::IA, betas);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].beta, 0.1);
  EXPECT_GE(s[0].pd_at_alpha, 0.0);
  EXPECT_LE(s[1].pd_at_alpha, 1.0);
}

TEST(ParallelFor, FirstErrorByIndex) {
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 7 || i == 30) throw DomainError(std::to_string(i));
    });
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}
