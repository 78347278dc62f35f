// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "censorfuse/errors.hpp"
#include "censorfuse/numerics.hpp"

namespace censorfuse {

std::string_view to_string(Scenario s) { return s == Scenario::AC ? "AC" : "QC"; }

std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::GlrtAC:
      return "glrt-ac";
    case Rule::GlrtQC:
      return "glrt-qc";
    case Rule::NoiseAC:
      return "noise-ac";
    case Rule::NoiseQC:
      return "noise-qc";
    case Rule::IA:
      return "ia";
  }
  return "?";
}

Rule parse_rule(std::string_view name) {
  for (Rule r : kAllRules) {
    if (to_string(r) == name) return r;
  }
  throw ParameterError("unknown rule '" + std::string(name) + "' (allowed: glrt-ac, glrt-qc, noise-ac, noise-qc, ia)");
}

Scenario rule_scenario(Rule r, Scenario configured) {
  switch (r) {
    case Rule::GlrtAC:
    case Rule::NoiseAC:
      return Scenario::AC;
    case Rule::GlrtQC:
    case Rule::NoiseQC:
      return Scenario::QC;
    case Rule::IA:
      return configured;
  }
  return configured;
}

// ---- config ----------------------------------------------------------------------

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg); };
  if (n_sensors < 1) fail("n_sensors", "must be >= 1");
  if (sensor_marginals.size() != n_sensors) fail("sensors", "need one marginal per sensor");
  if (beta.size() != n_sensors) fail("beta", "need one rate per sensor");
  if (t1.size() != n_sensors) fail("t1", "need one lower limit per sensor");
  for (std::size_t n = 0; n < n_sensors; ++n) {
    if (!(beta[n] > 0.0 && beta[n] < 1.0)) fail("beta", "rates must lie in (0, 1)");
    if (!std::isfinite(t1[n])) fail("t1", "must be finite");
    if (!(sensor_marginals[n].cdf(t1[n], Hypothesis::H0) + beta[n] < 1.0)) fail("beta", "infeasible for t1");
  }
  try {
    truth_h1.check_dimension(n_sensors);
  } catch (const ParameterError& e) {
    fail("truth_h1", e.what());
  }
  try {
    truth_h0.check_dimension(n_sensors);
  } catch (const ParameterError& e) {
    fail("truth_h0", e.what());
  }
  if (library.empty()) fail("library", "must list at least one copula family");
  if (!(q > 0.0) || !std::isfinite(q)) fail("q", "must be positive");
  if (!(noise.sigma_d >= 0.0) || !std::isfinite(noise.sigma_d)) fail("noise.sigma_d", "must be >= 0");
  if (window < 1) fail("window", "must be >= 1");
  if (trials < 100) fail("trials", "must be >= 100");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha", "must lie in (0, 1)");
  if (static_cast<double>(trials) * alpha < 1.0) fail("alpha", "needs trials >= 1/alpha");
  if (student_nu < 3) fail("student_nu", "must be >= 3");
  if (quad_nodes != 0 && quad_nodes < 4) fail("quad_nodes", "must be 0 (closed form) or >= 4");
}

Network ScenarioConfig::network() const {
  Network net{{}, fc};
  for (std::size_t n = 0; n < n_sensors; ++n) {
    const auto& m = sensor_marginals[n];
    auto scheme = CensoringScheme::from_rate(m, t1[n], beta[n]);
    net.sensors.push_back({m, scheme, QuantizerSpec::covering(q, scheme, m)});
  }
  return net;
}

ScenarioConfig ScenarioConfig::with_beta(double b) const {
  ScenarioConfig c = *this;
  c.beta.assign(n_sensors, b);
  return c;
}

GlrtOptions ScenarioConfig::glrt_options() const {
  GlrtOptions o;
  o.fit.student_nu = student_nu;
  o.library_h0 = library_h0;
  o.quad_nodes = quad_nodes;
  return o;
}

// ---- data generation ---------------------------------------------------------------

Observations generate_observations(const ScenarioConfig& cfg, Hypothesis h, Rng& rng) {
  const CopulaModel& truth = h == Hypothesis::H1 ? cfg.truth_h1 : cfg.truth_h0;
  Observations obs;
  obs.n_sensors = cfg.n_sensors;
  obs.x.reserve(cfg.window * cfg.n_sensors);
  obs.x0.reserve(cfg.window);
  for (std::size_t l = 0; l < cfg.window; ++l) {
    const auto u = copula_sample(truth, cfg.n_sensors, rng);
    for (std::size_t n = 0; n < cfg.n_sensors; ++n) {
      obs.x.push_back(cfg.sensor_marginals[n].inv_cdf(clamp_unit(u[n]), h));
    }
    obs.x0.push_back(cfg.fc.inv_cdf(uniform_open(rng), h));
  }
  return obs;
}

FusionWindow to_analog(const Observations& obs, const Network& net) {
  FusionWindow w(obs.x0.size());
  for (std::size_t l = 0; l < w.size(); ++l) {
    w[l].x0 = obs.x0[l];
    w[l].messages.reserve(obs.n_sensors);
    for (std::size_t n = 0; n < obs.n_sensors; ++n) {
      w[l].messages.push_back(apply_censoring(net.sensors[n].scheme, obs.x[l * obs.n_sensors + n]));
    }
  }
  return w;
}

FusionWindow to_quantized(const Observations& obs, const Network& net) {
  FusionWindow w(obs.x0.size());
  for (std::size_t l = 0; l < w.size(); ++l) {
    w[l].x0 = obs.x0[l];
    w[l].messages.reserve(obs.n_sensors);
    for (std::size_t n = 0; n < obs.n_sensors; ++n) {
      const double x = obs.x[l * obs.n_sensors + n];
      const auto& sensor = net.sensors[n];
      if (sensor.scheme.censors(x)) {
        w[l].messages.push_back(SensorMessage::censored());
      } else {
        const auto lv = quantize(*sensor.quantizer, x);
        w[l].messages.push_back(SensorMessage::quantized(lv.index, lv.value));
      }
    }
  }
  return w;
}

FusionWindow generate_window(const ScenarioConfig& cfg, Hypothesis h, Rng& rng) {
  const Network net = cfg.network();
  const auto obs = generate_observations(cfg, h, rng);
  return cfg.scenario == Scenario::AC ? to_analog(obs, net) : to_quantized(obs, net);
}

// ---- calibration and ROC -------------------------------------------------------------

double calibrate_threshold(std::span<const double> statistics_h0, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw CalibrationError("alpha must lie in (0, 1)");
  if (static_cast<double>(statistics_h0.size()) * alpha < 1.0 - 1e-12) {
    throw CalibrationError("need at least 1/alpha H0 statistics to calibrate the threshold");
  }
  return numerics::empirical_quantile(statistics_h0, 1.0 - alpha);
}

double exceedance(std::span<const double> statistics, double threshold) {
  if (statistics.empty()) return 0.0;
  const auto k = std::count_if(statistics.begin(), statistics.end(), [&](double t) { return t > threshold; });
  return static_cast<double>(k) / static_cast<double>(statistics.size());
}

double pd_at_alpha(std::span<const double> h0, std::span<const double> h1, double alpha) {
  return exceedance(h1, calibrate_threshold(h0, alpha));
}

RocCurve roc_from_statistics(std::span<const double> h0, std::span<const double> h1, Rule rule) {
  std::vector<double> a(h0.begin(), h0.end());
  std::vector<double> b(h1.begin(), h1.end());
  std::sort(a.begin(), a.end(), std::greater<>());
  std::sort(b.begin(), b.end(), std::greater<>());
  std::vector<double> pooled;
  pooled.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(pooled), std::greater<>());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  RocCurve c{{}, rule, 0};
  c.points.push_back({0.0, 0.0});
  const double na = static_cast<double>(std::max<std::size_t>(a.size(), 1));
  const double nb = static_cast<double>(std::max<std::size_t>(b.size(), 1));
  std::size_t ia = 0;
  std::size_t ib = 0;
  // Threshold t = pooled[k]: count statistics strictly greater than t.
  for (double t : pooled) {
    while (ia < a.size() && a[ia] > t) ++ia;
    while (ib < b.size() && b[ib] > t) ++ib;
    const RocPoint p{static_cast<double>(ia) / na, static_cast<double>(ib) / nb};
    if (p.pf != c.points.back().pf || p.pd != c.points.back().pd) c.points.push_back(p);
  }
  if (c.points.back().pf != 1.0 || c.points.back().pd != 1.0) c.points.push_back({1.0, 1.0});
  return c;
}

// ---- trial runner ------------------------------------------------------------------

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t err_index = n;
  std::exception_ptr err;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::span<const double> TrialStatistics::of(Rule r, Hypothesis h) const {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i] == r) return h == Hypothesis::H0 ? h0[i] : h1[i];
  }
  throw ParameterError("rule was not run: " + std::string(to_string(r)));
}

namespace {

enum Purpose : std::uint64_t { kObservations = 0, kAnalogNoise = 1, kQuantizedNoise = 2 };

bool needs(std::span<const Rule> rules, Scenario s, Scenario configured) {
  return std::any_of(rules.begin(), rules.end(), [&](Rule r) { return rule_scenario(r, configured) == s; });
}

}  // namespace

std::vector<std::array<double, 2>> trial_statistics(const ScenarioConfig& cfg, const Network& net,
                                                    const QuantizedNoiseModel* noise_model,
                                                    std::span<const Rule> rules, std::size_t trial) {
  std::vector<std::array<double, 2>> out(rules.size());
  const GlrtOptions opts = cfg.glrt_options();
  const bool want_ac = needs(rules, Scenario::AC, cfg.scenario);
  const bool want_qc = needs(rules, Scenario::QC, cfg.scenario);
  for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1}) {
    const auto hi = static_cast<std::uint64_t>(h);
    Rng rng = make_rng(cfg.seed, {trial, hi, kObservations});
    const auto obs = generate_observations(cfg, h, rng);
    FusionWindow ac;
    FusionWindow qc;
    if (want_ac) ac = to_analog(obs, net);
    if (want_qc) qc = to_quantized(obs, net);
    for (std::size_t k = 0; k < rules.size(); ++k) {
      double t = 0.0;
      switch (rules[k]) {
        case Rule::GlrtAC:
          t = glrt_analog(ac, cfg.library, net, opts).statistic;
          break;
        case Rule::GlrtQC:
          t = glrt_quantized(qc, cfg.library, net, opts).statistic;
          break;
        case Rule::NoiseAC: {
          Rng nr = make_rng(cfg.seed, {trial, hi, kAnalogNoise});
          t = glrt_noise_analog(substitute_analog_noise(ac, net, nr), cfg.library, net, opts).statistic;
          break;
        }
        case Rule::NoiseQC: {
          if (!noise_model) throw ParameterError("noise-qc needs a quantized noise model");
          Rng nr = make_rng(cfg.seed, {trial, hi, kQuantizedNoise});
          t = glrt_noise_quantized(substitute_quantized_noise(qc, net, cfg.noise, nr), cfg.library, net, *noise_model,
                                   opts)
                  .statistic;
          break;
        }
        case Rule::IA:
          t = independence_statistic(cfg.scenario == Scenario::AC ? ac : qc, net);
          break;
      }
      out[k][static_cast<std::size_t>(h)] = t;
    }
  }
  return out;
}

TrialStatistics run_trials(const ScenarioConfig& cfg, std::span<const Rule> rules, unsigned jobs,
                           const ProgressFn& progress) {
  cfg.validate();
  const Network net = cfg.network();
  std::optional<QuantizedNoiseModel> noise_model;
  if (std::find(rules.begin(), rules.end(), Rule::NoiseQC) != rules.end()) noise_model.emplace(net, cfg.noise);

  TrialStatistics ts;
  ts.rules.assign(rules.begin(), rules.end());
  ts.h0.assign(rules.size(), std::vector<double>(cfg.trials));
  ts.h1.assign(rules.size(), std::vector<double>(cfg.trials));
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;
  parallel_for(cfg.trials, jobs, [&](std::size_t trial) {
    const auto st = trial_statistics(cfg, net, noise_model ? &*noise_model : nullptr, rules, trial);
    for (std::size_t k = 0; k < rules.size(); ++k) {
      ts.h0[k][trial] = st[k][0];
      ts.h1[k][trial] = st[k][1];
    }
    const std::size_t d = ++done;
    if (progress) {
      std::lock_guard lock(progress_mu);
      progress(d, cfg.trials);
    }
  });
  return ts;
}

RocCurve roc(const ScenarioConfig& cfg, Rule rule, unsigned jobs) {
  const Rule rules[] = {rule};
  const auto ts = run_trials(cfg, rules, jobs);
  return roc_from_statistics(ts.h0[0], ts.h1[0], rule);
}

std::vector<std::vector<SweepPoint>> sweep_beta(const ScenarioConfig& cfg, std::span<const Rule> rules,
                                                std::span<const double> betas, unsigned jobs,
                                                const ProgressFn& progress) {
  std::vector<std::vector<SweepPoint>> out(rules.size());
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw ParameterError("beta values must lie in (0, 1)");
    const auto ts = run_trials(cfg.with_beta(b), rules, jobs, progress);
    for (std::size_t k = 0; k < rules.size(); ++k) {
      out[k].push_back({b, pd_at_alpha(ts.h0[k], ts.h1[k], cfg.alpha)});
    }
  }
  return out;
}

std::vector<SweepPoint> sweep_beta(const ScenarioConfig& cfg, Rule rule, std::span<const double> betas,
                                   unsigned jobs) {
  const Rule rules[] = {rule};
  return sweep_beta(cfg, rules, betas, jobs).front();
}

}  // namespace censorfuse
