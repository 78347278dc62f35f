// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "censorfuse/copulas.hpp"
#include "censorfuse/fusion.hpp"
#include "censorfuse/marginals.hpp"
#include "censorfuse/quantization.hpp"
#include "censorfuse/rng.hpp"

namespace censorfuse {

enum class Scenario { AC, QC };
std::string_view to_string(Scenario s);

enum class Rule { GlrtAC, GlrtQC, NoiseAC, NoiseQC, IA };
std::string_view to_string(Rule r);
/// "glrt-ac", "glrt-qc", "noise-ac", "noise-qc", "ia"; ParameterError
/// listing the allowed names otherwise.
Rule parse_rule(std::string_view name);
inline constexpr Rule kAllRules[] = {Rule::GlrtAC, Rule::GlrtQC, Rule::NoiseAC, Rule::NoiseQC, Rule::IA};
/// Transmission scenario whose messages the rule consumes (IA follows the
/// configured scenario).
Scenario rule_scenario(Rule r, Scenario configured);

struct ScenarioConfig {
  std::size_t n_sensors = 2;
  std::vector<GaussianMarginal> sensor_marginals;
  GaussianMarginal fc{0.0, 0.1, 3.0};
  std::vector<double> beta;
  std::vector<double> t1;
  CopulaModel truth_h1 = CopulaModel::product();  // over the N sensor coordinates
  CopulaModel truth_h0 = CopulaModel::product();
  std::vector<CopulaFamily> library;
  std::vector<CopulaFamily> library_h0;  // empty: same as library
  Scenario scenario = Scenario::AC;
  double q = 1.0;
  NoiseSpec noise;
  std::size_t window = 100;
  std::size_t trials = 2000;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  int student_nu = 5;
  int quad_nodes = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Censoring schemes from the rate constraints; quantizers when q > 0.
  Network network() const;
  /// Same configuration with every sensor's rate set to beta.
  ScenarioConfig with_beta(double beta) const;
  GlrtOptions glrt_options() const;
};

/// Raw observations of one window: x[l * N + n] for sensor n at slot l.
struct Observations {
  std::size_t n_sensors = 0;
  std::vector<double> x;
  std::vector<double> x0;
};

Observations generate_observations(const ScenarioConfig& cfg, Hypothesis h, Rng& rng);
FusionWindow to_analog(const Observations& obs, const Network& net);
FusionWindow to_quantized(const Observations& obs, const Network& net);

/// Observations pushed through censoring (and quantization for QC).
FusionWindow generate_window(const ScenarioConfig& cfg, Hypothesis h, Rng& rng);

/// Conservative empirical (1 - alpha) quantile; decide H1 when T > threshold.
/// CalibrationError with fewer than 1/alpha statistics.
double calibrate_threshold(std::span<const double> statistics_h0, double alpha);

/// Fraction of statistics strictly above the threshold.
double exceedance(std::span<const double> statistics, double threshold);

/// Detection probability at the calibrated false-alarm level.
double pd_at_alpha(std::span<const double> h0, std::span<const double> h1, double alpha);

struct RocPoint {
  double pf;
  double pd;
};

struct RocCurve {
  std::vector<RocPoint> points;  // pf nondecreasing
  Rule rule;
  std::uint64_t config_hash = 0;
};

/// One point per distinct pooled threshold, plus (0, 0) and (1, 1).
RocCurve roc_from_statistics(std::span<const double> h0, std::span<const double> h1, Rule rule);

/// Statistics of every requested rule for trials 0..trials-1 under both
/// hypotheses, in trial order. Each trial draws from its own substream, so
/// the result does not depend on jobs.
struct TrialStatistics {
  std::vector<Rule> rules;
  std::vector<std::vector<double>> h0;  // [rule][trial]
  std::vector<std::vector<double>> h1;

  std::span<const double> of(Rule r, Hypothesis h) const;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

TrialStatistics run_trials(const ScenarioConfig& cfg, std::span<const Rule> rules, unsigned jobs = 1,
                           const ProgressFn& progress = {});

/// Statistics of all rules for one trial: [rule][hypothesis].
std::vector<std::array<double, 2>> trial_statistics(const ScenarioConfig& cfg, const Network& net,
                                                    const QuantizedNoiseModel* noise_model,
                                                    std::span<const Rule> rules, std::size_t trial);

RocCurve roc(const ScenarioConfig& cfg, Rule rule, unsigned jobs = 1);

struct SweepPoint {
  double beta;
  double pd_at_alpha;
};

/// P_D at the configured alpha for each beta; result is [rule][beta].
std::vector<std::vector<SweepPoint>> sweep_beta(const ScenarioConfig& cfg, std::span<const Rule> rules,
                                                std::span<const double> betas, unsigned jobs = 1,
                                                const ProgressFn& progress = {});
std::vector<SweepPoint> sweep_beta(const ScenarioConfig& cfg, Rule rule, std::span<const double> betas,
                                   unsigned jobs = 1);

inline constexpr double kDefaultBetas[] = {0.1, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45};

/// Runs body(i) for i in [0, n) on up to `jobs` threads. The first exception
/// by index is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace censorfuse
