// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "censorfuse/censoring.hpp"
#include "censorfuse/copula_fit.hpp"
#include "censorfuse/copulas.hpp"
#include "censorfuse/marginals.hpp"
#include "censorfuse/quantization.hpp"
#include "censorfuse/rng.hpp"

namespace censorfuse {

struct SensorModel {
  GaussianMarginal marginal;
  CensoringScheme scheme;
  std::optional<QuantizerSpec> quantizer;  // required for quantized messages
};

/// Sensors plus the fusion center's own observation model. Copula coordinate
/// 0 is the fusion center, coordinates 1..N the sensors.
struct Network {
  std::vector<SensorModel> sensors;
  GaussianMarginal fc;

  std::size_t size() const { return sensors.size(); }
};

/// One time slot at the fusion center: one message per sensor plus x0.
struct FusionSample {
  std::vector<SensorMessage> messages;
  double x0 = 0.0;
};
using FusionWindow = std::vector<FusionSample>;

/// Continuous surrogates after noise substitution.
struct NoiseAidedSample {
  std::vector<double> z;
  double x0 = 0.0;
};
using NoiseAidedWindow = std::vector<NoiseAidedSample>;

struct GlrtOptions {
  FitOptions fit;
  /// Families fitted under H0; empty means the same library as H1.
  std::vector<CopulaFamily> library_h0;
  /// 0: statistic from closed-form slice masses. n > 0: the per-sample
  /// likelihoods at the selected models are re-evaluated by tensor
  /// Gauss-Legendre quadrature of the copula density over the box (n nodes per
  /// dimension). Fitting always uses the closed forms.
  int quad_nodes = 0;
};

struct GlrtResult {
  double statistic;  // log T
  CopulaModel selected_h1;
  CopulaModel selected_h0;
  double marginal_term;   // part of the statistic not involving the copulas
  double copula_term_h1;  // maximized copula log-likelihood under H1
  double copula_term_h0;
  std::size_t floor_hits = 0;
  bool fallback_h1 = false;
  bool fallback_h0 = false;
};

// ---- analog censored messages --------------------------------------------------

/// Copula slice of one analog sample under h: x0 and sent values as points,
/// censored sensors as their no-send ranges in CDF scale.
std::vector<Coordinate> analog_slice(const FusionSample& s, const Network& net, Hypothesis h);
/// log f0(x0|h) + sum over sent sensors of log f_n(x|h).
double analog_marginal_log(const FusionSample& s, const Network& net, Hypothesis h);

double log_likelihood_analog(const FusionSample& s, const CopulaModel& model, const Network& net, Hypothesis h,
                             int quad_nodes = 0);
double likelihood_analog(const FusionSample& s, const CopulaModel& model, const Network& net, Hypothesis h,
                         int quad_nodes = 0);

GlrtResult glrt_analog(const FusionWindow& w, std::span<const CopulaFamily> library, const Network& net,
                       const GlrtOptions& opts = {});

/// Log of the independence-assumption statistic. Quantized messages use
/// partition-mass ratios in place of density ratios.
double independence_statistic(const FusionWindow& w, const Network& net);

// ---- quantized censored messages -------------------------------------------------

std::vector<Coordinate> quantized_slice(const FusionSample& s, const Network& net, Hypothesis h);

double log_likelihood_quantized(const FusionSample& s, const CopulaModel& model, const Network& net, Hypothesis h,
                                int quad_nodes = 0);
double likelihood_quantized(const FusionSample& s, const CopulaModel& model, const Network& net, Hypothesis h,
                            int quad_nodes = 0);

GlrtResult glrt_quantized(const FusionWindow& w, std::span<const CopulaFamily> library, const Network& net,
                          const GlrtOptions& opts = {});

// ---- noise-aided analog ---------------------------------------------------------

/// Sent values pass through; censored slots get a uniform draw on [t1, t2].
NoiseAidedSample substitute_analog_noise(const FusionSample& s, const Network& net, Rng& rng);
NoiseAidedWindow substitute_analog_noise(const FusionWindow& w, const Network& net, Rng& rng);

double z_density_analog(double z, const CensoringScheme& s, const GaussianMarginal& m, Hypothesis h);
double z_cdf_analog(double z, const CensoringScheme& s, const GaussianMarginal& m, Hypothesis h);

/// Marginal log-ratio (identical to the independence statistic) plus the
/// log-ratio of the maximized copula likelihoods of (F0(x0), F_Z(z)).
GlrtResult glrt_noise_analog(const NoiseAidedWindow& w, std::span<const CopulaFamily> library, const Network& net,
                             const GlrtOptions& opts = {});

// ---- noise-aided quantized ---------------------------------------------------------

/// Per-sensor densities of z under both hypotheses.
class QuantizedNoiseModel {
 public:
  QuantizedNoiseModel(const Network& net, const NoiseSpec& noise);

  const NoiseSpec& noise() const { return noise_; }
  const ZDensity& z(std::size_t sensor, Hypothesis h) const {
    return h == Hypothesis::H0 ? h0_[sensor] : h1_[sensor];
  }

 private:
  NoiseSpec noise_;
  std::vector<ZDensity> h0_;
  std::vector<ZDensity> h1_;
};

/// Quantized levels move to compressor coordinates and get Gaussian noise;
/// censored slots become q/2 plus noise.
NoiseAidedSample substitute_quantized_noise(const FusionSample& s, const Network& net, const NoiseSpec& noise,
                                            Rng& rng);
NoiseAidedWindow substitute_quantized_noise(const FusionWindow& w, const Network& net, const NoiseSpec& noise,
                                            Rng& rng);

double z_density_quantized(double z, const QuantizedNoiseModel& model, std::size_t sensor, Hypothesis h);
double z_cdf_quantized(double z, const QuantizedNoiseModel& model, std::size_t sensor, Hypothesis h);

GlrtResult glrt_noise_quantized(const NoiseAidedWindow& w, std::span<const CopulaFamily> library,
                                const Network& net, const QuantizedNoiseModel& model, const GlrtOptions& opts = {});

}  // namespace censorfuse
