// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "censorfuse/censoring.hpp"
#include "censorfuse/marginals.hpp"
#include "censorfuse/numerics.hpp"

namespace censorfuse {

/// Finite-range uniform quantizer with a censoring hole. Partition indices run
/// from -lower_levels (below t1) to upper_levels - 1 (above t2); the end cells
/// are half-infinite.
class QuantizerSpec {
 public:
  /// Throws ParameterError if q <= 0 or a level count is < 1.
  QuantizerSpec(double q, int lower_levels, int upper_levels, CensoringScheme scheme);

  /// Level counts chosen so the quantizer spans mu +- 5 sigma under both
  /// hypotheses. Throws ParameterError if the saturation mass would still
  /// reach kMaxSaturation.
  static QuantizerSpec covering(double q, const CensoringScheme& scheme, const GaussianMarginal& m);

  static constexpr double kMaxSaturation = 1e-5;

  double q() const { return q_; }
  int lower_levels() const { return lower_; }
  int upper_levels() const { return upper_; }
  const CensoringScheme& scheme() const { return scheme_; }

  /// Output value k(i). DomainError if i is out of range.
  double level(int i) const;
  /// Input cell of index i.
  numerics::Interval partition(int i) const;
  /// Partition index of x; DomainError if x lies strictly inside (t1, t2).
  int index(double x) const;
  /// Level of index i after the compressor: the uniform-quantizer output in
  /// compressed coordinates.
  double compressed_level(int i) const;
  /// Probability of falling beyond the outermost full cells.
  double saturation_mass(const GaussianMarginal& m, Hypothesis h) const;

 private:
  void check_index(int i) const;

  double q_;
  int lower_;
  int upper_;
  CensoringScheme scheme_;
};

struct QuantizedLevel {
  int index;
  double value;
};

QuantizedLevel quantize(const QuantizerSpec& spec, double x);
numerics::Interval partition(const QuantizerSpec& spec, int i);

/// Piecewise-linear compressor: x - t1 below the hole, q (x - t1)/(t2 - t1)
/// across it, x - t2 + q above. DomainError if t2 == t1.
double compress(const CensoringScheme& s, double q, double x);
double decompress(const CensoringScheme& s, double q, double y);

/// Default grid step for compressed densities and noise kernels.
inline double default_grid_step(double q) { return q / 50.0; }

/// Density of the compressed observation on a uniform grid spanning the
/// compressed image of mu +- 8 sigma (both hypotheses). Node values are cell
/// averages [F_Y(x + step/2) - F_Y(x - step/2)] / step, so the Riemann mass
/// telescopes to the CDF difference across the grid.
numerics::GridDensity compressed_density(const GaussianMarginal& m, const CensoringScheme& s, double q,
                                         Hypothesis h, double step);

/// Uniform density of width q (the Widrow quantization noise) as a centred
/// kernel. ResolutionError unless q is a whole number of steps.
numerics::GridDensity uniform_kernel(double q, double step);
/// Zero-mean Gaussian kernel; sigma == 0 gives a unit spike.
numerics::GridDensity gaussian_kernel(double sigma, double step);

/// f_Y * f_W.
numerics::GridDensity widrow_output_density(const GaussianMarginal& m, const CensoringScheme& s, double q,
                                            Hypothesis h, double step);

/// Artificial low-pass noise added to quantizer outputs at the fusion center.
struct NoiseSpec {
  double sigma_d = 1.0;  // standard deviation of the Gaussian noise
};

/// Density and CDF of z = level + d for one sensor and hypothesis, built from
/// the triple convolution f_Y * f_W * f_D.
class ZDensity {
 public:
  explicit ZDensity(numerics::GridDensity pdf);

  const numerics::GridDensity& grid() const { return pdf_; }
  double pdf(double z) const { return pdf_.at(z); }
  double cdf(double z) const;

 private:
  numerics::GridDensity pdf_;
  std::vector<double> cum_;  // CDF at the upper edge of each cell
};

ZDensity quantized_z_density(const GaussianMarginal& m, const CensoringScheme& s, double q, const NoiseSpec& noise,
                             Hypothesis h);

/// |E exp(i v Y)| by quadrature over the grid. ResolutionError if
/// step * max|v| >= 0.5.
std::vector<double> characteristic_function(const numerics::GridDensity& density, std::span<const double> upsilon);

/// exp(-v^2 sigma^2 / 2), the CF magnitude of any Gaussian with std sigma.
double gaussian_cf_magnitude(double sigma, double upsilon);

}  // namespace censorfuse
