// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "censorfuse/errors.hpp"
#include "censorfuse/normal.hpp"

namespace censorfuse {

QuantizerSpec::QuantizerSpec(double q, int lower_levels, int upper_levels, CensoringScheme scheme)
    : q_(q), lower_(lower_levels), upper_(upper_levels), scheme_(scheme) {
  if (!(q > 0.0) || !std::isfinite(q)) throw ParameterError("quantizer step must be positive");
  if (lower_levels < 1 || upper_levels < 1) throw ParameterError("quantizer needs at least one level per zone");
}

QuantizerSpec QuantizerSpec::covering(double q, const CensoringScheme& scheme, const GaussianMarginal& m) {
  if (!(q > 0.0)) throw ParameterError("quantizer step must be positive");
  const double lo = std::min(m.mu0(), m.mu1()) - 5.0 * m.sigma();
  const double hi = std::max(m.mu0(), m.mu1()) + 5.0 * m.sigma();
  const int lower = std::max(1, static_cast<int>(std::ceil((scheme.t1() - lo) / q)));
  const int upper = std::max(1, static_cast<int>(std::ceil((hi - scheme.t2()) / q)));
  QuantizerSpec spec(q, lower, upper, scheme);
  for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1}) {
    if (!(spec.saturation_mass(m, h) < kMaxSaturation)) {
      throw ParameterError("quantizer saturation mass exceeds 1e-5");
    }
  }
  return spec;
}

void QuantizerSpec::check_index(int i) const {
  if (i < -lower_ || i > upper_ - 1) {
    throw DomainError("quantizer index " + std::to_string(i) + " outside [" + std::to_string(-lower_) + ", " +
                      std::to_string(upper_ - 1) + "]");
  }
}

double QuantizerSpec::level(int i) const {
  check_index(i);
  const double base = i < 0 ? scheme_.t1() : scheme_.t2();
  return base + i * q_ + q_ / 2.0;
}

numerics::Interval QuantizerSpec::partition(int i) const {
  check_index(i);
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (i < 0) {
    const double lo = (i == -lower_) ? -inf : scheme_.t1() + i * q_;
    return {lo, scheme_.t1() + (i + 1) * q_};
  }
  const double hi = (i == upper_ - 1) ? inf : scheme_.t2() + (i + 1) * q_;
  return {scheme_.t2() + i * q_, hi};
}

int QuantizerSpec::index(double x) const {
  if (x > scheme_.t1() && x < scheme_.t2()) throw DomainError("quantize: input lies inside the censoring interval");
  if (x <= scheme_.t1() && x < scheme_.t2()) {
    if (x == scheme_.t1()) return -1;
    double k = std::floor((x - scheme_.t1()) / q_);
    if (x < scheme_.t1() + k * q_) k -= 1.0;
    else if (x >= scheme_.t1() + (k + 1.0) * q_) k += 1.0;
    return static_cast<int>(std::clamp(k, static_cast<double>(-lower_), -1.0));
  }
  double k = std::ceil((x - scheme_.t2()) / q_) - 1.0;
  if (x <= scheme_.t2() + k * q_) k -= 1.0;
  else if (x > scheme_.t2() + (k + 1.0) * q_) k += 1.0;
  return static_cast<int>(std::clamp(k, 0.0, static_cast<double>(upper_ - 1)));
}

double QuantizerSpec::compressed_level(int i) const {
  check_index(i);
  return (i + (i >= 0 ? 1 : 0)) * q_ + q_ / 2.0;
}

double QuantizerSpec::saturation_mass(const GaussianMarginal& m, Hypothesis h) const {
  return m.cdf(scheme_.t1() - lower_ * q_, h) + m.ccdf(scheme_.t2() + upper_ * q_, h);
}

QuantizedLevel quantize(const QuantizerSpec& spec, double x) {
  const int i = spec.index(x);
  return {i, spec.level(i)};
}

numerics::Interval partition(const QuantizerSpec& spec, int i) { return spec.partition(i); }

double compress(const CensoringScheme& s, double q, double x) {
  if (!(s.t2() > s.t1())) throw DomainError("compressor is degenerate when t2 == t1");
  if (x < s.t1()) return x - s.t1();
  if (x <= s.t2()) return q * (x - s.t1()) / s.width();
  return x - s.t2() + q;
}

double decompress(const CensoringScheme& s, double q, double y) {
  if (!(s.t2() > s.t1())) throw DomainError("compressor is degenerate when t2 == t1");
  if (y < 0.0) return y + s.t1();
  if (y <= q) return s.t1() + y * s.width() / q;
  return y - q + s.t2();
}

numerics::GridDensity compressed_density(const GaussianMarginal& m, const CensoringScheme& s, double q,
                                         Hypothesis h, double step) {
  if (!(step > 0.0)) throw ResolutionError("grid step must be positive");
  const double x_lo = std::min(m.mu0(), m.mu1()) - 8.0 * m.sigma();
  const double x_hi = std::max(m.mu0(), m.mu1()) + 8.0 * m.sigma();
  const double y_lo = compress(s, q, x_lo);
  const double y_hi = compress(s, q, x_hi);
  const auto k0 = static_cast<long>(std::floor(y_lo / step));
  const auto k1 = static_cast<long>(std::ceil(y_hi / step));
  numerics::GridDensity g;
  g.origin = static_cast<double>(k0) * step;
  g.step = step;
  g.values.resize(static_cast<std::size_t>(k1 - k0 + 1));
  auto cdf_y = [&](double y) { return m.cdf(decompress(s, q, y), h); };
  double prev = cdf_y(g.origin - step / 2.0);
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    const double next = cdf_y(g.x(k) + step / 2.0);
    g.values[k] = (next - prev) / step;
    prev = next;
  }
  return g;
}

numerics::GridDensity uniform_kernel(double q, double step) {
  const double cells = q / step;
  const double n = std::round(cells);
  if (n < 1.0 || std::abs(cells - n) > 1e-9 * std::max(1.0, n)) {
    throw ResolutionError("uniform kernel width must be a whole number of grid steps");
  }
  const auto half = static_cast<long>(n) / 2;
  numerics::GridDensity g;
  g.step = step;
  if (static_cast<long>(n) % 2 == 0) {
    g.origin = -static_cast<double>(half) * step;
    g.values.assign(static_cast<std::size_t>(2 * half + 1), 1.0 / q);
    g.values.front() = g.values.back() = 0.5 / q;
  } else {
    // Odd cell count: the edges fall on half-steps, so the nodes are all interior.
    g.origin = -static_cast<double>(half) * step;
    g.values.assign(static_cast<std::size_t>(2 * half + 1), 1.0 / q);
  }
  return g;
}

numerics::GridDensity gaussian_kernel(double sigma, double step) {
  numerics::GridDensity g;
  g.step = step;
  if (!(sigma > 0.0)) {
    g.origin = 0.0;
    g.values = {1.0 / step};
    return g;
  }
  const auto half = static_cast<long>(std::ceil(8.0 * sigma / step));
  g.origin = -static_cast<double>(half) * step;
  g.values.resize(static_cast<std::size_t>(2 * half + 1));
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    const double x = g.x(k);
    g.values[k] = normal::interval((x - step / 2.0) / sigma, (x + step / 2.0) / sigma) / step;
  }
  return g;
}

numerics::GridDensity widrow_output_density(const GaussianMarginal& m, const CensoringScheme& s, double q,
                                            Hypothesis h, double step) {
  return numerics::grid_convolve(compressed_density(m, s, q, h, step), uniform_kernel(q, step));
}

ZDensity::ZDensity(numerics::GridDensity pdf) : pdf_(std::move(pdf)) {
  cum_.resize(pdf_.values.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < pdf_.values.size(); ++k) {
    acc += pdf_.values[k] * pdf_.step;
    cum_[k] = acc;
  }
}

double ZDensity::cdf(double z) const {
  if (cum_.empty()) return 0.0;
  // cum_[k] is the CDF at x_k + step/2; 0 at x_0 - step/2.
  const double pos = (z - (pdf_.origin - pdf_.step / 2.0)) / pdf_.step;
  if (pos <= 0.0) return 0.0;
  const double n = static_cast<double>(cum_.size());
  if (pos >= n) return std::min(1.0, cum_.back());
  const auto k = static_cast<std::size_t>(pos);
  const double left = k == 0 ? 0.0 : cum_[k - 1];
  const double frac = pos - static_cast<double>(k);
  return std::clamp(left + frac * (cum_[k] - left), 0.0, 1.0);
}

ZDensity quantized_z_density(const GaussianMarginal& m, const CensoringScheme& s, double q, const NoiseSpec& noise,
                             Hypothesis h) {
  const double step = default_grid_step(q);
  auto fy = compressed_density(m, s, q, h, step);
  auto fyw = numerics::grid_convolve(fy, uniform_kernel(q, step));
  return ZDensity(numerics::grid_convolve(fyw, gaussian_kernel(noise.sigma_d, step)));
}

std::vector<double> characteristic_function(const numerics::GridDensity& density, std::span<const double> upsilon) {
  double vmax = 0.0;
  for (double v : upsilon) vmax = std::max(vmax, std::abs(v));
  if (!(density.step * vmax < 0.5)) {
    throw ResolutionError("density grid too coarse for the requested CF frequencies (need step * |v| < 0.5)");
  }
  std::vector<double> out;
  out.reserve(upsilon.size());
  for (double v : upsilon) {
    // Rotate by the phase step instead of calling exp per node.
    const std::complex<double> rot = std::polar(1.0, v * density.step);
    std::complex<double> ph = std::polar(1.0, v * density.origin);
    std::complex<double> acc = 0.0;
    for (double f : density.values) {
      acc += f * ph;
      ph *= rot;
    }
    out.push_back(std::abs(acc * density.step));
  }
  return out;
}

double gaussian_cf_magnitude(double sigma, double upsilon) { return std::exp(-0.5 * upsilon * upsilon * sigma * sigma); }

}  // namespace censorfuse
