// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace censorfuse::numerics {

struct Interval {
  double lo;
  double hi;
};

/// Axis-aligned box; every dimension satisfies lo <= hi.
class Box {
 public:
  explicit Box(std::vector<Interval> dims);
  std::size_t dim() const { return dims_.size(); }
  const Interval& operator[](std::size_t i) const { return dims_[i]; }
  double volume() const;

 private:
  std::vector<Interval> dims_;
};

struct TensorGaussLegendre {
  int nodes_per_dim = 16;
};

struct QuasiMonteCarlo {
  std::size_t points = std::size_t{1} << 14;
  std::uint64_t seed = 0x5eedc0de1aULL;
};

using QuadratureSpec = std::variant<TensorGaussLegendre, QuasiMonteCarlo>;

/// Tensor Gauss-Legendre for d <= 3 and QMC beyond.
QuadratureSpec default_quadrature(std::size_t dim);

/// Gauss-Legendre nodes and weights on [-1, 1]. Cached per order.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussLegendreRule& gauss_legendre(int order);

/// 1-D Gauss-Legendre on [a, b].
double integrate_1d(const std::function<double(double)>& f, double a, double b, int order = 32);

using Integrand = std::function<double(std::span<const double>)>;

/// Integral of f over box. Throws IntegrationError (naming the offending
/// point) if any integrand sample is non-finite.
double integrate_box(const Integrand& f, const Box& box, const QuadratureSpec& spec);

struct Maximum {
  double argmax;
  double value;
};

/// Bounded 1-D maximization: 9-point pre-scan, then Brent (golden section
/// with parabolic steps) inside the bracket around the best scan point.
/// A flat objective returns the interval midpoint.
Maximum maximize_1d(const std::function<double(double)>& f, double lo, double hi,
                    double tol = 1e-6, int max_iter = 200);

/// Root of f on [lo, hi]; f(lo) and f(hi) must differ in sign.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12);

/// Density sampled on the uniform grid x_k = origin + k * step.
struct GridDensity {
  double origin = 0.0;
  double step = 1.0;
  std::vector<double> values;

  double x(std::size_t k) const { return origin + static_cast<double>(k) * step; }
  double back() const { return x(values.size() - 1); }
  /// Riemann sum step * sum(values); equals the trapezoid rule when the end
  /// values vanish.
  double mass() const;
  double mean() const;
  double variance() const;
  /// Linear interpolation; zero outside the grid.
  double at(double x) const;
};

/// Discrete convolution scaled by the step. Steps must agree to 1e-12
/// relative, otherwise DomainError.
GridDensity grid_convolve(const GridDensity& a, const GridDensity& b);

/// Order statistic at index ceil(p (n - 1)) of the sorted sample ("higher"
/// rule).
double empirical_quantile(std::span<const double> samples, double p);

/// Kendall's tau-b in O(n log n) (Knight's algorithm).
double kendall_tau(std::span<const double> x, std::span<const double> y);

double pearson(std::span<const double> x, std::span<const double> y);

/// Ranks scaled to (0, 1): rank / (n + 1), ties sharing their average rank.
std::vector<double> pseudo_observations(std::span<const double> x);

}  // namespace censorfuse::numerics
