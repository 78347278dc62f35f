// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "censorfuse/errors.hpp"
#include "censorfuse/rng.hpp"

namespace censorfuse::numerics {

Box::Box(std::vector<Interval> dims) : dims_(std::move(dims)) {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (!(dims_[i].lo <= dims_[i].hi)) {
      throw DomainError("Box: lo > hi in dimension " + std::to_string(i));
    }
  }
}

double Box::volume() const {
  double v = 1.0;
  for (const auto& d : dims_) v *= d.hi - d.lo;
  return v;
}

QuadratureSpec default_quadrature(std::size_t dim) {
  if (dim <= 3) return TensorGaussLegendre{16};
  return QuasiMonteCarlo{};
}

namespace {

GaussLegendreRule build_gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      dp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z_prev = z;
      z = z_prev - p1 / dp;
      if (std::abs(z - z_prev) < 1e-15) break;
    }
    // Recompute the derivative at the converged node.
    double p1 = 1.0;
    double p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    dp = n * (z * p1 - p2) / (z * z - 1.0);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

constexpr std::array<int, 24> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                         41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

double radical_inverse(std::uint64_t k, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

[[noreturn]] void throw_nonfinite(std::span<const double> x, double value) {
  std::ostringstream os;
  os << "integrate_box: non-finite integrand value " << value << " at (";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  throw IntegrationError(os.str());
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int order) {
  if (order < 1) throw DomainError("gauss_legendre: order must be >= 1");
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_gauss_legendre(order)).first;
  return it->second;
}

double integrate_1d(const std::function<double(double)>& f, double a, double b, int order) {
  const auto& rule = gauss_legendre(order);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  double sum = 0.0;
  for (int i = 0; i < order; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

double integrate_box(const Integrand& f, const Box& box, const QuadratureSpec& spec) {
  const std::size_t d = box.dim();
  std::vector<double> x(d);
  if (d == 0) {
    const double v = f(x);
    if (!std::isfinite(v)) throw_nonfinite(x, v);
    return v;
  }
  if (const auto* gl = std::get_if<TensorGaussLegendre>(&spec)) {
    if (gl->nodes_per_dim < 4) throw DomainError("integrate_box: nodes_per_dim must be >= 4");
    const auto& rule = gauss_legendre(gl->nodes_per_dim);
    const int n = gl->nodes_per_dim;
    std::vector<int> idx(d, 0);
    double sum = 0.0;
    while (true) {
      double w = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double half = 0.5 * (box[i].hi - box[i].lo);
        x[i] = box[i].lo + half * (1.0 + rule.nodes[idx[i]]);
        w *= rule.weights[idx[i]] * half;
      }
      const double v = f(x);
      if (!std::isfinite(v)) throw_nonfinite(x, v);
      sum += w * v;
      std::size_t k = 0;
      while (k < d && ++idx[k] == n) idx[k++] = 0;
      if (k == d) break;
    }
    return sum;
  }
  const auto& qmc = std::get<QuasiMonteCarlo>(spec);
  if (qmc.points < 1024) throw DomainError("integrate_box: QMC needs at least 1024 points");
  if (d > kPrimes.size()) throw DomainError("integrate_box: QMC dimension too large");
  // Halton sequence with a Cranley-Patterson rotation fixed by the seed.
  std::vector<double> shift(d);
  for (std::size_t i = 0; i < d; ++i) {
    shift[i] = static_cast<double>(derive_seed(qmc.seed, {i}) >> 11) * 0x1.0p-53;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < qmc.points; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      double u = radical_inverse(k + 1, kPrimes[i]) + shift[i];
      if (u >= 1.0) u -= 1.0;
      x[i] = box[i].lo + u * (box[i].hi - box[i].lo);
    }
    const double v = f(x);
    if (!std::isfinite(v)) throw_nonfinite(x, v);
    sum += v;
  }
  return sum / static_cast<double>(qmc.points) * box.volume();
}

Maximum maximize_1d(const std::function<double(double)>& f, double lo, double hi, double tol,
                    int max_iter) {
  if (!(lo < hi)) throw DomainError("maximize_1d: lo < hi required");
  constexpr int kScan = 9;
  std::array<double, kScan> xs{};
  std::array<double, kScan> fs{};
  for (int i = 0; i < kScan; ++i) {
    xs[i] = lo + (hi - lo) * i / (kScan - 1);
    fs[i] = f(xs[i]);
    if (std::isnan(fs[i])) fs[i] = -std::numeric_limits<double>::infinity();
  }
  const auto [min_it, max_it] = std::minmax_element(fs.begin(), fs.end());
  if (*min_it == *max_it) {
    const double mid = 0.5 * (lo + hi);
    return {mid, f(mid)};
  }
  // Best scan point; ties go to the point nearest the midpoint.
  int best = 0;
  for (int i = 1; i < kScan; ++i) {
    const bool better = fs[i] > fs[best] ||
                        (fs[i] == fs[best] && std::abs(i - kScan / 2) < std::abs(best - kScan / 2));
    if (better) best = i;
  }
  const double a = xs[std::max(best - 1, 0)];
  const double b = xs[std::min(best + 1, kScan - 1)];
  const int bits = std::clamp(static_cast<int>(std::ceil(1.0 - std::log2(tol))), 8, 52);
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  auto neg = [&](double x) {
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : -v;
  };
  const auto [x_star, neg_f] = boost::math::tools::brent_find_minima(neg, a, b, bits, iters);
  if (-neg_f >= fs[best]) return {x_star, -neg_f};
  return {xs[best], fs[best]};
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw DomainError("find_root: root not bracketed");
  std::uintmax_t iters = 200;
  auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, iters);
  return 0.5 * (a + b);
}

double GridDensity::mass() const {
  return step * std::accumulate(values.begin(), values.end(), 0.0);
}

double GridDensity::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) m += x(k) * values[k];
  return m * step / mass();
}

double GridDensity::variance() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) v += (x(k) - mu) * (x(k) - mu) * values[k];
  return v * step / mass();
}

double GridDensity::at(double xq) const {
  if (values.empty()) return 0.0;
  const double t = (xq - origin) / step;
  if (t < 0.0 || t > static_cast<double>(values.size() - 1)) return 0.0;
  const auto k = static_cast<std::size_t>(t);
  if (k + 1 >= values.size()) return values.back();
  const double w = t - static_cast<double>(k);
  return (1.0 - w) * values[k] + w * values[k + 1];
}

GridDensity grid_convolve(const GridDensity& a, const GridDensity& b) {
  if (std::abs(a.step - b.step) > 1e-12 * std::max(a.step, b.step)) {
    throw DomainError("grid_convolve: grid steps differ");
  }
  if (a.values.empty() || b.values.empty()) throw DomainError("grid_convolve: empty grid");
  GridDensity out;
  out.step = a.step;
  out.origin = a.origin + b.origin;
  out.values.assign(a.values.size() + b.values.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double ai = a.values[i];
    if (ai == 0.0) continue;
    double* dst = out.values.data() + i;
    for (std::size_t j = 0; j < b.values.size(); ++j) dst[j] += ai * b.values[j];
  }
  for (double& v : out.values) v *= a.step;
  return out;
}

double empirical_quantile(std::span<const double> samples, double p) {
  if (samples.empty()) throw DomainError("empirical_quantile: empty sample");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("empirical_quantile: p must lie in (0,1)");
  std::vector<double> s(samples.begin(), samples.end());
  const auto n = s.size();
  auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n - 1) - 1e-9));
  idx = std::min(idx, n - 1);
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(idx), s.end());
  return s[idx];
}

namespace {

// Counts inversions of v while merge-sorting it.
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                          std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      buf[k++] = v[j++];
      swaps += mid - i;
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

std::vector<double> pseudo_observations(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) out[order[k]] = rank / static_cast<double>(n + 1);
    i = j;
  }
  return out;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("kendall_tau: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("kendall_tau: need at least two points");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::uint64_t ties_x = 0;
  std::uint64_t ties_xy = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const std::uint64_t m = j - i;
    ties_x += m * (m - 1) / 2;
    for (std::size_t a = i; a < j;) {
      std::size_t b = a;
      while (b < j && y[order[b]] == y[order[a]]) ++b;
      const std::uint64_t t = b - a;
      ties_xy += t * (t - 1) / 2;
      a = b;
    }
    i = j;
  }
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> buf(n);
  const std::uint64_t swaps = merge_count(ys, buf, 0, n);
  std::uint64_t ties_y = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && ys[j] == ys[i]) ++j;
    const std::uint64_t m = j - i;
    ties_y += m * (m - 1) / 2;
    i = j;
  }
  const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double concordant_minus_discordant = n0 - static_cast<double>(ties_x) - static_cast<double>(ties_y) +
                                             static_cast<double>(ties_xy) - 2.0 * static_cast<double>(swaps);
  const double denom = std::sqrt((n0 - static_cast<double>(ties_x)) * (n0 - static_cast<double>(ties_y)));
  if (denom == 0.0) return 0.0;
  return concordant_minus_discordant / denom;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("pearson: bad input lengths");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace censorfuse::numerics
