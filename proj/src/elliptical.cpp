// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/elliptical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "censorfuse/errors.hpp"
#include "censorfuse/normal.hpp"
#include "censorfuse/numerics.hpp"

namespace censorfuse::elliptical {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kNormalClamp = 40.0;
constexpr double kStudentClamp = 1e8;
constexpr double kTailCut = 9.0;
constexpr double kPanelWidth = 1.5;

// Negative half of the Gauss-Legendre rule of the given order, as used by BVNU.
struct HalfRule {
  std::vector<double> x;
  std::vector<double> w;
};

const HalfRule& half_rule(int which) {
  static const std::array<HalfRule, 3> rules = [] {
    std::array<HalfRule, 3> out;
    const int orders[3] = {6, 12, 20};
    for (int r = 0; r < 3; ++r) {
      const auto& gl = numerics::gauss_legendre(orders[r]);
      for (int i = 0; i < orders[r] / 2; ++i) {
        out[r].x.push_back(gl.nodes[i]);
        out[r].w.push_back(gl.weights[i]);
      }
    }
    return out;
  }();
  return rules[which];
}

double clamp_normal(double z) { return std::clamp(z, -kNormalClamp, kNormalClamp); }

double bvn_rect(double a1, double b1, double a2, double b2, double r) {
  if (b1 <= a1 || b2 <= a2) return 0.0;
  a1 = clamp_normal(a1);
  a2 = clamp_normal(a2);
  b1 = clamp_normal(b1);
  b2 = clamp_normal(b2);
  const double p = bvn_upper(a1, a2, r) - bvn_upper(b1, a2, r) - bvn_upper(a1, b2, r) + bvn_upper(b1, b2, r);
  return std::max(p, 0.0);
}

// Trivariate normal rectangle: the coordinate with the narrowest probability
// range is integrated out (piecewise Gauss-Legendre in x), leaving bivariate
// conditionals.
double mvn3_rect(std::span<const double> lo, std::span<const double> hi, const Eigen::MatrixXd& c) {
  std::array<double, 3> width{};
  for (int i = 0; i < 3; ++i) width[i] = normal::interval(lo[i], hi[i]);
  int o = 0;
  for (int i = 1; i < 3; ++i) {
    if (width[i] < width[o]) o = i;
  }
  if (width[o] <= 0.0) return 0.0;
  const int j = (o == 0) ? 1 : 0;
  const int k = (o == 2) ? 1 : 2;
  const double rj = c(o, j);
  const double rk = c(o, k);
  const double sj = std::sqrt(std::max(1.0 - rj * rj, 1e-300));
  const double sk = std::sqrt(std::max(1.0 - rk * rk, 1e-300));
  const double rjk = std::clamp((c(j, k) - rj * rk) / (sj * sk), -1.0, 1.0);

  const double x_lo = std::max(lo[o], -kTailCut);
  const double x_hi = std::min(hi[o], kTailCut);
  if (!(x_hi > x_lo)) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil((x_hi - x_lo) / kPanelWidth)));
  const auto& gl = numerics::gauss_legendre(16);
  double sum = 0.0;
  const double h = (x_hi - x_lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = x_lo + p * h;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double x = a + 0.5 * h * (1.0 + gl.nodes[q]);
      const double mj = rj * x;
      const double mk = rk * x;
      sum += gl.weights[q] * normal::pdf(x) *
             bvn_rect((lo[j] - mj) / sj, (hi[j] - mj) / sj, (lo[k] - mk) / sk, (hi[k] - mk) / sk, rjk);
    }
  }
  return std::max(0.5 * h * sum, 0.0);
}

// Shifted Halton points for separation-of-variables integration.
double halton(std::uint64_t k, int base) {
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

constexpr std::array<int, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
constexpr std::size_t kSovPoints = std::size_t{1} << 14;
constexpr std::array<double, 16> kSovShift = {0.3141, 0.5926, 0.5358, 0.9793, 0.2384, 0.6264,
                                              0.3383, 0.2795, 0.0288, 0.4197, 0.1693, 0.9937,
                                              0.5105, 0.8209, 0.7494, 0.4592};

// Genz separation of variables. With nu > 0 an extra coordinate supplies the
// chi scale of the multivariate t.
double sov_rect(std::span<const double> lo, std::span<const double> hi, const Eigen::MatrixXd& c, int nu) {
  const auto d = static_cast<int>(lo.size());
  if (d + 1 > static_cast<int>(kPrimes.size())) throw DomainError("mvn_rect: dimension too large");
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw DomainError("mvn_rect: correlation matrix not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  std::vector<double> y(d);
  double total = 0.0;
  for (std::size_t n = 0; n < kSovPoints; ++n) {
    double scale = 1.0;
    if (nu > 0) {
      double w = halton(n + 1, kPrimes[d]) + kSovShift[d];
      if (w >= 1.0) w -= 1.0;
      w = std::clamp(w, 1e-12, 1.0 - 1e-12);
      scale = std::sqrt(2.0 * boost::math::gamma_p_inv(0.5 * nu, w) / nu);
    }
    double f = 1.0;
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int j = 0; j < i; ++j) s += l(i, j) * y[j];
      const double a = std::isinf(lo[i]) ? lo[i] : (lo[i] * scale - s) / l(i, i);
      const double b = std::isinf(hi[i]) ? hi[i] : (hi[i] * scale - s) / l(i, i);
      const double pa = normal::cdf(a);
      const double pb = normal::cdf(b);
      f *= std::max(pb - pa, 0.0);
      if (f == 0.0) break;
      if (i + 1 < d) {
        double w = halton(n + 1, kPrimes[i]) + kSovShift[i];
        if (w >= 1.0) w -= 1.0;
        const double u = std::clamp(pa + w * (pb - pa), 1e-300, 1.0 - 1e-16);
        y[i] = normal::quantile(u);
      }
    }
    total += f;
  }
  return total / static_cast<double>(kSovPoints);
}

// Chi-scale nodes s_k = sqrt(W_k / nu), W ~ chi^2_nu, at Gauss-Legendre
// nodes in probability scale.
struct ChiRule {
  std::vector<double> scale;
  std::vector<double> weight;
};

const ChiRule& chi_rule(int nu) {
  thread_local std::unordered_map<int, ChiRule> cache;
  auto it = cache.find(nu);
  if (it != cache.end()) return it->second;
  ChiRule rule;
  const auto& gl = numerics::gauss_legendre(16);
  constexpr int kPanels = 3;
  for (int p = 0; p < kPanels; ++p) {
    const double a = static_cast<double>(p) / kPanels;
    const double h = 1.0 / kPanels;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double u = a + 0.5 * h * (1.0 + gl.nodes[q]);
      rule.scale.push_back(std::sqrt(2.0 * boost::math::gamma_p_inv(0.5 * nu, u) / nu));
      rule.weight.push_back(0.5 * h * gl.weights[q]);
    }
  }
  return cache.emplace(nu, std::move(rule)).first->second;
}

double student_clamp(double t) { return std::clamp(t, -kStudentClamp, kStudentClamp); }

}  // namespace

double bvn_upper(double sh, double sk, double r) {
  int ng;
  if (std::abs(r) < 0.3) {
    ng = 0;
  } else if (std::abs(r) < 0.75) {
    ng = 1;
  } else {
    ng = 2;
  }
  const auto& rule = half_rule(ng);
  const std::size_t lg = rule.x.size();
  double h = sh;
  double k = sk;
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (std::size_t i = 0; i < lg; ++i) {
      double sn = std::sin(asr * (rule.x[i] + 1.0) / 2.0);
      bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      sn = std::sin(asr * (-rule.x[i] + 1.0) / 2.0);
      bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / (2.0 * kTwoPi) + normal::ccdf(h) * normal::ccdf(k);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * normal::cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (std::size_t i = 0; i < lg; ++i) {
      double xs = (a * (rule.x[i] + 1.0)) * (a * (rule.x[i] + 1.0));
      double rs = std::sqrt(1.0 - xs);
      bvn += a * rule.w[i] *
             (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
              std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
      xs = as * (-rule.x[i] + 1.0) * (-rule.x[i] + 1.0) / 4.0;
      rs = std::sqrt(1.0 - xs);
      bvn += a * rule.w[i] * std::exp(-(bs / xs + hk) / 2.0) *
             (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
    }
    bvn = -bvn / kTwoPi;
  }
  if (r > 0.0) bvn += normal::ccdf(std::max(h, k));
  if (r < 0.0) bvn = -bvn + std::max(0.0, normal::ccdf(h) - normal::ccdf(k));
  return bvn;
}

double t_cdf(double t, int nu) {
  if (nu < 1) return normal::cdf(t);
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  // Finite series, exact for integer nu (absolute, not relative, accuracy in
  // the far tails).
  double value;
  if (nu == 1) {
    value = 0.5 + std::atan(t) / M_PI;
  } else if (nu == 2) {
    value = 0.5 * (1.0 + t / std::sqrt(2.0 + t * t));
  } else {
    const double tt = t * t;
    const double cssthe = 1.0 / (1.0 + tt / nu);
    double polyn = 1.0;
    for (int j = nu - 2; j >= 2; j -= 2) polyn = 1.0 + (j - 1) * cssthe * polyn / j;
    if (nu % 2 == 1) {
      const double ts = t / std::sqrt(static_cast<double>(nu));
      value = 0.5 * (1.0 + 2.0 * (std::atan(ts) + ts * cssthe * polyn) / M_PI);
    } else {
      const double snthe = t / std::sqrt(nu + tt);
      value = 0.5 * (1.0 + snthe * polyn);
    }
  }
  return std::clamp(value, 0.0, 1.0);
}

double t_log_pdf(double t, double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
         0.5 * (nu + 1.0) * std::log1p(t * t / nu);
}

double t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("t_quantile: p must lie in (0,1)");
  return boost::math::quantile(boost::math::students_t_distribution<double>(nu), p);
}

double bvt_cdf(double dh, double dk, double r, int nu) {
  constexpr double eps = 1e-15;
  if (nu < 1) return bvn_cdf(dh, dk, r);
  if (dh == -std::numeric_limits<double>::infinity() || dk == -std::numeric_limits<double>::infinity()) {
    return 0.0;
  }
  if (dh == std::numeric_limits<double>::infinity()) return t_cdf(dk, nu);
  if (dk == std::numeric_limits<double>::infinity()) return t_cdf(dh, nu);
  dh = student_clamp(dh);
  dk = student_clamp(dk);
  if (1.0 - r <= eps) return t_cdf(std::min(dh, dk), nu);
  if (r + 1.0 <= eps) return dh > -dk ? t_cdf(dh, nu) - t_cdf(-dk, nu) : 0.0;
  const double snu = std::sqrt(static_cast<double>(nu));
  const double ors = 1.0 - r * r;
  const double hrk = dh - r * dk;
  const double krh = dk - r * dh;
  double xnhk = 0.0;
  double xnkh = 0.0;
  if (std::abs(hrk) + ors > 0.0) {
    xnhk = hrk * hrk / (hrk * hrk + ors * (nu + dk * dk));
    xnkh = krh * krh / (krh * krh + ors * (nu + dh * dh));
  }
  const double hs = (dh - r * dk) >= 0.0 ? 1.0 : -1.0;
  const double ks = (dk - r * dh) >= 0.0 ? 1.0 : -1.0;
  double bvt;
  if (nu % 2 == 0) {
    bvt = std::atan2(std::sqrt(ors), -r) / kTwoPi;
    double gmph = dh / std::sqrt(16.0 * (nu + dh * dh));
    double gmpk = dk / std::sqrt(16.0 * (nu + dk * dk));
    double btnckh = 2.0 * std::atan2(std::sqrt(xnkh), std::sqrt(1.0 - xnkh)) / M_PI;
    double btpdkh = 2.0 * std::sqrt(xnkh * (1.0 - xnkh)) / M_PI;
    double btnchk = 2.0 * std::atan2(std::sqrt(xnhk), std::sqrt(1.0 - xnhk)) / M_PI;
    double btpdhk = 2.0 * std::sqrt(xnhk * (1.0 - xnhk)) / M_PI;
    for (int j = 1; j <= nu / 2; ++j) {
      bvt += gmph * (1.0 + ks * btnckh);
      bvt += gmpk * (1.0 + hs * btnchk);
      btnckh += btpdkh;
      btpdkh = 2.0 * j * btpdkh * (1.0 - xnkh) / (2.0 * j + 1.0);
      btnchk += btpdhk;
      btpdhk = 2.0 * j * btpdhk * (1.0 - xnhk) / (2.0 * j + 1.0);
      gmph = gmph * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dh * dh / nu));
      gmpk = gmpk * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dk * dk / nu));
    }
  } else {
    const double qhrk = std::sqrt(dh * dh + dk * dk - 2.0 * r * dh * dk + nu * ors);
    const double hkrn = dh * dk + r * nu;
    const double hkn = dh * dk - nu;
    const double hpk = dh + dk;
    bvt = std::atan2(-snu * (hkn * qhrk + hpk * hkrn), hkn * hkrn - nu * hpk * qhrk) / kTwoPi;
    if (bvt < -eps) bvt += 1.0;
    double gmph = dh / (kTwoPi * snu * (1.0 + dh * dh / nu));
    double gmpk = dk / (kTwoPi * snu * (1.0 + dk * dk / nu));
    double btnckh = std::sqrt(xnkh);
    double btpdkh = btnckh;
    double btnchk = std::sqrt(xnhk);
    double btpdhk = btnchk;
    for (int j = 1; j <= (nu - 1) / 2; ++j) {
      bvt += gmph * (1.0 + ks * btnckh);
      bvt += gmpk * (1.0 + hs * btnchk);
      btpdkh = (2.0 * j - 1.0) * btpdkh * (1.0 - xnkh) / (2.0 * j);
      btnckh += btpdkh;
      btpdhk = (2.0 * j - 1.0) * btpdhk * (1.0 - xnhk) / (2.0 * j);
      btnchk += btpdhk;
      gmph = 2.0 * j * gmph / ((2.0 * j + 1.0) * (1.0 + dh * dh / nu));
      gmpk = 2.0 * j * gmpk / ((2.0 * j + 1.0) * (1.0 + dk * dk / nu));
    }
  }
  return std::clamp(bvt, 0.0, 1.0);
}

double mvn_rect(std::span<const double> lo, std::span<const double> hi, const Eigen::MatrixXd& corr) {
  const std::size_t d = lo.size();
  if (hi.size() != d || static_cast<std::size_t>(corr.rows()) != d) {
    throw DomainError("mvn_rect: dimension mismatch");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!(hi[i] > lo[i])) return 0.0;
  }
  switch (d) {
    case 0:
      return 1.0;
    case 1:
      return normal::interval(lo[0], hi[0]);
    case 2:
      return bvn_rect(lo[0], hi[0], lo[1], hi[1], corr(0, 1));
    case 3:
      return mvn3_rect(lo, hi, corr);
    default:
      return sov_rect(lo, hi, corr, 0);
  }
}

double mvt_rect(std::span<const double> lo, std::span<const double> hi, const Eigen::MatrixXd& corr, int nu) {
  const std::size_t d = lo.size();
  if (hi.size() != d || static_cast<std::size_t>(corr.rows()) != d) {
    throw DomainError("mvt_rect: dimension mismatch");
  }
  if (nu < 1) throw DomainError("mvt_rect: nu must be a positive integer");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(hi[i] > lo[i])) return 0.0;
  }
  switch (d) {
    case 0:
      return 1.0;
    case 1: {
      // Upper-tail form when both limits are positive.
      if (lo[0] > 0.0) return std::max(t_cdf(-lo[0], nu) - t_cdf(-hi[0], nu), 0.0);
      return std::max(t_cdf(hi[0], nu) - t_cdf(lo[0], nu), 0.0);
    }
    case 2: {
      const double r = corr(0, 1);
      const double p = bvt_cdf(hi[0], hi[1], r, nu) - bvt_cdf(lo[0], hi[1], r, nu) -
                       bvt_cdf(hi[0], lo[1], r, nu) + bvt_cdf(lo[0], lo[1], r, nu);
      return std::max(p, 0.0);
    }
    case 3: {
      // X = Z / S with S = sqrt(W / nu): average normal rectangles over S.
      const auto& rule = chi_rule(nu);
      std::array<double, 3> a{};
      std::array<double, 3> b{};
      double sum = 0.0;
      for (std::size_t q = 0; q < rule.scale.size(); ++q) {
        for (int i = 0; i < 3; ++i) {
          a[i] = std::isinf(lo[i]) ? lo[i] : lo[i] * rule.scale[q];
          b[i] = std::isinf(hi[i]) ? hi[i] : hi[i] * rule.scale[q];
        }
        sum += rule.weight[q] * mvn3_rect(a, b, corr);
      }
      return std::max(sum, 0.0);
    }
    default:
      return sov_rect(lo, hi, corr, nu);
  }
}

}  // namespace censorfuse::elliptical
