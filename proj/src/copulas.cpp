// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/copulas.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "censorfuse/elliptical.hpp"
#include "censorfuse/errors.hpp"
#include "censorfuse/normal.hpp"
#include "censorfuse/numerics.hpp"

namespace censorfuse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxRanges = 20;

void check_unit(double u, const char* what) {
  if (!(u >= 0.0 && u <= 1.0)) {
    std::ostringstream os;
    os << what << ": coordinate " << u << " outside [0, 1]";
    throw DomainError(os.str());
  }
}

void check_coords(std::span<const Coordinate> coords) {
  for (const auto& c : coords) {
    check_unit(c.lo, "slice_mass");
    check_unit(c.hi, "slice_mass");
    if (c.lo > c.hi) throw DomainError("slice_mass: range with lo > hi");
  }
}

// ---- Archimedean generators ------------------------------------------------

// Generator phi, its derivative, and the k-th derivative of the inverse
// generator psi, for one family and parameter.
class Generator {
 public:
  Generator(CopulaFamily f, double theta) : f_(f), theta_(theta) {
    if (f_ == CopulaFamily::Frank) em1_ = std::expm1(-theta_);
  }

  double phi(double u) const {
    switch (f_) {
      case CopulaFamily::Clayton:
        return std::expm1(-theta_ * std::log(u)) / theta_;
      case CopulaFamily::Frank:
        // e^{-tu} - e^{-t} written without cancellation near u = 1.
        return -std::log1p(-std::exp(-theta_ * u) * std::expm1(-theta_ * (1.0 - u)) / em1_);
      case CopulaFamily::Gumbel:
        return std::pow(-std::log(u), theta_);
      default:
        return 0.0;
    }
  }

  double dphi(double u) const {
    switch (f_) {
      case CopulaFamily::Clayton:
        return -std::exp((-theta_ - 1.0) * std::log(u));
      case CopulaFamily::Frank:
        return theta_ * std::exp(-theta_ * u) / std::expm1(-theta_ * u);
      case CopulaFamily::Gumbel: {
        const double l = -std::log(u);
        return -theta_ * std::pow(l, theta_ - 1.0) / u;
      }
      default:
        return 0.0;
    }
  }

  // psi^{(k)}(s), sign included.
  double dpsi(int k, double s) const {
    switch (f_) {
      case CopulaFamily::Clayton:
        return clayton(k, s);
      case CopulaFamily::Frank:
        return frank(k, s);
      case CopulaFamily::Gumbel:
        return gumbel(k, s);
      default:
        return 0.0;
    }
  }

 private:
  double clayton(int k, double s) const {
    const double base = std::log1p(theta_ * s);
    if (!(1.0 + theta_ * s > 0.0)) return 0.0;
    double coef = 1.0;
    for (int j = 0; j < k; ++j) coef *= 1.0 + j * theta_;
    const double v = coef * std::exp((-1.0 / theta_ - k) * base);
    return (k % 2 == 0) ? v : -v;
  }

  // Li_{-n}(w) for n >= 0 via Eulerian numbers; omw = 1 - w supplied by the caller.
  static double polylog_neg(int n, double w, double omw) {
    if (n == 0) return w / omw;
    std::array<double, 16> a{};
    std::array<double, 16> next{};
    a[0] = 1.0;  // A(1, 0)
    for (int m = 2; m <= n; ++m) {
      next.fill(0.0);
      for (int j = 0; j < m; ++j) {
        const double left = (j < m - 1) ? (j + 1) * a[j] : 0.0;
        const double right = (j > 0) ? (m - j) * a[j - 1] : 0.0;
        next[j] = left + right;
      }
      a = next;
    }
    double poly = 0.0;
    for (int j = n - 1; j >= 0; --j) poly = poly * w + a[j];
    return w * poly / std::pow(omw, n + 1);
  }

  double frank(int k, double s) const {
    const double w = -em1_ * std::exp(-s);
    const double omw = -std::expm1(-s) + std::exp(-theta_ - s);
    const double li = (k == 0) ? -std::log(omw) : polylog_neg(k - 1, w, omw);
    const double v = li / theta_;
    return (k % 2 == 0) ? v : -v;
  }

  double gumbel(int k, double s) const {
    const double alpha = 1.0 / theta_;
    const double e = std::exp(-std::pow(s, alpha));
    if (k == 0) return e;
    // psi^{(k)}(s) = exp(-s^a) s^{-k} sum_j c_{k,j} s^{j a}
    std::array<double, 24> c{};
    std::array<double, 24> nc{};
    c[0] = 1.0;
    for (int m = 0; m < k; ++m) {
      nc.fill(0.0);
      for (int j = 0; j <= m + 1; ++j) {
        const double keep = (j <= m) ? c[j] * (j * alpha - m) : 0.0;
        const double step = (j >= 1) ? c[j - 1] * (-alpha) : 0.0;
        nc[j] = keep + step;
      }
      c = nc;
    }
    const double sa = std::pow(s, alpha);
    double poly = 0.0;
    for (int j = k; j >= 1; --j) poly = poly * sa + c[j];
    poly *= sa;
    return e * poly * std::pow(s, -k);
  }

  CopulaFamily f_;
  double theta_;
  double em1_ = 0.0;
};

double archimedean_slice(const CopulaModel& m, std::span<const Coordinate> coords) {
  const Generator g(m.family(), m.theta());
  int k = 0;
  double s_points = 0.0;
  double dphi_prod = 1.0;
  std::array<double, kMaxRanges> phi_lo{};
  std::array<double, kMaxRanges> phi_hi{};
  std::size_t r = 0;
  for (const auto& c : coords) {
    if (c.is_point()) {
      const double u = clamp_unit(c.lo);
      ++k;
      s_points += g.phi(u);
      dphi_prod *= g.dphi(u);
    } else {
      if (r >= kMaxRanges) throw DomainError("slice_mass: too many range coordinates");
      phi_lo[r] = g.phi(clamp_unit(c.lo));
      phi_hi[r] = g.phi(clamp_unit(c.hi));
      ++r;
    }
  }
  if (k > 20) throw DomainError("slice_mass: too many point coordinates");
  double acc = 0.0;
  const std::size_t corners = std::size_t{1} << r;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    double s = s_points;
    int lows = 0;
    for (std::size_t i = 0; i < r; ++i) {
      if (mask & (std::size_t{1} << i)) {
        s += phi_lo[i];
        ++lows;
      } else {
        s += phi_hi[i];
      }
    }
    const double v = g.dpsi(k, s);
    acc += (lows % 2 == 0) ? v : -v;
  }
  const double mass = acc * dphi_prod;
  return std::max(mass, 0.0);
}

// ---- elliptical helpers ----------------------------------------------------

double latent_of(CopulaFamily f, int nu, double u) {
  const double c = clamp_unit(u);
  return (f == CopulaFamily::Gaussian) ? normal::quantile(c) : elliptical::t_quantile(c, nu);
}

double t_interval(double a, double b, int nu) {
  if (a >= 0.0) return elliptical::t_cdf(-a, nu) - elliptical::t_cdf(-b, nu);
  return elliptical::t_cdf(b, nu) - elliptical::t_cdf(a, nu);
}

double mvt_log_pdf(const Eigen::VectorXd& z, double log_det, double q, int nu) {
  const double p = static_cast<double>(z.size());
  const double v = nu;
  return std::lgamma((v + p) / 2.0) - std::lgamma(v / 2.0) - 0.5 * p * std::log(v * std::numbers::pi) -
         0.5 * log_det - 0.5 * (v + p) * std::log1p(q / v);
}

double log_gamma_ratio_pair(int nu) {
  // log of the bivariate t normalising constant without the correlation part.
  const double v = nu;
  return std::lgamma((v + 2.0) / 2.0) - std::lgamma(v / 2.0) - std::log(v * std::numbers::pi);
}

}  // namespace

// ---- family names ------------------------------------------------------------

std::string_view to_string(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::Gaussian:
      return "gaussian";
    case CopulaFamily::StudentT:
      return "student_t";
    case CopulaFamily::Clayton:
      return "clayton";
    case CopulaFamily::Frank:
      return "frank";
    case CopulaFamily::Gumbel:
      return "gumbel";
    case CopulaFamily::Product:
      return "product";
  }
  return "?";
}

CopulaFamily parse_family(std::string_view name) {
  if (name == "gaussian") return CopulaFamily::Gaussian;
  if (name == "student_t" || name == "t") return CopulaFamily::StudentT;
  if (name == "clayton") return CopulaFamily::Clayton;
  if (name == "frank") return CopulaFamily::Frank;
  if (name == "gumbel") return CopulaFamily::Gumbel;
  if (name == "product") return CopulaFamily::Product;
  throw ParameterError("unknown copula family: " + std::string(name));
}

bool is_elliptical(CopulaFamily f) { return f == CopulaFamily::Gaussian || f == CopulaFamily::StudentT; }

bool is_archimedean(CopulaFamily f) {
  return f == CopulaFamily::Clayton || f == CopulaFamily::Frank || f == CopulaFamily::Gumbel;
}

double clamp_unit(double u) { return std::clamp(u, kUnitClamp, 1.0 - kUnitClamp); }

// ---- model -----------------------------------------------------------------

CopulaModel CopulaModel::product() { return CopulaModel(CopulaFamily::Product, 0.0, Eigen::MatrixXd(), 0); }

CopulaModel CopulaModel::archimedean(CopulaFamily family, double theta) {
  if (!std::isfinite(theta)) throw ParameterError("copula parameter must be finite");
  switch (family) {
    case CopulaFamily::Clayton:
      if (theta < -1.0 || theta == 0.0) throw ParameterError("Clayton theta must be in [-1, inf) \\ {0}");
      break;
    case CopulaFamily::Frank:
      if (theta == 0.0) throw ParameterError("Frank theta must be non-zero");
      break;
    case CopulaFamily::Gumbel:
      if (theta < 1.0) throw ParameterError("Gumbel theta must be >= 1");
      break;
    default:
      throw ParameterError("not an Archimedean family: " + std::string(to_string(family)));
  }
  return CopulaModel(family, theta, Eigen::MatrixXd(), 0);
}

namespace {

void validate_corr(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() < 1) throw ParameterError("correlation matrix must be square");
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    if (std::abs(c(i, i) - 1.0) > 1e-10) throw ParameterError("correlation matrix needs a unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (!std::isfinite(c(i, j)) || std::abs(c(i, j) - c(j, i)) > 1e-10) {
        throw ParameterError("correlation matrix must be symmetric");
      }
      if (std::abs(c(i, j)) >= 1.0) throw ParameterError("correlations must lie in (-1, 1)");
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw ParameterError("correlation matrix is not positive definite");
}

}  // namespace

CopulaModel CopulaModel::gaussian(Eigen::MatrixXd corr) {
  validate_corr(corr);
  return CopulaModel(CopulaFamily::Gaussian, 0.0, std::move(corr), 0);
}

CopulaModel CopulaModel::student_t(Eigen::MatrixXd corr, int nu) {
  validate_corr(corr);
  if (nu < 1) throw ParameterError("Student-t degrees of freedom must be >= 1");
  return CopulaModel(CopulaFamily::StudentT, 0.0, std::move(corr), nu);
}

Eigen::MatrixXd CopulaModel::equicorrelation(std::size_t dim, double rho) {
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(n, n, rho);
  c.diagonal().setOnes();
  return c;
}

void CopulaModel::check_dimension(std::size_t d) const {
  if (d < 1) throw ParameterError("copula dimension must be >= 1");
  if (is_elliptical(family_) && static_cast<std::size_t>(corr_.rows()) != d) {
    throw ParameterError("correlation matrix size does not match the copula dimension");
  }
  if (d > 2 && ((family_ == CopulaFamily::Clayton && theta_ < 0.0) ||
                (family_ == CopulaFamily::Frank && theta_ < 0.0))) {
    throw ParameterError("negative Archimedean parameters are only valid in dimension 2");
  }
}

std::string CopulaModel::describe() const {
  std::ostringstream os;
  os << to_string(family_);
  if (is_archimedean(family_)) {
    os << "(theta=" << theta_ << ")";
  } else if (is_elliptical(family_)) {
    os << "(";
    if (family_ == CopulaFamily::StudentT) os << "nu=" << nu_ << ", ";
    os << "rho=[";
    bool first = true;
    for (Eigen::Index i = 0; i < corr_.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < corr_.cols(); ++j) {
        os << (first ? "" : ", ") << corr_(i, j);
        first = false;
      }
    }
    os << "])";
  }
  return os.str();
}

// ---- latent-scale evaluation ---------------------------------------------------

std::vector<LatentCoordinate> to_latent(CopulaFamily family, int nu, std::span<const Coordinate> coords) {
  std::vector<LatentCoordinate> out;
  out.reserve(coords.size());
  for (const auto& c : coords) {
    if (c.is_point()) {
      const double z = latent_of(family, nu, c.lo);
      out.push_back({true, z, z});
    } else {
      out.push_back({false, latent_of(family, nu, c.lo), latent_of(family, nu, c.hi)});
    }
  }
  return out;
}

double latent_pair_mass(CopulaFamily family, double rho, int nu, const LatentCoordinate& a,
                        const LatentCoordinate& b) {
  const bool t = family == CopulaFamily::StudentT;
  const double om = 1.0 - rho * rho;
  if (a.point && b.point) {
    const double x = a.lo;
    const double y = b.lo;
    const double q = (x * x - 2.0 * rho * x * y + y * y) / om;
    if (!t) return std::exp(-0.5 * std::log(om) - 0.5 * (q - x * x - y * y));
    const double v = nu;
    const double logj = log_gamma_ratio_pair(nu) - 0.5 * std::log(om) - 0.5 * (v + 2.0) * std::log1p(q / v);
    return std::exp(logj - elliptical::t_log_pdf(x, v) - elliptical::t_log_pdf(y, v));
  }
  if (a.point || b.point) {
    const LatentCoordinate& p = a.point ? a : b;
    const LatentCoordinate& r = a.point ? b : a;
    const double m = rho * p.lo;
    double sd = std::sqrt(om);
    if (!t) return normal::interval((r.lo - m) / sd, (r.hi - m) / sd);
    sd *= std::sqrt((nu + p.lo * p.lo) / (nu + 1.0));
    return t_interval((r.lo - m) / sd, (r.hi - m) / sd, nu + 1);
  }
  thread_local Eigen::MatrixXd c2 = Eigen::MatrixXd::Identity(2, 2);
  c2(0, 1) = c2(1, 0) = rho;
  const std::array<double, 2> lo{a.lo, b.lo};
  const std::array<double, 2> hi{a.hi, b.hi};
  return t ? elliptical::mvt_rect(lo, hi, c2, nu) : elliptical::mvn_rect(lo, hi, c2);
}

double latent_slice_mass(CopulaFamily family, const Eigen::MatrixXd& corr, int nu,
                         std::span<const LatentCoordinate> coords) {
  const auto d = coords.size();
  if (static_cast<std::size_t>(corr.rows()) != d) throw DomainError("slice_mass: dimension mismatch");
  if (d == 2) return latent_pair_mass(family, corr(0, 1), nu, coords[0], coords[1]);
  const bool t = family == CopulaFamily::StudentT;

  std::vector<Eigen::Index> P;
  std::vector<Eigen::Index> R;
  for (std::size_t i = 0; i < d; ++i) (coords[i].point ? P : R).push_back(static_cast<Eigen::Index>(i));

  if (P.empty()) {
    std::vector<double> lo(d);
    std::vector<double> hi(d);
    for (std::size_t i = 0; i < d; ++i) {
      lo[i] = coords[i].lo;
      hi[i] = coords[i].hi;
    }
    return t ? elliptical::mvt_rect(lo, hi, corr, nu) : elliptical::mvn_rect(lo, hi, corr);
  }

  const auto np = static_cast<Eigen::Index>(P.size());
  const auto nr = static_cast<Eigen::Index>(R.size());
  Eigen::MatrixXd spp(np, np);
  Eigen::VectorXd z(np);
  for (Eigen::Index i = 0; i < np; ++i) {
    z(i) = coords[static_cast<std::size_t>(P[i])].lo;
    for (Eigen::Index j = 0; j < np; ++j) spp(i, j) = corr(P[i], P[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(spp);
  if (llt.info() != Eigen::Success) throw DomainError("slice_mass: singular correlation block");
  const Eigen::VectorXd x = llt.solve(z);
  const double q = z.dot(x);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < np; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));

  double log_c;
  if (!t) {
    log_c = -0.5 * log_det - 0.5 * (q - z.squaredNorm());
  } else {
    log_c = mvt_log_pdf(z, log_det, q, nu);
    for (Eigen::Index i = 0; i < np; ++i) log_c -= elliptical::t_log_pdf(z(i), nu);
  }
  if (nr == 0) return std::exp(log_c);

  Eigen::MatrixXd srp(nr, np);
  Eigen::MatrixXd srr(nr, nr);
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < np; ++j) srp(i, j) = corr(R[i], P[j]);
    for (Eigen::Index j = 0; j < nr; ++j) srr(i, j) = corr(R[i], R[j]);
  }
  const Eigen::VectorXd mean = srp * x;
  Eigen::MatrixXd cov = srr - srp * llt.solve(srp.transpose());
  if (t) cov *= (nu + q) / (nu + static_cast<double>(np));
  Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  std::vector<double> lo(static_cast<std::size_t>(nr));
  std::vector<double> hi(static_cast<std::size_t>(nr));
  Eigen::MatrixXd cc(nr, nr);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const auto& c = coords[static_cast<std::size_t>(R[i])];
    lo[static_cast<std::size_t>(i)] = (c.lo - mean(i)) / sd(i);
    hi[static_cast<std::size_t>(i)] = (c.hi - mean(i)) / sd(i);
    for (Eigen::Index j = 0; j < nr; ++j) cc(i, j) = cov(i, j) / (sd(i) * sd(j));
  }
  cc.diagonal().setOnes();
  double rect;
  if (nr == 1) {
    rect = t ? t_interval(lo[0], hi[0], nu + static_cast<int>(np)) : normal::interval(lo[0], hi[0]);
  } else {
    rect = t ? elliptical::mvt_rect(lo, hi, cc, nu + static_cast<int>(np)) : elliptical::mvn_rect(lo, hi, cc);
  }
  return std::exp(log_c) * rect;
}

// ---- public evaluation -------------------------------------------------------

double slice_mass(const CopulaModel& model, std::span<const Coordinate> coords) {
  check_coords(coords);
  model.check_dimension(coords.size());
  switch (model.family()) {
    case CopulaFamily::Product: {
      double m = 1.0;
      for (const auto& c : coords) {
        if (!c.is_point()) m *= c.hi - c.lo;
      }
      return m;
    }
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT: {
      const auto latent = to_latent(model.family(), model.nu(), coords);
      return latent_slice_mass(model.family(), model.corr(), model.nu(), latent);
    }
    default:
      return archimedean_slice(model, coords);
  }
}

double copula_cdf(const CopulaModel& model, std::span<const double> u) {
  for (double v : u) check_unit(v, "copula_cdf");
  model.check_dimension(u.size());
  switch (model.family()) {
    case CopulaFamily::Product: {
      double m = 1.0;
      for (double v : u) m *= v;
      return m;
    }
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT: {
      std::vector<double> lo(u.size(), -kInf);
      std::vector<double> hi(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) hi[i] = latent_of(model.family(), model.nu(), u[i]);
      return model.family() == CopulaFamily::Gaussian ? elliptical::mvn_rect(lo, hi, model.corr())
                                                      : elliptical::mvt_rect(lo, hi, model.corr(), model.nu());
    }
    default: {
      const Generator g(model.family(), model.theta());
      double s = 0.0;
      for (double v : u) s += g.phi(clamp_unit(v));
      return std::clamp(g.dpsi(0, s), 0.0, 1.0);
    }
  }
}

double copula_density(const CopulaModel& model, std::span<const double> u) {
  std::vector<Coordinate> c;
  c.reserve(u.size());
  for (double v : u) c.push_back(Coordinate::point(v));
  return slice_mass(model, c);
}

double copula_log_density(const CopulaModel& model, std::span<const double> u) {
  return std::log(copula_density(model, u));
}

double h_volume(const CopulaModel& model, std::span<const double> lo, std::span<const double> hi) {
  if (lo.size() != hi.size()) throw DomainError("h_volume: corner dimension mismatch");
  std::vector<Coordinate> c;
  c.reserve(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (lo[i] > hi[i]) throw DomainError("h_volume: lo > hi");
    c.push_back(Coordinate::range(lo[i], hi[i]));
  }
  return slice_mass(model, c);
}

double conditional_cdf_wrt_first(const CopulaModel& model, double u0, std::span<const double> u_rest) {
  std::vector<double> zeros(u_rest.size(), 0.0);
  return conditional_cdf_wrt_first(model, u0, zeros, u_rest);
}

double conditional_cdf_wrt_first(const CopulaModel& model, double u0, std::span<const double> lo_rest,
                                 std::span<const double> hi_rest) {
  if (lo_rest.size() != hi_rest.size()) throw DomainError("conditional_cdf_wrt_first: dimension mismatch");
  std::vector<Coordinate> c;
  c.reserve(lo_rest.size() + 1);
  c.push_back(Coordinate::point(u0));
  for (std::size_t i = 0; i < lo_rest.size(); ++i) {
    if (lo_rest[i] > hi_rest[i]) throw DomainError("conditional_cdf_wrt_first: lo > hi");
    c.push_back(Coordinate::range(lo_rest[i], hi_rest[i]));
  }
  return slice_mass(model, c);
}

double conditional_cdf_wrt_first_fd(const CopulaModel& model, double u0, std::span<const double> u_rest,
                                     double step) {
  std::vector<double> a(u_rest.size() + 1);
  std::vector<double> b(u_rest.size() + 1);
  std::copy(u_rest.begin(), u_rest.end(), a.begin() + 1);
  std::copy(u_rest.begin(), u_rest.end(), b.begin() + 1);
  const double lo = std::max(0.0, u0 - step);
  const double hi = std::min(1.0, u0 + step);
  a[0] = hi;
  b[0] = lo;
  return (copula_cdf(model, a) - copula_cdf(model, b)) / (hi - lo);
}

// ---- sampling ----------------------------------------------------------------

namespace {

std::uint64_t log_series(double theta, Rng& rng) {
  // Kemp's LK algorithm with p = 1 - exp(-theta).
  const double p = -std::expm1(-theta);
  const double u = uniform_open(rng);
  if (u > p) return 1;
  const double q = -std::expm1(-theta * uniform_open(rng));
  if (u < q * q) {
    const double k = std::floor(1.0 + std::log(u) / std::log(q));
    return k < 1.0 ? 1 : static_cast<std::uint64_t>(std::min(k, 9.0e18));
  }
  return u > q ? 1 : 2;
}

double positive_stable(double alpha, Rng& rng) {
  if (alpha >= 1.0) return 1.0;
  const double th = std::numbers::pi * uniform_open(rng);
  const double w = -std::log(uniform_open(rng));
  const double a = std::sin(alpha * th) / std::pow(std::sin(th), 1.0 / alpha);
  const double b = std::pow(std::sin((1.0 - alpha) * th) / w, (1.0 - alpha) / alpha);
  return a * b;
}

std::vector<double> sample_elliptical(const CopulaModel& m, std::size_t d, Rng& rng) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m.corr());
  std::normal_distribution<double> n01;
  Eigen::VectorXd g(static_cast<Eigen::Index>(d));
  for (auto& v : g) v = n01(rng);
  Eigen::VectorXd z = llt.matrixL() * g;
  std::vector<double> u(d);
  if (m.family() == CopulaFamily::Gaussian) {
    for (std::size_t i = 0; i < d; ++i) u[i] = normal::cdf(z(static_cast<Eigen::Index>(i)));
  } else {
    std::chi_squared_distribution<double> chi(m.nu());
    const double s = std::sqrt(chi(rng) / m.nu());
    for (std::size_t i = 0; i < d; ++i) u[i] = elliptical::t_cdf(z(static_cast<Eigen::Index>(i)) / s, m.nu());
  }
  return u;
}

}  // namespace

std::vector<double> copula_sample(const CopulaModel& model, std::size_t d, Rng& rng) {
  model.check_dimension(d);
  std::vector<double> u(d);
  const double th = model.theta();
  switch (model.family()) {
    case CopulaFamily::Product:
      for (auto& v : u) v = uniform_open(rng);
      return u;
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
      return sample_elliptical(model, d, rng);
    case CopulaFamily::Clayton:
      if (th < 0.0) {
        u[0] = uniform_open(rng);
        const double p = uniform_open(rng);
        if (th <= -1.0) {
          u[1] = 1.0 - u[0];
        } else {
          const double inner = std::pow(u[0], -th) * (std::pow(p, -th / (1.0 + th)) - 1.0) + 1.0;
          u[1] = std::pow(inner, -1.0 / th);
        }
        return u;
      } else {
        std::gamma_distribution<double> gam(1.0 / th, 1.0);
        const double v = gam(rng);
        for (auto& x : u) x = std::pow(1.0 - std::log(uniform_open(rng)) / v, -1.0 / th);
        return u;
      }
    case CopulaFamily::Frank:
      if (th < 0.0) {
        u[0] = uniform_open(rng);
        const double p = uniform_open(rng);
        const double y = p * std::expm1(-th) / (p + (1.0 - p) * std::exp(-th * u[0]));
        u[1] = -std::log1p(y) / th;
        return u;
      } else {
        const double v = static_cast<double>(log_series(th, rng));
        const double p = -std::expm1(-th);
        for (auto& x : u) {
          const double s = -std::log(uniform_open(rng)) / v;
          x = -std::log1p(-p * std::exp(-s)) / th;
        }
        return u;
      }
    case CopulaFamily::Gumbel: {
      const double alpha = 1.0 / th;
      const double v = positive_stable(alpha, rng);
      for (auto& x : u) {
        const double s = -std::log(uniform_open(rng)) / v;
        x = std::exp(-std::pow(s, alpha));
      }
      return u;
    }
  }
  return u;
}

// ---- Kendall's tau -----------------------------------------------------------

namespace {

double frank_tau_positive(double x) {
  if (x < 1e-2) {
    const double x2 = x * x;
    return x / 9.0 * (1.0 - x2 / 100.0 + x2 * x2 / 5880.0);
  }
  // Debye D1(x) = (1/x) int_0^x t / (e^t - 1) dt
  const double top = std::min(x, 80.0);
  const int panels = std::max(1, static_cast<int>(std::ceil(top / 2.0)));
  const double w = top / panels;
  double integral = 0.0;
  for (int i = 0; i < panels; ++i) {
    integral += numerics::integrate_1d(
        [](double t) { return t <= 0.0 ? 1.0 : t / std::expm1(t); }, i * w, (i + 1) * w, 20);
  }
  if (x > 80.0) integral = std::numbers::pi * std::numbers::pi / 6.0;
  const double d1 = integral / x;
  return 1.0 - 4.0 / x * (1.0 - d1);
}

double frank_tau(double theta) {
  return theta >= 0.0 ? frank_tau_positive(theta) : -frank_tau_positive(-theta);
}

}  // namespace

double param_to_tau(const CopulaModel& model) {
  switch (model.family()) {
    case CopulaFamily::Product:
      return 0.0;
    case CopulaFamily::Clayton:
      return model.theta() / (model.theta() + 2.0);
    case CopulaFamily::Gumbel:
      return 1.0 - 1.0 / model.theta();
    case CopulaFamily::Frank:
      return frank_tau(model.theta());
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
      if (model.corr().rows() < 2) return 0.0;
      return 2.0 / std::numbers::pi * std::asin(model.corr()(0, 1));
  }
  return 0.0;
}

double tau_to_param(CopulaFamily family, double tau) {
  if (!(tau > -1.0 && tau < 1.0)) throw DomainError("Kendall tau must lie in (-1, 1)");
  switch (family) {
    case CopulaFamily::Product:
      if (tau != 0.0) throw DomainError("product copula has tau = 0");
      return 0.0;
    case CopulaFamily::Clayton:
      if (tau < -1.0 / 3.0) throw DomainError("Clayton cannot reach tau < -1/3");
      return 2.0 * tau / (1.0 - tau);
    case CopulaFamily::Gumbel:
      if (tau < 0.0) throw DomainError("Gumbel cannot reach negative tau");
      return 1.0 / (1.0 - tau);
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
      return std::sin(std::numbers::pi * tau / 2.0);
    case CopulaFamily::Frank: {
      if (tau == 0.0) return 0.0;
      const double target = std::abs(tau);
      if (target < 1e-6) return std::copysign(9.0 * target, tau);
      double hi = 64.0;
      while (frank_tau_positive(hi) < target) {
        hi *= 2.0;
        if (hi > 1e8) throw DomainError("Frank tau too close to 1");
      }
      const double th = numerics::find_root([&](double x) { return frank_tau_positive(x) - target; },
                                            1e-7, hi, 1e-14);
      return std::copysign(th, tau);
    }
  }
  return 0.0;
}

CopulaModel model_from_tau(CopulaFamily family, double tau, std::size_t d, int nu) {
  switch (family) {
    case CopulaFamily::Product:
      return CopulaModel::product();
    case CopulaFamily::Gaussian:
      return CopulaModel::gaussian(CopulaModel::equicorrelation(d, tau_to_param(family, tau)));
    case CopulaFamily::StudentT:
      return CopulaModel::student_t(CopulaModel::equicorrelation(d, tau_to_param(family, tau)), nu);
    case CopulaFamily::Gumbel:
      return CopulaModel::archimedean(family, tau_to_param(family, tau));
    default: {
      const double th = tau_to_param(family, tau);
      if (th == 0.0) return CopulaModel::product();
      return CopulaModel::archimedean(family, th);
    }
  }
}

}  // namespace censorfuse
