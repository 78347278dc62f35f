// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/copula_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "censorfuse/errors.hpp"
#include "censorfuse/normal.hpp"
#include "censorfuse/numerics.hpp"

namespace censorfuse {

namespace {

constexpr double kIndependenceNudge = 1e-8;
constexpr double kMaxFitTau = 0.9;
constexpr double kMaxPairRho = 0.98;
constexpr double kMinEigen = 1e-4;

double floored_log(double m, std::size_t& hits) {
  if (!(m >= kLikelihoodFloor)) {
    ++hits;
    return std::log(kLikelihoodFloor);
  }
  return std::log(m);
}

bool same_coord(const Coordinate& a, const Coordinate& b) {
  return a.kind == b.kind && a.lo == b.lo && a.hi == b.hi;
}

void check_fit_data(const SliceData& data) {
  if (data.size() < 2) throw FitError("copula fit needs at least two samples");
  if (data.dim() < 2) throw FitError("copula fit needs dimension >= 2");
  const auto first = data[0];
  for (std::size_t i = 1; i < data.size(); ++i) {
    const auto s = data[i];
    for (std::size_t k = 0; k < data.dim(); ++k) {
      if (!same_coord(first[k], s[k])) return;
    }
  }
  throw FitError("copula fit: all samples are identical");
}

using LatentData = std::vector<LatentCoordinate>;

LatentData latent_all(CopulaFamily f, int nu, const SliceData& data) {
  LatentData out;
  out.reserve(data.size() * data.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto l = to_latent(f, nu, data[i]);
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

double latent_loglik(CopulaFamily f, const Eigen::MatrixXd& corr, int nu, const LatentData& lat, std::size_t dim,
                     std::size_t* floor_hits) {
  std::size_t hits = 0;
  double ll = 0.0;
  const std::span<const LatentCoordinate> all(lat);
  for (std::size_t i = 0; i < lat.size() / dim; ++i) {
    ll += floored_log(latent_slice_mass(f, corr, nu, all.subspan(i * dim, dim)), hits);
  }
  if (floor_hits) *floor_hits = hits;
  return ll;
}

Eigen::MatrixXd repair_correlation(Eigen::MatrixXd c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.eigenvalues().minCoeff() >= kMinEigen) return c;
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(kMinEigen);
  c = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::VectorXd s = c.diagonal().cwiseSqrt().cwiseInverse();
  c = s.asDiagonal() * c * s.asDiagonal();
  c.diagonal().setOnes();
  return 0.5 * (c + c.transpose());
}

FitResult fit_elliptical(CopulaFamily f, const SliceData& data, const FitOptions& opts) {
  const int nu = opts.student_nu;
  const std::size_t d = data.dim();
  const std::size_t n = data.size();
  const LatentData lat = latent_all(f, nu, data);
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));

  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      double rho;
      if (f == CopulaFamily::Gaussian && data.complete()) {
        std::vector<double> za(n);
        std::vector<double> zb(n);
        for (std::size_t i = 0; i < n; ++i) {
          za[i] = lat[i * d + a].lo;
          zb[i] = lat[i * d + b].lo;
        }
        rho = numerics::pearson(za, zb);
        if (!std::isfinite(rho)) rho = 0.0;
        rho = std::clamp(rho, -kMaxPairRho, kMaxPairRho);
      } else {
        auto obj = [&](double r) {
          std::size_t hits = 0;
          double ll = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            ll += floored_log(latent_pair_mass(f, r, nu, lat[i * d + a], lat[i * d + b]), hits);
          }
          return ll;
        };
        rho = numerics::maximize_1d(obj, -kMaxPairRho, kMaxPairRho, opts.tol, opts.max_iter).argmax;
      }
      corr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = rho;
      corr(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = rho;
    }
  }
  corr = repair_correlation(std::move(corr));
  CopulaModel model = f == CopulaFamily::Gaussian ? CopulaModel::gaussian(corr) : CopulaModel::student_t(corr, nu);
  std::size_t hits = 0;
  const double ll = latent_loglik(f, model.corr(), nu, lat, d, &hits);
  return {std::move(model), ll, hits};
}

// Parameter <-> search variable. The search runs on asinh of the distance
// from the independence value, which behaves like a log scale for strong
// dependence and stays defined through independence.
struct ArchimedeanScale {
  CopulaFamily f;
  double lo;
  double hi;

  double theta(double v) const {
    double th = std::sinh(v);
    if (f == CopulaFamily::Gumbel) return 1.0 + std::max(th, 0.0);
    if (std::abs(th) < kIndependenceNudge) th = (th < 0.0) ? -kIndependenceNudge : kIndependenceNudge;
    return th;
  }
};

ArchimedeanScale archimedean_scale(CopulaFamily f, std::size_t d) {
  switch (f) {
    case CopulaFamily::Clayton:
      return {f, 0.0, std::asinh(tau_to_param(f, kMaxFitTau))};
    case CopulaFamily::Gumbel:
      return {f, 0.0, std::asinh(tau_to_param(f, kMaxFitTau) - 1.0)};
    default: {
      const double top = std::asinh(tau_to_param(f, kMaxFitTau));
      return {f, d == 2 ? -top : 0.0, top};
    }
  }
}

FitResult fit_archimedean(CopulaFamily f, const SliceData& data, const FitOptions& opts) {
  const auto scale = archimedean_scale(f, data.dim());
  auto obj = [&](double v) {
    const double ll = log_likelihood(CopulaModel::archimedean(f, scale.theta(v)), data);
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
  };
  const auto best = numerics::maximize_1d(obj, scale.lo, scale.hi, opts.tol, opts.max_iter);
  CopulaModel model = CopulaModel::archimedean(f, scale.theta(best.argmax));
  std::size_t hits = 0;
  const double ll = log_likelihood(model, data, &hits);
  return {std::move(model), ll, hits};
}

}  // namespace

SliceData::SliceData(std::vector<Coordinate> flat, std::size_t dim) : flat_(std::move(flat)), dim_(dim) {
  if (dim_ == 0 || flat_.size() % dim_ != 0) throw DomainError("SliceData: size is not a multiple of dimension");
  for (const auto& c : flat_) {
    if (!(c.lo >= 0.0 && c.hi <= 1.0 && c.lo <= c.hi)) throw DomainError("SliceData: coordinate outside [0, 1]");
    if (!c.is_point()) complete_ = false;
  }
}

SliceData SliceData::from_points(std::span<const std::vector<double>> u) {
  if (u.empty()) throw FitError("copula fit needs at least two samples");
  const std::size_t d = u.front().size();
  std::vector<Coordinate> flat;
  flat.reserve(u.size() * d);
  for (const auto& row : u) {
    if (row.size() != d) throw DomainError("pseudo-observations have inconsistent dimension");
    for (double v : row) flat.push_back(Coordinate::point(v));
  }
  return SliceData(std::move(flat), d);
}

double log_likelihood(const CopulaModel& model, const SliceData& data, std::size_t* floor_hits) {
  if (is_elliptical(model.family())) {
    const auto lat = latent_all(model.family(), model.nu(), data);
    model.check_dimension(data.dim());
    return latent_loglik(model.family(), model.corr(), model.nu(), lat, data.dim(), floor_hits);
  }
  std::size_t hits = 0;
  double ll = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) ll += floored_log(slice_mass(model, data[i]), hits);
  if (floor_hits) *floor_hits = hits;
  return ll;
}

FitResult fit_ml(CopulaFamily family, const SliceData& data, const FitOptions& opts) {
  if (family == CopulaFamily::Product) {
    if (data.size() < 1) throw FitError("copula fit needs samples");
    CopulaModel m = CopulaModel::product();
    std::size_t hits = 0;
    const double ll = log_likelihood(m, data, &hits);
    return {std::move(m), ll, hits};
  }
  check_fit_data(data);
  if (is_elliptical(family)) return fit_elliptical(family, data, opts);
  return fit_archimedean(family, data, opts);
}

FitResult fit_ml(CopulaFamily family, std::span<const std::vector<double>> u, const FitOptions& opts) {
  return fit_ml(family, SliceData::from_points(u), opts);
}

Selection select_best(std::span<const CopulaFamily> library, const SliceData& data, const FitOptions& opts) {
  if (library.empty()) throw ParameterError("copula library is empty");
  Selection sel{fit_ml(CopulaFamily::Product, data, opts), {}, {}, false};
  bool have = false;
  for (CopulaFamily f : library) {
    try {
      FitResult r = fit_ml(f, data, opts);
      if (!std::isfinite(r.log_likelihood)) throw FitError("non-finite log-likelihood");
      if (!have || r.log_likelihood > sel.best.log_likelihood) {
        sel.best = r;
        have = true;
      }
      sel.fitted.push_back(std::move(r));
    } catch (const FitError& e) {
      sel.failures.push_back(std::string(to_string(f)) + ": " + e.what());
    } catch (const DomainError& e) {
      sel.failures.push_back(std::string(to_string(f)) + ": " + e.what());
    } catch (const IntegrationError& e) {
      sel.failures.push_back(std::string(to_string(f)) + ": " + e.what());
    }
  }
  sel.fell_back = !have;
  return sel;
}

}  // namespace censorfuse
