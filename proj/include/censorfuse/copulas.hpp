// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "censorfuse/rng.hpp"

namespace censorfuse {

enum class CopulaFamily { Gaussian, StudentT, Clayton, Frank, Gumbel, Product };

std::string_view to_string(CopulaFamily f);
/// Accepts the lower-case names used in configs ("gaussian", "student_t" or
/// "t", "clayton", "frank", "gumbel", "product"); throws ParameterError.
CopulaFamily parse_family(std::string_view name);

bool is_elliptical(CopulaFamily f);
bool is_archimedean(CopulaFamily f);

/// Unit-cube coordinates are clamped to [kUnitClamp, 1 - kUnitClamp] before
/// any density or CDF evaluation.
inline constexpr double kUnitClamp = 1e-10;
double clamp_unit(double u);

/// A copula family with its dependence parameter: a scalar theta for the
/// exchangeable Archimedean families, a correlation matrix for the elliptical
/// ones (plus integer degrees of freedom for Student-t).
class CopulaModel {
 public:
  static CopulaModel product();
  /// Clayton: theta in [-1, inf) \ {0}; Frank: theta != 0; Gumbel: theta >= 1.
  static CopulaModel archimedean(CopulaFamily family, double theta);
  static CopulaModel gaussian(Eigen::MatrixXd corr);
  static CopulaModel student_t(Eigen::MatrixXd corr, int nu = 5);
  /// Equicorrelated matrix helper for elliptical families.
  static Eigen::MatrixXd equicorrelation(std::size_t dim, double rho);

  CopulaFamily family() const { return family_; }
  double theta() const { return theta_; }
  const Eigen::MatrixXd& corr() const { return corr_; }
  int nu() const { return nu_; }

  /// Throws ParameterError if the model is not a valid copula in dimension d
  /// (matrix size for elliptical families; negative Clayton/Frank parameters
  /// are only valid for d = 2).
  void check_dimension(std::size_t d) const;

  std::string describe() const;

 private:
  CopulaModel(CopulaFamily f, double theta, Eigen::MatrixXd corr, int nu)
      : family_(f), theta_(theta), corr_(std::move(corr)), nu_(nu) {}

  CopulaFamily family_;
  double theta_;
  Eigen::MatrixXd corr_;
  int nu_;
};

/// One coordinate of a "slice" of the copula: either a point, at which the
/// copula is differentiated, or a range, over which it is integrated.
struct Coordinate {
  enum class Kind { Point, Range };
  Kind kind;
  double lo;
  double hi;

  static Coordinate point(double u) { return {Kind::Point, u, u}; }
  static Coordinate range(double lo, double hi) { return {Kind::Range, lo, hi}; }
  bool is_point() const { return kind == Kind::Point; }
};

/// Mixed partial derivative of the copula in the point coordinates,
/// integrated over the range coordinates:
///   integral over ranges of c(u) du_ranges  (evaluated at the points).
/// All-range slices give the H-volume, all-point slices the density. Exact
/// (inclusion-exclusion of generator derivatives) for Archimedean families,
/// conditional rectangle probabilities for elliptical ones.
double slice_mass(const CopulaModel& model, std::span<const Coordinate> coords);

double copula_cdf(const CopulaModel& model, std::span<const double> u);
double copula_density(const CopulaModel& model, std::span<const double> u);
double copula_log_density(const CopulaModel& model, std::span<const double> u);

/// Probability mass of the box [lo, hi]; DomainError if lo > hi anywhere.
double h_volume(const CopulaModel& model, std::span<const double> lo, std::span<const double> hi);

/// dC/du_0 at (u0, u_rest): the conditional CDF of the remaining coordinates
/// given the first.
double conditional_cdf_wrt_first(const CopulaModel& model, double u0, std::span<const double> u_rest);

/// d/du_0 of the mass of the box [lo_rest, hi_rest] in the remaining
/// coordinates, by inclusion-exclusion over the box corners.
double conditional_cdf_wrt_first(const CopulaModel& model, double u0, std::span<const double> lo_rest,
                                 std::span<const double> hi_rest);

/// Central finite difference of copula_cdf in u_0 (step 1e-5); the reference
/// route for families without closed-form conditionals.
double conditional_cdf_wrt_first_fd(const CopulaModel& model, double u0, std::span<const double> u_rest,
                                     double step = 1e-5);

/// One draw from the copula in dimension d. Archimedean families use the
/// Marshall-Olkin frailty construction (negative-parameter bivariate cases use
/// conditional inversion); elliptical families push correlated normal or t
/// draws through their univariate CDFs.
std::vector<double> copula_sample(const CopulaModel& model, std::size_t d, Rng& rng);

/// Kendall's tau of the bivariate margin (coordinates 0 and 1 for elliptical
/// models).
double param_to_tau(const CopulaModel& model);

/// Inverse of param_to_tau: theta for Archimedean families, rho for elliptical
/// ones. DomainError if tau is unreachable for the family.
double tau_to_param(CopulaFamily family, double tau);

/// Model with bivariate Kendall tau; elliptical families become
/// equicorrelated in dimension d.
CopulaModel model_from_tau(CopulaFamily family, double tau, std::size_t d = 2, int nu = 5);

/// Latent-scale coordinates of an elliptical family (normal or t scores).
struct LatentCoordinate {
  bool point;
  double lo;
  double hi;
};

std::vector<LatentCoordinate> to_latent(CopulaFamily family, int nu, std::span<const Coordinate> coords);

/// slice_mass for an elliptical model given coordinates already transformed by
/// to_latent.
double latent_slice_mass(CopulaFamily family, const Eigen::MatrixXd& corr, int nu,
                         std::span<const LatentCoordinate> coords);

/// Bivariate special case of latent_slice_mass with correlation rho.
double latent_pair_mass(CopulaFamily family, double rho, int nu, const LatentCoordinate& a,
                        const LatentCoordinate& b);

}  // namespace censorfuse
