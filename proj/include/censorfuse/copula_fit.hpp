// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "censorfuse/copulas.hpp"

namespace censorfuse {

/// A batch of copula slices of a common dimension. Complete data (all points)
/// is the special case of ordinary pseudo-observations.
class SliceData {
 public:
  SliceData(std::vector<Coordinate> flat, std::size_t dim);
  static SliceData from_points(std::span<const std::vector<double>> u);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : flat_.size() / dim_; }
  std::span<const Coordinate> operator[](std::size_t i) const {
    return std::span<const Coordinate>(flat_).subspan(i * dim_, dim_);
  }
  bool complete() const { return complete_; }

 private:
  std::vector<Coordinate> flat_;
  std::size_t dim_;
  bool complete_ = true;
};

struct FitOptions {
  double tol = 1e-6;
  int max_iter = 200;
  int student_nu = 5;
};

struct FitResult {
  CopulaModel model;
  double log_likelihood;
  std::size_t floor_hits = 0;
};

/// Per-sample masses below this are floored before the log.
inline constexpr double kLikelihoodFloor = 1e-300;

double log_likelihood(const CopulaModel& model, const SliceData& data, std::size_t* floor_hits = nullptr);

/// Maximum-likelihood fit of one family. Archimedean families: bounded 1-D
/// search on an asinh-transformed parameter. Elliptical families: normal-score
/// correlations for complete Gaussian data, otherwise pairwise 1-D likelihood
/// maximization per correlation, repaired to positive definiteness.
/// Throws FitError on degenerate data (fewer than two samples, or all samples
/// identical).
FitResult fit_ml(CopulaFamily family, const SliceData& data, const FitOptions& opts = {});
FitResult fit_ml(CopulaFamily family, std::span<const std::vector<double>> u, const FitOptions& opts = {});

struct Selection {
  FitResult best;
  std::vector<FitResult> fitted;  // in library order, successful fits only
  std::vector<std::string> failures;
  bool fell_back = false;  // every family failed; best is Product
};

/// Fits every family in the library and returns the one with the highest
/// log-likelihood; ties go to the earlier entry.
Selection select_best(std::span<const CopulaFamily> library, const SliceData& data, const FitOptions& opts = {});

}  // namespace censorfuse
