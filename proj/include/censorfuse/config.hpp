// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "censorfuse/copulas.hpp"
#include "censorfuse/simulation.hpp"

namespace censorfuse {

inline constexpr int kSchemaVersion = 1;

/// Truth copula as written in a config: a family plus one of tau, rho or
/// theta. Elliptical families use an equicorrelation matrix.
struct TruthSpec {
  CopulaFamily family = CopulaFamily::Product;
  std::string parameter;  // "tau", "rho", "theta" or empty for product
  double value = 0.0;
  int nu = 5;

  CopulaModel build(std::size_t dim) const;
};

struct CfSettings {
  double q = 0.5;
  std::vector<double> ratios{1.0, 2.0, 3.0, 5.0};
  double upsilon_max = 12.0;
  std::size_t upsilon_points = 241;

  std::vector<double> upsilon_grid() const;
};

struct RunConfig {
  ScenarioConfig scenario;
  TruthSpec truth_h1;
  TruthSpec truth_h0;
  std::vector<Rule> rules;
  std::vector<double> betas;
  CfSettings cf;

  /// Resolved configuration in schema form; parsing it yields the same run.
  nlohmann::ordered_json to_json() const;
  std::uint64_t hash() const;
};

/// Throws ConfigError with the offending field on any schema violation,
/// including unknown keys.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace censorfuse
