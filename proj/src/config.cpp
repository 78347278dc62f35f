// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "censorfuse/errors.hpp"

namespace censorfuse {

using nlohmann::json;
using nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CopulaModel TruthSpec::build(std::size_t dim) const {
  if (family == CopulaFamily::Product) return CopulaModel::product();
  if (parameter == "tau") return model_from_tau(family, value, dim, nu);
  if (is_elliptical(family)) {
    if (parameter != "rho") throw ConfigError("elliptical truth copula needs tau or rho");
    auto corr = CopulaModel::equicorrelation(dim, value);
    return family == CopulaFamily::Gaussian ? CopulaModel::gaussian(corr) : CopulaModel::student_t(corr, nu);
  }
  if (parameter != "theta") throw ConfigError("Archimedean truth copula needs tau or theta");
  return CopulaModel::archimedean(family, value);
}

std::vector<double> CfSettings::upsilon_grid() const {
  std::vector<double> v(upsilon_points);
  for (std::size_t k = 0; k < upsilon_points; ++k) {
    v[k] = upsilon_max * static_cast<double>(k) / static_cast<double>(upsilon_points - 1);
  }
  return v;
}

namespace {

// Field-path aware accessors; every error names the JSON path.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  void expect_object(std::initializer_list<std::string_view> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [key, _] : j_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        Node(j_, join(key)).fail("unknown key");
      }
    }
  }

  bool has(std::string_view key) const { return j_.contains(key); }
  Node operator[](std::string_view key) const {
    if (!j_.contains(key)) Node(j_, join(key)).fail("missing required key");
    return Node(j_.at(key), join(key));
  }
  Node at(std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("must be finite");
    return v;
  }
  long long integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<long long>();
  }
  std::size_t count() const {
    const long long v = integer();
    if (v < 0) fail("must be non-negative");
    return static_cast<std::size_t>(v);
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }
  std::vector<double> numbers() const {
    std::vector<double> v(size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = at(i).number();
    return v;
  }

 private:
  std::string join(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  const json& j_;
  std::string path_;
};

template <class F>
auto field(const Node& n, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    n.fail(e.what());
  }
}

GaussianMarginal parse_marginal(const Node& n) {
  n.expect_object({"mu0", "mu1", "sigma"});
  const double mu0 = n["mu0"].number();
  const double mu1 = n["mu1"].number();
  const double sigma = n["sigma"].number();
  return field(n, [&] { return GaussianMarginal(mu0, mu1, sigma); });
}

ordered_json marginal_json(const GaussianMarginal& m) {
  return ordered_json{{"mu0", m.mu0()}, {"mu1", m.mu1()}, {"sigma", m.sigma()}};
}

CopulaFamily parse_family_at(const Node& n) {
  const auto s = n.string();
  return field(n, [&] { return parse_family(s); });
}

std::vector<CopulaFamily> parse_library(const Node& n) {
  std::vector<CopulaFamily> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const auto f = parse_family_at(n.at(i));
    if (std::find(out.begin(), out.end(), f) != out.end()) n.at(i).fail("duplicate family");
    out.push_back(f);
  }
  return out;
}

ordered_json library_json(const std::vector<CopulaFamily>& lib) {
  ordered_json a = ordered_json::array();
  for (auto f : lib) a.push_back(std::string(to_string(f)));
  return a;
}

TruthSpec parse_truth(const Node& n) {
  n.expect_object({"family", "tau", "rho", "theta", "nu"});
  TruthSpec t;
  t.family = parse_family_at(n["family"]);
  int given = 0;
  for (const char* key : {"tau", "rho", "theta"}) {
    if (n.has(key)) {
      ++given;
      t.parameter = key;
      t.value = n[key].number();
    }
  }
  if (t.family == CopulaFamily::Product) {
    if (given != 0) n.fail("product copula takes no parameter");
  } else if (given != 1) {
    n.fail("give exactly one of tau, rho, theta");
  }
  if (n.has("nu")) {
    if (t.family != CopulaFamily::StudentT) n["nu"].fail("only valid for student_t");
    t.nu = static_cast<int>(n["nu"].integer());
  }
  return t;
}

ordered_json truth_json(const TruthSpec& t) {
  ordered_json j{{"family", std::string(to_string(t.family))}};
  if (!t.parameter.empty()) j[t.parameter] = t.value;
  if (t.family == CopulaFamily::StudentT) j["nu"] = t.nu;
  return j;
}

std::vector<double> per_sensor(const Node& n, std::size_t count) {
  if (n.raw().is_array()) {
    auto v = n.numbers();
    if (v.size() != count) n.fail("expected " + std::to_string(count) + " entries (one per sensor)");
    return v;
  }
  return std::vector<double>(count, n.number());
}

Scenario parse_scenario(const Node& n) {
  const auto s = n.string();
  if (s == "AC" || s == "ac") return Scenario::AC;
  if (s == "QC" || s == "qc") return Scenario::QC;
  n.fail("expected \"AC\" or \"QC\"");
}

}  // namespace

RunConfig parse_config(const json& root) {
  const Node n(root, "");
  n.expect_object({"schema_version", "sensors", "sensor", "n_sensors", "fc", "beta", "t1", "truth_h1", "truth_h0",
                   "library", "library_h0", "scenario", "q", "noise", "window", "trials", "alpha", "seed",
                   "student_nu", "quad_nodes", "rules", "betas", "cf"});
  if (n["schema_version"].integer() != kSchemaVersion) {
    n["schema_version"].fail("unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }

  RunConfig rc;
  ScenarioConfig& c = rc.scenario;

  if (n.has("sensors")) {
    if (n.has("sensor") || n.has("n_sensors")) n["sensors"].fail("use either sensors or sensor + n_sensors");
    const Node s = n["sensors"];
    for (std::size_t i = 0; i < s.size(); ++i) c.sensor_marginals.push_back(parse_marginal(s.at(i)));
  } else {
    const auto count = n["n_sensors"].count();
    const auto m = parse_marginal(n["sensor"]);
    c.sensor_marginals.assign(count, m);
  }
  c.n_sensors = c.sensor_marginals.size();
  if (c.n_sensors == 0) n["sensors"].fail("need at least one sensor");

  if (n.has("fc")) c.fc = parse_marginal(n["fc"]);
  c.beta = per_sensor(n["beta"], c.n_sensors);
  c.t1 = n.has("t1") ? per_sensor(n["t1"], c.n_sensors) : std::vector<double>(c.n_sensors, 0.0);

  if (n.has("student_nu")) c.student_nu = static_cast<int>(n["student_nu"].integer());
  rc.truth_h1 = parse_truth(n["truth_h1"]);
  if (n.has("truth_h0")) rc.truth_h0 = parse_truth(n["truth_h0"]);
  c.truth_h1 = field(n["truth_h1"], [&] { return rc.truth_h1.build(c.n_sensors); });
  c.truth_h0 = field(n, [&] { return rc.truth_h0.build(c.n_sensors); });

  c.library = parse_library(n["library"]);
  if (n.has("library_h0")) c.library_h0 = parse_library(n["library_h0"]);
  if (n.has("scenario")) c.scenario = parse_scenario(n["scenario"]);
  if (n.has("q")) c.q = n["q"].number();
  if (n.has("noise")) {
    const Node nn = n["noise"];
    nn.expect_object({"sigma_d"});
    if (nn.has("sigma_d")) c.noise.sigma_d = nn["sigma_d"].number();
  }
  if (n.has("window")) c.window = n["window"].count();
  if (n.has("trials")) c.trials = n["trials"].count();
  if (n.has("alpha")) c.alpha = n["alpha"].number();
  if (n.has("seed")) {
    const Node s = n["seed"];
    if (!s.raw().is_number_unsigned() && !(s.raw().is_number_integer() && s.raw().get<long long>() >= 0)) {
      s.fail("expected a non-negative integer");
    }
    c.seed = s.raw().get<std::uint64_t>();
  }
  if (n.has("quad_nodes")) c.quad_nodes = static_cast<int>(n["quad_nodes"].integer());

  if (n.has("rules")) {
    const Node r = n["rules"];
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto s = r.at(i).string();
      const Rule rule = field(r.at(i), [&] { return parse_rule(s); });
      if (std::find(rc.rules.begin(), rc.rules.end(), rule) != rc.rules.end()) r.at(i).fail("duplicate rule");
      rc.rules.push_back(rule);
    }
  } else {
    rc.rules.assign(std::begin(kAllRules), std::end(kAllRules));
  }

  if (n.has("betas")) {
    rc.betas = n["betas"].numbers();
    for (std::size_t i = 0; i < rc.betas.size(); ++i) {
      if (!(rc.betas[i] > 0.0 && rc.betas[i] < 1.0)) n["betas"].at(i).fail("must lie in (0, 1)");
    }
  } else {
    rc.betas.assign(std::begin(kDefaultBetas), std::end(kDefaultBetas));
  }

  if (n.has("cf")) {
    const Node cf = n["cf"];
    cf.expect_object({"q", "ratios", "upsilon_max", "upsilon_points"});
    if (cf.has("q")) rc.cf.q = cf["q"].number();
    if (cf.has("ratios")) rc.cf.ratios = cf["ratios"].numbers();
    if (cf.has("upsilon_max")) rc.cf.upsilon_max = cf["upsilon_max"].number();
    if (cf.has("upsilon_points")) rc.cf.upsilon_points = cf["upsilon_points"].count();
    if (!(rc.cf.q > 0.0)) cf["q"].fail("must be positive");
    for (double r : rc.cf.ratios) {
      if (!(r > 0.0)) cf["ratios"].fail("ratios must be positive");
    }
    if (!(rc.cf.upsilon_max > 0.0)) cf["upsilon_max"].fail("must be positive");
    if (rc.cf.upsilon_points < 2) cf["upsilon_points"].fail("must be >= 2");
  }

  c.validate();
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

ordered_json RunConfig::to_json() const {
  const ScenarioConfig& c = scenario;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  ordered_json sensors = ordered_json::array();
  for (const auto& m : c.sensor_marginals) sensors.push_back(marginal_json(m));
  j["sensors"] = sensors;
  j["fc"] = marginal_json(c.fc);
  j["beta"] = c.beta;
  j["t1"] = c.t1;
  j["truth_h1"] = truth_json(truth_h1);
  j["truth_h0"] = truth_json(truth_h0);
  j["library"] = library_json(c.library);
  if (!c.library_h0.empty()) j["library_h0"] = library_json(c.library_h0);
  j["scenario"] = std::string(to_string(c.scenario));
  j["q"] = c.q;
  j["noise"] = {{"sigma_d", c.noise.sigma_d}};
  j["window"] = c.window;
  j["trials"] = c.trials;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["student_nu"] = c.student_nu;
  j["quad_nodes"] = c.quad_nodes;
  ordered_json rs = ordered_json::array();
  for (Rule r : rules) rs.push_back(std::string(to_string(r)));
  j["rules"] = rs;
  j["betas"] = betas;
  j["cf"] = {{"q", cf.q}, {"ratios", cf.ratios}, {"upsilon_max", cf.upsilon_max}, {"upsilon_points", cf.upsilon_points}};
  return j;
}

std::uint64_t RunConfig::hash() const { return fnv1a(to_json().dump()); }

}  // namespace censorfuse
