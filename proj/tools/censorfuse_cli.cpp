// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "censorfuse/censoring.hpp"
#include "censorfuse/config.hpp"
#include "censorfuse/copula_fit.hpp"
#include "censorfuse/copulas.hpp"
#include "censorfuse/errors.hpp"
#include "censorfuse/normal.hpp"
#include "censorfuse/numerics.hpp"
#include "censorfuse/quantization.hpp"
#include "censorfuse/simulation.hpp"

#ifndef CENSORFUSE_VERSION
#define CENSORFUSE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace censorfuse;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string hex64(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Files written by the current command; removed again on numerical failure.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw UsageError("cannot write " + p.string());
    written_.push_back(p);
    out << content;
    if (!out.flush()) throw UsageError("write failed: " + p.string());
    spdlog::info("wrote {}", p.string());
  }

  void remove_all() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

  std::vector<std::string> names() const {
    std::vector<std::string> v;
    for (const auto& p : written_) v.push_back(p.filename().string());
    return v;
  }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

struct RunOptions {
  std::string config;
  std::string rules;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::optional<int> quad_nodes;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> window;
  std::string betas;
  std::string ratios;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--jobs", o.jobs, "worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));
  cmd->add_option("--trials", o.trials, "override trials per hypothesis");
  cmd->add_option("--window", o.window, "override the window length L");
  cmd->add_option("--quad-nodes", o.quad_nodes, "re-evaluate GLRT likelihoods by n-node quadrature");
}

RunConfig resolve(const RunOptions& o) {
  RunConfig rc = load_config(o.config);
  if (o.seed) rc.scenario.seed = *o.seed;
  if (o.trials) rc.scenario.trials = *o.trials;
  if (o.window) rc.scenario.window = *o.window;
  if (o.quad_nodes) rc.scenario.quad_nodes = *o.quad_nodes;
  if (!o.rules.empty()) {
    rc.rules.clear();
    for (const auto& name : split(o.rules, ',')) rc.rules.push_back(parse_rule(name));
    if (rc.rules.empty()) throw UsageError("--rules: no rule given");
  }
  if (!o.betas.empty()) {
    rc.betas.clear();
    for (const auto& s : split(o.betas, ',')) {
      double b = 0.0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), b);
      if (ec != std::errc() || p != s.data() + s.size() || !(b > 0.0 && b < 1.0)) {
        throw UsageError("--betas: '" + s + "' is not a rate in (0, 1)");
      }
      rc.betas.push_back(b);
    }
  }
  if (!o.ratios.empty()) {
    rc.cf.ratios.clear();
    for (const auto& s : split(o.ratios, ',')) {
      double r = 0.0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), r);
      if (ec != std::errc() || p != s.data() + s.size() || !(r > 0.0)) {
        throw UsageError("--ratios: '" + s + "' is not a positive number");
      }
      rc.cf.ratios.push_back(r);
    }
  }
  rc.scenario.validate();
  fs::create_directories(o.out);
  return rc;
}

void write_manifest(Outputs& out, const RunOptions& o, const RunConfig& rc, const std::string& command,
                    std::chrono::steady_clock::time_point start) {
  ordered_json m;
  m["command"] = command;
  m["config_path"] = o.config;
  m["config"] = rc.to_json();
  m["config_hash"] = hex64(rc.hash());
  m["seed"] = rc.scenario.seed;
  m["tool_version"] = CENSORFUSE_VERSION;
  m["jobs"] = o.jobs;
  m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m["outputs"] = out.names();
  out.write("manifest.json", m.dump(2) + "\n");
}

ProgressFn progress_logger(const std::string& what) {
  return [what](std::size_t done, std::size_t total) {
    if (done == total || done % std::max<std::size_t>(1, total / 10) == 0) {
      spdlog::debug("{}: {}/{} trials", what, done, total);
    }
  };
}

std::string beta_label(const ScenarioConfig& c) {
  if (std::all_of(c.beta.begin(), c.beta.end(), [&](double b) { return b == c.beta.front(); })) {
    return num(c.beta.front());
  }
  std::string s;
  for (std::size_t i = 0; i < c.beta.size(); ++i) s += (i ? ";" : "") + num(c.beta[i]);
  return s;
}

void cmd_roc(const RunOptions& o, Outputs& out) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig rc = resolve(o);
  const auto& c = rc.scenario;
  spdlog::info("roc: {} trials x 2 hypotheses, window {}, {} rule(s)", c.trials, c.window, rc.rules.size());
  const auto ts = run_trials(c, rc.rules, o.jobs, progress_logger("roc"));
  const std::string hash = hex64(rc.hash());
  for (std::size_t k = 0; k < rc.rules.size(); ++k) {
    const Rule r = rc.rules[k];
    const auto curve = roc_from_statistics(ts.h0[k], ts.h1[k], r);
    std::string csv = "# config_hash=" + hash + "\npf,pd,rule,beta,scenario,seed\n";
    const std::string tail = "," + std::string(to_string(r)) + "," + beta_label(c) + "," +
                             std::string(to_string(rule_scenario(r, c.scenario))) + "," + std::to_string(c.seed) +
                             "\n";
    for (const auto& p : curve.points) csv += num(p.pf) + "," + num(p.pd) + tail;
    out.write("roc_" + std::string(to_string(r)) + ".csv", csv);
  }
  write_manifest(out, o, rc, "roc", start);
}

void cmd_sweep(const RunOptions& o, Outputs& out) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig rc = resolve(o);
  const auto& c = rc.scenario;
  spdlog::info("sweep-beta: {} rate(s), {} trials x 2 hypotheses each", rc.betas.size(), c.trials);
  const auto sweep = sweep_beta(c, rc.rules, rc.betas, o.jobs, progress_logger("sweep-beta"));
  std::string csv = "# config_hash=" + hex64(rc.hash()) + "\nbeta,pd_at_alpha,rule,alpha,seed\n";
  for (std::size_t k = 0; k < rc.rules.size(); ++k) {
    for (const auto& p : sweep[k]) {
      csv += num(p.beta) + "," + num(p.pd_at_alpha) + "," + std::string(to_string(rc.rules[k])) + "," +
             num(c.alpha) + "," + std::to_string(c.seed) + "\n";
    }
  }
  out.write("sweep_beta.csv", csv);
  write_manifest(out, o, rc, "sweep-beta", start);
}

void cmd_cf(const RunOptions& o, Outputs& out) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig rc = resolve(o);
  const auto& m = rc.scenario.sensor_marginals.front();
  const double t1 = rc.scenario.t1.front();
  const double q = rc.cf.q;
  const auto upsilon = rc.cf.upsilon_grid();

  std::string csv = "# config_hash=" + hex64(rc.hash()) + "\nupsilon,magnitude,series_label\n";
  for (double v : upsilon) csv += num(v) + "," + num(gaussian_cf_magnitude(m.sigma(), v)) + ",X\n";
  for (double ratio : rc.cf.ratios) {
    const double t2 = t1 + ratio * q;
    const CensoringScheme scheme(t1, t2, m.cdf(t2, Hypothesis::H0) - m.cdf(t1, Hypothesis::H0));
    const auto fy = compressed_density(m, scheme, q, Hypothesis::H0, default_grid_step(q));
    const auto mag = characteristic_function(fy, upsilon);
    const std::string label = "Y_ratio_" + num(ratio);
    for (std::size_t k = 0; k < upsilon.size(); ++k) csv += num(upsilon[k]) + "," + num(mag[k]) + "," + label + "\n";
  }
  out.write("cf.csv", csv);
  write_manifest(out, o, rc, "cf", start);
}

// ---- fit ------------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string library = "gaussian,student_t,clayton,frank,gumbel";
  bool raw = false;
  bool ranks = false;
  double mu = 0.0;
  double sigma = 1.0;
  int student_nu = 5;
  std::string out;
};

std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(path + ": cannot open");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    bool numeric = true;
    for (const auto& cell : split(line, ',')) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && width == 0) {
        width = split(line, ',').size();  // header
        continue;
      }
      throw UsageError(path + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) + " fields, got " +
                       std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw UsageError(path + ": need at least two data rows");
  if (width < 2) throw UsageError(path + ": need at least two columns");
  return rows;
}

ordered_json model_json(const CopulaModel& m) {
  ordered_json j{{"family", std::string(to_string(m.family()))}};
  if (is_archimedean(m.family())) j["theta"] = m.theta();
  if (is_elliptical(m.family())) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.corr().rows(); ++i) {
      ordered_json r = ordered_json::array();
      for (Eigen::Index k = 0; k < m.corr().cols(); ++k) r.push_back(m.corr()(i, k));
      rows.push_back(r);
    }
    j["corr"] = rows;
    if (m.family() == CopulaFamily::StudentT) j["nu"] = m.nu();
  }
  if (m.family() != CopulaFamily::StudentT && m.family() != CopulaFamily::Gaussian) {
    j["tau"] = param_to_tau(m);
  }
  return j;
}

void cmd_fit(const FitArgs& a) {
  auto rows = read_rows(a.data);
  if (a.raw && a.ranks) throw UsageError("--raw and --ranks are exclusive");
  if (a.ranks) {
    for (std::size_t k = 0; k < rows.front().size(); ++k) {
      std::vector<double> col;
      for (const auto& r : rows) col.push_back(r[k]);
      const auto u = numerics::pseudo_observations(col);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i][k] = u[i];
    }
  } else if (a.raw) {
    if (!(a.sigma > 0.0)) throw UsageError("--sigma must be positive");
    for (auto& r : rows) {
      for (double& x : r) x = normal::cdf((x - a.mu) / a.sigma);
    }
  } else {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (double u : rows[i]) {
        if (!(u > 0.0 && u < 1.0)) {
          throw UsageError(a.data + ": data row " + std::to_string(i + 1) +
                           ": pseudo-observations must lie in (0, 1); use --raw for raw values");
        }
      }
    }
  }
  std::vector<CopulaFamily> library;
  for (const auto& name : split(a.library, ',')) library.push_back(parse_family(name));
  if (library.empty()) throw UsageError("--library: no family given");

  FitOptions opts;
  opts.student_nu = a.student_nu;
  const auto sel = select_best(library, SliceData::from_points(rows), opts);

  ordered_json report;
  report["samples"] = rows.size();
  report["dim"] = rows.front().size();
  ordered_json fits = ordered_json::array();
  for (const auto& f : sel.fitted) {
    ordered_json j = model_json(f.model);
    j["log_likelihood"] = f.log_likelihood;
    j["floor_hits"] = f.floor_hits;
    fits.push_back(j);
  }
  report["fits"] = fits;
  report["failures"] = sel.failures;
  report["selected"] = std::string(to_string(sel.best.model.family()));
  report["fell_back"] = sel.fell_back;
  const std::string text = report.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!(f << text)) throw UsageError("cannot write " + a.out);
  }
}

// ---- sample -----------------------------------------------------------------------

struct SampleArgs {
  std::string family = "frank";
  double tau = 0.3;
  std::size_t dim = 2;
  std::size_t n = 500;
  std::uint64_t seed = 1;
  std::string out;
};

void cmd_sample(const SampleArgs& a) {
  const CopulaModel model = model_from_tau(parse_family(a.family), a.tau, a.dim);
  Rng rng = make_rng(a.seed, {0});
  std::string csv;
  for (std::size_t k = 0; k < a.dim; ++k) csv += (k ? ",u" : "u") + std::to_string(k + 1);
  csv += "\n";
  for (std::size_t i = 0; i < a.n; ++i) {
    const auto u = copula_sample(model, a.dim, rng);
    for (std::size_t k = 0; k < a.dim; ++k) csv += (k ? "," : "") + num(u[k]);
    csv += "\n";
  }
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!(f << csv)) throw UsageError("cannot write " + a.out);
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("censorfuse");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("CENSORFUSE_LOG")) {
    const auto lvl = spdlog::level::from_str(env);
    if (lvl == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("CENSORFUSE_LOG: unknown level '{}'", env);
    } else {
      spdlog::set_level(lvl);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Copula-based and noise-aided fusion of censored sensor data"};
  app.set_version_flag("--version", CENSORFUSE_VERSION);
  app.require_subcommand(1);

  RunOptions roc_o;
  auto* roc_cmd = app.add_subcommand("roc", "ROC curves for the configured fusion rules");
  add_run_options(roc_cmd, roc_o);
  roc_cmd->add_option("--rules", roc_o.rules, "comma-separated subset of glrt-ac,glrt-qc,noise-ac,noise-qc,ia");

  RunOptions sweep_o;
  auto* sweep_cmd = app.add_subcommand("sweep-beta", "detection probability versus censoring rate");
  add_run_options(sweep_cmd, sweep_o);
  sweep_cmd->add_option("--rules", sweep_o.rules, "comma-separated subset of glrt-ac,glrt-qc,noise-ac,noise-qc,ia");
  sweep_cmd->add_option("--betas", sweep_o.betas, "comma-separated censoring rates");

  RunOptions cf_o;
  auto* cf_cmd = app.add_subcommand("cf", "characteristic functions of raw and compressed observations");
  add_run_options(cf_cmd, cf_o);
  cf_cmd->add_option("--ratios", cf_o.ratios, "comma-separated compression ratios t2/q");

  FitArgs fit_a;
  auto* fit_cmd = app.add_subcommand("fit", "fit a copula library to CSV data and report the selection");
  fit_cmd->add_option("--data", fit_a.data, "CSV of pseudo-observations (or raw values with --raw)")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--library", fit_a.library, "comma-separated copula families")->capture_default_str();
  fit_cmd->add_flag("--raw", fit_a.raw, "data are raw Gaussian values; map through N(mu, sigma^2)");
  fit_cmd->add_flag("--ranks", fit_a.ranks, "data are raw values of any marginal; use scaled ranks");
  fit_cmd->add_option("--mu", fit_a.mu, "marginal mean for --raw")->capture_default_str();
  fit_cmd->add_option("--sigma", fit_a.sigma, "marginal standard deviation for --raw")->capture_default_str();
  fit_cmd->add_option("--student-nu", fit_a.student_nu, "degrees of freedom for student_t")->capture_default_str();
  fit_cmd->add_option("--out", fit_a.out, "report path (default stdout)");

  SampleArgs sample_a;
  auto* sample_cmd = app.add_subcommand("sample", "draw pseudo-observations from a copula");
  sample_cmd->add_option("--family", sample_a.family)->capture_default_str();
  sample_cmd->add_option("--tau", sample_a.tau, "Kendall's tau")->capture_default_str();
  sample_cmd->add_option("--dim", sample_a.dim)->capture_default_str()->check(CLI::Range(2, 64));
  sample_cmd->add_option("--n", sample_a.n, "number of samples")->capture_default_str();
  sample_cmd->add_option("--seed", sample_a.seed)->capture_default_str();
  sample_cmd->add_option("--out", sample_a.out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  std::optional<Outputs> out;
  try {
    if (roc_cmd->parsed()) {
      out.emplace(roc_o.out);
      cmd_roc(roc_o, *out);
    } else if (sweep_cmd->parsed()) {
      out.emplace(sweep_o.out);
      cmd_sweep(sweep_o, *out);
    } else if (cf_cmd->parsed()) {
      out.emplace(cf_o.out);
      cmd_cf(cf_o, *out);
    } else if (fit_cmd->parsed()) {
      cmd_fit(fit_a);
    } else if (sample_cmd->parsed()) {
      cmd_sample(sample_a);
    }
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    if (out) out->remove_all();
    return kExitUsage;
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    if (out) out->remove_all();
    return kExitUsage;
  } catch (const ParameterError& e) {
    spdlog::error("{}", e.what());
    if (out) out->remove_all();
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("numerical failure: {}", e.what());
    if (out) out->remove_all();
    return kExitNumerical;
  }
  return 0;
}
