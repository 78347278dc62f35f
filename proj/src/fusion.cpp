// SPDX-License-Identifier: Apache-2.0
#include "censorfuse/fusion.hpp"

#include <cmath>
#include <limits>

#include "censorfuse/errors.hpp"
#include "censorfuse/numerics.hpp"

namespace censorfuse {

namespace {

constexpr Hypothesis kBoth[] = {Hypothesis::H0, Hypothesis::H1};

void check_sample(const FusionSample& s, const Network& net) {
  if (s.messages.size() != net.size()) throw DomainError("fusion sample has the wrong number of sensor messages");
}

const QuantizerSpec& quantizer_of(const Network& net, std::size_t n) {
  const auto& q = net.sensors[n].quantizer;
  if (!q) throw ParameterError("quantized message from a sensor without a quantizer");
  return *q;
}

// Box quadrature of the copula density over the range coordinates.
double slice_mass_quadrature(const CopulaModel& model, std::span<const Coordinate> coords, int nodes) {
  std::vector<numerics::Interval> dims;
  std::vector<std::size_t> where;
  std::vector<double> u(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i].is_point()) {
      u[i] = coords[i].lo;
    } else {
      dims.push_back({clamp_unit(coords[i].lo), clamp_unit(coords[i].hi)});
      where.push_back(i);
    }
  }
  if (dims.empty()) return copula_density(model, u);
  auto f = [&](std::span<const double> r) {
    std::vector<double> v = u;
    for (std::size_t k = 0; k < where.size(); ++k) v[where[k]] = r[k];
    return copula_density(model, v);
  };
  return numerics::integrate_box(f, numerics::Box(std::move(dims)), numerics::TensorGaussLegendre{nodes});
}

double mass_of(const CopulaModel& model, std::span<const Coordinate> coords, int quad_nodes) {
  return quad_nodes > 0 ? slice_mass_quadrature(model, coords, quad_nodes) : slice_mass(model, coords);
}

double floored_log(double m, std::size_t& hits) {
  if (!(m >= kLikelihoodFloor)) {
    ++hits;
    return std::log(kLikelihoodFloor);
  }
  return std::log(m);
}

struct HypothesisData {
  std::vector<Coordinate> flat;
  double marginal = 0.0;
};

// Selection under both hypotheses, assembled into a GLRT result. The marginal
// term is marg1 - marg0 (or a precomputed ratio when marg_ratio is given).
GlrtResult assemble(const SliceData& d1, const SliceData& d0, double marginal_term,
                    std::span<const CopulaFamily> library, const GlrtOptions& opts) {
  const std::span<const CopulaFamily> lib0 =
      opts.library_h0.empty() ? library : std::span<const CopulaFamily>(opts.library_h0);
  Selection s1 = select_best(library, d1, opts.fit);
  Selection s0 = select_best(lib0, d0, opts.fit);
  double ll1 = s1.best.log_likelihood;
  double ll0 = s0.best.log_likelihood;
  std::size_t hits = s1.best.floor_hits + s0.best.floor_hits;
  if (opts.quad_nodes > 0) {
    hits = 0;
    ll1 = 0.0;
    ll0 = 0.0;
    for (std::size_t i = 0; i < d1.size(); ++i) ll1 += floored_log(mass_of(s1.best.model, d1[i], opts.quad_nodes), hits);
    for (std::size_t i = 0; i < d0.size(); ++i) ll0 += floored_log(mass_of(s0.best.model, d0[i], opts.quad_nodes), hits);
  }
  GlrtResult r{marginal_term + ll1 - ll0, s1.best.model, s0.best.model, marginal_term, ll1, ll0, hits,
               s1.fell_back, s0.fell_back};
  if (!std::isfinite(r.statistic)) throw IntegrationError("GLRT statistic is not finite");
  return r;
}

double unit_cdf(const GaussianMarginal& m, double x, Hypothesis h) {
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  return m.cdf(x, h);
}

}  // namespace

// ---- analog --------------------------------------------------------------------

std::vector<Coordinate> analog_slice(const FusionSample& s, const Network& net, Hypothesis h) {
  check_sample(s, net);
  std::vector<Coordinate> c;
  c.reserve(net.size() + 1);
  c.push_back(Coordinate::point(net.fc.cdf(s.x0, h)));
  for (std::size_t n = 0; n < net.size(); ++n) {
    const auto& sensor = net.sensors[n];
    const auto& msg = s.messages[n];
    switch (msg.kind) {
      case SensorMessage::Kind::Censored:
        c.push_back(Coordinate::range(sensor.marginal.cdf(sensor.scheme.t1(), h),
                                      sensor.marginal.cdf(sensor.scheme.t2(), h)));
        break;
      case SensorMessage::Kind::Sent:
        c.push_back(Coordinate::point(sensor.marginal.cdf(msg.value, h)));
        break;
      case SensorMessage::Kind::Quantized:
        throw DomainError("analog fusion received a quantized message");
    }
  }
  return c;
}

double analog_marginal_log(const FusionSample& s, const Network& net, Hypothesis h) {
  check_sample(s, net);
  double acc = net.fc.log_pdf(s.x0, h);
  for (std::size_t n = 0; n < net.size(); ++n) {
    if (s.messages[n].kind == SensorMessage::Kind::Sent) acc += net.sensors[n].marginal.log_pdf(s.messages[n].value, h);
  }
  return acc;
}

double log_likelihood_analog(const FusionSample& s, const CopulaModel& model, const Network& net, Hypothesis h,
                             int quad_nodes) {
  const auto c = analog_slice(s, net, h);
  return analog_marginal_log(s, net, h) + std::log(mass_of(model, c, quad_nodes));
}

double likelihood_analog(const FusionSample& s, const CopulaModel& model, const Network& net, Hypothesis h,
                         int quad_nodes) {
  return std::exp(log_likelihood_analog(s, model, net, h, quad_nodes));
}

GlrtResult glrt_analog(const FusionWindow& w, std::span<const CopulaFamily> library, const Network& net,
                       const GlrtOptions& opts) {
  if (w.empty()) throw DomainError("empty fusion window");
  HypothesisData data[2];
  for (Hypothesis h : kBoth) {
    auto& d = data[static_cast<int>(h)];
    d.flat.reserve(w.size() * (net.size() + 1));
    for (const auto& s : w) {
      const auto c = analog_slice(s, net, h);
      d.flat.insert(d.flat.end(), c.begin(), c.end());
      d.marginal += analog_marginal_log(s, net, h);
    }
  }
  const SliceData d1(std::move(data[1].flat), net.size() + 1);
  const SliceData d0(std::move(data[0].flat), net.size() + 1);
  return assemble(d1, d0, data[1].marginal - data[0].marginal, library, opts);
}

double independence_statistic(const FusionWindow& w, const Network& net) {
  std::vector<double> log_rho(net.size());
  for (std::size_t n = 0; n < net.size(); ++n) {
    log_rho[n] = std::log(rho(net.sensors[n].scheme, net.sensors[n].marginal));
  }
  double total = 0.0;
  for (const auto& s : w) {
    check_sample(s, net);
    double t = 0.0;
    for (std::size_t n = 0; n < net.size(); ++n) {
      const auto& msg = s.messages[n];
      const auto& m = net.sensors[n].marginal;
      switch (msg.kind) {
        case SensorMessage::Kind::Censored:
          t += log_rho[n];
          break;
        case SensorMessage::Kind::Sent:
          t += m.log_likelihood_ratio(msg.value);
          break;
        case SensorMessage::Kind::Quantized: {
          const auto cell = quantizer_of(net, n).partition(msg.level);
          const double m1 = unit_cdf(m, cell.hi, Hypothesis::H1) - unit_cdf(m, cell.lo, Hypothesis::H1);
          const double m0 = unit_cdf(m, cell.hi, Hypothesis::H0) - unit_cdf(m, cell.lo, Hypothesis::H0);
          t += std::log(m1) - std::log(m0);
          break;
        }
      }
    }
    t += net.fc.log_likelihood_ratio(s.x0);
    total += t;
  }
  return total;
}

// ---- quantized -------------------------------------------------------------------

std::vector<Coordinate> quantized_slice(const FusionSample& s, const Network& net, Hypothesis h) {
  check_sample(s, net);
  std::vector<Coordinate> c;
  c.reserve(net.size() + 1);
  c.push_back(Coordinate::point(net.fc.cdf(s.x0, h)));
  for (std::size_t n = 0; n < net.size(); ++n) {
    const auto& sensor = net.sensors[n];
    const auto& msg = s.messages[n];
    switch (msg.kind) {
      case SensorMessage::Kind::Censored:
        c.push_back(Coordinate::range(sensor.marginal.cdf(sensor.scheme.t1(), h),
                                      sensor.marginal.cdf(sensor.scheme.t2(), h)));
        break;
      case SensorMessage::Kind::Quantized: {
        const auto cell = quantizer_of(net, n).partition(msg.level);
        c.push_back(Coordinate::range(unit_cdf(sensor.marginal, cell.lo, h), unit_cdf(sensor.marginal, cell.hi, h)));
        break;
      }
      case SensorMessage::Kind::Sent:
        throw DomainError("quantized fusion received an analog message");
    }
  }
  return c;
}

double log_likelihood_quantized(const FusionSample& s, const CopulaModel& model, const Network& net, Hypothesis h,
                                int quad_nodes) {
  const auto c = quantized_slice(s, net, h);
  return net.fc.log_pdf(s.x0, h) + std::log(mass_of(model, c, quad_nodes));
}

double likelihood_quantized(const FusionSample& s, const CopulaModel& model, const Network& net, Hypothesis h,
                            int quad_nodes) {
  return std::exp(log_likelihood_quantized(s, model, net, h, quad_nodes));
}

GlrtResult glrt_quantized(const FusionWindow& w, std::span<const CopulaFamily> library, const Network& net,
                          const GlrtOptions& opts) {
  if (w.empty()) throw DomainError("empty fusion window");
  HypothesisData data[2];
  for (Hypothesis h : kBoth) {
    auto& d = data[static_cast<int>(h)];
    d.flat.reserve(w.size() * (net.size() + 1));
    for (const auto& s : w) {
      const auto c = quantized_slice(s, net, h);
      d.flat.insert(d.flat.end(), c.begin(), c.end());
      d.marginal += net.fc.log_pdf(s.x0, h);
    }
  }
  const SliceData d1(std::move(data[1].flat), net.size() + 1);
  const SliceData d0(std::move(data[0].flat), net.size() + 1);
  return assemble(d1, d0, data[1].marginal - data[0].marginal, library, opts);
}

// ---- noise-aided analog --------------------------------------------------------------

NoiseAidedSample substitute_analog_noise(const FusionSample& s, const Network& net, Rng& rng) {
  check_sample(s, net);
  NoiseAidedSample out;
  out.x0 = s.x0;
  out.z.resize(net.size());
  for (std::size_t n = 0; n < net.size(); ++n) {
    const auto& msg = s.messages[n];
    if (msg.kind == SensorMessage::Kind::Quantized) throw DomainError("analog substitution on a quantized message");
    if (msg.is_censored()) {
      const auto& sc = net.sensors[n].scheme;
      out.z[n] = sc.t1() + sc.width() * uniform_open(rng);
    } else {
      out.z[n] = msg.value;
    }
  }
  return out;
}

NoiseAidedWindow substitute_analog_noise(const FusionWindow& w, const Network& net, Rng& rng) {
  NoiseAidedWindow out;
  out.reserve(w.size());
  for (const auto& s : w) out.push_back(substitute_analog_noise(s, net, rng));
  return out;
}

double z_density_analog(double z, const CensoringScheme& s, const GaussianMarginal& m, Hypothesis h) {
  if (s.censors(z) && s.width() > 0.0) return no_send_mass(s, m, h) / s.width();
  return m.pdf(z, h);
}

double z_cdf_analog(double z, const CensoringScheme& s, const GaussianMarginal& m, Hypothesis h) {
  if (z < s.t1() || z > s.t2() || !(s.width() > 0.0)) return m.cdf(z, h);
  return m.cdf(s.t1(), h) + no_send_mass(s, m, h) * (z - s.t1()) / s.width();
}

GlrtResult glrt_noise_analog(const NoiseAidedWindow& w, std::span<const CopulaFamily> library, const Network& net,
                             const GlrtOptions& opts) {
  if (w.empty()) throw DomainError("empty fusion window");
  std::vector<double> log_rho(net.size());
  for (std::size_t n = 0; n < net.size(); ++n) {
    log_rho[n] = std::log(rho(net.sensors[n].scheme, net.sensors[n].marginal));
  }
  // Marginal term, summed exactly as in independence_statistic.
  double marginal = 0.0;
  std::vector<Coordinate> flat[2];
  for (const auto& s : w) {
    if (s.z.size() != net.size()) throw DomainError("noise-aided sample has the wrong number of sensors");
    double t = 0.0;
    for (std::size_t n = 0; n < net.size(); ++n) {
      const auto& sensor = net.sensors[n];
      t += sensor.scheme.censors(s.z[n]) ? log_rho[n] : sensor.marginal.log_likelihood_ratio(s.z[n]);
    }
    t += net.fc.log_likelihood_ratio(s.x0);
    marginal += t;
    for (Hypothesis h : kBoth) {
      auto& f = flat[static_cast<int>(h)];
      f.push_back(Coordinate::point(net.fc.cdf(s.x0, h)));
      for (std::size_t n = 0; n < net.size(); ++n) {
        const auto& sensor = net.sensors[n];
        f.push_back(Coordinate::point(z_cdf_analog(s.z[n], sensor.scheme, sensor.marginal, h)));
      }
    }
  }
  const SliceData d1(std::move(flat[1]), net.size() + 1);
  const SliceData d0(std::move(flat[0]), net.size() + 1);
  return assemble(d1, d0, marginal, library, opts);
}

// ---- noise-aided quantized --------------------------------------------------------------

QuantizedNoiseModel::QuantizedNoiseModel(const Network& net, const NoiseSpec& noise) : noise_(noise) {
  if (!(noise.sigma_d >= 0.0)) throw ParameterError("noise standard deviation must be >= 0");
  for (std::size_t n = 0; n < net.size(); ++n) {
    const auto& sensor = net.sensors[n];
    const auto& q = quantizer_of(net, n);
    h0_.push_back(quantized_z_density(sensor.marginal, sensor.scheme, q.q(), noise, Hypothesis::H0));
    h1_.push_back(quantized_z_density(sensor.marginal, sensor.scheme, q.q(), noise, Hypothesis::H1));
  }
}

NoiseAidedSample substitute_quantized_noise(const FusionSample& s, const Network& net, const NoiseSpec& noise,
                                            Rng& rng) {
  check_sample(s, net);
  std::normal_distribution<double> d(0.0, 1.0);
  NoiseAidedSample out;
  out.x0 = s.x0;
  out.z.resize(net.size());
  for (std::size_t n = 0; n < net.size(); ++n) {
    const auto& msg = s.messages[n];
    const auto& q = quantizer_of(net, n);
    double base;
    switch (msg.kind) {
      case SensorMessage::Kind::Censored:
        base = q.q() / 2.0;
        break;
      case SensorMessage::Kind::Quantized:
        base = q.compressed_level(msg.level);
        break;
      default:
        throw DomainError("quantized substitution on an analog message");
    }
    out.z[n] = base + noise.sigma_d * d(rng);
  }
  return out;
}

NoiseAidedWindow substitute_quantized_noise(const FusionWindow& w, const Network& net, const NoiseSpec& noise,
                                            Rng& rng) {
  NoiseAidedWindow out;
  out.reserve(w.size());
  for (const auto& s : w) out.push_back(substitute_quantized_noise(s, net, noise, rng));
  return out;
}

double z_density_quantized(double z, const QuantizedNoiseModel& model, std::size_t sensor, Hypothesis h) {
  return model.z(sensor, h).pdf(z);
}

double z_cdf_quantized(double z, const QuantizedNoiseModel& model, std::size_t sensor, Hypothesis h) {
  return model.z(sensor, h).cdf(z);
}

GlrtResult glrt_noise_quantized(const NoiseAidedWindow& w, std::span<const CopulaFamily> library,
                                const Network& net, const QuantizedNoiseModel& model, const GlrtOptions& opts) {
  if (w.empty()) throw DomainError("empty fusion window");
  std::size_t hits = 0;
  double marginal = 0.0;
  std::vector<Coordinate> flat[2];
  for (const auto& s : w) {
    if (s.z.size() != net.size()) throw DomainError("noise-aided sample has the wrong number of sensors");
    double t = 0.0;
    for (std::size_t n = 0; n < net.size(); ++n) {
      t += floored_log(model.z(n, Hypothesis::H1).pdf(s.z[n]), hits) -
           floored_log(model.z(n, Hypothesis::H0).pdf(s.z[n]), hits);
    }
    t += net.fc.log_likelihood_ratio(s.x0);
    marginal += t;
    for (Hypothesis h : kBoth) {
      auto& f = flat[static_cast<int>(h)];
      f.push_back(Coordinate::point(net.fc.cdf(s.x0, h)));
      for (std::size_t n = 0; n < net.size(); ++n) f.push_back(Coordinate::point(model.z(n, h).cdf(s.z[n])));
    }
  }
  const SliceData d1(std::move(flat[1]), net.size() + 1);
  const SliceData d0(std::move(flat[0]), net.size() + 1);
  GlrtResult r = assemble(d1, d0, marginal, library, opts);
  r.floor_hits += hits;
  return r;
}

}  // namespace censorfuse
