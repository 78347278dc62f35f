// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "censorfuse/marginals.hpp"

namespace censorfuse {

/// Closed no-send interval [t1, t2] with its censoring rate under H0.
class CensoringScheme {
 public:
  CensoringScheme(double t1, double t2, double beta);
  /// Scheme with lower limit t1 whose no-send mass under H0 is beta.
  static CensoringScheme from_rate(const GaussianMarginal& m, double t1, double beta);

  double t1() const { return t1_; }
  double t2() const { return t2_; }
  double beta() const { return beta_; }
  double width() const { return t2_ - t1_; }
  bool censors(double x) const { return x >= t1_ && x <= t2_; }

 private:
  double t1_;
  double t2_;
  double beta_;
};

/// t2 with F(t2|H0) - F(t1|H0) = beta. DomainError if beta is outside (0, 1)
/// or F(t1|H0) + beta >= 1.
double solve_upper_limit(const GaussianMarginal& m, double t1, double beta);

/// What the fusion center receives from one sensor in one time slot.
struct SensorMessage {
  enum class Kind { Sent, Censored, Quantized };
  Kind kind = Kind::Censored;
  double value = 0.0;  // analog value, or the quantizer output level
  int level = 0;       // quantizer partition index (Quantized only)

  static SensorMessage sent(double x) { return {Kind::Sent, x, 0}; }
  static SensorMessage censored() { return {Kind::Censored, 0.0, 0}; }
  static SensorMessage quantized(int index, double level_value) { return {Kind::Quantized, level_value, index}; }
  bool is_censored() const { return kind == Kind::Censored; }
};

SensorMessage apply_censoring(const CensoringScheme& s, double x);

/// P(t1 <= X <= t2 | h) = F(t2|h) - F(t1|h).
double no_send_mass(const CensoringScheme& s, const GaussianMarginal& m, Hypothesis h);

/// Likelihood ratio of a silent sensor: no_send_mass(H1) / no_send_mass(H0).
double rho(const CensoringScheme& s, const GaussianMarginal& m);

}  // namespace censorfuse
