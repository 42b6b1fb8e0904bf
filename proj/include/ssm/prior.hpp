#pragma once

#include <string>

#include "ssm/rng.hpp"

namespace ssm {

// One-dimensional prior for a named model parameter. `fixed` pins the
// parameter to a constant and removes it from the sampled vector.
class Prior1D {
 public:
  enum class Kind { kFixed, kNormal, kUniform, kExponential, kExponentialNeg };

  static Prior1D fixed(double value);
  static Prior1D normal(double mean, double sd);
  static Prior1D uniform(double lo, double hi);
  static Prior1D exponential(double rate);      // support x > 0
  static Prior1D exponential_neg(double rate);  // support x < 0, rate on -x

  // Textual form used in config files: "fixed(0.9)", "normal(0,10)",
  // "uniform(-1,1)", "exp(0.2)", "expneg(0.5)".
  static Prior1D parse(const std::string& text);
  std::string to_string() const;

  double sample(RngStream& rng) const;
  double logpdf(double x) const;  // -inf off support

  Kind kind() const { return kind_; }
  bool is_fixed() const { return kind_ == Kind::kFixed; }
  double fixed_value() const;

 private:
  Prior1D(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}
  Kind kind_;
  double a_, b_;  // meaning depends on kind
};

}  // namespace ssm
