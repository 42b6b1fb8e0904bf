#include "ssm/prior.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "ssm/errors.hpp"
#include "ssm/util.hpp"

namespace ssm {

Prior1D Prior1D::fixed(double value) { return {Kind::kFixed, value, 0.0}; }

Prior1D Prior1D::normal(double mean, double sd) {
  if (!(sd > 0.0)) throw InvalidParameterError("normal prior: sd must be > 0");
  return {Kind::kNormal, mean, sd};
}

Prior1D Prior1D::uniform(double lo, double hi) {
  if (!(lo < hi)) throw InvalidParameterError("uniform prior: need lo < hi");
  return {Kind::kUniform, lo, hi};
}

Prior1D Prior1D::exponential(double rate) {
  if (!(rate > 0.0)) throw InvalidParameterError("exponential prior: rate must be > 0");
  return {Kind::kExponential, rate, 0.0};
}

Prior1D Prior1D::exponential_neg(double rate) {
  if (!(rate > 0.0)) throw InvalidParameterError("exponential prior: rate must be > 0");
  return {Kind::kExponentialNeg, rate, 0.0};
}

double Prior1D::fixed_value() const {
  if (!is_fixed()) throw InvalidParameterError("fixed_value() on a non-fixed prior");
  return a_;
}

double Prior1D::sample(RngStream& rng) const {
  switch (kind_) {
    case Kind::kFixed:
      return a_;
    case Kind::kNormal:
      return a_ + b_ * rng.normal();
    case Kind::kUniform:
      return a_ + (b_ - a_) * rng.uniform01();
    case Kind::kExponential:
      return rng.exponential(a_);
    case Kind::kExponentialNeg:
      return -rng.exponential(a_);
  }
  return 0.0;
}

double Prior1D::logpdf(double x) const {
  switch (kind_) {
    case Kind::kFixed:
      // Point mass: constant 0 contribution at the pinned value.
      return x == a_ ? 0.0 : kNegInf;
    case Kind::kNormal:
      return log_normal_pdf(x, a_, b_ * b_);
    case Kind::kUniform:
      return (x > a_ && x < b_) ? -std::log(b_ - a_) : kNegInf;
    case Kind::kExponential:
      return x > 0.0 ? std::log(a_) - a_ * x : kNegInf;
    case Kind::kExponentialNeg:
      return x < 0.0 ? std::log(a_) + a_ * x : kNegInf;
  }
  return kNegInf;
}

Prior1D Prior1D::parse(const std::string& text) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw InvalidParameterError("cannot parse prior: " + text);
  const std::string name = text.substr(0, open);
  std::vector<double> args;
  std::stringstream body(text.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(body, item, ',')) {
    args.push_back(std::stod(item));
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n)
      throw InvalidParameterError("prior " + name + ": wrong argument count in " + text);
  };
  if (name == "fixed") {
    need(1);
    return fixed(args[0]);
  }
  if (name == "normal") {
    need(2);
    return normal(args[0], args[1]);
  }
  if (name == "uniform") {
    need(2);
    return uniform(args[0], args[1]);
  }
  if (name == "exp") {
    need(1);
    return exponential(args[0]);
  }
  if (name == "expneg") {
    need(1);
    return exponential_neg(args[0]);
  }
  throw InvalidParameterError("unknown prior kind: " + name);
}

std::string Prior1D::to_string() const {
  char buf[96];
  switch (kind_) {
    case Kind::kFixed:
      std::snprintf(buf, sizeof(buf), "fixed(%.17g)", a_);
      break;
    case Kind::kNormal:
      std::snprintf(buf, sizeof(buf), "normal(%.17g,%.17g)", a_, b_);
      break;
    case Kind::kUniform:
      std::snprintf(buf, sizeof(buf), "uniform(%.17g,%.17g)", a_, b_);
      break;
    case Kind::kExponential:
      std::snprintf(buf, sizeof(buf), "exp(%.17g)", a_);
      break;
    case Kind::kExponentialNeg:
      std::snprintf(buf, sizeof(buf), "expneg(%.17g)", a_);
      break;
  }
  return buf;
}

}  // namespace ssm
