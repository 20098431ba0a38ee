// Shared independent oracles for the test suites: regularized incomplete
// gamma (for InverseGamma/Gamma CDFs) and Kolmogorov-Smirnov distances.
// These deliberately avoid the library's own code paths.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnlte/data.hpp"

namespace testsupport {

// Regularized lower incomplete gamma P(a, x) via series / continued
// fraction (Numerical Recipes construction).
inline double gammp(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammp domain");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Continued fraction for Q(a, x).
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - gln) * h;
  return 1.0 - q;
}

inline double gammq(double a, double x) { return 1.0 - gammp(a, x); }

// CDF of Gamma(shape, rate).
inline double gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return gammp(shape, rate * x);
}

// CDF of InverseGamma(shape, scale): X <= x iff scale/X >= scale/x.
inline double inverse_gamma_cdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return gammq(shape, scale / x);
}

// One-sample Kolmogorov-Smirnov distance against a CDF.
inline double ks_distance(std::vector<double> draws,
                          const std::function<double(double)>& cdf) {
  if (draws.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    d = std::max(d, std::fabs((static_cast<double>(i) + 1.0) / n - f));
    d = std::max(d, std::fabs(static_cast<double>(i) / n - f));
  }
  return d;
}

// Two-sample Kolmogorov-Smirnov distance.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) ++i; else ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  return d;
}

inline bnlte::Dataset make_plain_dataset(const Eigen::MatrixXd& values,
                                         std::vector<bnlte::Role> roles) {
  bnlte::Dataset data;
  data.values = values;
  for (int j = 0; j < values.cols(); ++j) {
    data.variable_names.push_back("V" + std::to_string(j));
    data.standardization.emplace_back(0.0, 1.0);
  }
  if (roles.empty()) {
    roles.assign(static_cast<std::size_t>(values.cols()), bnlte::Role::Free);
  }
  data.roles = std::move(roles);
  return data;
}

}  // namespace testsupport
