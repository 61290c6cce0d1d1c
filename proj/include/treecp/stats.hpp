#pragma once

// Small statistics layer shared by the estimators: 95% intervals (Wilson for
// proportions, normal for means), least-squares slopes, and the delta-method
// standard errors the product-form inequality checks need.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "treecp/common.hpp"

namespace treecp {

inline constexpr double kZ95 = 1.959963984540054;  // Phi^{-1}(0.975)

struct Estimate {
  double value = 0;
  double lo = 0;   // 95% interval, lo <= value <= hi
  double hi = 0;
  std::uint64_t n = 0;
  std::uint64_t censored = 0;
  std::uint64_t seed = 0;
  std::string protocol;  // human-readable description of the stopping rule
};

inline Estimate wilson(std::uint64_t successes, std::uint64_t n) {
  if (n == 0) throw ConfigError("wilson: n must be >= 1");
  if (successes > n) throw ConfigError("wilson: successes exceed n");
  double p = static_cast<double>(successes) / static_cast<double>(n);
  double nn = static_cast<double>(n);
  double z2 = kZ95 * kZ95;
  double denom = 1 + z2 / nn;
  double center = (p + z2 / (2 * nn)) / denom;
  double half = (kZ95 / denom) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  Estimate e;
  e.value = p;
  // exact endpoints at the boundary counts; the formula leaves rounding dust
  e.lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  e.hi = successes == n ? 1.0 : std::min(1.0, center + half);
  e.n = n;
  return e;
}

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw ConfigError("mean: empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator); 0 for fewer than two points.
inline double stddev(const std::vector<double>& xs, double m) {
  if (xs.size() < 2) return 0;
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

inline Estimate meanEstimate(const std::vector<double>& xs) {
  Estimate e;
  e.n = xs.size();
  e.value = mean(xs);
  double se = stddev(xs, e.value) / std::sqrt(static_cast<double>(xs.size()));
  e.lo = e.value - kZ95 * se;
  e.hi = e.value + kZ95 * se;
  return e;
}

inline double proportionSE(double p, std::uint64_t n) {
  return std::sqrt(p * (1 - p) / static_cast<double>(n));
}

// Delta-method standard error of a product of independent estimates.
inline double productSE(double a, double seA, double b, double seB) {
  return std::sqrt(b * b * seA * seA + a * a * seB * seB);
}

inline double olsSlope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ConfigError("olsSlope: need >= 2 paired points");
  double mx = mean(xs), my = mean(ys);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0) throw DegenerateResult("olsSlope: x values are constant");
  return sxy / sxx;
}

struct SlopeFit {
  double slope = 0;
  double se = 0;
};

// Weighted least squares y = a + b x with known per-point weights (1/var);
// the reported se is the usual known-variance slope error 1/sqrt(sum w dx^2).
inline SlopeFit wlsSlope(const std::vector<double>& xs, const std::vector<double>& ys,
                         const std::vector<double>& weights) {
  if (xs.size() != ys.size() || xs.size() != weights.size() || xs.size() < 2)
    throw ConfigError("wlsSlope: need >= 2 paired points");
  double sw = 0, swx = 0, swy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += weights[i];
    swx += weights[i] * xs[i];
    swy += weights[i] * ys[i];
  }
  if (!(sw > 0)) throw ConfigError("wlsSlope: weights must be positive");
  double mx = swx / sw, my = swy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += weights[i] * (xs[i] - mx) * (xs[i] - mx);
    sxy += weights[i] * (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0) throw DegenerateResult("wlsSlope: x values are constant");
  return {sxy / sxx, 1 / std::sqrt(sxx)};
}

}  // namespace treecp
