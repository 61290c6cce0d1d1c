#pragma once

// Pure closed-form quantities: spread-exponent bounds, level-weighted sphere
// sums, star-graph pushback probabilities, and the survival recursion's fixed
// point. No randomness here; everything is unit-testable against brute force.

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "treecp/common.hpp"
#include "treecp/offspring.hpp"

namespace treecp {

// ((lambda/(1+lambda))^kappa, 1/gamma): lower and upper bounds on the spread
// exponent beta evaluated at the weak-survival critical rate.
inline std::pair<double, double> betaBounds(double lambda, std::uint32_t kappa, double gamma) {
  if (kappa < 1) throw ConfigError("kappa must be >= 1");
  if (!(gamma >= 2)) throw ConfigError("gamma must be >= 2");
  if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
  double lower =
      lambda == 0 ? 0.0 : std::exp(static_cast<double>(kappa) * std::log(lambda / (1 + lambda)));
  return {lower, 1.0 / gamma};
}

// The weight base for which gamma * rho^(2 kappa) = 1, i.e. gamma^(-1/(2 kappa)).
inline double rhoCritical(std::uint32_t kappa, double gamma) {
  if (kappa < 1) throw ConfigError("kappa must be >= 1");
  if (!(gamma >= 2)) throw ConfigError("gamma must be >= 2");
  return std::exp(-std::log(gamma) / (2.0 * static_cast<double>(kappa)));
}

// Level-weighted sphere sum sum_{|x-o|=n} rho^{l(x)} on the homogeneous tree
// where every vertex has d children and one parent. The d*rho^2 = 1 branch is
// selected within 1e-12 (the other branch's denominator vanishes there).
inline double alphaN(double rho, std::uint32_t d, std::uint32_t n) {
  if (d < 2) throw ConfigError("d must be >= 2");
  if (!(rho > 0) || !(rho < 1)) throw ConfigError("rho must lie in (0,1)");
  if (n == 0) return 1.0;
  double dd = static_cast<double>(d);
  double nn = static_cast<double>(n);
  double drho2 = dd * rho * rho;
  if (std::fabs(drho2 - 1.0) <= 1e-12)
    return std::pow(rho, -nn) * ((nn + 1) - (nn - 1) * rho * rho);
  return (std::pow(dd, nn - 1) * std::pow(rho, nn) * (dd * dd * rho * rho - 1) +
          std::pow(rho, -nn) * (rho * rho - 1)) /
         (drho2 - 1);
}

// Upper bound gamma/(1-rho) * rho^level on the weight of a depth-(kappa-1)
// block rooted at level `level`; the exact block sum is always smaller.
inline double blockWeightBound(double rho, double gamma, std::int32_t level) {
  if (!(rho > 0) || !(rho < 1)) throw ConfigError("rho must lie in (0,1)");
  if (!(gamma > 0)) throw ConfigError("gamma must be > 0");
  return gamma / (1 - rho) * std::pow(rho, static_cast<double>(level));
}

// Trial-success lower bound (lambda/(1+lambda) * P(D>=2))^(2k+1) for one
// frontier-growth attempt of 2k+1 qualifying births.
inline double alphaKBound(double lambda, double probAtLeast2, std::uint64_t k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
  if (!(probAtLeast2 >= 0) || !(probAtLeast2 <= 1))
    throw ConfigError("probAtLeast2 must lie in [0,1]");
  if (lambda == 0 || probAtLeast2 == 0) return 0.0;
  double logTerm = std::log(lambda / (1 + lambda)) + std::log(probAtLeast2);
  return std::exp(static_cast<double>(2 * k + 1) * logTerm);
}

// Probability that a star-graph excursion fails to push the infection back
// to the root: exp(-(lambda/(1+lambda))^k * exp(C lambda^2 g(k))) with
// g(k) = (k ln mu)^(1/alpha) for subexponential tails and g(k) = k for
// exponential tails (bounded support included). C is the star-survival
// constant and must be supplied by the caller; computed in log domain since
// (lambda/(1+lambda))^k underflows quickly.
inline double pushbackFailure(TailClass tail, double lambda, double k, double C, double mu = 0,
                              double alpha = 0) {
  if (!(C > 0)) throw ConfigError("C must be > 0");
  if (!(k >= 1)) throw ConfigError("k must be >= 1");
  if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
  double g;
  if (tail == TailClass::Subexponential) {
    if (!(alpha > 0) || !(alpha < 1)) throw ConfigError("alpha must lie in (0,1)");
    if (!(mu >= 1)) throw ConfigError("mu must be >= 1");
    g = std::pow(k * std::log(mu), 1.0 / alpha);
  } else {
    g = k;
  }
  if (lambda == 0) return 1.0;  // pushes never succeed
  double inner = k * std::log(lambda / (1 + lambda)) + C * lambda * lambda * g;
  return std::exp(-std::exp(inner));
}

// Largest fixed point of r = c1 (1 - (1 - c2 r)^L) on (0,1], by monotone
// iteration from r = 1; empty when f'(0) = c1 c2 L <= 1 and the only root is 0.
inline std::optional<double> recursionFixedPoint(double c1, double c2, double L) {
  if (!(c1 > 0) || !(c1 <= 1)) throw ConfigError("c1 must lie in (0,1]");
  if (!(c2 > 0) || !(c2 <= 1)) throw ConfigError("c2 must lie in (0,1]");
  if (!(L > 0)) throw ConfigError("L must be > 0");
  if (!(c1 * c2 * L > 1)) return std::nullopt;
  auto f = [&](double r) { return c1 * (1 - std::pow(1 - c2 * r, L)); };
  double r = 1;
  for (std::uint64_t i = 0; i < 50000000ull; ++i) {
    double next = f(r);
    if (std::fabs(next - r) <= 1e-13) return r;  // the returned iterate carries the residual bound
    r = next;
  }
  throw Error("recursionFixedPoint: iteration did not converge");
}

// k e^{-2} (1 - e^{-lambda}) rho / 2: expected offspring of the comparison
// branching process when each of k frontier children succeeds independently.
inline double comparisonMeanOffspring(std::uint64_t k, double lambda, double rho) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
  if (!(rho >= 0) || !(rho <= 1)) throw ConfigError("rho must lie in [0,1]");
  return static_cast<double>(k) * std::exp(-2.0) * (-std::expm1(-lambda)) * rho / 2.0;
}

}  // namespace treecp
