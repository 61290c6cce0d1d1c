#pragma once

// Offspring laws for Galton-Watson trees and for embedded comparison
// processes. Laws meant to drive a GW tree must put no mass on zero and
// have mean above one; BinomialLaw carries general support and exists for
// comparison/embedding work only (validated where a GW tree is built).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "treecp/common.hpp"
#include "treecp/rng.hpp"

namespace treecp {

enum class LawKind {
  Constant,
  FiniteSupport,
  GeometricShifted,
  PoissonConditioned,
  StretchedExp,
  Binomial,
};

enum class TailClass { BoundedSupport, ExponentialTail, Subexponential };

class OffspringLaw {
 public:
  // D = m with probability 1, m >= 1.
  static OffspringLaw constant(std::uint32_t m) {
    if (m < 1) throw ConfigError("Constant law needs m >= 1");
    OffspringLaw law(LawKind::Constant);
    law.m_ = m;
    law.mean_ = m;
    return law;
  }

  // Explicit support on values >= 1; probabilities must sum to 1 within 1e-12.
  static OffspringLaw finiteSupport(std::vector<std::pair<std::uint32_t, double>> support) {
    OffspringLaw law(LawKind::FiniteSupport);
    double total = 0.0, mean = 0.0;
    for (auto& [v, p] : support) {
      if (v < 1) throw ConfigError("FiniteSupport values must be >= 1");
      if (p < 0.0) throw ConfigError("FiniteSupport probabilities must be >= 0");
      total += p;
      mean += p * v;
    }
    if (support.empty() || std::abs(total - 1.0) > 1e-12)
      throw ConfigError("FiniteSupport probabilities must sum to 1 within 1e-12");
    std::sort(support.begin(), support.end());
    for (std::size_t i = 1; i < support.size(); ++i)
      if (support[i].first == support[i - 1].first)
        throw ConfigError("FiniteSupport values must be distinct");
    law.support_ = std::move(support);
    law.mean_ = mean;
    law.buildTable();
    return law;
  }

  // P(D = k) = p (1-p)^(k-1) on k >= 1; mean 1/p.
  static OffspringLaw geometricShifted(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("GeometricShifted needs p in (0,1)");
    OffspringLaw law(LawKind::GeometricShifted);
    law.p_ = p;
    law.mean_ = 1.0 / p;
    return law;
  }

  // Poisson(mu) conditioned on D >= 1; mean mu / (1 - e^-mu).
  static OffspringLaw poissonConditioned(double mu) {
    if (!(mu > 0.0)) throw ConfigError("PoissonConditioned needs mu > 0");
    OffspringLaw law(LawKind::PoissonConditioned);
    law.mu_ = mu;
    law.mean_ = mu / (-std::expm1(-mu));
    law.buildTable();
    return law;
  }

  // Discretized stretched-exponential tail, shifted onto support >= 1:
  // D = 1 + D0 with P(D0 >= k) = exp(-k^alpha) for k >= 0. The shift alone
  // yields a proper law (the k=0 tail is exactly 1), so no renormalization
  // is applied. Mean 1 + sum_{k>=1} exp(-k^alpha).
  static OffspringLaw stretchedExp(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("StretchedExp needs alpha in (0,1)");
    OffspringLaw law(LawKind::StretchedExp);
    law.alpha_ = alpha;
    double sum = 0.0;
    for (std::uint64_t k = 1;; ++k) {
      double term = std::exp(-std::pow(static_cast<double>(k), alpha));
      sum += term;
      if (term < 1e-16) break;
    }
    law.mean_ = 1.0 + sum;
    return law;
  }

  // Binomial(n, p); the only law here allowed to put mass on zero.
  static OffspringLaw binomial(std::uint32_t n, double p) {
    if (n < 1) throw ConfigError("BinomialLaw needs n >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("BinomialLaw needs p in [0,1]");
    OffspringLaw law(LawKind::Binomial);
    law.n_ = n;
    law.p_ = p;
    law.mean_ = n * p;
    law.buildTable();
    return law;
  }

  LawKind kind() const { return kind_; }
  double mean() const { return mean_; }

  double probZero() const {
    switch (kind_) {
      case LawKind::Binomial:
        return std::pow(1.0 - p_, n_);
      default:
        return 0.0;  // all other kinds live on k >= 1
    }
  }

  double probAtLeastTwo() const {
    switch (kind_) {
      case LawKind::Constant:
        return m_ >= 2 ? 1.0 : 0.0;
      case LawKind::FiniteSupport: {
        double s = 0.0;
        for (auto& [v, p] : support_)
          if (v >= 2) s += p;
        return s;
      }
      case LawKind::GeometricShifted:
        return 1.0 - p_;
      case LawKind::PoissonConditioned:
        return 1.0 - mu_ * std::exp(-mu_) / (-std::expm1(-mu_));
      case LawKind::StretchedExp:
        return std::exp(-1.0);  // P(D0 >= 1)
      case LawKind::Binomial:
        return 1.0 - std::pow(1.0 - p_, n_) - n_ * p_ * std::pow(1.0 - p_, n_ - 1.0);
    }
    return 0.0;
  }

  TailClass tailClass() const {
    switch (kind_) {
      case LawKind::Constant:
      case LawKind::FiniteSupport:
      case LawKind::Binomial:
        return TailClass::BoundedSupport;
      case LawKind::GeometricShifted:
      case LawKind::PoissonConditioned:
        return TailClass::ExponentialTail;
      case LawKind::StretchedExp:
        return TailClass::Subexponential;
    }
    return TailClass::BoundedSupport;
  }

  // True when the law may drive a GW tree: no mass at zero and mean > 1.
  bool usableAsGwOffspring() const { return probZero() == 0.0 && mean_ > 1.0; }

  std::uint32_t sample(RngStream& rng) const {
    switch (kind_) {
      case LawKind::Constant:
        return m_;  // deterministic; consumes no randomness
      case LawKind::GeometricShifted: {
        double u = rng.uniform();
        double k = 1.0 + std::floor(std::log1p(-u) / std::log1p(-p_));
        return static_cast<std::uint32_t>(std::min(k, 2147483647.0));
      }
      case LawKind::StretchedExp: {
        // Closed-form inverse CDF of the shifted law: smallest k >= 0 with
        // (k+1)^alpha >= -log(1-u), then D = 1 + k.
        double u = rng.uniform();
        double x = std::pow(-std::log1p(-u), 1.0 / alpha_) - 1.0;
        double k = std::max(0.0, std::ceil(x));
        return 1 + static_cast<std::uint32_t>(std::min(k, 2147483647.0));
      }
      default: {
        double u = rng.uniform();
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t idx = it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
        return values_[idx];
      }
    }
  }

  // "const:2" style string, the same vocabulary the CLI accepts.
  std::string format() const {
    std::ostringstream os;
    switch (kind_) {
      case LawKind::Constant:
        os << "const:" << m_;
        break;
      case LawKind::FiniteSupport: {
        os << "finite:";
        for (std::size_t i = 0; i < support_.size(); ++i) {
          if (i) os << ',';
          os << support_[i].first << '=' << support_[i].second;
        }
        break;
      }
      case LawKind::GeometricShifted:
        os << "geom:" << p_;
        break;
      case LawKind::PoissonConditioned:
        os << "poisson:" << mu_;
        break;
      case LawKind::StretchedExp:
        os << "stretched:" << alpha_;
        break;
      case LawKind::Binomial:
        os << "binom:" << n_ << ',' << p_;
        break;
    }
    return os.str();
  }

  static OffspringLaw parse(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("bad offspring law: " + text);
    std::string head = text.substr(0, colon);
    std::string rest = text.substr(colon + 1);
    try {
      if (head == "const") return constant(static_cast<std::uint32_t>(std::stoul(rest)));
      if (head == "geom") return geometricShifted(std::stod(rest));
      if (head == "poisson") return poissonConditioned(std::stod(rest));
      if (head == "stretched") return stretchedExp(std::stod(rest));
      if (head == "binom") {
        auto comma = rest.find(',');
        if (comma == std::string::npos) throw ConfigError("binom needs n,p");
        return binomial(static_cast<std::uint32_t>(std::stoul(rest.substr(0, comma))),
                        std::stod(rest.substr(comma + 1)));
      }
      if (head == "finite") {
        std::vector<std::pair<std::uint32_t, double>> support;
        std::istringstream is(rest);
        std::string item;
        while (std::getline(is, item, ',')) {
          auto eq = item.find('=');
          if (eq == std::string::npos) throw ConfigError("finite needs v=p pairs");
          support.emplace_back(static_cast<std::uint32_t>(std::stoul(item.substr(0, eq))),
                               std::stod(item.substr(eq + 1)));
        }
        return finiteSupport(std::move(support));
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad offspring law: " + text);
    } catch (const std::out_of_range&) {
      throw ConfigError("bad offspring law: " + text);
    }
    throw ConfigError("unknown offspring law kind: " + head);
  }

  // E s^D for s in [0, 1]. Bounded-support and geometric/Poisson kinds use
  // exact closed forms; the stretched-exponential series is truncated once
  // the remaining mass (bounded by the smaller of the distribution tail and
  // the s-power envelope) drops below 1e-13, keeping the result well inside
  // the documented 1e-12 tolerance.
  double gf(double s) const {
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("generatingFunction needs s in [0,1]");
    if (s == 1.0) return 1.0;
    switch (kind_) {
      case LawKind::Constant:
        return std::pow(s, static_cast<double>(m_));
      case LawKind::FiniteSupport: {
        double acc = 0.0;
        for (auto& [v, p] : support_) acc += p * std::pow(s, static_cast<double>(v));
        return acc;
      }
      case LawKind::GeometricShifted:
        return p_ * s / (1.0 - (1.0 - p_) * s);
      case LawKind::PoissonConditioned:
        return std::expm1(mu_ * s) / std::expm1(mu_);
      case LawKind::Binomial:
        return std::pow(1.0 - p_ + p_ * s, static_cast<double>(n_));
      case LawKind::StretchedExp: {
        double acc = 0.0;
        double sk = 1.0;  // s^(k-1)
        for (std::uint32_t k = 1;; ++k) {
          double tailPrev = k == 1 ? 1.0 : std::exp(-std::pow(k - 1.0, alpha_));
          sk *= s;  // now s^k
          acc += sk * (tailPrev - std::exp(-std::pow(static_cast<double>(k), alpha_)));
          double envelope = s < 1.0 ? sk * s / (1.0 - s) : tailPrev;
          if (std::min(tailPrev, envelope) < 1e-13) break;
        }
        return acc;
      }
    }
    return 0.0;
  }

  // Probability mass at k; exact closed forms.
  double pmf(std::uint32_t k) const {
    switch (kind_) {
      case LawKind::Constant:
        return k == m_ ? 1.0 : 0.0;
      case LawKind::FiniteSupport:
        for (auto& [v, p] : support_)
          if (v == k) return p;
        return 0.0;
      case LawKind::GeometricShifted:
        return k >= 1 ? p_ * std::pow(1.0 - p_, k - 1.0) : 0.0;
      case LawKind::PoissonConditioned: {
        if (k < 1) return 0.0;
        double logp = -mu_ + k * std::log(mu_) - std::lgamma(k + 1.0);
        return std::exp(logp) / (-std::expm1(-mu_));
      }
      case LawKind::StretchedExp: {
        if (k < 1) return 0.0;
        double a = k == 1 ? 1.0 : std::exp(-std::pow(k - 1.0, alpha_));
        return a - std::exp(-std::pow(static_cast<double>(k), alpha_));
      }
      case LawKind::Binomial: {
        if (k > n_) return 0.0;
        double logc = std::lgamma(n_ + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n_ - k + 1.0);
        double logp = logc;
        if (k > 0) logp += k * std::log(p_);
        if (k < n_) logp += (n_ - k) * std::log1p(-p_);
        if (p_ == 0.0) return k == 0 ? 1.0 : 0.0;
        if (p_ == 1.0) return k == n_ ? 1.0 : 0.0;
        return std::exp(logp);
      }
    }
    return 0.0;
  }

 private:
  explicit OffspringLaw(LawKind kind) : kind_(kind) {}

  // Inverse-CDF table for laws without a closed-form inverse, truncated where
  // the remaining tail mass drops below 1e-15.
  void buildTable() {
    values_.clear();
    cdf_.clear();
    if (kind_ == LawKind::FiniteSupport) {
      double acc = 0.0;
      for (auto& [v, p] : support_) {
        acc += p;
        values_.push_back(v);
        cdf_.push_back(acc);
      }
      cdf_.back() = 1.0;
      return;
    }
    double acc = 0.0;
    std::uint32_t k = kind_ == LawKind::Binomial ? 0 : 1;
    std::uint32_t limit = kind_ == LawKind::Binomial ? n_ : 4000000000u;
    for (; k <= limit; ++k) {
      double p = pmf(k);
      acc += p;
      values_.push_back(k);
      cdf_.push_back(acc);
      if (1.0 - acc < 1e-15 && (kind_ != LawKind::Binomial)) break;
    }
    cdf_.back() = std::max(cdf_.back(), 1.0);
  }

  LawKind kind_;
  std::uint32_t m_ = 0;
  std::uint32_t n_ = 0;
  double p_ = 0.0;
  double mu_ = 0.0;
  double alpha_ = 0.0;
  double mean_ = 0.0;
  std::vector<std::pair<std::uint32_t, double>> support_;
  std::vector<std::uint32_t> values_;
  std::vector<double> cdf_;
};

inline double generatingFunction(const OffspringLaw& law, double s) { return law.gf(s); }

// Smallest fixed point of the generating function on [0, 1], i.e. the
// extinction probability of the embedded branching process. Computed by
// monotone iteration from 0 to tolerance 1e-10 (the iteration is run until
// successive values agree to 1e-14). Supercritical means return a value
// below 1; mean <= 1 short-circuits to exactly 1.
inline double extinctionFixedPoint(const OffspringLaw& law) {
  if (law.mean() <= 1.0) return 1.0;
  double q = 0.0;
  for (int iter = 0; iter < 400000; ++iter) {
    double next = law.gf(q);
    if (std::abs(next - q) < 1e-14) return next;
    q = next;
  }
  return q;
}

inline TailClass tailClass(const OffspringLaw& law) { return law.tailClass(); }

}  // namespace treecp
