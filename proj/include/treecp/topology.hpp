#pragma once

// Tree families the engine runs on:
//   GW        — Galton-Watson tree grown strictly downward from the root.
//   GWPlus    — root with exactly one child whose subtree is GW(law).
//   Periodic  — deterministic tree with period-kappa degree schedule; a
//               type-i vertex has periods[i] children of type (i+1) mod kappa,
//               and the realized part can also grow upward through an
//               ancestor chain above the root.

#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "treecp/common.hpp"
#include "treecp/offspring.hpp"

namespace treecp {

enum class TopologyKind { GW, GWPlus, Periodic };

class Topology {
 public:
  static Topology gw(OffspringLaw law) {
    requireGwUsable(law);
    return Topology(TopologyKind::GW, std::move(law), {}, 0);
  }

  static Topology gwPlus(OffspringLaw law) {
    requireGwUsable(law);
    return Topology(TopologyKind::GWPlus, std::move(law), {}, 0);
  }

  // periods = (a_1 .. a_kappa), all >= 1, with product != 1 (the product is
  // the per-period growth factor gamma). rootType picks which point of the
  // schedule the root sits at.
  static Topology periodic(std::vector<std::uint32_t> periods, std::uint32_t rootType = 0) {
    if (periods.empty()) throw ConfigError("periodic topology needs at least one period");
    double gamma = 1.0;
    for (auto a : periods) {
      if (a < 1) throw ConfigError("periodic degrees must be >= 1");
      gamma *= a;
    }
    if (gamma == 1.0) throw ConfigError("periodic topology needs product of periods != 1");
    if (rootType >= periods.size()) throw ConfigError("rootType must lie in [0, kappa)");
    return Topology(TopologyKind::Periodic, OffspringLaw::constant(1), std::move(periods), rootType);
  }

  TopologyKind kind() const { return kind_; }
  const OffspringLaw& law() const { return law_; }
  const std::vector<std::uint32_t>& periods() const { return periods_; }
  std::uint32_t rootType() const { return rootType_; }
  std::uint32_t kappa() const { return static_cast<std::uint32_t>(periods_.size()); }

  double gamma() const {
    double g = 1.0;
    for (auto a : periods_) g *= a;
    return g;
  }

  // Only periodic trees have ancestors above the root.
  bool upwardGrowth() const { return kind_ == TopologyKind::Periodic; }

  Topology withRootType(std::uint32_t t) const {
    if (kind_ != TopologyKind::Periodic) throw ConfigError("rootType applies to periodic trees only");
    return periodic(periods_, t);
  }

  std::string format() const {
    std::ostringstream os;
    switch (kind_) {
      case TopologyKind::GW:
        os << law_.format();
        break;
      case TopologyKind::GWPlus:
        os << "gwplus:" << law_.format();
        break;
      case TopologyKind::Periodic: {
        os << "periodic:";
        for (std::size_t i = 0; i < periods_.size(); ++i) {
          if (i) os << ',';
          os << periods_[i];
        }
        if (rootType_ != 0) os << '@' << rootType_;
        break;
      }
    }
    return os.str();
  }

  // Accepts the CLI vocabulary: "const:2", "geom:0.3", "poisson:2.5",
  // "stretched:0.5", "finite:1=0.5,3=0.5", "periodic:2,3,4" (optionally
  // "periodic:2,3,4@1" to pick the root type), and a "gwplus:" prefix.
  static Topology parse(const std::string& text) {
    if (text.rfind("gwplus:", 0) == 0) return gwPlus(OffspringLaw::parse(text.substr(7)));
    if (text.rfind("periodic:", 0) == 0) {
      std::string rest = text.substr(9);
      std::uint32_t rootType = 0;
      auto at = rest.find('@');
      if (at != std::string::npos) {
        try {
          rootType = static_cast<std::uint32_t>(std::stoul(rest.substr(at + 1)));
        } catch (const std::exception&) {
          throw ConfigError("bad periodic root type: " + text);
        }
        rest = rest.substr(0, at);
      }
      std::vector<std::uint32_t> periods;
      std::istringstream is(rest);
      std::string item;
      while (std::getline(is, item, ',')) {
        try {
          periods.push_back(static_cast<std::uint32_t>(std::stoul(item)));
        } catch (const std::exception&) {
          throw ConfigError("bad periodic degree list: " + text);
        }
      }
      return periodic(std::move(periods), rootType);
    }
    return gw(OffspringLaw::parse(text));
  }

 private:
  Topology(TopologyKind kind, OffspringLaw law, std::vector<std::uint32_t> periods,
           std::uint32_t rootType)
      : kind_(kind), law_(std::move(law)), periods_(std::move(periods)), rootType_(rootType) {}

  static void requireGwUsable(const OffspringLaw& law) {
    if (!law.usableAsGwOffspring())
      throw ConfigError("GW offspring law must have P(D >= 1) = 1 and mean > 1");
  }

  TopologyKind kind_;
  OffspringLaw law_;
  std::vector<std::uint32_t> periods_;
  std::uint32_t rootType_;
};

}  // namespace treecp
