#pragma once

// Exact transient distributions for the contact process on a small fixed
// graph: the 2^n-state generator is built explicitly and exponentiated, which
// gives the ground truth the event-driven engine is validated against. The
// presets pin the two reference trees (a 2-vertex chain and a 6-vertex star)
// together with the topology/restriction pair that realizes each of them as a
// simulated process on a lazily generated tree.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "treecp/common.hpp"
#include "treecp/parallel.hpp"
#include "treecp/process.hpp"
#include "treecp/rng.hpp"
#include "treecp/topology.hpp"

namespace treecp {

class FiniteContactChain {
 public:
  FiniteContactChain(std::uint32_t vertexCount,
                     std::vector<std::pair<std::uint32_t, std::uint32_t>> edges, double lambda)
      : n_(vertexCount), edges_(std::move(edges)) {
    if (n_ == 0 || n_ > 20) throw ConfigError("vertex count must lie in 1..20");
    if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
    for (auto [a, b] : edges_)
      if (a >= n_ || b >= n_ || a == b) throw ConfigError("edge endpoints out of range");
    std::uint32_t states = stateCount();
    q_ = Eigen::MatrixXd::Zero(states, states);
    for (std::uint32_t s = 0; s < states; ++s) {
      for (std::uint32_t v = 0; v < n_; ++v)
        if (s & (1u << v)) q_(s, s & ~(1u << v)) += 1.0;
      for (auto [a, b] : edges_) {
        if ((s & (1u << a)) && !(s & (1u << b))) q_(s, s | (1u << b)) += lambda;
        if ((s & (1u << b)) && !(s & (1u << a))) q_(s, s | (1u << a)) += lambda;
      }
      q_(s, s) = -q_.row(s).sum();
    }
  }

  std::uint32_t vertexCount() const { return n_; }
  std::uint32_t stateCount() const { return 1u << n_; }
  const Eigen::MatrixXd& generator() const { return q_; }

  // Distribution over all 2^n configurations at time t from a fixed start.
  Eigen::VectorXd transient(std::uint32_t initialState, double t) const {
    if (initialState >= stateCount()) throw ConfigError("initial state out of range");
    if (!(t >= 0)) throw ConfigError("t must be >= 0");
    Eigen::MatrixXd m = (q_ * t).exp();
    return m.row(initialState).transpose();
  }

 private:
  std::uint32_t n_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_;
  Eigen::MatrixXd q_;
};

// A finite reference tree plus the (topology, ball radius) pair that carves
// exactly that graph out of a lazily realized tree: vertex handles coincide
// with bit positions because the anchor realizes its children at time 0.
struct FiniteTreePreset {
  std::string name;
  Topology topology;
  std::uint32_t radius = 1;
  std::uint32_t vertexCount = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

inline FiniteTreePreset presetTwoVertex() {
  return {"twovertex", Topology::gwPlus(OffspringLaw::constant(2)), 1, 2, {{0, 1}}};
}

inline FiniteTreePreset presetStar6() {
  FiniteTreePreset p{"star6", Topology::gw(OffspringLaw::constant(5)), 1, 6, {}};
  for (std::uint32_t c = 1; c <= 5; ++c) p.edges.emplace_back(0, c);
  return p;
}

inline FiniteTreePreset presetByName(const std::string& name) {
  if (name == "twovertex") return presetTwoVertex();
  if (name == "star6") return presetStar6();
  throw ConfigError("unknown oracle tree '" + name + "' (expected twovertex or star6)");
}

inline Eigen::VectorXd exactOccupancy(const FiniteTreePreset& preset, double lambda, double t) {
  FiniteContactChain chain(preset.vertexCount, preset.edges, lambda);
  return chain.transient(1u, t);  // bit 0 = the initially infected root
}

struct OccupancyCounts {
  std::vector<double> times;
  std::vector<std::vector<std::uint64_t>> counts;  // [time index][state mask]
  std::uint64_t reps = 0;
};

// Simulated configuration counts at the given times, one frozen observation
// per time per replication (extinction is absorbing, so a dead run counts as
// the empty state from then on).
inline OccupancyCounts simulateOccupancy(const FiniteTreePreset& preset, double lambda,
                                         std::vector<double> times, std::uint64_t reps,
                                         std::uint64_t rootSeed, unsigned threads) {
  if (reps == 0) throw ConfigError("reps must be >= 1");
  std::sort(times.begin(), times.end());
  auto masks = replicate<std::vector<std::uint32_t>>(reps, threads, [&](std::uint64_t rep) {
    LazyTree tree(preset.topology, deriveSeed(rootSeed, rep, StreamKind::Structure));
    ContactProcess proc(std::move(tree), lambda, Restriction::ball(0, preset.radius),
                        deriveSeed(rootSeed, rep, StreamKind::Process));
    std::vector<std::uint32_t> out;
    out.reserve(times.size());
    for (double t : times) {
      while (proc.core().infectedCount() > 0 && proc.time() < t) proc.stepOnce(t);
      std::uint32_t mask = 0;
      for (Handle v : proc.core().infectedVertices()) {
        if (v >= preset.vertexCount) throw Error("infected vertex outside the preset graph");
        mask |= 1u << v;
      }
      out.push_back(mask);
    }
    return out;
  });
  OccupancyCounts result;
  result.times = times;
  result.reps = reps;
  result.counts.assign(times.size(), std::vector<std::uint64_t>(1u << preset.vertexCount, 0));
  for (const std::vector<std::uint32_t>& perRep : masks)
    for (std::size_t i = 0; i < perRep.size(); ++i) ++result.counts[i][perRep[i]];
  return result;
}

}  // namespace treecp
