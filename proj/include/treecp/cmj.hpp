#pragma once

// Age-structured (Crump–Mode–Jagers style) branching: each particle lives for
// a random time tau drawn from an empirical sample and, if tau falls short of
// the birth deadline, splits into an offspring-law number of children. The
// module also extracts this comparison process from contact-process runs: run
// to the k-frontier time, designate one never-infected child per frontier
// vertex, and score which of them are infected one time unit later.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "treecp/common.hpp"
#include "treecp/offspring.hpp"
#include "treecp/parallel.hpp"
#include "treecp/process.hpp"
#include "treecp/rng.hpp"
#include "treecp/stats.hpp"
#include "treecp/topology.hpp"

namespace treecp {

struct ReproductionAtom {
  double time = 0;
  double weight = 0;
};

// Finite atomic expected-birth measure; times strictly increasing.
struct ReproductionMeasure {
  std::vector<ReproductionAtom> atoms;

  void validate() const {
    if (atoms.empty()) throw ConfigError("reproduction measure must have at least one atom");
    double prev = 0;
    for (const ReproductionAtom& a : atoms) {
      if (!(a.time > prev)) throw ConfigError("atom times must be positive and strictly increasing");
      if (!(a.weight >= 0) || !std::isfinite(a.weight)) throw ConfigError("atom weights must be >= 0");
      prev = a.time;
    }
    if (!(totalWeight() > 0)) throw ConfigError("total reproduction weight must be > 0");
  }

  double totalWeight() const {
    double w = 0;
    for (const ReproductionAtom& a : atoms) w += a.weight;
    return w;
  }
};

// The growth exponent c solving sum_i w_i e^{-c t_i} = 1. The left side is
// strictly decreasing in c, so bisection from a sign-straddling bracket
// converges; we stop on the residual, not the interval width.
inline double malthusian(const ReproductionMeasure& measure) {
  measure.validate();
  auto residual = [&](double c) {
    double s = 0;
    for (const ReproductionAtom& a : measure.atoms) s += a.weight * std::exp(-c * a.time);
    return s - 1.0;
  };
  double lo = 0, hi = 0;
  double r0 = residual(0);
  if (r0 == 0) return 0.0;
  if (r0 > 0) {
    hi = 1;
    while (residual(hi) > 0) hi *= 2;
  } else {
    lo = -1;
    while (residual(lo) < 0) lo *= 2;
  }
  double mid = 0;
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    double r = residual(mid);
    if (std::abs(r) <= 1e-10) return mid;
    (r > 0 ? lo : hi) = mid;
  }
  throw Error("growth-exponent bisection failed to reach the residual tolerance");
}

struct CmjSpec {
  OffspringLaw offspringCount = OffspringLaw::constant(1);
  std::vector<double> birthTimes;  // empirical sample of tau; one atom = fixed tau
  double birthDeadline = 0;        // births happen only when tau < birthDeadline

  void validate() const {
    if (birthTimes.empty()) throw ConfigError("birth-time sample must be non-empty");
    for (double t : birthTimes)
      if (!(t > 0) || !std::isfinite(t)) throw ConfigError("birth times must be positive and finite");
    if (!(birthDeadline > 0) || !std::isfinite(birthDeadline))
      throw ConfigError("birth deadline must be positive and finite");
  }
};

// Expected-birth measure induced by a CmjSpec: mass at each distinct tau
// below the deadline, scaled by the mean offspring count.
inline ReproductionMeasure impliedMeasure(const CmjSpec& spec) {
  spec.validate();
  std::vector<double> taus = spec.birthTimes;
  std::sort(taus.begin(), taus.end());
  double meanX = spec.offspringCount.mean();
  double n = static_cast<double>(taus.size());
  ReproductionMeasure m;
  for (std::size_t i = 0; i < taus.size();) {
    std::size_t j = i;
    while (j < taus.size() && taus[j] == taus[i]) ++j;
    if (taus[i] < spec.birthDeadline)
      m.atoms.push_back({taus[i], meanX * static_cast<double>(j - i) / n});
    i = j;
  }
  if (m.atoms.empty()) throw ConfigError("no birth time falls below the deadline");
  return m;
}

struct CmjTrajectory {
  std::vector<double> times;
  std::vector<std::uint64_t> counts;  // particles alive at each time (splits at t included)
};

// Event-driven splitting simulation: a particle born at b dies at b + tau and
// is replaced by its children there (or by nothing when tau >= the deadline).
inline CmjTrajectory simulateCmj(const CmjSpec& spec, double horizon,
                                 std::vector<double> sampleTimes, std::uint64_t seed) {
  spec.validate();
  if (!(horizon > 0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive and finite");
  std::sort(sampleTimes.begin(), sampleTimes.end());
  if (!sampleTimes.empty() && sampleTimes.back() > horizon)
    throw ConfigError("sample times must not exceed the horizon");
  RngStream stream(seed);
  auto drawTau = [&] { return spec.birthTimes[stream.below(spec.birthTimes.size())]; };

  // Min-heap of (death time, insertion sequence, gives birth) — the sequence
  // number breaks time ties deterministically.
  struct Split {
    double time;
    std::uint64_t seq;
    bool fertile;
    bool operator>(const Split& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };
  std::priority_queue<Split, std::vector<Split>, std::greater<Split>> heap;
  std::uint64_t seq = 0;
  std::uint64_t alive = 1;
  double tau0 = drawTau();
  heap.push({tau0, seq++, tau0 < spec.birthDeadline});

  CmjTrajectory traj;
  traj.times = sampleTimes;
  traj.counts.reserve(sampleTimes.size());
  for (double t : sampleTimes) {
    while (!heap.empty() && heap.top().time <= t) {
      Split s = heap.top();
      heap.pop();
      --alive;
      if (s.fertile) {
        std::uint64_t x = spec.offspringCount.sample(stream);
        for (std::uint64_t i = 0; i < x; ++i) {
          double tau = drawTau();
          heap.push({s.time + tau, seq++, tau < spec.birthDeadline});
        }
        alive += x;
        if (alive > 100'000'000) throw Error("particle count exceeded the sanity cap");
      }
    }
    traj.counts.push_back(alive);
  }
  return traj;
}

struct LimitDiagnostic {
  double growthRate = 0;
  std::size_t trajectories = 0;
  std::size_t surviving = 0;      // alive at the last sample time
  double earlyVariance = 0;       // mean over survivors of var_t W(t), t <= T/2
  double lateVariance = 0;        //                                t >  T/2
  double wMin = 0, wMax = 0;      // range of W(t) over survivors, all times
  double wFinalMean = 0;
};

// Per-trajectory normalization W(t) = Z_t e^{-ct}; on surviving trajectories
// the across-time spread should settle as t grows if W(t) converges.
inline LimitDiagnostic limitDiagnostic(const std::vector<CmjTrajectory>& trajectories, double c) {
  LimitDiagnostic d;
  d.growthRate = c;
  d.trajectories = trajectories.size();
  if (trajectories.empty()) return d;
  const std::vector<double>& times = trajectories.front().times;
  if (times.empty()) throw ConfigError("trajectories carry no sample times");
  double half = times.back() / 2;
  double sumEarly = 0, sumLate = 0, sumFinal = 0;
  bool first = true;
  for (const CmjTrajectory& traj : trajectories) {
    if (traj.times != times) throw ConfigError("trajectories must share one sample grid");
    if (traj.counts.back() == 0) continue;
    ++d.surviving;
    std::vector<double> early, late;
    for (std::size_t i = 0; i < times.size(); ++i) {
      double w = static_cast<double>(traj.counts[i]) * std::exp(-c * times[i]);
      (times[i] <= half ? early : late).push_back(w);
      if (first) {
        d.wMin = d.wMax = w;
        first = false;
      } else {
        d.wMin = std::min(d.wMin, w);
        d.wMax = std::max(d.wMax, w);
      }
    }
    auto popVar = [](const std::vector<double>& xs) {
      if (xs.size() < 2) return 0.0;
      double m = mean(xs), s = 0;
      for (double x : xs) s += (x - m) * (x - m);
      return s / static_cast<double>(xs.size());
    };
    sumEarly += popVar(early);
    sumLate += popVar(late);
    sumFinal += static_cast<double>(traj.counts.back()) * std::exp(-c * times.back());
  }
  if (d.surviving > 0) {
    double ns = static_cast<double>(d.surviving);
    d.earlyVariance = sumEarly / ns;
    d.lateVariance = sumLate / ns;
    d.wFinalMean = sumFinal / ns;
  }
  return d;
}

struct ComparisonExtract {
  std::uint64_t reps = 0;
  std::uint64_t censored = 0;                            // no k-frontier time before the deadline
  std::vector<double> tauSamples;                        // uncensored first k-frontier times
  std::vector<std::uint32_t> offspringSamples;           // per replication (0 when censored)
  std::vector<std::vector<std::uint8_t>> successFlags;   // per uncensored replication, k indicators
  std::uint64_t childTrials = 0;
  std::uint64_t childSuccesses = 0;
  Estimate perChild;                                     // Wilson interval over child trials
};

// Run the contact process until k infected frontier vertices coexist (capped
// at m1), designate the first never-infected child of each, and test whether
// that child is infected one time unit later — the per-child success event
// behind the comparison process's offspring law.
inline ComparisonExtract extractComparison(const Topology& topology, double lambda,
                                           std::uint32_t k, double m1, std::uint64_t reps,
                                           std::uint64_t rootSeed, unsigned threads = 0) {
  if (k == 0) throw ConfigError("k must be >= 1");
  if (!(m1 > 0) || !std::isfinite(m1)) throw ConfigError("m1 must be positive and finite");
  if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
  if (reps == 0) throw ConfigError("reps must be >= 1");

  struct Rep {
    bool censored = true;
    double tau = 0;
    std::vector<std::uint8_t> flags;
  };
  auto results = replicate<Rep>(reps, threads, [&](std::uint64_t rep) {
    LazyTree tree(topology, deriveSeed(rootSeed, rep, StreamKind::Structure));
    ContactProcess proc(std::move(tree), lambda, Restriction::none(),
                        deriveSeed(rootSeed, rep, StreamKind::Process));
    StopCondition stop;
    stop.maxTime = m1;
    stop.frontierTarget = k;
    Outcome out = proc.run(stop);
    Rep r;
    if (out.reason != StopReason::FrontierReached) return r;
    r.censored = false;
    r.tau = out.at;
    std::vector<Handle> designated;
    const std::vector<Handle>& frontier = proc.core().frontierVertices();
    for (std::uint32_t i = 0; i < k; ++i) {
      Handle parent = frontier[i];
      Handle pick = kNoVertex;
      for (std::uint32_t j = 0; j < proc.tree().childCount(parent); ++j) {
        Handle c = proc.tree().child(parent, j);
        if (!proc.core().everInfected(c)) {
          pick = c;
          break;
        }
      }
      if (pick == kNoVertex) throw Error("frontier vertex has no never-infected child");
      designated.push_back(pick);
    }
    double end = r.tau + 1.0;
    while (proc.core().infectedCount() > 0 && proc.time() < end) proc.stepOnce(end);
    for (Handle c : designated)
      r.flags.push_back(proc.core().everInfected(c) && proc.core().infected(c) ? 1 : 0);
    return r;
  });

  ComparisonExtract ex;
  ex.reps = reps;
  for (const Rep& r : results) {
    if (r.censored) {
      ++ex.censored;
      ex.offspringSamples.push_back(0);
      continue;
    }
    ex.tauSamples.push_back(r.tau);
    std::uint32_t succ = 0;
    for (std::uint8_t f : r.flags) succ += f;
    ex.offspringSamples.push_back(succ);
    ex.successFlags.push_back(r.flags);
    ex.childTrials += k;
    ex.childSuccesses += succ;
  }
  if (ex.childTrials == 0)
    throw DegenerateResult("every replication was censored before reaching k frontier vertices");
  ex.perChild = wilson(ex.childSuccesses, ex.childTrials);
  ex.perChild.censored = ex.censored;
  ex.perChild.seed = rootSeed;
  ex.perChild.protocol = "child infected within one unit of the k-frontier time and at its end";
  return ex;
}

}  // namespace treecp
