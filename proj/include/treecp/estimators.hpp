#pragma once

// Replication-level Monte Carlo estimators: survival and growth proxies, the
// root-chain hitting probabilities u(n) and the growth factor beta built from
// them, the weighted-occupancy diagnostic, critical-value bisection, and the
// reinfection/recurrence correlation check. Every estimator derives one
// structure stream and one process stream per replication from a root seed
// and reduces results in replication order, so output is independent of the
// worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "treecp/common.hpp"
#include "treecp/parallel.hpp"
#include "treecp/process.hpp"
#include "treecp/rng.hpp"
#include "treecp/stats.hpp"
#include "treecp/topology.hpp"

namespace treecp {

// Fraction of replications still alive when observation ends (at maxTime, or
// earlier once massCap vertices are simultaneously infected). Survival here
// is a finite-window proxy; the non-extinct runs are exactly the censored
// ones, since only extinction is ever observed conclusively.
inline Estimate estimateSurvival(const Topology& topology, double lambda, std::uint64_t reps,
                                 double maxTime, std::uint64_t massCap, std::uint64_t rootSeed,
                                 unsigned threads = 0) {
  if (reps == 0) throw ConfigError("reps must be >= 1");
  if (!(maxTime > 0)) throw ConfigError("maxTime must be > 0");
  if (massCap == 0) throw ConfigError("massCap must be >= 1");
  auto alive = replicate<std::uint8_t>(reps, threads, [&](std::uint64_t rep) {
    LazyTree tree(topology, deriveSeed(rootSeed, rep, StreamKind::Structure));
    ContactProcess proc(std::move(tree), lambda, Restriction::none(),
                        deriveSeed(rootSeed, rep, StreamKind::Process));
    StopCondition stop;
    stop.maxTime = maxTime;
    stop.maxInfected = massCap;
    return static_cast<std::uint8_t>(proc.run(stop).reason != StopReason::Extinct ? 1 : 0);
  });
  std::uint64_t successes = 0;
  for (std::uint8_t a : alive) successes += a;
  Estimate e = wilson(successes, reps);
  e.censored = successes;
  e.seed = rootSeed;
  e.protocol = "alive at t=" + std::to_string(maxTime) + " or mass >= " + std::to_string(massCap);
  return e;
}

// Mean per-replication least-squares slope of log|xi| over the epoch grid
// (the t=0 point, log 1 = 0, included). Only replications alive through the
// whole window contribute; everything else is counted as censored.
inline Estimate estimateGrowthRate(const Topology& topology, double lambda, std::uint64_t reps,
                                   std::uint32_t epochs, double epochLength, std::uint64_t rootSeed,
                                   unsigned threads = 0) {
  if (reps == 0) throw ConfigError("reps must be >= 1");
  if (epochs < 2) throw ConfigError("epochs must be >= 2");
  if (!(epochLength > 0)) throw ConfigError("epochLength must be > 0");
  struct Rep {
    bool survived = false;
    double slope = 0;
  };
  auto results = replicate<Rep>(reps, threads, [&](std::uint64_t rep) {
    LazyTree tree(topology, deriveSeed(rootSeed, rep, StreamKind::Structure));
    ContactProcess proc(std::move(tree), lambda, Restriction::none(),
                        deriveSeed(rootSeed, rep, StreamKind::Process));
    StopCondition stop;
    stop.maxTime = static_cast<double>(epochs) * epochLength;
    SampleSpec sample;
    sample.epochLength = epochLength;
    Outcome out = proc.run(stop, sample);
    Rep r;
    if (out.reason != StopReason::TimeCap) return r;
    // The t=0 point is left out: the size-1 start sits before exponential
    // growth sets in and would dominate the fit from the end of the range.
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < out.snapshot.epochSizes.size(); ++j) {
      xs.push_back(static_cast<double>(j + 1) * epochLength);
      ys.push_back(std::log(out.snapshot.epochSizes[j]));
    }
    r.survived = true;
    r.slope = olsSlope(xs, ys);
    return r;
  });
  std::vector<double> slopes;
  for (const Rep& r : results)
    if (r.survived) slopes.push_back(r.slope);
  if (slopes.empty()) throw DegenerateResult("no surviving replications");
  Estimate e = meanEstimate(slopes);
  e.censored = reps - slopes.size();
  e.seed = rootSeed;
  e.protocol = "per-replication log-size slope over " + std::to_string(epochs) +
               " epochs of length " + std::to_string(epochLength) + ", survivors only";
  return e;
}

// P(the distinguished chain vertex at depth n is ever infected), observed up
// to maxTime and optionally a mass cap (0 disables it). Runs that end alive
// without hitting the target are censored: they can only push the true
// probability up.
inline Estimate estimateU(const Topology& topology, double lambda, std::uint32_t n,
                          std::uint64_t reps, double maxTime, std::uint64_t massCap,
                          std::uint64_t rootSeed, unsigned threads = 0) {
  if (topology.kind() != TopologyKind::Periodic)
    throw ConfigError("estimateU requires a periodic topology");
  if (reps == 0) throw ConfigError("reps must be >= 1");
  if (!(maxTime > 0)) throw ConfigError("maxTime must be > 0");
  struct Rep {
    std::uint8_t hit = 0;
    std::uint8_t open = 0;  // alive at the stop without having hit the target
  };
  auto results = replicate<Rep>(reps, threads, [&](std::uint64_t rep) {
    LazyTree tree(topology, deriveSeed(rootSeed, rep, StreamKind::Structure));
    Handle target = tree.chainDescendant(n);
    ContactProcess proc(std::move(tree), lambda, Restriction::none(),
                        deriveSeed(rootSeed, rep, StreamKind::Process));
    StopCondition stop;
    stop.maxTime = maxTime;
    if (massCap > 0) stop.maxInfected = massCap;
    stop.targetVertex = target;
    Outcome out = proc.run(stop);
    Rep r;
    r.hit = out.reason == StopReason::TargetHit ? 1 : 0;
    r.open = !r.hit && out.reason != StopReason::Extinct ? 1 : 0;
    return r;
  });
  std::uint64_t hits = 0, open = 0;
  for (const Rep& r : results) {
    hits += r.hit;
    open += r.open;
  }
  Estimate e = wilson(hits, reps);
  e.censored = open;
  e.seed = rootSeed;
  e.protocol = "chain vertex at depth " + std::to_string(n) + " ever infected by t=" +
               std::to_string(maxTime);
  return e;
}

struct BetaEstimate {
  Estimate slopeForm;                // exp(weighted slope of log u(n kappa) against n)
  double supForm = 0;                // max over the grid of u(n kappa)^{1/n}
  bool degenerate = false;           // some grid estimate was 0: only an upper bound remains
  std::vector<std::uint32_t> grid;
  std::vector<Estimate> uValues;
};

// Per-block growth factor of u along the chain: regression form plus the
// supremum form. Grid points whose u-estimate carries censored replications
// are excluded from the regression (their u is only a lower bound); the
// supremum form keeps them, since a lower bound can only lower a maximum.
inline BetaEstimate estimateBeta(const Topology& topology, double lambda,
                                 const std::vector<std::uint32_t>& nGrid, std::uint64_t reps,
                                 double maxTime, std::uint64_t massCap, std::uint64_t rootSeed,
                                 unsigned threads = 0) {
  if (topology.kind() != TopologyKind::Periodic)
    throw ConfigError("estimateBeta requires a periodic topology");
  if (nGrid.size() < 3) throw ConfigError("nGrid needs at least 3 points");
  for (std::size_t i = 0; i < nGrid.size(); ++i) {
    if (nGrid[i] == 0) throw ConfigError("nGrid entries must be >= 1");
    if (i > 0 && nGrid[i] <= nGrid[i - 1]) throw ConfigError("nGrid must be strictly increasing");
  }
  std::uint32_t kappa = topology.kappa();
  BetaEstimate b;
  b.grid = nGrid;
  for (std::size_t i = 0; i < nGrid.size(); ++i)
    b.uValues.push_back(estimateU(topology, lambda, nGrid[i] * kappa, reps, maxTime, massCap,
                                  deriveSeed(rootSeed, i, StreamKind::Aux), threads));

  bool anyZero = false;
  for (const Estimate& u : b.uValues) anyZero = anyZero || u.value == 0;
  if (anyZero) {
    // No growth factor is identifiable; report the tightest upper bound the
    // Wilson intervals allow and flag the result.
    b.degenerate = true;
    double cap = 1;
    for (std::size_t i = 0; i < nGrid.size(); ++i)
      cap = std::min(cap, std::pow(b.uValues[i].hi, 1.0 / static_cast<double>(nGrid[i])));
    b.slopeForm.hi = cap;
    b.slopeForm.n = reps;
    b.slopeForm.seed = rootSeed;
    b.slopeForm.protocol = "upper-censored: a grid u-estimate was 0";
    return b;
  }

  for (std::size_t i = 0; i < nGrid.size(); ++i)
    b.supForm = std::max(
        b.supForm, std::exp(std::log(b.uValues[i].value) / static_cast<double>(nGrid[i])));

  std::vector<double> xs, ys, ws;
  for (std::size_t i = 0; i < nGrid.size(); ++i) {
    const Estimate& u = b.uValues[i];
    if (u.censored > 0) continue;
    // log-scale variance proxy from the Wilson interval width; stays finite
    // even at u = 1
    double seLog = (std::log(u.hi) - std::log(u.lo)) / (2 * kZ95);
    xs.push_back(static_cast<double>(nGrid[i]));
    ys.push_back(std::log(u.value));
    ws.push_back(1 / (seLog * seLog));
  }
  if (xs.size() < 3)
    throw DegenerateResult("fewer than 3 censoring-free grid points for the beta regression");
  SlopeFit fit = wlsSlope(xs, ys, ws);
  b.slopeForm.value = std::exp(fit.slope);
  b.slopeForm.lo = std::exp(fit.slope - kZ95 * fit.se);
  b.slopeForm.hi = std::exp(fit.slope + kZ95 * fit.se);
  b.slopeForm.n = reps;
  b.slopeForm.seed = rootSeed;
  b.slopeForm.protocol = "exp of weighted log-u slope over the n-grid";
  return b;
}

// max over period types i of E[w_rho(xi at t0)] when starting from a single
// type-i vertex; the reported interval is the argmax type's normal interval.
inline Estimate supermartingaleDiagnostic(const Topology& topology, double lambda, double rho,
                                          double t0, std::uint64_t reps, std::uint64_t rootSeed,
                                          unsigned threads = 0) {
  if (topology.kind() != TopologyKind::Periodic)
    throw ConfigError("supermartingaleDiagnostic requires a periodic topology");
  if (!(rho > 0) || !(rho < 1)) throw ConfigError("rho must lie in (0,1)");
  if (!(t0 > 0)) throw ConfigError("t0 must be > 0");
  if (reps < 2) throw ConfigError("reps must be >= 2");
  Estimate best;
  std::uint32_t bestType = 0;
  for (std::uint32_t type = 0; type < topology.kappa(); ++type) {
    Topology started = topology.withRootType(type);
    auto weights = replicate<double>(reps, threads, [&](std::uint64_t rep) {
      std::uint64_t idx = static_cast<std::uint64_t>(type) * reps + rep;
      LazyTree tree(started, deriveSeed(rootSeed, idx, StreamKind::Structure));
      ContactProcess proc(std::move(tree), lambda, Restriction::none(),
                          deriveSeed(rootSeed, idx, StreamKind::Process));
      StopCondition stop;
      stop.maxTime = t0;
      proc.run(stop);
      return proc.weight(rho);  // 0 after extinction
    });
    Estimate cand = meanEstimate(weights);
    if (type == 0 || cand.value > best.value) {
      best = cand;
      bestType = type;
    }
  }
  best.seed = rootSeed;
  best.protocol = "max type mean weight at t0=" + std::to_string(t0) + " (argmax type " +
                  std::to_string(bestType) + ")";
  return best;
}

// P(at least `reinfections` re-entries of the root by `horizon`) — the
// strong-survival proxy. Runs cut short by the mass cap count as failures
// and are reported as censored.
struct StrongSurvival {
  double threshold = 0;
  std::uint32_t reinfections = 20;
  double horizon = 200;
  std::uint64_t massCap = 100000;
};

// Survival-proxy indicator for the weak critical value.
struct WeakSurvival {
  double threshold = 0;
  double maxTime = 100;
  std::uint64_t massCap = 100000;
};

using SurvivalIndicator = std::variant<WeakSurvival, StrongSurvival>;

inline Estimate strongSurvivalEstimate(const Topology& topology, double lambda,
                                       const StrongSurvival& s, std::uint64_t reps,
                                       std::uint64_t rootSeed, unsigned threads = 0) {
  if (reps == 0) throw ConfigError("reps must be >= 1");
  if (s.reinfections == 0) throw ConfigError("reinfections must be >= 1");
  if (!(s.horizon > 0)) throw ConfigError("horizon must be > 0");
  struct Rep {
    std::uint8_t hit = 0;
    std::uint8_t capped = 0;
  };
  auto results = replicate<Rep>(reps, threads, [&](std::uint64_t rep) {
    LazyTree tree(topology, deriveSeed(rootSeed, rep, StreamKind::Structure));
    ContactProcess proc(std::move(tree), lambda, Restriction::none(),
                        deriveSeed(rootSeed, rep, StreamKind::Process));
    StopCondition stop;
    stop.maxTime = s.horizon;
    if (s.massCap > 0) stop.maxInfected = s.massCap;
    stop.reinfectionTarget = StopCondition::Reinfection{s.reinfections, 0};
    Outcome out = proc.run(stop);
    Rep r;
    r.hit = out.reason == StopReason::ReinfectionReached ? 1 : 0;
    r.capped = out.reason == StopReason::MassCap ? 1 : 0;
    return r;
  });
  std::uint64_t hits = 0, capped = 0;
  for (const Rep& r : results) {
    hits += r.hit;
    capped += r.capped;
  }
  Estimate e = wilson(hits, reps);
  e.censored = capped;
  e.seed = rootSeed;
  e.protocol = ">= " + std::to_string(s.reinfections) + " root re-entries by t=" +
               std::to_string(s.horizon);
  return e;
}

struct TracePoint {
  double lambda = 0;
  Estimate estimate;
  bool pass = false;
};

struct BisectionResult {
  double lo = 0, hi = 0;
  std::uint32_t iterations = 0;
  std::vector<TracePoint> trace;  // in evaluation order: lo, hi, then midpoints
};

// Plain bisection over any monotone pass/fail indicator; the indicator must
// fail at lo and pass at hi.
inline BisectionResult bisectIndicator(const std::function<TracePoint(double)>& evaluate,
                                       double lo, double hi, double tol) {
  if (!(lo < hi)) throw ConfigError("bracket must satisfy lo < hi");
  if (!(tol > 0)) throw ConfigError("tol must be > 0");
  BisectionResult res;
  TracePoint a = evaluate(lo);
  res.trace.push_back(a);
  TracePoint b = evaluate(hi);
  res.trace.push_back(b);
  if (a.pass || !b.pass) throw ConfigError("bracket does not straddle the indicator");
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    TracePoint m = evaluate(mid);
    ++res.iterations;
    res.trace.push_back(m);
    (m.pass ? hi : lo) = mid;
  }
  res.lo = lo;
  res.hi = hi;
  return res;
}

// Critical-value bracket for the chosen survival notion. Pass/fail is decided
// by the interval edge, not the point estimate, and every lambda is evaluated
// with the same root seed so neighboring points share their randomness.
inline BisectionResult bisectCritical(const Topology& topology, const SurvivalIndicator& indicator,
                                      double lo, double hi, double tol, std::uint64_t repsPerPoint,
                                      std::uint64_t rootSeed, unsigned threads = 0) {
  auto evaluate = [&](double lambda) {
    TracePoint p;
    p.lambda = lambda;
    if (const WeakSurvival* w = std::get_if<WeakSurvival>(&indicator)) {
      p.estimate =
          estimateSurvival(topology, lambda, repsPerPoint, w->maxTime, w->massCap, rootSeed, threads);
      p.pass = p.estimate.lo > w->threshold;
    } else {
      const StrongSurvival& s = std::get<StrongSurvival>(indicator);
      p.estimate = strongSurvivalEstimate(topology, lambda, s, repsPerPoint, rootSeed, threads);
      p.pass = p.estimate.lo > s.threshold;
    }
    return p;
  };
  return bisectIndicator(evaluate, lo, hi, tol);
}

struct CorrelationProtocol {
  std::uint32_t level = 1;  // x = the first-child chain vertex at this depth
  double horizon = 0;       // R: some re-entry of x happens at time >= horizon
  std::uint32_t m = 1;      // G: the m-th recurrence time exists ...
  double gap = 0;           // ... with this spacing threshold (> 0) ...
  double m2 = 0;            // ... and is <= m2
  double maxTime = 0;       // observation window for R
};

struct CorrelationResult {
  double difference = 0;  // P(R and G) - P(R) P(G)
  double lo = 0, hi = 0;  // 95% normal interval via the influence-function se
  double se = 0;
  double pJoint = 0, pR = 0, pG = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::string protocol;
};

inline CorrelationResult correlationFromIndicators(const std::vector<std::uint8_t>& r,
                                                   const std::vector<std::uint8_t>& g) {
  if (r.size() != g.size() || r.size() < 2)
    throw ConfigError("need >= 2 paired indicator samples");
  CorrelationResult out;
  out.n = r.size();
  double n = static_cast<double>(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.pR += r[i];
    out.pG += g[i];
    out.pJoint += r[i] && g[i] ? 1 : 0;
  }
  out.pR /= n;
  out.pG /= n;
  out.pJoint /= n;
  out.difference = out.pJoint - out.pR * out.pG;
  double ss = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    double joint = r[i] && g[i] ? 1 : 0;
    double psi = (joint - out.pJoint) - out.pG * (r[i] - out.pR) - out.pR * (g[i] - out.pG);
    ss += psi * psi;
  }
  out.se = std::sqrt(ss / (n - 1)) / std::sqrt(n);
  out.lo = out.difference - kZ95 * out.se;
  out.hi = out.difference + kZ95 * out.se;
  return out;
}

// Correlation between R = {x is reinfected at or after `horizon`} and
// G = {m-th recurrence time of x is <= m2}, both on the branch process of x
// with shared tree and process randomness. The two observations replay one
// trajectory (identical seeds yield identical event sequences), so R and G
// are read off the same replication.
inline CorrelationResult correlationCheck(const Topology& topology, double lambda,
                                          const CorrelationProtocol& protocol, std::uint64_t reps,
                                          std::uint64_t rootSeed, unsigned threads = 0) {
  if (topology.kind() != TopologyKind::GWPlus)
    throw ConfigError("correlationCheck requires a root-added topology");
  if (protocol.m == 0) throw ConfigError("m must be >= 1");
  if (!(protocol.gap > 0)) throw ConfigError("gap must be > 0");
  if (!(protocol.m2 > 0)) throw ConfigError("m2 must be > 0");
  if (!(protocol.horizon >= 0)) throw ConfigError("horizon must be >= 0");
  if (!(protocol.maxTime >= protocol.horizon))
    throw ConfigError("maxTime must be >= horizon");
  if (reps < 2) throw ConfigError("reps must be >= 2");

  struct Rep {
    std::uint8_t r = 0, g = 0;
  };
  auto results = replicate<Rep>(reps, threads, [&](std::uint64_t rep) {
    std::uint64_t sseed = deriveSeed(rootSeed, rep, StreamKind::Structure);
    std::uint64_t pseed = deriveSeed(rootSeed, rep, StreamKind::Process);
    Rep out;

    LazyTree treeG(topology, sseed);
    Handle x = treeG.chainDescendant(protocol.level);
    ContactProcess procG(std::move(treeG), lambda, Restriction::subtreePlusBranch(x), pseed);
    StopCondition stopG;
    stopG.maxTime = protocol.m2;
    stopG.reinfectionTarget = StopCondition::Reinfection{protocol.m, protocol.gap};
    out.g = procG.run(stopG).reason == StopReason::ReinfectionReached ? 1 : 0;

    LazyTree treeR(topology, sseed);
    Handle xr = treeR.chainDescendant(protocol.level);
    ContactProcess procR(std::move(treeR), lambda, Restriction::subtreePlusBranch(xr), pseed);
    StopCondition stopR;
    stopR.maxTime = protocol.maxTime;
    procR.run(stopR);
    for (double t : procR.core().reinfectionTimes())
      if (t >= protocol.horizon) {
        out.r = 1;
        break;
      }
    return out;
  });

  std::vector<std::uint8_t> rs, gs;
  for (const Rep& r : results) {
    rs.push_back(r.r);
    gs.push_back(r.g);
  }
  CorrelationResult out = correlationFromIndicators(rs, gs);
  out.seed = rootSeed;
  out.protocol = "R: re-entry of the depth-" + std::to_string(protocol.level) +
                 " chain vertex at t >= " + std::to_string(protocol.horizon) +
                 "; G: recurrence " + std::to_string(protocol.m) + " by t=" +
                 std::to_string(protocol.m2);
  return out;
}

}  // namespace treecp
