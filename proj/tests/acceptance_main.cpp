// End-to-end acceptance gate. Each numbered block checks one release
// criterion and prints a single [PASS]/[FAIL] line; the exit status is the
// number of failed criteria. Tolerances and seeds are pinned here so reruns
// are bit-for-bit comparable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <tuple>
#include <vector>

#include "treecp/treecp.hpp"

using namespace treecp;

namespace {

int failures = 0;
std::chrono::steady_clock::time_point sectionStart;

void begin() { sectionStart = std::chrono::steady_clock::now(); }

void report(int id, const std::string& label, bool ok, const std::string& detail) {
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - sectionStart).count();
  std::printf("[%s] %d: %s — %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, label.c_str(),
              detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

void guarded(int id, const std::string& label, const std::function<void()>& body) {
  begin();
  try {
    body();
  } catch (const std::exception& e) {
    report(id, label, false, std::string("exception: ") + e.what());
  }
}

double seOf(const Estimate& e) { return (e.hi - e.lo) / (2 * kZ95); }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

// --- independent oracles ----------------------------------------------------

// Level-weighted sphere sum on the (d+1)-regular tree by direct expansion of
// non-backtracking walks, tracked as (level, arrived-from-parent?) counts.
double sphereSumBrute(double rho, std::uint32_t d, std::uint32_t n) {
  if (n == 0) return 1.0;
  std::map<std::pair<std::int64_t, bool>, double> cur;
  cur[{1, true}] = d;
  cur[{-1, false}] = 1;
  for (std::uint32_t step = 2; step <= n; ++step) {
    std::map<std::pair<std::int64_t, bool>, double> nxt;
    for (auto [key, cnt] : cur) {
      auto [lvl, fromParent] = key;
      if (fromParent) {
        nxt[{lvl + 1, true}] += cnt * d;
      } else {
        nxt[{lvl - 1, false}] += cnt;
        nxt[{lvl + 1, true}] += cnt * (d - 1);
      }
    }
    cur = std::move(nxt);
  }
  double sum = 0;
  for (auto [key, cnt] : cur) sum += cnt * std::pow(rho, static_cast<double>(key.first));
  return sum;
}

// Largest root of c1*(1-(1-c2*r)^L) = r on (0,1] by bisection; valid when the
// slope at 0 exceeds 1 so the residual is positive just above 0.
double fixedPointBisect(double c1, double c2, double L) {
  auto g = [&](double r) { return c1 * (1 - std::pow(1 - c2 * r, L)) - r; };
  double lo = 1e-9, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// --- CLI plumbing for the determinism check ---------------------------------

int runTool(const std::string& args) {
  std::string cmd = std::string("\"") + TREECP_BIN_PATH + "\" " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

int main() {
  // 1. Small-graph occupancy distributions against matrix-exponential
  //    transients: every state mask, both reference graphs.
  guarded(1, "finite-graph occupancy matches matrix exponentials", [] {
    const std::uint64_t reps = 200000;
    const std::vector<double> times{0.5, 1.0, 2.0};
    double worst = 0;
    for (const char* name : {"twovertex", "star6"}) {
      FiniteTreePreset preset = presetByName(name);
      for (double lambda : {0.5, 1.0, 2.0}) {
        OccupancyCounts occ = simulateOccupancy(preset, lambda, times, reps, 33, 1);
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
          Eigen::VectorXd exact = exactOccupancy(preset, lambda, times[ti]);
          for (std::uint32_t mask = 0; mask < (1u << preset.vertexCount); ++mask) {
            double p = exact[mask];
            double phat = static_cast<double>(occ.counts[ti][mask]) / reps;
            double tol = 3 * std::sqrt(std::max(p * (1 - p), 0.0) / reps) + 3.0 / reps;
            worst = std::max(worst, std::fabs(phat - p) - tol);
          }
        }
      }
    }
    report(1, "finite-graph occupancy matches matrix exponentials", worst <= 0,
           "reps=2e5, lambda in {0.5,1,2}, t in {0.5,1,2}, worst excess " + num(worst));
  });

  // 2. Shared-randomness coupling: the lower-rate infected set stays inside
  //    the higher-rate one at every single event.
  guarded(2, "coupled pair containment at every event", [] {
    Topology c3 = Topology::gw(OffspringLaw::constant(3));
    std::uint64_t violations = 0, eventsTotal = 0;
    int pairIdx = 0;
    for (auto [hiRate, loRate] : {std::pair{1.0, 0.8}, std::pair{2.0, 1.5}}) {
      for (std::uint64_t s = 0; s < 100; ++s) {
        LazyTree tree(c3, deriveSeed(2200 + pairIdx, s, StreamKind::Structure));
        CoupledProcess cp(std::move(tree), hiRate, loRate, Restriction::none(),
                          deriveSeed(2200 + pairIdx, s, StreamKind::Process));
        std::uint64_t events = 0;
        while (cp.high().infectedCount() > 0 && events < 10000) {
          Event ev = cp.stepOnce(1e300);
          ++events;
          Handle v = ev.kind == EventKind::Recovery ? ev.source : ev.target;
          if (cp.low().infected(v) && !cp.high().infected(v)) ++violations;
          if (cp.low().infectedCount() > cp.high().infectedCount()) ++violations;
          if (events % 1000 == 0 && !cp.containmentHolds()) ++violations;
        }
        if (!cp.containmentHolds()) ++violations;
        eventsTotal += events;
      }
      ++pairIdx;
    }
    report(2, "coupled pair containment at every event", violations == 0,
           "100 seeds x 1e4 events x 2 rate pairs, " + num((double)eventsTotal) + " events, " +
               num((double)violations) + " violations");
  });

  // 3. Closed-form level-weighted sphere sums against brute-force walk
  //    expansion, including the d*rho^2 = 1 branch.
  guarded(3, "sphere-sum closed form equals brute force", [] {
    double worst = 0;
    for (std::uint32_t d : {2u, 3u, 4u})
      for (double rho : {0.3, 1.0 / std::sqrt((double)d), 0.7})
        for (std::uint32_t n = 0; n <= 6; ++n)
          worst = std::max(worst, std::fabs(alphaN(rho, d, n) - sphereSumBrute(rho, d, n)));
    report(3, "sphere-sum closed form equals brute force", worst <= 1e-12,
           "d in {2,3,4}, n <= 6, both branches, worst |diff| " + num(worst));
  });

  // 4. Growth-exponent solver on two reference reproduction measures.
  guarded(4, "growth-exponent solver reference values", [] {
    double ln2 = malthusian(ReproductionMeasure{{{1.0, 2.0}}});
    double golden = malthusian(ReproductionMeasure{{{1.0, 1.0}, {2.0, 1.0}}});
    double e1 = std::fabs(ln2 - std::log(2.0));
    double e2 = std::fabs(golden - 0.48121182505960345);
    report(4, "growth-exponent solver reference values", e1 <= 1e-10 && e2 <= 1e-8,
           "|ln2 err| " + num(e1) + ", |golden err| " + num(e2));
  });

  // 5. Chain-hit supermultiplicativity. The horizon of the deep point is the
  //    sum of the shallow points' horizons, mirroring the restart argument
  //    that proves the inequality for time-truncated hit probabilities; the
  //    mass cap is a safety valve far above the mass these horizons reach.
  guarded(5, "chain-hit probabilities supermultiplicative", [] {
    Topology p234 = Topology::periodic({2, 3, 4});
    Estimate u3 = estimateU(p234, 0.8, 3, 10000, 2.5, 1000000, 501);
    Estimate u6 = estimateU(p234, 0.8, 6, 10000, 5.0, 1000000, 502);
    Estimate u9 = estimateU(p234, 0.8, 9, 10000, 7.5, 1000000, 503);
    double prodSe = std::sqrt(u6.value * u6.value * seOf(u3) * seOf(u3) +
                              u3.value * u3.value * seOf(u6) * seOf(u6));
    double pooled = std::sqrt(seOf(u9) * seOf(u9) + prodSe * prodSe);
    double margin = u9.value - u3.value * u6.value;
    report(5, "chain-hit probabilities supermultiplicative", margin >= -3 * pooled,
           "u(3)=" + num(u3.value) + " u(6)=" + num(u6.value) + " u(9)=" + num(u9.value) +
               ", margin " + num(margin) + " vs -3*pooledSE " + num(-3 * pooled));
  });

  // 6. Designated-child infection rate against the per-child race bound.
  guarded(6, "designated-child rate above race bound", [] {
    Topology c3 = Topology::gw(OffspringLaw::constant(3));
    bool ok = true;
    std::string detail;
    int i = 0;
    for (double lambda : {0.5, 1.0, 2.0}) {
      ComparisonExtract ex = extractComparison(c3, lambda, 2, 8.0, 10000, 66 + i++, 1);
      double bound = std::exp(-2.0) * (1 - std::exp(-lambda));
      double se = std::sqrt(ex.perChild.value * (1 - ex.perChild.value) /
                            static_cast<double>(ex.childTrials));
      ok = ok && ex.perChild.value >= bound - 3 * se;
      if (!detail.empty()) detail += ", ";
      detail += "lambda=" + num(lambda) + ": " + num(ex.perChild.value) + " vs " + num(bound);
    }
    report(6, "designated-child rate above race bound", ok, detail);
  });

  // 7. Epoch-regression growth rate cross-checked against a doubling-time
  //    estimator replayed on the same seeds (first-passage times of the
  //    infected count through successive powers of two).
  guarded(7, "growth rate agrees with doubling times", [] {
    Topology c2 = Topology::gw(OffspringLaw::constant(2));
    const std::uint64_t reps = 750, seed = 701;
    const std::uint32_t epochs = 7;
    const double epochLength = 1.0, horizon = epochs * epochLength;
    Estimate reg = estimateGrowthRate(c2, 2.0, reps, epochs, epochLength, seed);
    std::vector<double> rates;
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
      LazyTree tree(c2, deriveSeed(seed, rep, StreamKind::Structure));
      ContactProcess proc(std::move(tree), 2.0, Restriction::none(),
                          deriveSeed(seed, rep, StreamKind::Process));
      std::vector<double> ts, ys;
      std::uint64_t nextMass = 8;
      std::uint32_t k = 3;
      bool alive = true;
      while (proc.time() < horizon) {
        if (proc.core().infectedCount() == 0) {
          alive = false;
          break;
        }
        proc.stepOnce(horizon);
        while (proc.core().infectedCount() >= nextMass) {
          ts.push_back(proc.time());
          ys.push_back(std::log(2.0) * k);
          ++k;
          nextMass *= 2;
        }
      }
      if (!alive || proc.core().infectedCount() == 0 || ts.size() < 4) continue;
      double xm = 0, ym = 0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        xm += ts[i];
        ym += ys[i];
      }
      xm /= ts.size();
      ym /= ts.size();
      double sxy = 0, syy = 0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        sxy += (ts[i] - xm) * (ys[i] - ym);
        syy += (ys[i] - ym) * (ys[i] - ym);
      }
      rates.push_back(syy / sxy);  // reciprocal of the time-per-log-mass slope
    }
    Estimate dbl = meanEstimate(rates);
    bool enough = reg.n >= 500;
    bool positive = reg.lo > 0;
    bool overlap = reg.lo <= dbl.hi && dbl.lo <= reg.hi;
    report(7, "growth rate agrees with doubling times", enough && positive && overlap,
           "regression " + num(reg.value) + " [" + num(reg.lo) + "," + num(reg.hi) + "] n=" +
               num((double)reg.n) + ", doubling " + num(dbl.value) + " [" + num(dbl.lo) + "," +
               num(dbl.hi) + "]");
  });

  // 8. The weak-survival indicator must stay off strictly below the
  //    branching-domination bound 1/maxDegree.
  guarded(8, "weak indicator off in the subcritical band", [] {
    Topology c4 = Topology::gw(OffspringLaw::constant(4));
    bool ok = true;
    std::string detail;
    int i = 0;
    for (double lambda : {0.05, 0.10, 0.15}) {
      Estimate est = estimateSurvival(c4, lambda, 10000, 15.0, 2000, 801 + i++);
      bool pass = est.lo > 0.05;  // the bisection pass rule
      ok = ok && !pass;
      if (!detail.empty()) detail += ", ";
      detail += "lambda=" + num(lambda) + ": survival " + num(est.value);
    }
    report(8, "weak indicator off in the subcritical band", ok, detail);
  });

  // 9. Critical-value ordering plus the weighted-occupancy contraction just
  //    above the weak bracket. The strong proxy (20 root re-entries under a
  //    1e5 mass cap) has no lambda at which it fires — growth reaches the cap
  //    long before 20 re-entry cycles complete — so its bisection cannot
  //    straddle and this criterion reports the failure rather than hiding it.
  guarded(9, "critical ordering and weight contraction", [] {
    Topology p234 = Topology::periodic({2, 3, 4});
    WeakSurvival weakCfg{0.05, 100.0, 100000};
    BisectionResult weak = bisectCritical(p234, weakCfg, 0.2, 0.6, 0.05, 2000, 900);
    std::string detail = "weak bracket [" + num(weak.lo) + "," + num(weak.hi) + "]";
    bool orderingOk = false;
    try {
      StrongSurvival strongCfg{0.05, 20, 100.0, 100000};
      BisectionResult strong = bisectCritical(p234, strongCfg, 0.2, 0.6, 0.05, 2000, 900);
      orderingOk = strong.lo >= weak.lo;
      detail += ", strong bracket [" + num(strong.lo) + "," + num(strong.hi) + "]";
    } catch (const ConfigError& e) {
      detail += std::string(", strong bisection: ") + e.what();
    }
    // The weight at t0 = 20 is heavy-tailed (rare survivors carry most of the
    // mass), so the diagnostic needs 1e5 replicates before 3 SE drops below
    // the true contraction margin.
    double lambdaProbe = weak.hi + 0.05;
    Estimate delta =
        supermartingaleDiagnostic(p234, lambdaProbe, rhoCritical(3, 24), 20.0, 100000, 905);
    bool contraction = delta.value + 3 * seOf(delta) < 1.0;
    detail += ", delta+3SE at lambda=" + num(lambdaProbe) + " is " +
              num(delta.value + 3 * seOf(delta));
    report(9, "critical ordering and weight contraction", orderingOk && contraction, detail);
  });

  // 10. Fixed-point solver: reference roots, and a random sweep where the
  //     none-return must coincide with the subcritical slope condition and
  //     returned roots must match independent bisection.
  guarded(10, "fixed-point solver matches bisection oracle", [] {
    bool ok = !recursionFixedPoint(0.5, 0.5, 4.0).has_value();
    auto one = recursionFixedPoint(1.0, 1.0, 2.0);
    ok = ok && one && std::fabs(*one - 1.0) <= 1e-12;
    auto eightNinths = recursionFixedPoint(0.9, 1.0, 2.0);
    ok = ok && eightNinths && std::fabs(*eightNinths - 8.0 / 9.0) <= 1e-12;
    RngStream rng(1014);
    int supercritical = 0;
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
      double c1, c2, L;
      do {
        c1 = 0.05 + 0.9 * rng.uniform();
        c2 = 0.05 + 0.9 * rng.uniform();
        L = 1.2 + 8.8 * rng.uniform();
      } while (std::fabs(c1 * c2 * L - 1.0) < 0.05);  // keep off the knife edge
      auto r = recursionFixedPoint(c1, c2, L);
      if (c1 * c2 * L <= 1) {
        ok = ok && !r.has_value();
      } else {
        ++supercritical;
        ok = ok && r.has_value();
        if (r) worst = std::max(worst, std::fabs(*r - fixedPointBisect(c1, c2, L)));
      }
    }
    ok = ok && worst <= 1e-9;
    report(10, "fixed-point solver matches bisection oracle", ok,
           num((double)supercritical) + "/100 supercritical, worst |root diff| " + num(worst));
  });

  // 11. Byte-identical CLI output across reruns and thread counts, every
  //     subcommand.
  guarded(11, "CLI output deterministic across reruns and threads", [] {
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"survive",
         "survive --topology gwplus:const:3 --lambda 1.1 --reps 120 --max-time 6 "
         "--mass-cap 2000 --seed 41"},
        {"growth",
         "growth --topology const:2 --lambda 1.5 --reps 150 --epochs 3 --epoch-length 0.5 "
         "--seed 42"},
        {"u",
         "u --topology periodic:2,3,4 --lambda 0.5 --n 2 --reps 200 --max-time 6 "
         "--mass-cap 5000 --seed 43"},
        {"beta",
         "beta --topology periodic:2 --lambda 0.2 --ngrid 1,2,3 --reps 200 --max-time 20 "
         "--mass-cap 0 --seed 44"},
        {"weight", "weight --topology periodic:3 --lambda 0.4 --rho 0.6 --t0 2 --reps 200 "
                   "--seed 45"},
        {"lambda1",
         "lambda1 --topology const:3 --bracket 0.1,1.0 --tol 0.2 --threshold 0.05 --reps 80 "
         "--max-time 8 --mass-cap 5000 --seed 46"},
        {"lambda2",
         "lambda2 --topology periodic:2,3,4 --bracket 0.3,0.9 --tol 0.2 --threshold 0.05 "
         "--reps 60 --reinfections 2 --horizon 25 --mass-cap 50000 --seed 47"},
        {"gap",
         "gap --topology periodic:2,3,4 --bracket 0.3,0.9 --tol 0.2 --threshold 0.05 --reps 60 "
         "--reinfections 2 --horizon 25 --max-time 30 --mass-cap 50000 --seed 19"},
        {"couple",
         "couple --topology const:3 --lambda 1.0 --lambda-low 0.6 --reps 60 --max-time 4 "
         "--mass-cap 3000 --seed 48"},
        {"cmj", "cmj --topology const:3 --lambda 1.0 --k 2 --m1 4 --reps 150 --seed 49"},
        {"oracle", "oracle --tree twovertex --lambda 1.0 --times 0.5,1 --reps 4000 --seed 12"},
    };
    bool ok = true;
    std::string detail;
    for (const auto& [name, args] : commands) {
      std::vector<std::string> outputs;
      bool cmdOk = true;
      for (unsigned threads : {1u, 4u}) {
        for (int rerun = 0; rerun < 2; ++rerun) {
          std::string path = "/tmp/acceptance_det_" + name + "_" + std::to_string(threads) +
                             "_" + std::to_string(rerun) + ".csv";
          int code = runTool(args + " --threads " + std::to_string(threads) + " --output " + path);
          cmdOk = cmdOk && code == 0;
          outputs.push_back(slurp(path));
          std::remove(path.c_str());
        }
      }
      for (const std::string& out : outputs)
        cmdOk = cmdOk && !out.empty() && out == outputs.front();
      if (!cmdOk) {
        ok = false;
        detail += (detail.empty() ? "" : ", ") + name;
      }
    }
    report(11, "CLI output deterministic across reruns and threads", ok,
           ok ? "11 subcommands x 2 runs x threads {1,4} byte-identical"
              : "mismatch in: " + detail);
  });

  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures;
}
