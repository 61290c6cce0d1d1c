#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "treecp/calculators.hpp"
#include "treecp/cmj.hpp"
#include "treecp/estimators.hpp"
#include "treecp/stats.hpp"

using namespace treecp;

TEST_CASE("growth exponent of atomic birth measures") {
  // one atom of weight 2 at time 1: 2 e^{-c} = 1
  ReproductionMeasure doubling{{{1.0, 2.0}}};
  REQUIRE(malthusian(doubling) == Catch::Approx(std::log(2.0)).margin(1e-9));

  // total weight one means zero growth, whatever the times
  ReproductionMeasure balanced{{{0.5, 0.3}, {1.5, 0.7}}};
  REQUIRE(malthusian(balanced) == 0.0);

  // unit weights at times 1 and 2: x + x^2 = 1 for x = e^{-c}
  ReproductionMeasure golden{{{1.0, 1.0}, {2.0, 1.0}}};
  REQUIRE(malthusian(golden) == Catch::Approx(0.48121182505960345).margin(1e-9));

  // subcritical mass pushes the exponent negative
  ReproductionMeasure half{{{1.0, 0.5}}};
  REQUIRE(malthusian(half) == Catch::Approx(-std::log(2.0)).margin(1e-9));

  REQUIRE_THROWS_AS(malthusian(ReproductionMeasure{}), ConfigError);
  REQUIRE_THROWS_AS(malthusian(ReproductionMeasure{{{1.0, 1.0}, {1.0, 1.0}}}), ConfigError);
  REQUIRE_THROWS_AS(malthusian(ReproductionMeasure{{{0.0, 1.0}}}), ConfigError);
  REQUIRE_THROWS_AS(malthusian(ReproductionMeasure{{{1.0, -1.0}}}), ConfigError);
  REQUIRE_THROWS_AS(malthusian(ReproductionMeasure{{{1.0, 0.0}}}), ConfigError);
}

TEST_CASE("implied measure groups birth times below the deadline") {
  CmjSpec spec;
  spec.offspringCount = OffspringLaw::constant(3);
  spec.birthTimes = {1.0, 1.0, 2.0, 4.0};
  spec.birthDeadline = 3.0;
  ReproductionMeasure m = impliedMeasure(spec);
  REQUIRE(m.atoms.size() == 2);
  REQUIRE(m.atoms[0].time == 1.0);
  REQUIRE(m.atoms[0].weight == Catch::Approx(1.5).margin(1e-12));
  REQUIRE(m.atoms[1].time == 2.0);
  REQUIRE(m.atoms[1].weight == Catch::Approx(0.75).margin(1e-12));

  CmjSpec late = spec;
  late.birthDeadline = 0.5;
  REQUIRE_THROWS_AS(impliedMeasure(late), ConfigError);
  CmjSpec empty = spec;
  empty.birthTimes.clear();
  REQUIRE_THROWS_AS(impliedMeasure(empty), ConfigError);
  CmjSpec bad = spec;
  bad.birthTimes = {0.0, 1.0};
  REQUIRE_THROWS_AS(impliedMeasure(bad), ConfigError);
  bad = spec;
  bad.birthDeadline = 0.0;
  REQUIRE_THROWS_AS(impliedMeasure(bad), ConfigError);
}

TEST_CASE("deterministic doubling trajectory") {
  CmjSpec spec;
  spec.offspringCount = OffspringLaw::constant(2);
  spec.birthTimes = {1.0};
  spec.birthDeadline = 2.0;
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(0.5 * i);
  CmjTrajectory traj = simulateCmj(spec, 5.0, grid, 12345);
  REQUIRE(traj.times == grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    REQUIRE(traj.counts[i] == (std::uint64_t{1} << static_cast<unsigned>(grid[i])));

  REQUIRE_THROWS_AS(simulateCmj(spec, 5.0, {6.0}, 1), ConfigError);
  REQUIRE_THROWS_AS(simulateCmj(spec, 0.0, {}, 1), ConfigError);

  // normalized counts W(t) = Z_t e^{-ct} stay pinned between 1/sqrt(2) and 1
  double c = malthusian(impliedMeasure(spec));
  REQUIRE(c == Catch::Approx(std::log(2.0)).margin(1e-9));
  std::vector<CmjTrajectory> runs{traj, traj, traj};
  LimitDiagnostic d = limitDiagnostic(runs, c);
  REQUIRE(d.trajectories == 3);
  REQUIRE(d.surviving == 3);
  REQUIRE(d.wMin == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-12));
  REQUIRE(d.wMax == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(d.wFinalMean == Catch::Approx(1.0).margin(1e-12));
  // the sawtooth has the same spread in both halves of the window
  REQUIRE(d.earlyVariance == Catch::Approx(d.lateVariance).margin(1e-12));

  CmjTrajectory other = simulateCmj(spec, 5.0, {1.0, 2.0}, 1);
  REQUIRE_THROWS_AS(limitDiagnostic({traj, other}, c), ConfigError);
  REQUIRE(limitDiagnostic({}, c).trajectories == 0);
}

TEST_CASE("extinction frequency matches the thinned offspring fixed point") {
  // tau is 0.5 or 3.0 with equal chance and only 0.5 beats the deadline, so a
  // particle has 3 children with probability 1/2: extinction solves
  // q = 1/2 + q^3/2, the golden-ratio root
  CmjSpec spec;
  spec.offspringCount = OffspringLaw::constant(3);
  spec.birthTimes = {0.5, 3.0};
  spec.birthDeadline = 2.0;
  const double q = (std::sqrt(5.0) - 1.0) / 2.0;
  const std::uint64_t reps = 4000;
  std::uint64_t extinct = 0;
  for (std::uint64_t rep = 0; rep < reps; ++rep) {
    CmjTrajectory traj = simulateCmj(spec, 8.0, {8.0}, 100000 + rep);
    if (traj.counts[0] == 0) ++extinct;
  }
  double freq = static_cast<double>(extinct) / reps;
  double se = proportionSE(q, reps);
  REQUIRE(std::fabs(freq - q) <= 3 * se + 0.005);

  // and the implied growth exponent only sees the sub-deadline atom
  REQUIRE(malthusian(impliedMeasure(spec)) == Catch::Approx(2 * std::log(1.5)).margin(1e-9));
}

TEST_CASE("comparison extraction validation and silent process") {
  Topology topo = Topology::gw(OffspringLaw::constant(3));
  REQUIRE_THROWS_AS(extractComparison(topo, 1.0, 0, 5.0, 10, 1), ConfigError);
  REQUIRE_THROWS_AS(extractComparison(topo, 1.0, 1, 0.0, 10, 1), ConfigError);
  REQUIRE_THROWS_AS(extractComparison(topo, -1.0, 1, 5.0, 10, 1), ConfigError);
  REQUIRE_THROWS_AS(extractComparison(topo, 1.0, 1, 5.0, 0, 1), ConfigError);

  // the root alone is already a one-vertex frontier, and nothing spreads
  ComparisonExtract ex = extractComparison(topo, 0.0, 1, 5.0, 50, 21);
  REQUIRE(ex.censored == 0);
  REQUIRE(ex.tauSamples.size() == 50);
  for (double tau : ex.tauSamples) REQUIRE(tau == 0.0);
  REQUIRE(ex.perChild.value == 0.0);
  for (std::uint32_t x : ex.offspringSamples) REQUIRE(x == 0);

  // a two-vertex frontier needs an infection first, so a tiny deadline
  // censors most replications
  ComparisonExtract tight = extractComparison(topo, 0.5, 2, 0.05, 400, 21);
  REQUIRE(tight.censored > 0);
  REQUIRE(tight.censored < 400);
  REQUIRE(tight.offspringSamples.size() == 400);
  REQUIRE(tight.successFlags.size() == 400 - tight.censored);
}

TEST_CASE("per-child success dominates the explicit race path") {
  // one way the designated child is infected at tau + 1: its parent never
  // recovers in the unit (e^{-1}) and the child's two-state chain driven at
  // rate lambda from below ends up: lambda/(1+lambda) (1 - e^{-(1+lambda)});
  // extra infection arrows from deeper vertices only help
  Topology topo = Topology::gw(OffspringLaw::constant(3));
  for (double lambda : {0.5, 1.0}) {
    ComparisonExtract ex = extractComparison(topo, lambda, 2, 8.0, 1500, 4040);
    double bound = std::exp(-1.0) * lambda / (1 + lambda) * (1 - std::exp(-(1 + lambda)));
    double se = proportionSE(ex.perChild.value, ex.childTrials);
    INFO("lambda=" << lambda << " perChild=" << ex.perChild.value << " bound=" << bound);
    REQUIRE(ex.perChild.value >= bound - 3 * se);

    // bookkeeping identity: mean offspring over uncensored runs is k times
    // the per-child rate
    std::uint64_t uncensored = ex.reps - ex.censored;
    double sum = 0;
    for (std::uint32_t x : ex.offspringSamples) sum += x;
    REQUIRE(sum / static_cast<double>(uncensored) ==
            Catch::Approx(2 * ex.perChild.value).margin(1e-12));
    for (const std::vector<std::uint8_t>& flags : ex.successFlags) REQUIRE(flags.size() == 2);
    for (double tau : ex.tauSamples) {
      REQUIRE(tau >= 0.0);
      REQUIRE(tau < 8.0);
    }
  }
}

TEST_CASE("designated children succeed without visible correlation") {
  // the two designated children sit in disjoint subtrees, so given the
  // frontier configuration their one-unit fates are driven by disjoint clocks
  Topology topo = Topology::gw(OffspringLaw::constant(3));
  ComparisonExtract ex = extractComparison(topo, 1.0, 2, 8.0, 1500, 777);
  std::vector<std::uint8_t> first, second;
  for (const std::vector<std::uint8_t>& flags : ex.successFlags) {
    first.push_back(flags[0]);
    second.push_back(flags[1]);
  }
  REQUIRE(first.size() >= 1000);
  CorrelationResult corr = correlationFromIndicators(first, second);
  REQUIRE(corr.lo <= 0.0);
  REQUIRE(0.0 <= corr.hi);
}
