#pragma once

// Monotone coupling of two infection rates on one shared tree realization.
// The driver samples events at the high rate; recoveries apply to both
// processes, and every infection arrow carries an independent uniform mark
// that the low process accepts iff mark <= lambdaLow/lambdaHigh. This is the
// classical thinning construction: the low marginal is exactly a contact
// process at lambdaLow, and xi_low ⊆ xi_high pathwise, so the two states
// differ iff their sizes differ (an O(1) discrepancy test).
//
// The randomness consumed per event never depends on the low state, so runs
// that share (structure seed, process seed, lambdaHigh) see the identical
// driving trajectory: sweeping lambdaLow over a grid under fixed seeds gives
// exactly nested low processes, which is what the grid-monotonicity checks
// and the common-random-numbers estimators rely on.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "treecp/common.hpp"
#include "treecp/lazy_tree.hpp"
#include "treecp/process.hpp"
#include "treecp/restriction.hpp"
#include "treecp/rng.hpp"

namespace treecp {

struct CoupledOutcome {
  Outcome high;
  Outcome low;
  std::optional<double> firstDiscrepancy;  // empty: never differed before the run ended
  std::vector<double> highRecurrence;      // filled when the stop tracks reinfections
  std::vector<double> lowRecurrence;
};

class CoupledProcess {
 public:
  CoupledProcess(LazyTree tree, double lambdaHigh, double lambdaLow,
                 const Restriction& restriction, std::uint64_t processSeed)
      : tree_(std::move(tree)),
        table_(tree_, restriction),
        high_(table_),
        low_(table_),
        rng_(processSeed),
        lambdaHigh_(lambdaHigh),
        lambdaLow_(lambdaLow) {
    if (!(lambdaLow >= 0) || !(lambdaHigh >= lambdaLow))
      throw ConfigError("coupling needs 0 <= lambdaLow <= lambdaHigh");
    ratio_ = lambdaHigh_ > 0 ? lambdaLow_ / lambdaHigh_ : 1.0;
    high_.infect(high_.anchor(), 0);
    low_.infect(low_.anchor(), 0);
  }

  CoupledProcess(const CoupledProcess&) = delete;
  CoupledProcess& operator=(const CoupledProcess&) = delete;

  const ProcessCore& high() const { return high_; }
  const ProcessCore& low() const { return low_; }
  const LazyTree& tree() const { return tree_; }
  double time() const { return time_; }
  std::uint64_t eventCount() const { return eventCount_; }
  std::optional<double> firstDiscrepancy() const { return firstDiscrepancy_; }
  std::optional<double> lowExtinctionTime() const { return lowExtinctAt_; }

  double totalRate() const {
    return static_cast<double>(high_.infectedCount()) +
           lambdaHigh_ * static_cast<double>(high_.degreeSum());
  }

  // Exhaustive containment audit; the per-event invariant check is the size
  // comparison, this is the slow ground truth for tests.
  bool containmentHolds() const {
    for (Handle v : low_.infectedVertices())
      if (!high_.infected(v)) return false;
    return true;
  }

  Event stepOnce(double limit) {
    if (high_.infectedCount() == 0) throw Error("stepOnce: driving process is extinct");
    if (!(limit >= time_)) throw Error("stepOnce: limit precedes current time");
    if (!hasPending_) {
      pending_ = time_ + rng_.exponential(totalRate());
      hasPending_ = true;
    }
    if (!(pending_ <= limit)) {
      time_ = limit;
      return {EventKind::Cutoff, time_};
    }
    time_ = pending_;
    hasPending_ = false;
    ++eventCount_;
    double split = rng_.uniform() * totalRate();
    double size = static_cast<double>(high_.infectedCount());
    if (split < size) {
      Handle v = high_.infectedVertices()[rng_.below(high_.infectedCount())];
      high_.recover(v, time_);
      if (low_.infected(v)) {
        low_.recover(v, time_);
        if (low_.infectedCount() == 0 && !lowExtinctAt_) lowExtinctAt_ = time_;
      }
      noteDiscrepancy();
      return {EventKind::Recovery, time_, v};
    }
    Handle src = high_.sourceByDegree((split - size) / lambdaHigh_);
    Handle dst = table_.neighbor(src, static_cast<std::uint32_t>(rng_.below(high_.degree(src))));
    double mark = rng_.uniform();
    EventKind kind = EventKind::Noop;
    if (!high_.infected(dst)) {
      high_.infect(dst, time_);
      kind = EventKind::Infection;
    }
    if (mark <= ratio_ && low_.infected(src) && !low_.infected(dst)) low_.infect(dst, time_);
    noteDiscrepancy();
    return {kind, time_, src, dst};
  }

  // Stop conditions are evaluated on the high (driving) process, matching the
  // "run both until min(tau_k, M1)" usage. A reinfection stop is tracked per
  // process instead, and the run continues until both chains resolve or a cap
  // hits, so each side gets an uncensored sigma_m when one exists in horizon.
  CoupledOutcome run(const StopCondition& stop, const SampleSpec& sample = {}) {
    stop.validate();
    const double inf = std::numeric_limits<double>::infinity();
    const bool chainMode = stop.reinfectionTarget && stop.reinfectionTarget->gap > 0;
    const bool countMode = stop.reinfectionTarget && stop.reinfectionTarget->gap == 0;
    const std::uint64_t m = stop.reinfectionTarget ? stop.reinfectionTarget->count : 0;
    const double gap = stop.reinfectionTarget ? stop.reinfectionTarget->gap : 0;
    std::vector<double> sigmasHigh, sigmasLow;
    std::vector<double> epochSizes;
    double nextEpoch = sample.epochLength ? time_ + *sample.epochLength : inf;

    auto chainCandidate = [&](const ProcessCore& core, const std::vector<double>& sigmas) {
      if (!chainMode || sigmas.size() >= m || !core.anchorInfected()) return inf;
      double threshold = sigmas.empty() ? gap : sigmas.back() + gap;
      return std::max(core.anchorSpanStart(), threshold);
    };
    auto chainCatchUp = [&](const ProcessCore& core, std::vector<double>& sigmas) {
      while (chainMode && sigmas.size() < m && core.anchorInfected()) {
        double threshold = sigmas.empty() ? gap : sigmas.back() + gap;
        double candidate = std::max(core.anchorSpanStart(), threshold);
        if (candidate > time_) break;
        sigmas.push_back(candidate);
      }
    };
    auto chainDone = [&](const ProcessCore& core, const std::vector<double>& sigmas) {
      if (chainMode) return sigmas.size() >= m;
      if (countMode) return core.reinfectionTimes().size() >= m;
      return false;
    };

    StopReason endReason = StopReason::TimeCap;
    double endAt = time_;
    chainCatchUp(high_, sigmasHigh);
    chainCatchUp(low_, sigmasLow);

    while (true) {
      if (high_.infectedCount() == 0) {
        endReason = StopReason::Extinct;
        endAt = time_;
        break;
      }
      if (stop.reinfectionTarget && chainDone(high_, sigmasHigh) && chainDone(low_, sigmasLow)) {
        endReason = StopReason::ReinfectionReached;
        endAt = time_;
        break;
      }
      if (stop.targetVertex && high_.everInfected(*stop.targetVertex)) {
        endReason = StopReason::TargetHit;
        endAt = time_;
        break;
      }
      if (stop.frontierTarget && high_.frontierCount() >= *stop.frontierTarget) {
        endReason = StopReason::FrontierReached;
        endAt = time_;
        break;
      }
      if (stop.maxInfected && high_.infectedCount() >= *stop.maxInfected) {
        endReason = StopReason::MassCap;
        endAt = time_;
        break;
      }
      if (stop.maxTime && time_ >= *stop.maxTime) {
        endReason = StopReason::TimeCap;
        endAt = time_;
        break;
      }
      double limit = stop.maxTime ? *stop.maxTime : inf;
      limit = std::min(limit, nextEpoch);
      limit = std::min(limit, chainCandidate(high_, sigmasHigh));
      limit = std::min(limit, chainCandidate(low_, sigmasLow));
      Event ev = stepOnce(limit);
      if (ev.kind == EventKind::Cutoff) {
        chainCatchUp(high_, sigmasHigh);
        chainCatchUp(low_, sigmasLow);
        if (time_ >= nextEpoch) {
          epochSizes.push_back(static_cast<double>(high_.infectedCount()));
          nextEpoch += *sample.epochLength;
        }
        continue;
      }
      chainCatchUp(high_, sigmasHigh);
      chainCatchUp(low_, sigmasLow);
    }

    auto outcomeFor = [&](const ProcessCore& core, const std::vector<double>& sigmas,
                          std::optional<double> extinctAt) {
      Outcome out;
      out.eventCount = eventCount_;
      out.snapshot = core.snapshot(sample.rhos);
      if (stop.reinfectionTarget && chainDone(core, sigmas)) {
        out.reason = StopReason::ReinfectionReached;
        out.at = chainMode ? sigmas.back() : core.reinfectionTimes()[m - 1];
      } else if (core.infectedCount() == 0) {
        out.reason = StopReason::Extinct;
        out.at = extinctAt ? *extinctAt : endAt;
      } else {
        out.reason = endReason;
        out.at = endAt;
      }
      return out;
    };

    CoupledOutcome result;
    result.high = outcomeFor(high_, sigmasHigh, std::nullopt);
    result.high.snapshot.epochSizes = std::move(epochSizes);
    result.low = outcomeFor(low_, sigmasLow, lowExtinctAt_);
    result.firstDiscrepancy = firstDiscrepancy_;
    result.highRecurrence = std::move(sigmasHigh);
    result.lowRecurrence = std::move(sigmasLow);
    return result;
  }

 private:
  void noteDiscrepancy() {
    if (!firstDiscrepancy_ && high_.infectedCount() != low_.infectedCount())
      firstDiscrepancy_ = time_;
  }

  LazyTree tree_;
  NeighborTable table_;
  ProcessCore high_;
  ProcessCore low_;
  RngStream rng_;
  double lambdaHigh_;
  double lambdaLow_;
  double ratio_;
  double time_ = 0;
  std::uint64_t eventCount_ = 0;
  bool hasPending_ = false;
  double pending_ = 0;
  std::optional<double> firstDiscrepancy_;
  std::optional<double> lowExtinctAt_;
};

inline CoupledOutcome coupledRun(LazyTree tree, double lambdaHigh, double lambdaLow,
                                 const Restriction& restriction, const StopCondition& stop,
                                 std::uint64_t processSeed, const SampleSpec& sample = {}) {
  CoupledProcess pair(std::move(tree), lambdaHigh, lambdaLow, restriction, processSeed);
  return pair.run(stop, sample);
}

}  // namespace treecp
