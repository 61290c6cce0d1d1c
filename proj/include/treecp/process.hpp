#pragma once

// Event-driven contact process on a lazily realized tree. Recovery rate is 1;
// infection crosses each in-restriction edge at rate lambda. Each step runs
// one aggregate exponential race at total rate |xi| + lambda * sum of
// in-restriction degrees, then splits the draw into recovery (uniform victim)
// or infection (source proportional to degree, target uniform among its
// neighbors, no-op if the target is already infected). This is equivalent in
// law to independent per-edge Poisson arrows but never touches edges that
// never fire.
//
// Two time scales coexist: committed events advance state, and freezes
// advance the clock to a requested limit without consuming the pending event
// (legal by memorylessness and required so sampling epochs, time caps and
// mid-span recurrence thresholds do not perturb the trajectory).

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "treecp/common.hpp"
#include "treecp/lazy_tree.hpp"
#include "treecp/restriction.hpp"
#include "treecp/rng.hpp"

namespace treecp {

enum class EventKind { Recovery, Infection, Noop, Cutoff };

struct Event {
  EventKind kind;
  double time = 0;
  Handle source = kNoVertex;  // recovering vertex, or arrow source
  Handle target = kNoVertex;  // arrow target (infection/no-op only)
};

enum class StopReason { Extinct, TimeCap, MassCap, FrontierReached, TargetHit, ReinfectionReached };

inline std::string toString(StopReason reason) {
  switch (reason) {
    case StopReason::Extinct: return "extinct";
    case StopReason::TimeCap: return "timecap";
    case StopReason::MassCap: return "masscap";
    case StopReason::FrontierReached: return "frontier";
    case StopReason::TargetHit: return "target";
    case StopReason::ReinfectionReached: return "reinfection";
  }
  return "unknown";
}

struct StopCondition {
  std::optional<double> maxTime;
  std::optional<std::uint64_t> maxInfected;
  std::optional<std::uint64_t> frontierTarget;   // stop once |frontier| >= k
  std::optional<Handle> targetVertex;            // stop once this vertex is infected
  struct Reinfection {
    std::uint64_t count = 1;
    double gap = 0;  // gap > 0: recurrence-chain stopping; gap == 0: count re-entries
  };
  std::optional<Reinfection> reinfectionTarget;

  void validate() const {
    if (!maxTime && !maxInfected)
      throw ConfigError("stop condition must bound time or infected mass");
    if (maxTime && !(*maxTime >= 0)) throw ConfigError("maxTime must be >= 0");
    if (maxInfected && *maxInfected == 0) throw ConfigError("maxInfected must be >= 1");
    if (frontierTarget && *frontierTarget == 0) throw ConfigError("frontierTarget must be >= 1");
    if (reinfectionTarget && reinfectionTarget->count == 0)
      throw ConfigError("reinfection count must be >= 1");
    if (reinfectionTarget && !(reinfectionTarget->gap >= 0))
      throw ConfigError("reinfection gap must be >= 0");
  }
};

struct Snapshot {
  std::uint64_t infectedCount = 0;
  std::uint64_t frontierCount = 0;
  std::vector<std::pair<std::int32_t, std::uint64_t>> levelHistogram;  // sorted by level
  std::vector<double> weights;     // sum of rho^level over xi, one per requested rho
  std::vector<double> epochSizes;  // |xi| at each sampling epoch
};

struct Outcome {
  StopReason reason = StopReason::TimeCap;
  double at = 0;
  std::uint64_t eventCount = 0;
  Snapshot snapshot;
};

struct EpochRecord {
  double t = 0;
  std::uint64_t infectedCount = 0;
  std::uint64_t frontierCount = 0;
  std::vector<double> weights;
  bool anchorInfected = false;
};

struct SampleSpec {
  std::optional<double> epochLength;  // record |xi| at multiples of this
  std::vector<double> rhos;           // weights to evaluate in snapshots/records
  std::function<void(const EpochRecord&)> sink;  // optional trajectory consumer
};

// Bookkeeping for one process: infected set xi_t, ever-infected set A_t, the
// frontier xi_t ∩ F(A_t) (infected vertices with a never-infected child), the
// anchor's reinfection record, and a degree-bucketed index over xi_t so a
// source can be picked proportional to its degree in O(#distinct degrees).
// Shared between plain runs (one core) and coupled runs (two cores, one
// NeighborTable), which is why event application lives here and the
// exponential race lives in the drivers.
class ProcessCore {
 public:
  explicit ProcessCore(NeighborTable& table) : table_(table), anchor_(table.anchor()) {}

  std::uint64_t infectedCount() const { return infectedList_.size(); }
  std::uint64_t everInfectedCount() const { return everCount_; }
  std::uint64_t frontierCount() const { return frontierList_.size(); }
  std::uint64_t degreeSum() const { return sumDeg_; }
  Handle anchor() const { return anchor_; }

  bool infected(Handle v) const { return v < slots_.size() && slots_[v].infected; }
  bool everInfected(Handle v) const { return v < slots_.size() && slots_[v].ever; }
  bool anchorInfected() const { return infected(anchor_); }
  double anchorSpanStart() const { return spanStart_; }

  const std::vector<Handle>& infectedVertices() const { return infectedList_; }
  const std::vector<Handle>& frontierVertices() const { return frontierList_; }

  // Times the anchor re-entered the infected set after leaving it.
  const std::vector<double>& reinfectionTimes() const { return reinfections_; }

  // In-restriction degree of an ever-infected vertex (frozen at activation).
  std::uint32_t degree(Handle v) const { return slots_[v].degree; }

  void infect(Handle v, double t) {
    std::uint32_t deg = table_.degree(v);  // realizes surroundings on first touch
    if (slots_.size() < table_.tree().size()) slots_.resize(table_.tree().size());
    Slot& s = slots_[v];
    if (s.infected) throw Error("infect: vertex already infected");
    if (!s.ever) {
      s.ever = true;
      ++everCount_;
      s.degree = deg;
      const LazyTree& tree = table_.tree();
      std::uint32_t never = 0;
      for (std::uint32_t i = 0; i < tree.childCount(v); ++i)
        if (!everInfected(tree.child(v, i))) ++never;
      s.neverChildren = never;
      Handle p = tree.parent(v);
      if (p != kNoVertex && everInfected(p)) {
        Slot& ps = slots_[p];
        --ps.neverChildren;
        if (ps.neverChildren == 0 && ps.frontierPos != kNone) frontierRemove(p);
      }
    } else if (v == anchor_) {
      reinfections_.push_back(t);
    }
    if (v == anchor_) spanStart_ = t;
    s.infected = true;
    s.infectedPos = static_cast<std::uint32_t>(infectedList_.size());
    infectedList_.push_back(v);
    bucketAdd(v);
    if (s.neverChildren > 0) frontierAdd(v);
  }

  void recover(Handle v, double) {
    Slot& s = slots_[v];
    if (!s.infected) throw Error("recover: vertex not infected");
    s.infected = false;
    Handle moved = infectedList_.back();
    infectedList_[s.infectedPos] = moved;
    slots_[moved].infectedPos = s.infectedPos;
    infectedList_.pop_back();
    s.infectedPos = kNone;
    bucketRemove(v);
    if (s.frontierPos != kNone) frontierRemove(v);
  }

  // Source pick proportional to degree: w must be uniform in [0, degreeSum()).
  Handle sourceByDegree(double w) const {
    Handle fallback = kNoVertex;
    for (std::uint32_t d = 1; d < buckets_.size(); ++d) {
      const std::vector<Handle>& b = buckets_[d];
      if (b.empty()) continue;
      double block = static_cast<double>(d) * static_cast<double>(b.size());
      if (w < block) {
        std::size_t idx = static_cast<std::size_t>(w / d);
        if (idx >= b.size()) idx = b.size() - 1;
        return b[idx];
      }
      w -= block;
      fallback = b.back();
    }
    if (fallback == kNoVertex) throw Error("sourceByDegree: no eligible source");
    return fallback;  // float slop at the upper boundary
  }

  // B_t: never-infected children of frontier vertices, the decoupled set a
  // branching comparison can graft fresh subtrees onto.
  void accessible(std::vector<Handle>& out) const {
    out.clear();
    const LazyTree& tree = table_.tree();
    for (Handle x : frontierList_)
      for (std::uint32_t i = 0; i < tree.childCount(x); ++i) {
        Handle c = tree.child(x, i);
        if (!everInfected(c)) out.push_back(c);
      }
  }

  double weight(double rho) const {
    const LazyTree& tree = table_.tree();
    double w = 0;
    for (Handle v : infectedList_) w += std::pow(rho, static_cast<double>(tree.level(v)));
    return w;
  }

  Snapshot snapshot(const std::vector<double>& rhos) const {
    Snapshot snap;
    snap.infectedCount = infectedCount();
    snap.frontierCount = frontierCount();
    const LazyTree& tree = table_.tree();
    std::map<std::int32_t, std::uint64_t> hist;
    for (Handle v : infectedList_) ++hist[tree.level(v)];
    snap.levelHistogram.assign(hist.begin(), hist.end());
    snap.weights.reserve(rhos.size());
    for (double rho : rhos) snap.weights.push_back(weight(rho));
    return snap;
  }

 private:
  static constexpr std::uint32_t kNone = 0xffffffffu;

  struct Slot {
    bool infected = false;
    bool ever = false;
    std::uint32_t degree = 0;
    std::uint32_t neverChildren = 0;
    std::uint32_t infectedPos = kNone;
    std::uint32_t frontierPos = kNone;
    std::uint32_t bucketPos = kNone;
  };

  void frontierAdd(Handle v) {
    slots_[v].frontierPos = static_cast<std::uint32_t>(frontierList_.size());
    frontierList_.push_back(v);
  }

  void frontierRemove(Handle v) {
    Slot& s = slots_[v];
    Handle moved = frontierList_.back();
    frontierList_[s.frontierPos] = moved;
    slots_[moved].frontierPos = s.frontierPos;
    frontierList_.pop_back();
    s.frontierPos = kNone;
  }

  void bucketAdd(Handle v) {
    Slot& s = slots_[v];
    if (buckets_.size() <= s.degree) buckets_.resize(s.degree + 1);
    s.bucketPos = static_cast<std::uint32_t>(buckets_[s.degree].size());
    buckets_[s.degree].push_back(v);
    sumDeg_ += s.degree;
  }

  void bucketRemove(Handle v) {
    Slot& s = slots_[v];
    std::vector<Handle>& b = buckets_[s.degree];
    Handle moved = b.back();
    b[s.bucketPos] = moved;
    slots_[moved].bucketPos = s.bucketPos;
    b.pop_back();
    s.bucketPos = kNone;
    sumDeg_ -= s.degree;
  }

  NeighborTable& table_;
  Handle anchor_;
  std::vector<Slot> slots_;
  std::vector<Handle> infectedList_;
  std::vector<Handle> frontierList_;
  std::vector<std::vector<Handle>> buckets_;
  std::uint64_t sumDeg_ = 0;
  std::uint64_t everCount_ = 0;
  std::vector<double> reinfections_;
  double spanStart_ = 0;
};

class ContactProcess {
 public:
  // Seeds the anchor at time 0 (realizing its children, so the anchor degree
  // is drawn the moment it is first infected).
  ContactProcess(LazyTree tree, double lambda, const Restriction& restriction,
                 std::uint64_t processSeed)
      : tree_(std::move(tree)),
        table_(tree_, restriction),
        core_(table_),
        rng_(processSeed),
        lambda_(lambda) {
    if (!(lambda >= 0)) throw ConfigError("lambda must be >= 0");
    core_.infect(core_.anchor(), 0);
  }

  ContactProcess(const ContactProcess&) = delete;
  ContactProcess& operator=(const ContactProcess&) = delete;

  const LazyTree& tree() const { return tree_; }
  LazyTree& tree() { return tree_; }
  NeighborTable& neighborTable() { return table_; }
  const ProcessCore& core() const { return core_; }
  double time() const { return time_; }
  double lambda() const { return lambda_; }
  std::uint64_t eventCount() const { return eventCount_; }
  double totalRate() const {
    return static_cast<double>(core_.infectedCount()) +
           lambda_ * static_cast<double>(core_.degreeSum());
  }

  double weight(double rho) const {
    if (!(rho > 0) || !(rho < 1)) throw ConfigError("rho must lie in (0,1)");
    return core_.weight(rho);
  }

  Snapshot snapshot(const std::vector<double>& rhos = {}) const { return core_.snapshot(rhos); }

  // Recurrence times recorded by the last run with a gap > 0 reinfection stop.
  const std::vector<double>& recurrence() const { return sigmas_; }

  // Advances to the next event, or freezes at `limit` if the event lands
  // beyond it (the pending event survives the freeze).
  Event stepOnce(double limit) {
    if (core_.infectedCount() == 0) throw Error("stepOnce: process is extinct");
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
    double size = static_cast<double>(core_.infectedCount());
    if (split < size) {
      Handle v = core_.infectedVertices()[rng_.below(core_.infectedCount())];
      core_.recover(v, time_);
      return {EventKind::Recovery, time_, v};
    }
    Handle src = core_.sourceByDegree((split - size) / lambda_);
    Handle dst = table_.neighbor(src, static_cast<std::uint32_t>(rng_.below(core_.degree(src))));
    if (core_.infected(dst)) return {EventKind::Noop, time_, src, dst};
    core_.infect(dst, time_);
    return {EventKind::Infection, time_, src, dst};
  }

  // Runs until the first satisfied stop. Precedence when several conditions
  // become true at the same event: Extinct, ReinfectionReached, TargetHit,
  // FrontierReached, MassCap; time-driven stops fire at freezes.
  Outcome run(const StopCondition& stop, const SampleSpec& sample = {}) {
    stop.validate();
    validateSample(sample);
    const double inf = std::numeric_limits<double>::infinity();
    const bool chainMode = stop.reinfectionTarget && stop.reinfectionTarget->gap > 0;
    const bool countMode = stop.reinfectionTarget && stop.reinfectionTarget->gap == 0;
    const std::uint64_t chainCount = stop.reinfectionTarget ? stop.reinfectionTarget->count : 0;
    if (chainMode) sigmas_.clear();

    std::vector<double> epochSizes;
    double nextEpoch = sample.epochLength ? time_ + *sample.epochLength : inf;

    auto finish = [&](StopReason reason, double at) {
      Outcome out;
      out.reason = reason;
      out.at = at;
      out.eventCount = eventCount_;
      out.snapshot = core_.snapshot(sample.rhos);
      out.snapshot.epochSizes = std::move(epochSizes);
      return out;
    };

    // inf{t > sigma_i + gap : anchor infected at t}, evaluated against the
    // anchor's current infection span; records every sigma due by now.
    auto chainCatchUp = [&] {
      while (chainMode && sigmas_.size() < chainCount && core_.anchorInfected()) {
        double threshold =
            sigmas_.empty() ? stop.reinfectionTarget->gap : sigmas_.back() + stop.reinfectionTarget->gap;
        double candidate = std::max(core_.anchorSpanStart(), threshold);
        if (candidate > time_) break;
        sigmas_.push_back(candidate);
      }
      return chainMode && sigmas_.size() >= chainCount;
    };

    // stops that may already hold on entry
    if (core_.infectedCount() == 0) return finish(StopReason::Extinct, time_);
    if (chainCatchUp()) return finish(StopReason::ReinfectionReached, sigmas_.back());
    if (countMode && core_.reinfectionTimes().size() >= chainCount)
      return finish(StopReason::ReinfectionReached, core_.reinfectionTimes()[chainCount - 1]);
    if (stop.targetVertex && core_.everInfected(*stop.targetVertex))
      return finish(StopReason::TargetHit, time_);
    if (stop.frontierTarget && core_.frontierCount() >= *stop.frontierTarget)
      return finish(StopReason::FrontierReached, time_);
    if (stop.maxInfected && core_.infectedCount() >= *stop.maxInfected)
      return finish(StopReason::MassCap, time_);

    while (true) {
      if (stop.maxTime && time_ >= *stop.maxTime) return finish(StopReason::TimeCap, time_);
      double limit = stop.maxTime ? *stop.maxTime : inf;
      if (nextEpoch < limit) limit = nextEpoch;
      if (chainMode && sigmas_.size() < chainCount && core_.anchorInfected()) {
        double threshold =
            sigmas_.empty() ? stop.reinfectionTarget->gap : sigmas_.back() + stop.reinfectionTarget->gap;
        double candidate = std::max(core_.anchorSpanStart(), threshold);
        if (candidate < limit) limit = candidate;
      }
      Event ev = stepOnce(limit);
      if (ev.kind == EventKind::Cutoff) {
        if (chainCatchUp()) return finish(StopReason::ReinfectionReached, sigmas_.back());
        if (time_ >= nextEpoch) {
          epochSizes.push_back(static_cast<double>(core_.infectedCount()));
          if (sample.sink) {
            EpochRecord rec;
            rec.t = time_;
            rec.infectedCount = core_.infectedCount();
            rec.frontierCount = core_.frontierCount();
            for (double rho : sample.rhos) rec.weights.push_back(core_.weight(rho));
            rec.anchorInfected = core_.anchorInfected();
            sample.sink(rec);
          }
          nextEpoch += *sample.epochLength;
        }
        continue;
      }
      if (ev.kind == EventKind::Recovery && core_.infectedCount() == 0)
        return finish(StopReason::Extinct, time_);
      if (chainCatchUp()) return finish(StopReason::ReinfectionReached, sigmas_.back());
      if (countMode && core_.reinfectionTimes().size() >= chainCount)
        return finish(StopReason::ReinfectionReached, time_);
      if (ev.kind == EventKind::Infection) {
        if (stop.targetVertex && ev.target == *stop.targetVertex)
          return finish(StopReason::TargetHit, time_);
        if (stop.frontierTarget && core_.frontierCount() >= *stop.frontierTarget)
          return finish(StopReason::FrontierReached, time_);
        if (stop.maxInfected && core_.infectedCount() >= *stop.maxInfected)
          return finish(StopReason::MassCap, time_);
      }
    }
  }

 private:
  static void validateSample(const SampleSpec& sample) {
    if (sample.epochLength && !(*sample.epochLength > 0))
      throw ConfigError("epochLength must be > 0");
    for (double rho : sample.rhos)
      if (!(rho > 0) || !(rho < 1)) throw ConfigError("rho must lie in (0,1)");
  }

  LazyTree tree_;
  NeighborTable table_;
  ProcessCore core_;
  RngStream rng_;
  double lambda_;
  double time_ = 0;
  std::uint64_t eventCount_ = 0;
  bool hasPending_ = false;
  double pending_ = 0;
  std::vector<double> sigmas_;
};

inline double weightOfState(const ContactProcess& process, double rho) {
  return process.weight(rho);
}

struct CensoredValue {
  double value = 0;
  bool censored = false;
  StopReason reason = StopReason::TimeCap;
};

// First time the infected frontier reaches size k, censored at maxTime or at
// extinction (the reason says which).
inline CensoredValue tauK(LazyTree tree, double lambda, std::uint64_t k, double maxTime,
                          std::uint64_t processSeed) {
  ContactProcess process(std::move(tree), lambda, Restriction::none(), processSeed);
  StopCondition stop;
  stop.maxTime = maxTime;
  stop.frontierTarget = k;
  Outcome out = process.run(stop);
  return {out.at, out.reason != StopReason::FrontierReached, out.reason};
}

struct RecurrenceResult {
  std::vector<double> times;
  bool censored = false;
  Outcome outcome;
};

// sigma_1..sigma_m for vertex x on its branch (x plus the subtree of its
// first child), successive reinfection times separated by at least `gap`.
// gap == 0 collapses to all zeros by right-continuity: x is infected on a
// neighborhood of 0, so every infimum is 0 and no simulation is needed.
inline RecurrenceResult recurrenceTimes(LazyTree tree, Handle x, double lambda, std::uint64_t m,
                                        double gap, double maxTime, std::uint64_t processSeed) {
  if (!(gap >= 0)) throw ConfigError("gap must be >= 0");
  if (m == 0) throw ConfigError("m must be >= 1");
  ContactProcess process(std::move(tree), lambda, Restriction::subtreePlusBranch(x), processSeed);
  RecurrenceResult result;
  if (gap == 0) {
    result.times.assign(m, 0.0);
    result.censored = false;
    result.outcome.reason = StopReason::ReinfectionReached;
    result.outcome.at = 0;
    result.outcome.snapshot = process.snapshot();
    return result;
  }
  StopCondition stop;
  stop.maxTime = maxTime;
  stop.reinfectionTarget = StopCondition::Reinfection{m, gap};
  result.outcome = process.run(stop);
  result.times = process.recurrence();
  result.censored = result.outcome.reason != StopReason::ReinfectionReached;
  return result;
}

}  // namespace treecp
