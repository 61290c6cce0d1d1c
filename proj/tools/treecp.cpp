// treecp: seeded contact-process experiments on lazily realized random trees.
// One subcommand per estimator; options come from flags merged over an
// optional JSON config file (flags win, unknown keys rejected); results go
// out as CSV rows or JSON lines behind a self-describing header record.
//
// Exit codes: 0 success, 1 configuration error, 2 degenerate result (for
// `oracle`, also a simulated/exact mismatch beyond 3 SE).

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "treecp/treecp.hpp"

namespace treecp {
namespace {

std::vector<std::string> splitList(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<double> parseDoubleList(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const std::string& p : splitList(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(p, &used));
      if (used != p.size()) throw std::invalid_argument(p);
    } catch (const std::exception&) {
      throw ConfigError(what + " must be a comma-separated list of numbers, got '" + text + "'");
    }
  }
  return out;
}

std::vector<std::uint32_t> parseIndexList(const std::string& text, const std::string& what) {
  std::vector<std::uint32_t> out;
  for (const std::string& p : splitList(text)) {
    try {
      std::size_t used = 0;
      unsigned long v = std::stoul(p, &used);
      if (used != p.size()) throw std::invalid_argument(p);
      out.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      throw ConfigError(what + " must be a comma-separated list of integers, got '" + text + "'");
    }
  }
  return out;
}

std::pair<double, double> parseBracket(const std::string& text) {
  std::vector<double> v = parseDoubleList(text, "bracket");
  if (v.size() != 2) throw ConfigError("bracket must be two numbers lo,hi");
  return {v[0], v[1]};
}

// All option storage in one struct; each subcommand registers the subset it
// understands, so unknown flags and unknown config keys fail loudly.
struct Options {
  std::string topology = "const:2";
  double lambda = 1.0;
  std::string lambdas;  // optional sweep, comma-separated
  double lambdaLow = 0.5;
  std::uint64_t reps = 1000;
  double maxTime = 10.0;
  std::uint64_t massCap = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string output = "-";
  std::string format = "csv";
  std::uint32_t n = 1;
  std::uint32_t k = 1;
  double m1 = 10.0;
  double rho = 0.5;
  double t0 = 5.0;
  std::string ngrid = "1,2,3";
  std::uint32_t reinfections = 20;
  double horizon = 200.0;
  double tol = 0.05;
  std::string bracket = "0.1,2.0";
  double threshold = 0.05;
  std::uint32_t epochs = 5;
  double epochLength = 1.0;
  bool trajectories = false;
  std::string tree = "twovertex";
  std::string times = "1";
};

struct FieldBinding {
  CLI::Option* option = nullptr;
  std::function<void(const Json&)> fromJson;
  std::function<Json()> toJson;
  bool echoed = true;  // plumbing-only fields stay out of the header echo
};

// One subcommand: its CLI11 app plus the name -> binding map used for the
// config-file merge and the resolved-config echo.
struct Command {
  CLI::App* app = nullptr;
  std::string configPath;
  std::map<std::string, FieldBinding> fields;

  template <typename T>
  void bind(const std::string& name, T& var, const std::string& help, bool echoed = true) {
    CLI::Option* opt = app->add_option("--" + name, var, help);
    fields[name] = {opt, [&var](const Json& j) { var = j.get<T>(); },
                    [&var] { return Json(var); }, echoed};
  }

  void bindFlag(const std::string& name, bool& var, const std::string& help) {
    CLI::Option* opt = app->add_flag("--" + name, var, help);
    fields[name] = {opt, [&var](const Json& j) { var = j.get<bool>(); },
                    [&var] { return Json(var); }};
  }

  void mergeConfigFile() const {
    if (configPath.empty()) return;
    std::ifstream in(configPath);
    if (!in) throw ConfigError("cannot open config file: " + configPath);
    Json file;
    try {
      in >> file;
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items()) {
      auto it = fields.find(key);
      if (it == fields.end()) throw ConfigError("unknown config key: " + key);
      if (it->second.option->count() > 0) continue;  // flags override file values
      try {
        it->second.fromJson(value);
      } catch (const Json::exception&) {
        throw ConfigError("config key has the wrong type: " + key);
      }
    }
  }

  Json resolvedConfig() const {
    Json j{{"command", app->get_name()}};
    for (const auto& [name, binding] : fields)
      if (binding.echoed) j[name] = binding.toJson();
    return j;
  }
};

Estimate bracketEstimate(const BisectionResult& res, std::uint64_t repsPerPoint,
                         std::uint64_t seed, const std::string& what) {
  Estimate e;
  e.value = 0.5 * (res.lo + res.hi);
  e.lo = res.lo;
  e.hi = res.hi;
  e.n = repsPerPoint;
  e.seed = seed;
  e.protocol = what + " bisection bracket after " + std::to_string(res.iterations) +
               " halvings; value is the bracket midpoint";
  return e;
}

Estimate pointEstimate(double value, std::uint64_t n, std::uint64_t seed,
                       const std::string& protocol) {
  Estimate e;
  e.value = e.lo = e.hi = value;
  e.n = n;
  e.seed = seed;
  e.protocol = protocol;
  return e;
}

void emitBisection(RecordWriter& writer, const std::string& op, const BisectionResult& res,
                   std::uint64_t repsPerPoint, std::uint64_t seed, const std::string& what) {
  for (const TracePoint& p : res.trace)
    writer.estimate(op + "-trace", Json{{"lambda", p.lambda}, {"pass", p.pass}}, p.estimate);
  writer.estimate(op, Json::object(), bracketEstimate(res, repsPerPoint, seed, what));
}

int runSurvive(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  if (o.trajectories) {
    struct Rep {
      std::vector<EpochRecord> records;
      bool survived = false;
    };
    auto runs = replicate<Rep>(o.reps, threads, [&](std::uint64_t rep) {
      Rep r;
      LazyTree tree(topo, deriveSeed(o.seed, rep, StreamKind::Structure));
      ContactProcess proc(std::move(tree), o.lambda, Restriction::none(),
                          deriveSeed(o.seed, rep, StreamKind::Process));
      StopCondition stop;
      stop.maxTime = o.maxTime;
      stop.maxInfected = o.massCap;
      SampleSpec sample;
      sample.epochLength = o.epochLength;
      sample.rhos = {o.rho};
      sample.sink = [&r](const EpochRecord& rec) { r.records.push_back(rec); };
      Outcome out = proc.run(stop, sample);
      r.survived = out.reason != StopReason::Extinct;
      return r;
    });
    std::uint64_t successes = 0;
    for (std::uint64_t rep = 0; rep < o.reps; ++rep) {
      for (const EpochRecord& rec : runs[rep].records)
        writer.line(Json{{"record", "trajectory"},
                         {"rep", rep},
                         {"t", rec.t},
                         {"size", rec.infectedCount},
                         {"frontier", rec.frontierCount},
                         {"weights", rec.weights},
                         {"root", rec.anchorInfected}});
      successes += runs[rep].survived;
    }
    Estimate est = wilson(successes, o.reps);
    est.censored = successes;
    est.seed = o.seed;
    est.protocol = "alive when the time/mass stop hit; per-epoch trajectory records precede";
    writer.estimate("survive", Json{{"lambda", o.lambda}}, est);
    return 0;
  }
  if (!o.lambdas.empty()) {
    std::vector<double> grid = parseDoubleList(o.lambdas, "lambdas");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      Estimate est = estimateSurvival(topo, grid[i], o.reps, o.maxTime, o.massCap,
                                      deriveSeed(o.seed, i, StreamKind::Aux), threads);
      writer.estimate("survive", Json{{"lambda", grid[i]}}, est);
    }
    return 0;
  }
  Estimate est = estimateSurvival(topo, o.lambda, o.reps, o.maxTime, o.massCap, o.seed, threads);
  writer.estimate("survive", Json{{"lambda", o.lambda}}, est);
  return 0;
}

int runGrowth(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  Estimate est =
      estimateGrowthRate(topo, o.lambda, o.reps, o.epochs, o.epochLength, o.seed, threads);
  writer.estimate("growth", Json{{"lambda", o.lambda}}, est);
  return 0;
}

int runU(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  Estimate est = estimateU(topo, o.lambda, o.n, o.reps, o.maxTime, o.massCap, o.seed, threads);
  writer.estimate("u", Json{{"lambda", o.lambda}, {"n", o.n}}, est);
  return 0;
}

int runBeta(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  std::vector<std::uint32_t> grid = parseIndexList(o.ngrid, "ngrid");
  BetaEstimate b =
      estimateBeta(topo, o.lambda, grid, o.reps, o.maxTime, o.massCap, o.seed, threads);
  for (std::size_t i = 0; i < grid.size(); ++i)
    writer.estimate("u", Json{{"lambda", o.lambda}, {"n", grid[i]}}, b.uValues[i]);
  Json params{{"lambda", o.lambda}, {"degenerate", b.degenerate}};
  writer.estimate("beta-slope", params, b.slopeForm);
  writer.estimate("beta-sup", params,
                  pointEstimate(b.supForm, o.reps, o.seed,
                                "max over the grid of u(n kappa)^(1/n); no interval"));
  return 0;
}

int runWeight(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  Estimate est = supermartingaleDiagnostic(topo, o.lambda, o.rho, o.t0, o.reps, o.seed, threads);
  writer.estimate("weight", Json{{"lambda", o.lambda}, {"rho", o.rho}, {"t0", o.t0}}, est);
  return 0;
}

int runLambda1(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  auto [lo, hi] = parseBracket(o.bracket);
  WeakSurvival weak{o.threshold, o.maxTime, o.massCap};
  BisectionResult res = bisectCritical(topo, weak, lo, hi, o.tol, o.reps, o.seed, threads);
  emitBisection(writer, "lambda1", res, o.reps, o.seed, "weak-survival");
  return 0;
}

int runLambda2(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  auto [lo, hi] = parseBracket(o.bracket);
  StrongSurvival strong{o.threshold, o.reinfections, o.horizon, o.massCap};
  BisectionResult res = bisectCritical(topo, strong, lo, hi, o.tol, o.reps, o.seed, threads);
  emitBisection(writer, "lambda2", res, o.reps, o.seed, "strong-survival");
  return 0;
}

int runGap(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  auto [lo, hi] = parseBracket(o.bracket);
  WeakSurvival weak{o.threshold, o.maxTime, o.massCap};
  StrongSurvival strong{o.threshold, o.reinfections, o.horizon, o.massCap};
  BisectionResult weakRes = bisectCritical(topo, weak, lo, hi, o.tol, o.reps, o.seed, threads);
  BisectionResult strongRes =
      bisectCritical(topo, strong, lo, hi, o.tol, o.reps, o.seed, threads);
  emitBisection(writer, "lambda1", weakRes, o.reps, o.seed, "weak-survival");
  emitBisection(writer, "lambda2", strongRes, o.reps, o.seed, "strong-survival");
  Estimate gap;
  gap.value = 0.5 * (strongRes.lo + strongRes.hi) - 0.5 * (weakRes.lo + weakRes.hi);
  gap.lo = strongRes.lo - weakRes.hi;
  gap.hi = strongRes.hi - weakRes.lo;
  gap.n = o.reps;
  gap.seed = o.seed;
  gap.protocol = "strong minus weak bracket, same root seed per probed lambda";
  writer.estimate("gap", Json::object(), gap);
  return 0;
}

int runCouple(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  struct Rep {
    bool aliveHigh = false, aliveLow = false, diverged = false, contained = false;
  };
  auto runs = replicate<Rep>(o.reps, threads, [&](std::uint64_t rep) {
    LazyTree tree(topo, deriveSeed(o.seed, rep, StreamKind::Structure));
    CoupledProcess pair(std::move(tree), o.lambda, o.lambdaLow, Restriction::none(),
                        deriveSeed(o.seed, rep, StreamKind::Process));
    StopCondition stop;
    stop.maxTime = o.maxTime;
    stop.maxInfected = o.massCap;
    pair.run(stop);
    Rep r;
    r.aliveHigh = pair.high().infectedCount() > 0;
    r.aliveLow = pair.low().infectedCount() > 0;
    r.diverged = pair.firstDiscrepancy().has_value();
    r.contained = pair.containmentHolds();
    return r;
  });
  std::uint64_t aliveHigh = 0, aliveLow = 0, agree = 0, contained = 0;
  for (const Rep& r : runs) {
    aliveHigh += r.aliveHigh;
    aliveLow += r.aliveLow;
    agree += !r.diverged;
    contained += r.contained;
  }
  Estimate high = wilson(aliveHigh, o.reps);
  high.seed = o.seed;
  high.protocol = "alive at the shared time/mass stop, higher rate of the coupled pair";
  writer.estimate("couple-high", Json{{"lambda", o.lambda}}, high);
  Estimate low = wilson(aliveLow, o.reps);
  low.seed = o.seed;
  low.protocol = "alive at the shared time/mass stop, lower rate of the coupled pair";
  writer.estimate("couple-low", Json{{"lambda", o.lambdaLow}}, low);
  Estimate same = wilson(agree, o.reps);
  same.seed = o.seed;
  same.protocol = "the two infected sets never differed before the run ended";
  writer.estimate("couple-agree", Json::object(), same);
  Estimate audit = wilson(contained, o.reps);
  audit.seed = o.seed;
  audit.protocol = "exhaustive end-state containment audit passed";
  writer.estimate("couple-containment", Json::object(), audit);
  return 0;
}

int runCmj(const Options& o, RecordWriter& writer, unsigned threads) {
  Topology topo = Topology::parse(o.topology);
  ComparisonExtract ex = extractComparison(topo, o.lambda, o.k, o.m1, o.reps, o.seed, threads);
  Json params{{"lambda", o.lambda}, {"k", o.k}, {"m1", o.m1}};
  writer.estimate("cmj-child", params, ex.perChild);
  Estimate tau = meanEstimate(ex.tauSamples);
  tau.censored = ex.censored;
  tau.seed = o.seed;
  tau.protocol = "first time k infected frontier vertices coexist, uncensored runs";
  writer.estimate("cmj-tau", params, tau);
  if (ex.perChild.value > 0) {
    // empirical expected-birth measure: per-child mean offspring k * perChild
    // spread over the observed frontier times, births one unit later
    std::vector<double> taus = ex.tauSamples;
    std::sort(taus.begin(), taus.end());
    ReproductionMeasure measure;
    double perSample = static_cast<double>(o.k) * ex.perChild.value /
                       static_cast<double>(taus.size());
    for (std::size_t i = 0; i < taus.size();) {
      std::size_t j = i;
      while (j < taus.size() && taus[j] == taus[i]) ++j;
      measure.atoms.push_back({taus[i] + 1.0, perSample * static_cast<double>(j - i)});
      i = j;
    }
    writer.estimate(
        "cmj-growth", params,
        pointEstimate(malthusian(measure), ex.tauSamples.size(), o.seed,
                      "growth exponent of the extracted comparison process; no interval"));
  }
  return 0;
}

int runOracle(const Options& o, RecordWriter& writer, unsigned threads) {
  FiniteTreePreset preset = presetByName(o.tree);
  std::vector<double> times = parseDoubleList(o.times, "times");
  OccupancyCounts sim = simulateOccupancy(preset, o.lambda, times, o.reps, o.seed, threads);
  bool allWithin = true;
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    Eigen::VectorXd exact = exactOccupancy(preset, o.lambda, times[ti]);
    for (std::size_t mask = 0; mask < sim.counts[ti].size(); ++mask) {
      double p = exact(static_cast<Eigen::Index>(mask));
      Estimate est = wilson(sim.counts[ti][mask], o.reps);
      est.seed = o.seed;
      double se = proportionSE(p, o.reps);
      // small-count cushion keeps near-zero states honest at finite reps
      bool within = std::fabs(est.value - p) <= 3 * se + 3.0 / static_cast<double>(o.reps);
      allWithin = allWithin && within;
      est.protocol = "occupancy frequency vs matrix-exponential transient";
      writer.estimate("oracle",
                      Json{{"t", times[ti]},
                           {"state", mask},
                           {"exact", p},
                           {"within", within}},
                      est);
    }
  }
  return allWithin ? 0 : 2;
}

int runCli(int argc, char** argv) {
  CLI::App app{"contact-process experiments on random trees"};
  app.require_subcommand(1);
  Options o;
  std::vector<Command> commands(11);

  auto setup = [&](std::size_t i, const std::string& name, const std::string& help) {
    Command& c = commands[i];
    c.app = app.add_subcommand(name, help);
    c.app->add_option("--config", c.configPath, "JSON config file; flags override its values");
    c.bind("seed", o.seed, "root seed for all derived streams");
    c.bind("threads", o.threads, "worker threads (0: TREECP_THREADS, then hardware)", false);
    c.bind("output", o.output, "output path, - for stdout", false);
    c.bind("format", o.format, "csv or jsonl");
    return &c;
  };

  Command* survive = setup(0, "survive", "survival probability at a time/mass stop");
  survive->bind("topology", o.topology, "tree family, e.g. const:2, gwplus:geom:0.5, periodic:2,3,4");
  survive->bind("lambda", o.lambda, "infection rate");
  survive->bind("lambdas", o.lambdas, "comma-separated sweep; one row per rate");
  survive->bind("reps", o.reps, "replications");
  survive->bind("max-time", o.maxTime, "time horizon");
  survive->bind("mass-cap", o.massCap, "stop when this many vertices are infected");
  survive->bindFlag("trajectories", o.trajectories, "stream per-epoch records (jsonl only)");
  survive->bind("epoch-length", o.epochLength, "sampling epoch for trajectories");
  survive->bind("rho", o.rho, "weight base recorded along trajectories");

  Command* growth = setup(1, "growth", "log-size regression slope over sampling epochs");
  growth->bind("topology", o.topology, "tree family");
  growth->bind("lambda", o.lambda, "infection rate");
  growth->bind("reps", o.reps, "replications");
  growth->bind("epochs", o.epochs, "number of sampling epochs");
  growth->bind("epoch-length", o.epochLength, "epoch length");

  Command* u = setup(2, "u", "probability the distinguished chain vertex is ever infected");
  u->bind("topology", o.topology, "periodic tree family");
  u->bind("lambda", o.lambda, "infection rate");
  u->bind("n", o.n, "chain depth of the target vertex");
  u->bind("reps", o.reps, "replications");
  u->bind("max-time", o.maxTime, "time horizon");
  u->bind("mass-cap", o.massCap, "mass stop, 0 disables");

  Command* beta = setup(3, "beta", "spread exponent from hitting probabilities over a grid");
  beta->bind("topology", o.topology, "periodic tree family");
  beta->bind("lambda", o.lambda, "infection rate");
  beta->bind("ngrid", o.ngrid, "comma-separated chain depths, e.g. 1,2,3,4");
  beta->bind("reps", o.reps, "replications per grid point");
  beta->bind("max-time", o.maxTime, "time horizon per run");
  beta->bind("mass-cap", o.massCap, "mass stop, 0 disables");

  Command* weight = setup(4, "weight", "weighted-occupancy mean at t0, worst starting type");
  weight->bind("topology", o.topology, "periodic tree family");
  weight->bind("lambda", o.lambda, "infection rate");
  weight->bind("rho", o.rho, "weight base in (0,1)");
  weight->bind("t0", o.t0, "evaluation time");
  weight->bind("reps", o.reps, "replications per starting type");

  Command* lambda1 = setup(5, "lambda1", "bisect the weak-survival indicator");
  lambda1->bind("topology", o.topology, "tree family");
  lambda1->bind("bracket", o.bracket, "lo,hi infection rates straddling the transition");
  lambda1->bind("tol", o.tol, "bracket width target");
  lambda1->bind("threshold", o.threshold, "indicator passes when the CI lower bound exceeds this");
  lambda1->bind("reps", o.reps, "replications per probed rate");
  lambda1->bind("max-time", o.maxTime, "survival horizon");
  lambda1->bind("mass-cap", o.massCap, "mass stop counting as survival");

  Command* lambda2 = setup(6, "lambda2", "bisect the strong-survival (reinfection) indicator");
  lambda2->bind("topology", o.topology, "tree family");
  lambda2->bind("bracket", o.bracket, "lo,hi infection rates straddling the transition");
  lambda2->bind("tol", o.tol, "bracket width target");
  lambda2->bind("threshold", o.threshold, "indicator passes when the CI lower bound exceeds this");
  lambda2->bind("reps", o.reps, "replications per probed rate");
  lambda2->bind("reinfections", o.reinfections, "root re-entries that count as strong survival");
  lambda2->bind("horizon", o.horizon, "time horizon for collecting re-entries");
  lambda2->bind("mass-cap", o.massCap, "mass stop counting as censoring");

  Command* gap = setup(7, "gap", "paired weak/strong brackets with shared seeds");
  gap->bind("topology", o.topology, "periodic tree family");
  gap->bind("bracket", o.bracket, "lo,hi infection rates straddling both transitions");
  gap->bind("tol", o.tol, "bracket width target");
  gap->bind("threshold", o.threshold, "indicator passes when the CI lower bound exceeds this");
  gap->bind("reps", o.reps, "replications per probed rate");
  gap->bind("max-time", o.maxTime, "weak-survival horizon");
  gap->bind("reinfections", o.reinfections, "root re-entries that count as strong survival");
  gap->bind("horizon", o.horizon, "time horizon for collecting re-entries");
  gap->bind("mass-cap", o.massCap, "mass stop");

  Command* couple = setup(8, "couple", "monotone coupled pair at two rates, shared randomness");
  couple->bind("topology", o.topology, "tree family");
  couple->bind("lambda", o.lambda, "higher infection rate");
  couple->bind("lambda-low", o.lambdaLow, "lower infection rate");
  couple->bind("reps", o.reps, "replications");
  couple->bind("max-time", o.maxTime, "time horizon");
  couple->bind("mass-cap", o.massCap, "mass stop on the higher process");

  Command* cmj = setup(9, "cmj", "branching comparison extracted at the k-frontier time");
  cmj->bind("topology", o.topology, "tree family");
  cmj->bind("lambda", o.lambda, "infection rate");
  cmj->bind("k", o.k, "frontier size to wait for");
  cmj->bind("m1", o.m1, "deadline for reaching the k-frontier");
  cmj->bind("reps", o.reps, "replications");

  Command* oracle = setup(10, "oracle", "simulated occupancy vs matrix-exponential transients");
  oracle->bind("tree", o.tree, "finite preset: twovertex or star6");
  oracle->bind("lambda", o.lambda, "infection rate");
  oracle->bind("times", o.times, "comma-separated evaluation times");
  oracle->bind("reps", o.reps, "replications");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  static const std::map<std::string, int (*)(const Options&, RecordWriter&, unsigned)> dispatch{
      {"survive", runSurvive}, {"growth", runGrowth},   {"u", runU},
      {"beta", runBeta},       {"weight", runWeight},   {"lambda1", runLambda1},
      {"lambda2", runLambda2}, {"gap", runGap},         {"couple", runCouple},
      {"cmj", runCmj},         {"oracle", runOracle}};

  for (const Command& c : commands) {
    if (!c.app->parsed()) continue;
    c.mergeConfigFile();
    if (o.format != "csv" && o.format != "jsonl")
      throw ConfigError("format must be csv or jsonl");
    // parse everything parseable before the writer exists, so configuration
    // errors never leave a header behind
    const std::string name = c.app->get_name();
    if (c.fields.count("topology")) {
      Topology topo = Topology::parse(o.topology);
      if ((name == "u" || name == "beta" || name == "weight" || name == "gap") &&
          topo.kind() != TopologyKind::Periodic)
        throw ConfigError(name + " runs on a periodic topology");
    }
    if (c.fields.count("tree")) presetByName(o.tree);
    if (c.fields.count("bracket")) parseBracket(o.bracket);
    if (c.fields.count("ngrid")) parseIndexList(o.ngrid, "ngrid");
    if (c.fields.count("times")) parseDoubleList(o.times, "times");
    if (c.fields.count("lambdas") && !o.lambdas.empty()) parseDoubleList(o.lambdas, "lambdas");
    if (name == "couple" && !(o.lambdaLow <= o.lambda))
      throw ConfigError("couple needs --lambda-low <= --lambda");
    if (o.trajectories) {
      if (o.format != "jsonl") throw ConfigError("trajectory streaming requires --format jsonl");
      if (!o.lambdas.empty())
        throw ConfigError("trajectory streaming works with a single lambda");
    }
    unsigned threads = threadCountFromEnv(o.threads);
    std::ofstream file;
    if (o.output != "-") {
      file.open(o.output);
      if (!file) throw ConfigError("cannot open output file: " + o.output);
    }
    std::ostream& out = o.output == "-" ? std::cout : file;
    RecordWriter writer(out, o.format == "csv" ? RecordWriter::Format::Csv
                                               : RecordWriter::Format::Jsonl,
                        c.resolvedConfig(), o.seed);
    return dispatch.at(c.app->get_name())(o, writer, threads);
  }
  throw ConfigError("no subcommand given");
}

}  // namespace
}  // namespace treecp

int main(int argc, char** argv) {
  try {
    return treecp::runCli(argc, argv);
  } catch (const treecp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const treecp::DegenerateResult& e) {
    std::cerr << "degenerate result: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
