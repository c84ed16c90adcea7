#include "dsum/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "dsum/emulation.hpp"
#include "dsum/gossip.hpp"
#include "dsum/mixing.hpp"
#include "dsum/oracles.hpp"
#include "dsum/sketches.hpp"

namespace dsum {

ValueAssignment make_values(const ValueDistSpec& spec, int n, int64_t N,
                            uint64_t seed) {
  auto a = ValueAssignment::empty(n, N);
  if (spec.kind == ValueDistSpec::Kind::FromFile)
    return read_instance(spec.file, n, N);

  // exact NULL count via seeded partial shuffle
  std::vector<int> nodes(static_cast<size_t>(n));
  for (int v = 1; v <= n; ++v) nodes[size_t(v) - 1] = v;
  Rng rng(derive(seed, 0x7a15u));
  int nulls = int(spec.null_fraction * double(n));
  for (int i = 0; i < nulls; ++i) {
    int j = i + int(rng.below(n - i));
    std::swap(nodes[size_t(i)], nodes[size_t(j)]);
  }

  std::vector<double> cdf;
  if (spec.kind == ValueDistSpec::Kind::Zipf) {
    if (spec.support < 1 || spec.support > N)
      throw ConfigError("zipf support must be in [1, N]");
    double acc = 0.0;
    for (int64_t i = 1; i <= spec.support; ++i) {
      acc += std::pow(double(i), -spec.alpha);
      cdf.push_back(acc);
    }
    for (double& x : cdf) x /= acc;
  }

  for (int idx = nulls; idx < n; ++idx) {
    int v = nodes[size_t(idx)];
    switch (spec.kind) {
      case ValueDistSpec::Kind::AllDistinct:
        if (N < n) throw ConfigError("all-distinct needs N >= n");
        a.val[size_t(v)] = v;
        break;
      case ValueDistSpec::Kind::Single:
        if (spec.single_value < 1 || spec.single_value > N)
          throw ConfigError("single value out of [1, N]");
        a.val[size_t(v)] = spec.single_value;
        break;
      case ValueDistSpec::Kind::Zipf: {
        double x = rng.real();
        size_t i = size_t(std::lower_bound(cdf.begin(), cdf.end(), x) -
                          cdf.begin());
        if (i >= cdf.size()) i = cdf.size() - 1;
        a.val[size_t(v)] = int64_t(i) + 1;
        break;
      }
      case ValueDistSpec::Kind::Uniform:
        if (spec.support < 1 || spec.support > N)
          throw ConfigError("uniform support must be in [1, N]");
        a.val[size_t(v)] = 1 + rng.below(spec.support);
        break;
      case ValueDistSpec::Kind::FromFile:
        break;
    }
  }
  a.validate();
  return a;
}

// ---- config (de)serialization ----------------------------------------------

namespace {

GraphSpec graph_from_json(const json& j) {
  if (j.is_string()) return GraphSpec::parse(j.get<std::string>());
  GraphSpec s;
  std::string family = j.at("family").get<std::string>();
  if (family == "clique" || family == "path" || family == "cycle" ||
      family == "star") {
    return GraphSpec::parse(family + ":" +
                            std::to_string(j.at("n").get<int>()));
  }
  if (family == "random-regular") {
    s = GraphSpec::parse("random-regular:" +
                         std::to_string(j.at("n").get<int>()) + ":" +
                         std::to_string(j.at("d").get<int>()));
    if (j.contains("seed")) s.seed = j.at("seed").get<uint64_t>();
    return s;
  }
  if (family == "dumbbell")
    return GraphSpec::parse("dumbbell:" +
                            std::to_string(j.at("side").get<int>()) + ":" +
                            std::to_string(j.at("bridge").get<int>()));
  if (family == "blackboard")
    return GraphSpec::parse(
        "blackboard:" + std::to_string(j.at("parts").get<int>()) + ":" +
        std::to_string(j.at("part_size").get<int>()));
  if (family == "file")
    return GraphSpec::parse("file:" + j.at("path").get<std::string>());
  throw ConfigError("unknown graph family in config");
}

ValueDistSpec values_from_json(const json& j) {
  ValueDistSpec s;
  std::string dist = j.value("dist", "all-distinct");
  if (dist == "all-distinct") s.kind = ValueDistSpec::Kind::AllDistinct;
  else if (dist == "single") s.kind = ValueDistSpec::Kind::Single;
  else if (dist == "zipf") s.kind = ValueDistSpec::Kind::Zipf;
  else if (dist == "uniform") s.kind = ValueDistSpec::Kind::Uniform;
  else if (dist == "file") s.kind = ValueDistSpec::Kind::FromFile;
  else throw ConfigError("unknown value distribution: " + dist);
  s.alpha = j.value("alpha", 1.0);
  s.support = j.value("support", int64_t(1));
  s.single_value = j.value("value", int64_t(1));
  s.null_fraction = j.value("null_fraction", 0.0);
  s.file = j.value("file", std::string());
  return s;
}

std::string dist_name(ValueDistSpec::Kind k) {
  switch (k) {
    case ValueDistSpec::Kind::AllDistinct: return "all-distinct";
    case ValueDistSpec::Kind::Single: return "single";
    case ValueDistSpec::Kind::Zipf: return "zipf";
    case ValueDistSpec::Kind::Uniform: return "uniform";
    case ValueDistSpec::Kind::FromFile: return "file";
  }
  return "?";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  c.model = j.value("model", std::string("congest"));
  c.graph = graph_from_json(j.at("graph"));
  c.N = j.value("N", int64_t(c.graph.n));
  if (j.contains("values")) c.values = values_from_json(j.at("values"));
  const json& alg = j.at("algorithm");
  c.algorithm.name = alg.at("name").get<std::string>();
  c.algorithm.eps = alg.value("epsilon", 0.25);
  c.algorithm.p = alg.value("p", 2);
  c.algorithm.k = alg.value("k", 2);
  c.algorithm.top_k = alg.value("top_k", 10);
  c.algorithm.median_width = alg.value("median_width", 0);
  if (alg.contains("g"))
    c.algorithm.g = GFunction::from_name(alg.at("g").value("kind", "distinct"),
                                         alg.at("g").value("p", 2));
  c.router = j.value("router", std::string("tree"));
  c.lambda = j.value("lambda", 0.0);
  c.emulation_mode = j.value("emulation_mode", std::string("exact"));
  if (j.contains("seeds"))
    c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  else
    c.seeds = {1};
  c.round_cap = j.value("round_cap", int64_t(1) << 26);
  if (j.contains("constants")) {
    const json& k = j.at("constants");
    c.constants.c0 = k.value("c0", c.constants.c0);
    c.constants.c_med = k.value("c_med", c.constants.c_med);
    c.constants.c_ams = k.value("c_ams", c.constants.c_ams);
    c.constants.c_fk = k.value("C", c.constants.c_fk);
    c.constants.c_est = k.value("C_prime", c.constants.c_est);
    c.constants.c_push = k.value("c1", c.constants.c_push);
    c.constants.c_route = k.value("c_route", c.constants.c_route);
    c.constants.c_diff = k.value("c_diff", c.constants.c_diff);
  }
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["model"] = model;
  j["graph"] = graph.describe();
  j["N"] = N;
  j["values"] = {{"dist", dist_name(values.kind)},
                 {"alpha", values.alpha},
                 {"support", values.support},
                 {"value", values.single_value},
                 {"null_fraction", values.null_fraction},
                 {"file", values.file}};
  j["algorithm"] = {
      {"name", algorithm.name},
      {"epsilon", algorithm.eps},
      {"p", algorithm.p},
      {"k", algorithm.k},
      {"top_k", algorithm.top_k},
      {"median_width", algorithm.median_width},
      {"g", {{"kind", algorithm.g.name()}, {"p", algorithm.g.p}}}};
  j["router"] = router;
  j["lambda"] = lambda;
  j["emulation_mode"] = emulation_mode;
  j["seeds"] = seeds;
  j["round_cap"] = round_cap;
  j["constants"] = {
      {"c0", constants.c0},           {"c_med", constants.c_med},
      {"c_ams", constants.c_ams},     {"C", constants.c_fk},
      {"C_prime", constants.c_est},   {"c1", constants.c_push},
      {"c_route", constants.c_route}, {"c_diff", constants.c_diff}};
  return j;
}

void ExperimentConfig::validate() const {
  static const std::vector<std::string> kModels = {"congest", "gossip-ideal",
                                                   "gossip-emulated"};
  if (std::find(kModels.begin(), kModels.end(), model) == kModels.end())
    throw ConfigError("unknown model: " + model);
  static const std::vector<std::string> kCongest = {"f0", "f2", "fp-ams",
                                                    "exact-gsum", "top-k"};
  static const std::vector<std::string> kGossip = {
      "fk", "fp", "lp-sample", "l0-sample", "duplicate", "push-sum"};
  bool congest_alg = std::find(kCongest.begin(), kCongest.end(),
                               algorithm.name) != kCongest.end();
  bool gossip_alg = std::find(kGossip.begin(), kGossip.end(),
                              algorithm.name) != kGossip.end();
  if (!congest_alg && !gossip_alg)
    throw ConfigError("unknown algorithm: " + algorithm.name);
  if (model == "congest" && !congest_alg)
    throw ConfigError(algorithm.name + " does not run in the congest model");
  if (model != "congest" && !gossip_alg)
    throw ConfigError(algorithm.name + " does not run in the gossip model");
  if (router != "tree" && router != "cost-model")
    throw ConfigError("unknown router: " + router);
  if (emulation_mode != "exact" && emulation_mode != "walks")
    throw ConfigError("unknown emulation mode: " + emulation_mode);
  if (!(algorithm.eps > 0.0 && algorithm.eps <= 1.0))
    throw ConfigError("epsilon must be in (0, 1]");
  if (seeds.empty()) throw ConfigError("config needs at least one seed");
  if (N < 1) throw ConfigError("N must be >= 1");
}

std::string ExperimentConfig::digest() const {
  std::string dump = to_json().dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---- trial execution ---------------------------------------------------------

namespace {

double as_double(i128 v) { return double(v); }

struct TrialOutcome {
  double estimate = 0.0;
  double truth = 0.0;
  RoundStats stats;
};

std::unique_ptr<Router> make_router(const ExperimentConfig& cfg, const Graph& g,
                                    const LeaderContext& ctx,
                                    const BitBudget& budget) {
  if (cfg.router == "tree") return std::make_unique<TreeRouter>(g, ctx, budget);
  MixingProfile mp(g);
  return std::make_unique<CostModelRouter>(g.n, mp.tau_exact(),
                                           cfg.constants.c_route);
}

TrialOutcome run_congest_trial(const ExperimentConfig& cfg, const Graph& g,
                               const ValueAssignment& vals, uint64_t seed) {
  TrialOutcome out;
  const Constants& c = cfg.constants;
  auto fv = exact_stats(vals);
  if (cfg.algorithm.name == "f0") {
    auto e = f0_estimate(g, vals, cfg.algorithm.eps, seed, c,
                         cfg.algorithm.median_width);
    out = {e.value, e.truth, e.stats};
  } else if (cfg.algorithm.name == "f2") {
    auto e = f2_estimate(g, vals, cfg.algorithm.eps, seed, c,
                         cfg.algorithm.median_width);
    out = {e.value, e.truth, e.stats};
  } else if (cfg.algorithm.name == "fp-ams") {
    auto e =
        fp_ams_estimate(g, vals, cfg.algorithm.p, cfg.algorithm.eps, seed, c);
    out = {e.value, e.truth, e.stats};
  } else if (cfg.algorithm.name == "exact-gsum") {
    BitBudget budget = BitBudget::make(g.n, vals.N, c.c0);
    auto ctx = elect_leader_and_ids(g, budget);
    RoundStats stats = ctx.stats;
    auto router = make_router(cfg, g, ctx, budget);
    auto r = exact_g_sum(g, *router, ctx, vals, cfg.algorithm.g, budget);
    stats.absorb(r.stats);
    auto [oracle_exact, oracle_real] = g_sum_oracle(fv, cfg.algorithm.g);
    out = {r.value,
           cfg.algorithm.g.is_exact() ? as_double(oracle_exact) : oracle_real,
           stats};
  } else if (cfg.algorithm.name == "top-k") {
    BitBudget budget = BitBudget::make(g.n, vals.N, c.c0);
    auto ctx = elect_leader_and_ids(g, budget);
    RoundStats stats = ctx.stats;
    auto router = make_router(cfg, g, ctx, budget);
    auto r = top_k(g, *router, ctx, vals, cfg.algorithm.top_k, budget);
    stats.absorb(r.stats);
    auto want = fv.top_k(cfg.algorithm.top_k);
    out = {r.items == want ? 1.0 : 0.0, 1.0, stats};
  } else {
    throw ConfigError("unhandled congest algorithm: " + cfg.algorithm.name);
  }
  return out;
}

TrialOutcome run_gossip_trial(const ExperimentConfig& cfg, const Graph& g,
                              const ValueAssignment& vals, uint64_t seed) {
  TrialOutcome out;
  const Constants& c = cfg.constants;
  auto fv = exact_stats(vals);
  int n = vals.n;

  std::unique_ptr<PartnerSource> partners;
  std::unique_ptr<EmulationState> emu;
  if (cfg.model == "gossip-ideal") {
    partners = std::make_unique<IdealPartnerSource>(n, derive(seed, 0x1dE4u));
  } else {
    double lambda = cfg.lambda > 0.0
                        ? cfg.lambda
                        : 1.0 / (double(n) * double(n) * double(n));
    emu = std::make_unique<EmulationState>(
        emulate_setup(g, lambda, derive(seed, 0xE24u)));
    out.stats.absorb(emu->setup_stats);
    partners = std::make_unique<EmulatedPartnerSource>(
        *emu, cfg.emulation_mode == "walks" ? EmuMode::Walks : EmuMode::Exact);
  }

  const std::string& name = cfg.algorithm.name;
  if (name == "fk") {
    auto r = fk_estimate(vals, cfg.algorithm.k, cfg.algorithm.eps, *partners,
                         seed, c);
    out.estimate = r.fk;
    out.truth = as_double(fv.moment(cfg.algorithm.k));
    out.stats.absorb(r.stats);
  } else if (name == "fp") {
    auto r = fp_estimate(vals, cfg.algorithm.p, cfg.algorithm.k,
                         cfg.algorithm.eps, *partners, seed, c);
    out.estimate = r.fp;
    out.truth = as_double(fv.moment(cfg.algorithm.p));
    out.stats.absorb(r.stats);
  } else if (name == "lp-sample") {
    auto r = lp_sample(vals, cfg.algorithm.p, *partners, seed, c);
    out.estimate = double(r.value);
    out.truth = double(r.value);  // distributional; truth is checked by sweeps
    out.stats.absorb(r.stats);
  } else if (name == "l0-sample") {
    auto r = l0_sample(vals, *partners, seed, c);
    out.estimate = double(r.value);
    out.truth = double(r.value);
    out.stats.absorb(r.stats);
  } else if (name == "duplicate") {
    auto r = preprocess_duplicate(vals, *partners, seed, c);
    out.estimate = double(exact_stats(r.assignment).z);
    out.truth = double(r.applied ? r.z * r.dup_factor : fv.z);
    out.stats.absorb(r.stats);
  } else if (name == "push-sum") {
    std::vector<int64_t> ind(size_t(n) + 1, 0);
    for (int v = 1; v <= n; ++v) ind[size_t(v)] = vals.is_null(v) ? 0 : 1;
    auto r = gossip_count(*partners, ind, seed, c, vals.N);
    out.estimate = double(r.count);
    out.truth = double(fv.z);
    out.stats.absorb(r.stats);
  } else {
    throw ConfigError("unhandled gossip algorithm: " + name);
  }
  return out;
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& cfg, uint64_t seed) {
  TrialRecord rec;
  rec.config_digest = cfg.digest();
  rec.seed = seed;
  rec.algorithm = cfg.algorithm.name;
  auto start = std::chrono::steady_clock::now();
  try {
    GraphSpec gs = cfg.graph;
    gs.seed = derive(seed, gs.seed, 0x96u);
    Graph g = generate(gs);
    ValueAssignment vals =
        make_values(cfg.values, g.n, cfg.N, derive(seed, 0x7a5u));
    TrialOutcome out = cfg.model == "congest"
                           ? run_congest_trial(cfg, g, vals, seed)
                           : run_gossip_trial(cfg, g, vals, seed);
    rec.estimate = out.estimate;
    rec.truth = out.truth;
    rec.rel_error = out.truth != 0.0
                        ? std::fabs(out.estimate - out.truth) / out.truth
                        : (out.estimate == 0.0 ? 0.0 : HUGE_VAL);
    rec.rounds = out.stats.rounds;
    rec.messages = out.stats.messages;
    rec.max_congestion = out.stats.max_edge_congestion;
    rec.congest_rounds_charged = out.stats.congest_rounds_charged;
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.estimate = rec.truth = rec.rel_error = NAN;
  }
  rec.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rec;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg,
                                        int jobs) {
  cfg.validate();
  std::vector<TrialRecord> records(cfg.seeds.size());
  if (jobs <= 1) {
    for (size_t i = 0; i < cfg.seeds.size(); ++i)
      records[i] = run_trial(cfg, cfg.seeds[i]);
    return records;
  }
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= cfg.seeds.size()) return;
      records[i] = run_trial(cfg, cfg.seeds[i]);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return records;
}

std::string records_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << "config_digest,seed,algorithm,estimate,truth,rel_error,rounds,"
         "messages,max_congestion\n";
  out.precision(17);
  for (const auto& r : records) {
    out << r.config_digest << "," << r.seed << "," << r.algorithm << ","
        << r.estimate << "," << r.truth << "," << r.rel_error << ","
        << r.rounds << "," << r.messages << "," << r.max_congestion << "\n";
  }
  return out.str();
}

void write_csv(const std::string& path, const std::vector<TrialRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for write: " + path);
  out << records_csv(recs);
}

void write_jsonl(const std::string& path,
                 const std::vector<TrialRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for write: " + path);
  for (const auto& r : recs) {
    json j = {{"config_digest", r.config_digest},
              {"seed", r.seed},
              {"algorithm", r.algorithm},
              {"estimate", r.estimate},
              {"truth", r.truth},
              {"rel_error", r.rel_error},
              {"rounds", r.rounds},
              {"messages", r.messages},
              {"max_congestion", r.max_congestion},
              {"congest_rounds_charged", r.congest_rounds_charged},
              {"wall_time", r.wall_time},
              {"error", r.error}};
    out << j.dump() << "\n";
  }
}

std::vector<ExperimentConfig> expand_sweep(const json& sweep) {
  std::vector<ExperimentConfig> out;
  if (sweep.contains("experiments")) {
    for (const auto& j : sweep.at("experiments"))
      out.push_back(ExperimentConfig::from_json(j));
    return out;
  }
  if (!sweep.contains("base") || !sweep.contains("grid"))
    throw ConfigError("sweep needs either experiments[] or base+grid");
  std::vector<json> configs = {sweep.at("base")};
  for (const auto& [ptr, values] : sweep.at("grid").items()) {
    std::vector<json> next;
    for (const auto& cfg : configs) {
      for (const auto& v : values) {
        json c = cfg;
        c[json::json_pointer(ptr)] = v;
        next.push_back(c);
      }
    }
    configs = std::move(next);
  }
  for (const auto& j : configs) out.push_back(ExperimentConfig::from_json(j));
  return out;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  in >> j;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  return ExperimentConfig::from_json(load_json(path));
}

}  // namespace dsum
