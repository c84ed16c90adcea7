// Command-line front end: run one experiment config, sweep a grid, print
// mixing times, or print exact oracle statistics for an instance file.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "dsum/harness.hpp"
#include "dsum/mixing.hpp"
#include "dsum/oracles.hpp"

using namespace dsum;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_csv,
            const std::string& out_jsonl, int jobs) {
  auto cfg = load_config(config_path);
  auto records = run_experiment(cfg, jobs);
  if (!out_csv.empty())
    write_csv(out_csv, records);
  else
    std::cout << records_csv(records);
  if (!out_jsonl.empty()) write_jsonl(out_jsonl, records);
  int failures = 0;
  for (const auto& r : records)
    if (!r.error.empty()) {
      ++failures;
      std::fprintf(stderr, "seed %llu failed: %s\n",
                   static_cast<unsigned long long>(r.seed), r.error.c_str());
    }
  return failures == 0 ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& out_csv,
              const std::string& out_jsonl, int jobs) {
  auto configs = expand_sweep(load_json(config_path));
  std::vector<TrialRecord> all;
  for (const auto& cfg : configs) {
    auto records = run_experiment(cfg, jobs);
    all.insert(all.end(), records.begin(), records.end());
  }
  if (!out_csv.empty())
    write_csv(out_csv, all);
  else
    std::cout << records_csv(all);
  if (!out_jsonl.empty()) write_jsonl(out_jsonl, all);
  for (const auto& r : all)
    if (!r.error.empty()) return 1;
  return 0;
}

int cmd_mixing(const std::string& graph_spec, double lambda) {
  Graph g = generate(GraphSpec::parse(graph_spec));
  MixingProfile mp(g);
  json out;
  out["graph"] = graph_spec;
  out["n"] = g.n;
  out["m"] = g.m;
  out["diameter"] = diameter(g);
  out["tau"] = mp.tau_exact();
  if (lambda > 0.0) {
    out["lambda"] = lambda;
    out["tau_at_lambda"] = mp.tau_at(lambda);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_oracle(const std::string& instance, int n, int64_t N, int max_p,
               int topk) {
  auto a = read_instance(instance, n, N);
  auto fv = exact_stats(a);
  json out;
  out["n"] = a.n;
  out["N"] = a.N;
  out["non_empty"] = fv.z;
  out["F0"] = fv.f0();
  for (int p = 1; p <= max_p; ++p)
    out["F" + std::to_string(p)] = i128_to_string(fv.moment(p));
  out["entropy"] = fv.entropy();
  json top = json::array();
  for (auto [value, count] : fv.top_k(topk))
    top.push_back({{"value", value}, {"count", count}});
  out["top_k"] = top;
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed data summarization simulator"};
  app.require_subcommand(1);

  std::string config_path, out_csv, out_jsonl;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("--config", config_path, "config JSON file")->required();
  run->add_option("--out", out_csv, "CSV output path (default: stdout)");
  run->add_option("--jsonl", out_jsonl, "JSON-lines output path");
  run->add_option("--jobs", jobs, "parallel trials");

  std::string sweep_path, sweep_csv, sweep_jsonl;
  int sweep_jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run a config grid");
  sweep->add_option("--config", sweep_path, "sweep JSON file")->required();
  sweep->add_option("--out", sweep_csv, "CSV output path (default: stdout)");
  sweep->add_option("--jsonl", sweep_jsonl, "JSON-lines output path");
  sweep->add_option("--jobs", sweep_jobs, "parallel trials");

  std::string graph_spec;
  double lambda = 0.0;
  auto* mixing = app.add_subcommand("mixing-time", "print tau for a graph");
  mixing->add_option("--graph", graph_spec, "graph spec, e.g. clique:16")
      ->required();
  mixing->add_option("--lambda", lambda, "also print tau at this threshold");

  std::string instance;
  int oracle_n = 0, max_p = 4, topk = 10;
  int64_t oracle_N = 0;
  auto* oracle = app.add_subcommand("oracle", "print exact statistics");
  oracle->add_option("--instance", instance, "instance file (nodeId value)")
      ->required();
  oracle->add_option("--n", oracle_n, "node count (default: max id)");
  oracle->add_option("--N", oracle_N, "value domain (default: max value)");
  oracle->add_option("--p", max_p, "largest moment to print");
  oracle->add_option("--topk", topk, "top-k length");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_csv, out_jsonl, jobs);
    if (sweep->parsed())
      return cmd_sweep(sweep_path, sweep_csv, sweep_jsonl, sweep_jobs);
    if (mixing->parsed()) return cmd_mixing(graph_spec, lambda);
    if (oracle->parsed())
      return cmd_oracle(instance, oracle_n, oracle_N, max_p, topk);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
