#pragma once
// Experiment orchestration: config ingestion, value-distribution generators,
// per-seed trial execution, and CSV / JSON-lines persistence.

#include <string>
#include <vector>

#include <json.hpp>

#include "dsum/exact_sum.hpp"
#include "dsum/graph.hpp"
#include "dsum/values.hpp"

namespace dsum {

using json = nlohmann::json;

struct ValueDistSpec {
  enum class Kind { AllDistinct, Single, Zipf, Uniform, FromFile };
  Kind kind = Kind::AllDistinct;
  double alpha = 1.0;       // zipf exponent
  int64_t support = 1;      // zipf / uniform support size
  int64_t single_value = 1;
  double null_fraction = 0.0;
  std::string file;
};

ValueAssignment make_values(const ValueDistSpec& spec, int n, int64_t N,
                            uint64_t seed);

struct AlgorithmSpec {
  std::string name;  // f0 f2 fp-ams exact-gsum top-k fk fp lp-sample
                     // l0-sample duplicate push-sum
  double eps = 0.25;
  int p = 2;
  int k = 2;
  int top_k = 10;
  int median_width = 0;  // 0 = formula default
  GFunction g;
};

struct ExperimentConfig {
  std::string model = "congest";  // congest | gossip-ideal | gossip-emulated
  GraphSpec graph;
  int64_t N = 1;
  ValueDistSpec values;
  AlgorithmSpec algorithm;
  std::string router = "tree";  // tree | cost-model
  double lambda = 0.0;          // emulated model; 0 = 1/n^3 default
  std::string emulation_mode = "exact";  // exact | walks
  std::vector<uint64_t> seeds;
  int64_t round_cap = 1 << 26;
  Constants constants = Constants::from_env();

  static ExperimentConfig from_json(const json& j);
  json to_json() const;
  std::string digest() const;
  void validate() const;
};

struct TrialRecord {
  std::string config_digest;
  uint64_t seed = 0;
  std::string algorithm;
  double estimate = 0.0;
  double truth = 0.0;
  double rel_error = 0.0;
  int64_t rounds = 0;
  int64_t messages = 0;
  int64_t max_congestion = 0;
  int64_t congest_rounds_charged = 0;
  double wall_time = 0.0;
  std::string error;  // empty on success
};

TrialRecord run_trial(const ExperimentConfig& cfg, uint64_t seed);
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg,
                                        int jobs = 1);

std::string records_csv(const std::vector<TrialRecord>& records);
void write_csv(const std::string& path, const std::vector<TrialRecord>& recs);
void write_jsonl(const std::string& path, const std::vector<TrialRecord>& recs);

// Sweep file: {"experiments": [cfg...]} or {"base": cfg, "grid": {"/json/ptr":
// [v...]}} expanded as a cross product.
std::vector<ExperimentConfig> expand_sweep(const json& sweep);

ExperimentConfig load_config(const std::string& path);
json load_json(const std::string& path);

}  // namespace dsum
