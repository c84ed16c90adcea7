#pragma once
// GOSSIP-model algorithm suite: push-sum aggregation, value-duplication
// preprocessing, l0/lp samplers, and the F_k / F_p moment estimators. Every
// operation runs over a PartnerSource, so the same code executes on the ideal
// engine and on the CONGEST emulation.

#include "dsum/engines.hpp"
#include "dsum/oracles.hpp"
#include "dsum/values.hpp"

namespace dsum {

// Push-sum mass-splitting with exact dyadic-rational masses: at round r every
// mass is an integer multiple of 2^-r, so conservation holds bit-for-bit.
struct PushSumResult {
  std::vector<double> estimate;  // per node: n * s/w, estimates sum of inputs
  std::vector<u128> s_num, w_num;
  int64_t rounds = 0;
  RoundStats stats;
};

int64_t push_sum_round_budget(int n, int64_t max_sum, const Constants& c);

PushSumResult push_sum(PartnerSource& partners, const std::vector<int64_t>& local,
                       int64_t rounds, uint64_t seed, const Constants& c,
                       int64_t value_domain);

// Rounded push-sum of an indicator vector; asserts all nodes agree.
struct CountResult {
  int64_t count = 0;
  RoundStats stats;
};
CountResult gossip_count(PartnerSource& partners,
                         const std::vector<int64_t>& indicator, uint64_t seed,
                         const Constants& c, int64_t value_domain);

struct DuplicationResult {
  ValueAssignment assignment;
  int64_t z = 0;           // non-empty count of the input
  int64_t dup_factor = 1;  // ceil((n/3)/z), 1 when no-op
  bool applied = false;
  RoundStats stats;
};

// Rescales every frequency by dup_factor so Omega(n) nodes are non-empty;
// no-op when z >= n/3.
DuplicationResult preprocess_duplicate(const ValueAssignment& a,
                                       PartnerSource& partners, uint64_t seed,
                                       const Constants& c);

struct SampleResult {
  int64_t value = 0;
  int64_t attempts = 0;
  RoundStats stats;
};

// Uniform over the support: min-ID node spreads a pairwise hash, min
// diffusion finds the value of the smallest hash.
SampleResult l0_sample(const ValueAssignment& a, PartnerSource& partners,
                       uint64_t seed, const Constants& c);

// Value i with probability f_i^p / F_p: each node polls p partners, succeeds
// if all values match; the smallest-ID success wins by min diffusion.
SampleResult lp_sample(const ValueAssignment& a, int p, PartnerSource& partners,
                       uint64_t seed, const Constants& c);

struct FkResult {
  double fk = 0.0;
  int64_t success_total = 0;
  int64_t phases = 0;
  RoundStats stats;
};

FkResult fk_estimate(const ValueAssignment& a, int k, double eps,
                     PartnerSource& partners, uint64_t seed,
                     const Constants& c);

struct FpResult {
  double fp = 0.0;
  double fk = 0.0;
  int64_t dup_factor = 1;
  int64_t estimators = 0;
  RoundStats stats;
};

// F_k estimate plus R = ceil(c_est * n^(1-k/p) / eps^2) rank-sample
// estimators Z_r = F_k * f^(p-k), group means amplified by a median.
FpResult fp_estimate(const ValueAssignment& a, int p, int k, double eps,
                     PartnerSource& partners, uint64_t seed,
                     const Constants& c);

// One estimator draw (sample + exact count); exposed for calibration tests.
struct EstimatorDraw {
  int64_t sampled_value = 0;
  int64_t frequency = 0;
  RoundStats stats;
};
EstimatorDraw fp_estimator_draw(const ValueAssignment& a, int k,
                                PartnerSource& partners, uint64_t seed,
                                const Constants& c);

}  // namespace dsum
