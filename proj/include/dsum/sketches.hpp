#pragma once
// CONGEST-model approximate statistics: distinct count via t-th smallest
// hash, second moment via sign sketches, higher moments via rank sampling.
// Each pipelines its repetitions on the election BFS tree.

#include "dsum/exact_sum.hpp"
#include "dsum/oracles.hpp"
#include "dsum/primitives.hpp"
#include "dsum/values.hpp"

namespace dsum {

struct Estimate {
  double value = 0.0;
  double truth = 0.0;
  double rel_error = 0.0;
  RoundStats stats;
};

Estimate make_estimate(double value, double truth, RoundStats stats);

struct KmvParams {
  int t = 1;        // ranked smallest hashes per repetition
  int64_t M = 17;   // hash modulus, smallest prime >= N^3
  int s = 1;        // median width (odd)
  static KmvParams make(double eps, int64_t N, int n, const Constants& c,
                        int median_width_override = 0);
};

int odd_median_width(int n, const Constants& c, int override_width);

Estimate f0_estimate(const Graph& g, const ValueAssignment& a, double eps,
                     uint64_t seed, const Constants& c,
                     int median_width_override = 0);

Estimate f2_estimate(const Graph& g, const ValueAssignment& a, double eps,
                     uint64_t seed, const Constants& c,
                     int median_width_override = 0);

// p >= 3 integer moments by repeated (sample, broadcast, rank-count) rounds,
// all repetitions pipelined on the tree.
Estimate fp_ams_estimate(const Graph& g, const ValueAssignment& a, int p,
                         double eps, uint64_t seed, const Constants& c);

int64_t ams_repetitions(int n, int64_t N, int p, double eps,
                        const Constants& c);

double median_of(std::vector<double> xs);

}  // namespace dsum
